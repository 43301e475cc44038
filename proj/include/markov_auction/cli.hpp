#pragma once

// Command-line front end. Results go to `out` as one JSON object per line;
// diagnostics go to `err`.
//
// Exit codes: 0 success, 2 invalid input or flags, 3 solver size guard,
// 1 anything unexpected.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "markov_auction/analysis.hpp"
#include "markov_auction/instance_io.hpp"
#include "markov_auction/model.hpp"
#include "markov_auction/optimizer.hpp"
#include "markov_auction/pricing.hpp"

namespace markov_auction::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitGuard = 3;

inline constexpr const char* kSeedEnv = "MARKOV_AUCTION_SEED";
inline constexpr double kCrossCheckTolerance = 1e-9;

using Record = nlohmann::ordered_json;

/// FNV-1a over the ascending selected ids; a cheap fingerprint for comparing
/// selections across solvers and runs.
inline std::uint64_t selection_hash(std::vector<BidderId> ids) {
  std::sort(ids.begin(), ids.end());
  std::uint64_t h = 1469598103934665603ull;
  for (BidderId id : ids) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (id >> (8 * byte)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

namespace detail {

struct InputOptions {
  std::string path;
  std::string format = "json";
  std::optional<std::size_t> slots;
  std::string solver = "dp";
};

inline void add_input_options(CLI::App& cmd, InputOptions& opt) {
  cmd.add_option("file", opt.path, "Instance file (JSON, or CSV with --format csv)")->required();
  cmd.add_option("--slots,-k", opt.slots, "Slot count; overrides the file's value");
  cmd.add_option("--format", opt.format, "Input format")->check(CLI::IsMember({"json", "csv"}));
  cmd.add_option("--solver", opt.solver, "Solver")->check(CLI::IsMember({"brute", "dp", "fast"}));
}

inline LoadedInstance load(const InputOptions& opt) {
  std::ifstream in(opt.path, std::ios::binary);
  if (!in) throw ValidationError(opt.path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (opt.format == "csv") return parse_instance_csv(buf.str(), opt.slots);
  return parse_instance_json(buf.str(), opt.slots);
}

inline Solver solver_of(const std::string& name) {
  auto s = parse_solver(name);
  if (!s) throw ValidationError("--solver: unknown solver \"" + name + "\"");
  return *s;
}

inline Record names_of(const LoadedInstance& loaded, const std::vector<BidderId>& ids) {
  Record arr = Record::array();
  for (BidderId id : ids) arr.push_back(loaded.name(id));
  return arr;
}

inline void emit(std::ostream& out, const Record& rec) { out << rec.dump() << '\n'; }

inline void run_assign(const InputOptions& opt, std::ostream& out) {
  const LoadedInstance loaded = load(opt);
  const Assignment a = solve(loaded.instance, solver_of(opt.solver));
  Record rec;
  rec["command"] = "assign";
  rec["solver"] = opt.solver;
  rec["slots"] = loaded.instance.slots();
  rec["bidders"] = loaded.instance.size();
  rec["order"] = names_of(loaded, a.order);
  rec["efficiency"] = a.efficiency;
  rec["click_probs"] = a.click_probs;
  emit(out, rec);
}

inline void run_price(const InputOptions& opt, std::ostream& out) {
  const LoadedInstance loaded = load(opt);
  const PricedAssignment priced = vcg_prices(loaded.instance, solver_of(opt.solver));
  Record rec;
  rec["command"] = "price";
  rec["solver"] = opt.solver;
  rec["slots"] = loaded.instance.slots();
  rec["bidders"] = loaded.instance.size();
  rec["order"] = names_of(loaded, priced.assignment.order);
  rec["efficiency"] = priced.assignment.efficiency;
  rec["revenue"] = priced.prices.revenue();
  Record payments = Record::object();
  Record winners = Record::array();
  for (const WinnerPrice& w : priced.prices.winners) {
    payments[loaded.name(w.id)] = w.expected_payment;
    Record item;
    item["id"] = loaded.name(w.id);
    item["position"] = w.position;
    item["click_prob"] = w.click_prob;
    item["value"] = w.value;
    item["expected_payment"] = w.expected_payment;
    item["per_click_price"] = w.per_click_price;
    item["utility"] = w.utility;
    winners.push_back(std::move(item));
  }
  rec["payments"] = std::move(payments);
  rec["winners"] = std::move(winners);
  emit(out, rec);
}

struct SweepOptions {
  std::string bidder;
  double from = 0.0;
  double to = 0.0;
  std::size_t steps = 0;
};

inline void run_sweep(const InputOptions& opt, const SweepOptions& sw, std::ostream& out) {
  const LoadedInstance loaded = load(opt);
  const auto id = loaded.find(sw.bidder);
  if (!id) throw ValidationError("--bidder: unknown bidder \"" + sw.bidder + "\"");
  if (!(sw.from >= 0.0) || !(sw.to >= sw.from)) throw ValidationError("--from/--to: need 0 <= from <= to");
  if (sw.steps == 0) throw ValidationError("--steps: must be >= 1");
  if (sw.steps > 1 && !(sw.to > sw.from)) throw ValidationError("--from/--to: need from < to when steps > 1");

  const std::vector<double> grid = linear_grid(sw.from, sw.to, sw.steps);
  const SweepReport report = sweep_bid(loaded.instance, *id, grid, solver_of(opt.solver));
  for (const SweepPoint& p : report.points) {
    Record rec;
    rec["command"] = "sweep";
    rec["bidder"] = sw.bidder;
    rec["bid"] = p.bid;
    rec["click_prob"] = p.click_prob;
    rec["position"] = p.position;
    rec["efficiency"] = p.efficiency;
    rec["selected"] = names_of(loaded, p.selected);
    emit(out, rec);
  }
  const MonotonicityResult check = check_monotonicity(report);
  Record summary;
  summary["command"] = "sweep_summary";
  summary["bidder"] = sw.bidder;
  summary["points"] = report.points.size();
  summary["monotone"] = check.passed;
  summary["first_violation"] = check.first_violation ? Record(*check.first_violation) : Record(nullptr);
  summary["reason"] = check.reason;
  emit(out, summary);
}

inline void run_compare(const InputOptions& opt, std::ostream& out) {
  const LoadedInstance loaded = load(opt);
  const ComparisonReport r = compare_gsp(loaded.instance, solver_of(opt.solver));
  Record rec;
  rec["command"] = "compare";
  rec["solver"] = opt.solver;
  rec["slots"] = r.slots;
  rec["bidders"] = r.bidders;
  rec["gsp_order"] = names_of(loaded, r.gsp_order);
  rec["gsp_efficiency"] = r.gsp_efficiency;
  rec["opt_order"] = names_of(loaded, r.opt_order);
  rec["opt_efficiency"] = r.opt_efficiency;
  rec["efficiency_ratio"] = r.efficiency_ratio;
  emit(out, rec);
}

struct BenchOptions {
  std::vector<std::size_t> n{10000};
  std::vector<std::size_t> k{10};
  std::uint64_t seed = 1;
  std::string solver = "fast";
  std::size_t check_n = 2000;
  bool timing = true;
};

inline std::uint64_t seed_from_env(std::uint64_t fallback) {
  const char* env = std::getenv(kSeedEnv);
  if (env == nullptr || *env == '\0') return fallback;
  std::uint64_t v = 0;
  const std::string s(env);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError(std::string(kSeedEnv) + ": not an unsigned integer \"" + s + "\"");
  }
  return v;
}

inline void run_bench(const BenchOptions& opt, std::ostream& out) {
  const Solver solver = solver_of(opt.solver);
  const std::uint64_t seed = seed_from_env(opt.seed);
  for (std::size_t n : opt.n) {
    for (std::size_t k : opt.k) {
      if (n == 0 || k == 0) throw ValidationError("--n/--k: must be >= 1");
      const AuctionInstance inst = synthetic_instance(n, k, seed);

      const auto start = std::chrono::steady_clock::now();
      const Assignment a = solve(inst, solver);
      const auto stop = std::chrono::steady_clock::now();

      Record rec;
      rec["command"] = "bench";
      rec["solver"] = opt.solver;
      rec["n"] = n;
      rec["k"] = k;
      rec["seed"] = seed;
      rec["efficiency"] = a.efficiency;
      rec["selected"] = a.size();
      rec["selection_hash"] = hex64(selection_hash(a.order));
      if (opt.timing) rec["wall_ms"] = std::chrono::duration<double, std::milli>(stop - start).count();

      if (opt.check_n > 0) {
        // Subsample: the first check_n generated bidders, same seed.
        const std::size_t m = std::min(n, opt.check_n);
        const AuctionInstance sub = synthetic_instance(m, k, seed);
        const Solver reference = solver == Solver::dp ? Solver::fast : Solver::dp;
        const Assignment want = solve(sub, reference);
        const Assignment got = solve(sub, solver);
        rec["check_n"] = m;
        rec["check_reference"] = std::string(solver_name(reference));
        rec["check_reference_efficiency"] = want.efficiency;
        rec["check_efficiency"] = got.efficiency;
        rec["check_ok"] = std::abs(want.efficiency - got.efficiency) <= kCrossCheckTolerance;
      }
      emit(out, rec);
    }
  }
}

}  // namespace detail

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal slates, VCG prices and property checks for auctions under a Markovian click model",
               "markov_auction"};
  app.require_subcommand(1);

  detail::InputOptions assign_opt, price_opt, sweep_opt, compare_opt;
  detail::SweepOptions sweep;
  detail::BenchOptions bench;

  auto* assign = app.add_subcommand("assign", "Compute the efficiency-optimal slate");
  detail::add_input_options(*assign, assign_opt);

  auto* price = app.add_subcommand("price", "Optimal slate plus VCG payments");
  detail::add_input_options(*price, price_opt);

  auto* sweep_cmd = app.add_subcommand("sweep", "Re-solve across a grid of bids for one bidder");
  detail::add_input_options(*sweep_cmd, sweep_opt);
  sweep_cmd->add_option("--bidder", sweep.bidder, "Bidder id as written in the file")->required();
  sweep_cmd->add_option("--from", sweep.from, "First bid")->required();
  sweep_cmd->add_option("--to", sweep.to, "Last bid")->required();
  sweep_cmd->add_option("--steps", sweep.steps, "Number of grid points")->required();

  auto* compare = app.add_subcommand("compare", "Compare ecpm ranking against the optimal slate");
  detail::add_input_options(*compare, compare_opt);

  auto* bench_cmd = app.add_subcommand("bench", "Time a solver on seeded synthetic instances");
  bench_cmd->add_option("--n", bench.n, "Bidder counts")->expected(1, -1);
  bench_cmd->add_option("--k", bench.k, "Slot counts")->expected(1, -1);
  bench_cmd->add_option("--seed", bench.seed, std::string("Generator seed (") + kSeedEnv + " overrides)");
  bench_cmd->add_option("--solver", bench.solver, "Solver")->check(CLI::IsMember({"brute", "dp", "fast"}));
  bench_cmd->add_option("--check-n", bench.check_n, "Cross-check subsample size, 0 disables");
  bench_cmd->add_flag("--timing,!--no-timing", bench.timing, "Report wall time (off for byte-stable output)");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  try {
    if (*assign) detail::run_assign(assign_opt, out);
    else if (*price) detail::run_price(price_opt, out);
    else if (*sweep_cmd) detail::run_sweep(sweep_opt, sweep, out);
    else if (*compare) detail::run_compare(compare_opt, out);
    else if (*bench_cmd) detail::run_bench(bench, out);
  } catch (const SizeLimitExceeded& e) {
    err << "error: " << e.what() << '\n';
    return kExitGuard;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace markov_auction::cli
