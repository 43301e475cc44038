// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Seeds are fixed, so a failure reproduces exactly.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <sys/wait.h>

#include "../test_support.hpp"
#include "markov_auction/analysis.hpp"
#include "markov_auction/hull_oracle.hpp"
#include "markov_auction/instance_io.hpp"
#include "markov_auction/optimizer.hpp"
#include "markov_auction/pricing.hpp"

namespace {

using namespace markov_auction;
using testing::Rng;
using Ids = std::vector<BidderId>;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool ok = true;
  std::string detail;

  // Records the first failure only; later ones are usually the same bug.
  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class F>
double time_it(F&& f) {
  const auto start = Clock::now();
  f();
  return seconds_since(start);
}

template <class F>
double median_time(int runs, F&& f) {
  std::vector<double> t;
  for (int r = 0; r < runs; ++r) t.push_back(time_it(f));
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

std::string fmt(const char* pattern, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

std::string ids_str(const Ids& ids) { return to_string(ids); }

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// 1 -------------------------------------------------------------------------

Outcome example_one() {
  Outcome out;
  const auto start = Clock::now();
  const double tol = 1e-9;
  const AuctionInstance two = testing::example1(2);

  const std::array<double, 3> want_a{4.0, 2.5, 4.25};
  for (std::size_t i = 0; i < 3; ++i) {
    const double a = adjusted_ecpm(two.bidders()[i]);
    if (!near(a, want_a[i], tol)) out.fail(fmt("a-ecpm of bidder %zu is %.17g", i + 1, a));
  }

  const ComparisonReport gsp = compare_gsp(two);
  if (gsp.gsp_order != Ids{2, 1}) out.fail("ecpm ranking order " + ids_str(gsp.gsp_order));
  if (!near(gsp.gsp_efficiency, 2.20, tol)) out.fail(fmt("ecpm ranking value %.17g", gsp.gsp_efficiency));

  // Top two by a-ecpm alone: bidders 3 and 1.
  const std::vector<Bidder> by_a = canonical_order(two.bidders());
  const std::vector<Bidder> top2(by_a.begin(), by_a.begin() + 2);
  if (top2[0].id() != 3 || top2[1].id() != 1) out.fail("a-ecpm ranking does not start with (3, 1)");
  if (!near(evaluate(top2).efficiency, 1.65, tol)) {
    out.fail(fmt("a-ecpm ranking value %.17g", evaluate(top2).efficiency));
  }

  for (Solver s : {Solver::brute, Solver::dp, Solver::fast}) {
    const Assignment k2 = solve(two, 2, s);
    if (k2.order != Ids{1, 2} || !near(k2.efficiency, 2.50, tol)) {
      out.fail(std::string(solver_name(s)) + " k=2 gives " + ids_str(k2.order));
    }
    const Assignment k3 = solve(testing::example1(3), 3, s);
    if (k3.order != Ids{3, 1, 2}) out.fail(std::string(solver_name(s)) + " k=3 gives " + ids_str(k3.order));
  }

  const double elapsed = seconds_since(start);
  if (elapsed >= 1.0) out.fail(fmt("took %.3f s", elapsed));
  if (out.ok) out.detail = fmt("values and orders match, %.4f s", elapsed);
  return out;
}

// 2 -------------------------------------------------------------------------

// Scales every bid by an independent factor within 1e-6 of 1.
AuctionInstance perturbed(const AuctionInstance& inst, Rng& rng) {
  std::vector<Bidder> out;
  for (const Bidder& b : inst.bidders()) out.push_back(b.with_bid(b.bid() * (1.0 + rng.uniform(-1e-6, 1e-6))));
  return AuctionInstance(std::move(out), inst.slots());
}

Outcome solver_equivalence() {
  Outcome out;
  const auto start = Clock::now();
  Rng rng(1002);
  for (int trial = 0; trial < 2000 && out.ok; ++trial) {
    const std::size_t n = rng.index(1, 12);
    const std::size_t k = rng.index(1, 5);
    // Clones give exact ties on the raw instance; the perturbed copy has none.
    const AuctionInstance raw = testing::random_instance_with_clones(rng, n, k);
    const AuctionInstance inst = perturbed(raw, rng);
    for (const AuctionInstance* which : {&raw, &inst}) {
      const double b = brute_force_optimal(*which, k).efficiency;
      const double d = dp_optimal(*which, k).efficiency;
      const double f = fast_optimal(*which, k).final_assignment().efficiency;
      if (!near(b, d, 1e-9) || !near(b, f, 1e-9)) {
        out.fail(fmt("trial %d: brute %.17g dp %.17g fast %.17g", trial, b, d, f));
      }
    }
    const Ids b = testing::sorted_ids(brute_force_optimal(inst, k).order);
    const Ids d = testing::sorted_ids(dp_optimal(inst, k).order);
    const Ids f = testing::sorted_ids(fast_optimal(inst, k).final_assignment().order);
    if (b != d || b != f) {
      out.fail(fmt("trial %d: sets differ, brute ", trial) + ids_str(b) + " dp " + ids_str(d) + " fast " + ids_str(f));
    }
  }
  const double elapsed = seconds_since(start);
  if (elapsed >= 60.0) out.fail(fmt("took %.1f s", elapsed));
  if (out.ok) out.detail = fmt("2000 instances, %.2f s", elapsed);
  return out;
}

// 3 -------------------------------------------------------------------------

Outcome chain_property() {
  Outcome out;
  Rng rng(1003);
  std::size_t steps = 0;
  for (int trial = 0; trial < 500 && out.ok; ++trial) {
    const std::size_t n = rng.index(1, 60);
    const std::size_t k = rng.index(1, 10);
    const AuctionInstance inst = testing::random_instance(rng, n, k);
    const OptChain chain = fast_optimal(inst, k);
    if (chain.size() != std::min(n, k)) out.fail(fmt("trial %d: chain has %zu slates", trial, chain.size()));
    for (std::size_t i = 0; i < chain.size(); ++i) {
      ++steps;
      const Assignment& s = chain.solutions[i];
      const double want = dp_optimal(inst, i + 1).efficiency;
      if (!near(s.efficiency, want, 1e-9)) {
        out.fail(fmt("trial %d, i=%zu: chain %.17g dp %.17g", trial, i + 1, s.efficiency, want));
      }
      if (i > 0) {
        const Ids prev = testing::sorted_ids(chain.solutions[i - 1].order);
        const Ids cur = testing::sorted_ids(s.order);
        if (cur.size() != prev.size() + 1 || !std::includes(cur.begin(), cur.end(), prev.begin(), prev.end())) {
          out.fail(fmt("trial %d: S_%zu not inside S_%zu", trial, i, i + 1));
        }
      }
    }
  }
  if (out.ok) out.detail = fmt("500 instances, %zu chain steps", steps);
  return out;
}

// 4 -------------------------------------------------------------------------

Outcome exchange_property() {
  Outcome out;
  Rng rng(1004);
  std::size_t trials = 0;
  double worst = 0.0;
  while (trials < 100000 && out.ok) {
    const std::size_t len = rng.index(2, 8);
    const AuctionInstance inst = testing::random_instance(rng, len, len);
    std::vector<Bidder> slate(inst.bidders().begin(), inst.bidders().end());
    std::shuffle(slate.begin(), slate.end(), rng.engine());
    const std::size_t p = rng.index(0, len - 2);
    const double above = adjusted_ecpm(slate[p]);
    const double below = adjusted_ecpm(slate[p + 1]);
    if (above == below) continue;
    if (above > below) std::swap(slate[p], slate[p + 1]);  // put the lower a-ecpm ad on top

    const double before = testing::cascade_value(slate);
    std::swap(slate[p], slate[p + 1]);
    const double after = testing::cascade_value(slate);
    worst = std::min(worst, after - before);
    if (after < before - 1e-12) out.fail(fmt("trial %zu: swap lost %.3g", trials, before - after));
    ++trials;
  }
  if (out.ok) out.detail = fmt("%zu swaps, worst change %.3g", trials, worst);
  return out;
}

// 5 -------------------------------------------------------------------------

Outcome dominance() {
  Outcome out;
  Rng rng(1005);
  std::size_t pairs = 0;
  for (int trial = 0; trial < 1000 && out.ok; ++trial) {
    const std::size_t n = rng.index(2, 10);
    const DominanceResult r = check_dominance(testing::random_instance_with_clones(rng, n, rng.index(1, 4)));
    pairs += r.pairs_checked;
    if (!r.passed) {
      const DominanceViolation& v = *r.violation;
      out.fail(fmt("trial %d: replacing %llu by %llu gives %.17g < %.17g", trial,
                   static_cast<unsigned long long>(v.placed), static_cast<unsigned long long>(v.substitute),
                   v.substituted_efficiency, v.base_efficiency));
    }
  }
  if (out.ok && pairs == 0) out.fail("no qualifying substitution was generated");
  if (out.ok) out.detail = fmt("1000 instances, %zu substitutions", pairs);
  return out;
}

// 6 -------------------------------------------------------------------------

Outcome monotonicity() {
  Outcome out;
  Rng rng(1006);
  std::size_t entered = 0;
  for (int trial = 0; trial < 200 && out.ok; ++trial) {
    const AuctionInstance inst = testing::random_instance(rng, rng.index(1, 10), rng.index(1, 4));
    const BidderId id = inst.bidders()[rng.index(0, inst.size() - 1)].id();
    const SweepReport report = sweep_bid(inst, id, linear_grid(0.0, 40.0, 50), Solver::brute);
    const MonotonicityResult r = check_monotonicity(report);
    if (!r.passed) out.fail(fmt("trial %d: ", trial) + r.reason);
    if (report.points.front().position == 0 && report.points.back().position != 0) ++entered;
  }
  if (out.ok) out.detail = fmt("200 sweeps of 50 bids, %zu bidders entered the slate", entered);
  return out;
}

// 7 -------------------------------------------------------------------------

Outcome truthfulness() {
  Outcome out;
  Rng rng(1007);
  for (int trial = 0; trial < 300 && out.ok; ++trial) {
    const AuctionInstance inst = testing::random_instance(rng, rng.index(1, 8), rng.index(1, 4));
    const Bidder me = inst.bidders()[rng.index(0, inst.size() - 1)];
    const double truth = me.bid();
    // Utility at the true value, whatever was reported.
    auto utility = [&](double report) {
      const PricedAssignment p = vcg_prices(inst.with_bid(me.id(), report));
      const WinnerPrice* w = p.prices.find(me.id());
      return w ? w->click_prob * truth - w->expected_payment : 0.0;
    };
    const double honest = utility(truth);
    if (honest < -1e-12) out.fail(fmt("trial %d: truthful utility %.3g", trial, honest));
    for (int g = 0; g < 25; ++g) {
      const double report = 3.0 * truth * g / 24.0;
      const double lie = utility(report);
      if (honest < lie - 1e-9) {
        out.fail(fmt("trial %d: report %.6g earns %.17g > truthful %.17g", trial, report, lie, honest));
      }
    }
  }
  if (out.ok) out.detail = "300 trials x 25 misreports";
  return out;
}

// 8 -------------------------------------------------------------------------

Outcome hull_equivalence() {
  Outcome out;
  Rng rng(1008);
  const std::vector<std::size_t> sizes{1, 2, 3, 7, 64, 100, 1000, 4097, 10000, 10000};
  const int per_index = 1000;
  int queries = 0;
  for (std::size_t s = 0; s < sizes.size() && out.ok; ++s) {
    std::vector<HullPoint> pts = testing::random_points(rng, sizes[s]);
    if (s % 2 == 1) {
      // Repeated points and repeated q values exercise the tie rules.
      for (std::size_t i = 1; i < pts.size(); ++i) {
        if (rng.unit() < 0.2) pts[i] = pts[rng.index(0, i - 1)];
        else if (rng.unit() < 0.1) pts[i].q = pts[rng.index(0, i - 1)].q;
      }
    }
    const HullIndex index = HullIndex::build(pts);
    for (int t = 0; t < per_index && out.ok; ++t, ++queries) {
      std::size_t a = rng.index(0, pts.size() - 1);
      std::size_t b = rng.index(0, pts.size() - 1);
      if (a > b) std::swap(a, b);
      const double ce = t % 10 == 0 ? 0.0 : rng.uniform(0.0, 1.0);
      const double cq = t % 10 == 1 ? 0.0 : rng.uniform(0.0, 10.0);
      const QueryResult got = index.query_max(LinearQuery{ce, cq, a, b + 1});
      const QueryResult want = testing::scan_max(pts, ce, cq, a, b + 1);
      if (got.index != want.index || got.value != want.value) {
        out.fail(fmt("n=%zu [%zu, %zu): oracle (%zu, %.17g) scan (%zu, %.17g)", pts.size(), a, b + 1, got.index,
                     got.value, want.index, want.value));
      }
    }
  }
  if (out.ok) out.detail = fmt("%d queries, exact match", queries);
  return out;
}

// 9 -------------------------------------------------------------------------

// Doubling n at fixed k: n log n predicts 2 log(2n) / log(n); allow 25% over.
constexpr double kNoiseAllowance = 1.25;
// Doubling n must still cost something, or the timer is measuring nothing.
constexpr double kMinDoublingNRatio = 1.5;
// Doubling k with the preprocessing excluded: k^2 log^2 n predicts 4.
constexpr double kMinDoublingKRatio = 2.5;
constexpr double kMaxDoublingKRatio = 6.0;

Outcome performance() {
  Outcome out;
  const std::uint64_t seed = 1009;

  const AuctionInstance big = synthetic_instance(100000, 100, seed);
  std::size_t placed = 0;
  const double headline = time_it([&] { placed = fast_optimal(big, 100).final_assignment().size(); });
  if (headline >= 5.0) out.fail(fmt("n=1e5 k=100 took %.3f s", headline));
  if (placed != 100) out.fail(fmt("n=1e5 k=100 placed %zu ads", placed));

  std::string n_ratios;
  for (std::size_t n : {50000ul, 100000ul}) {
    const AuctionInstance small = synthetic_instance(n, 100, seed);
    const AuctionInstance twice = synthetic_instance(2 * n, 100, seed);
    const double t1 = median_time(3, [&] { fast_optimal(small, 100); });
    const double t2 = median_time(3, [&] { fast_optimal(twice, 100); });
    const double ratio = t2 / t1;
    const double bound = 2.0 * std::log(2.0 * n) / std::log(static_cast<double>(n)) * kNoiseAllowance;
    n_ratios += fmt(" %.2f", ratio);
    if (ratio > bound || ratio < kMinDoublingNRatio) {
      out.fail(fmt("n %zu -> %zu: time ratio %.2f outside [%.2f, %.2f]", n, 2 * n, ratio, kMinDoublingNRatio, bound));
    }
  }

  const IncrementalSolver solver(big);
  std::string k_ratios;
  double prev = 0.0;
  for (std::size_t k : {400ul, 800ul, 1600ul}) {
    const double t = median_time(3, [&] { solver.run(k); });
    if (prev > 0.0) {
      const double ratio = t / prev;
      k_ratios += fmt(" %.2f", ratio);
      if (ratio < kMinDoublingKRatio || ratio > kMaxDoublingKRatio) {
        out.fail(fmt("k %zu -> %zu: time ratio %.2f outside [%.1f, %.1f]", k / 2, k, ratio, kMinDoublingKRatio,
                     kMaxDoublingKRatio));
      }
    }
    prev = t;
  }
  if (out.ok) out.detail = fmt("n=1e5 k=100 in %.3f s; 2n ratios", headline) + n_ratios + "; 2k ratios" + k_ratios;
  return out;
}

// 10 ------------------------------------------------------------------------

struct Captured {
  int status = -1;
  std::string output;
};

Captured run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + MARKOV_AUCTION_CLI + "\" " + args + " 2>/dev/null";
  Captured c;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return c;
  std::array<char, 4096> buf;
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) c.output.append(buf.data(), got);
  const int raw = ::pclose(pipe);
  c.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Ids ids_of(const LoadedInstance& loaded, const nlohmann::json& names) {
  Ids ids;
  for (const auto& name : names) ids.push_back(*loaded.find(name.get<std::string>()));
  return ids;
}

Outcome cli_determinism() {
  Outcome out;
  const std::string samples = MARKOV_AUCTION_SAMPLES_DIR;

  // A larger instance written by the library itself, solved by every solver
  // that can handle it.
  const std::string synthetic_path = "acceptance_synthetic.json";
  LoadedInstance synthetic{synthetic_instance(400, 12, 77), {}};
  for (std::size_t i = 0; i < synthetic.instance.size(); ++i) synthetic.names.push_back("b" + std::to_string(i));
  std::ofstream(synthetic_path) << instance_to_json(synthetic).dump(2) << '\n';

  struct Command {
    std::string input;  // empty for bench
    bool csv = false;
    std::string rest;
    // "<subcommand> <input> <options...>"
    std::string args() const {
      if (input.empty()) return rest;
      const std::size_t cut = rest.find(' ');
      return rest.substr(0, cut) + " " + input + rest.substr(cut);
    }
  };
  const std::string ex1 = samples + "/example1.json";
  const std::vector<Command> commands{
      {ex1, false, "assign --solver dp"},
      {ex1, false, "assign --solver brute"},
      {samples + "/example1.csv", true, "assign --format csv --slots 3 --solver fast"},
      {synthetic_path, false, "assign --solver fast"},
      {synthetic_path, false, "assign --solver dp"},
      {ex1, false, "price --solver dp"},
      {synthetic_path, false, "price --solver fast"},
      {ex1, false, "sweep --bidder 3 --from 0 --to 10 --steps 25 --solver brute"},
      {synthetic_path, false, "compare --solver dp"},
      {"", false, "bench --n 1000 20000 --k 5 50 --seed 11 --no-timing"},
      {"", false, "bench --n 5000 --k 10 --seed 11 --solver dp --no-timing"},
  };
  std::size_t records = 0;
  std::size_t round_trips = 0;
  for (const Command& c : commands) {
    const std::string args = c.args();
    const Captured first = run_cli(args);
    const Captured second = run_cli(args);
    if (first.status != 0) {
      out.fail(fmt("exit %d: ", first.status) + args);
      continue;
    }
    if (first.output != second.output) out.fail("output differs between runs: " + args);

    std::istringstream lines(first.output);
    std::string line;
    while (std::getline(lines, line)) {
      ++records;
      const nlohmann::json rec = nlohmann::json::parse(line);
      const std::string command = rec.at("command");
      if (command == "bench") {
        if (!rec.at("check_ok").get<bool>()) out.fail("bench cross-check failed: " + line);
        continue;
      }
      if (command == "sweep_summary") {
        if (!rec.at("monotone").get<bool>()) out.fail("sweep not monotone: " + line);
        continue;
      }
      const LoadedInstance loaded =
          c.csv ? parse_instance_csv(read_file(c.input), 3) : parse_instance_json(read_file(c.input));
      const char* order_key = command == "compare" ? "opt_order" : command == "sweep" ? "selected" : "order";
      const char* eff_key = command == "compare" ? "opt_efficiency" : "efficiency";
      Ids ids = ids_of(loaded, rec.at(order_key));
      AuctionInstance inst = loaded.instance;
      if (command == "sweep") {
        // selected is an id set; re-evaluate it in rank order at the swept bid.
        inst = inst.with_bid(*loaded.find(rec.at("bidder").get<std::string>()), rec.at("bid").get<double>());
        std::vector<Bidder> chosen;
        for (BidderId id : ids) chosen.push_back(inst.bidder(id));
        ids.clear();
        for (const Bidder& b : canonical_order(chosen)) ids.push_back(b.id());
      }
      const double reported = rec.at(eff_key).get<double>();
      const double again = make_assignment(inst, ids).efficiency;
      ++round_trips;
      if (again != reported) out.fail(fmt("round trip %.17g vs reported %.17g: ", again, reported) + args);
    }
  }

  // The seed variable must override --seed for the whole output.
  const Captured by_flag = run_cli("bench --n 3000 --k 7 --seed 5 --no-timing");
  const Captured by_env = run_cli("bench --n 3000 --k 7 --seed 99 --no-timing");
  const std::string env_cmd = "bench --n 3000 --k 7 --seed 99 --no-timing";
  ::setenv("MARKOV_AUCTION_SEED", "5", 1);
  const Captured overridden = run_cli(env_cmd);
  ::unsetenv("MARKOV_AUCTION_SEED");
  if (overridden.output != by_flag.output || by_flag.output == by_env.output) {
    out.fail("MARKOV_AUCTION_SEED does not override --seed");
  }

  std::remove(synthetic_path.c_str());
  if (out.ok) {
    out.detail = fmt("%zu commands twice, %zu records, %zu exact round trips", commands.size(), records, round_trips);
  }
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {"example one reproduction", example_one},
      {"solver equivalence", solver_equivalence},
      {"nested optimal chain", chain_property},
      {"adjacent exchange", exchange_property},
      {"dominance substitution", dominance},
      {"bid monotonicity", monotonicity},
      {"vcg truthfulness", truthfulness},
      {"hull oracle vs linear scan", hull_equivalence},
      {"performance and scaling", performance},
      {"cli determinism and round trip", cli_determinism},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    if (!o.ok) ++failed;
    std::cout << (o.ok ? "PASS" : "FAIL") << "  " << i + 1 << ". " << criteria[i].name << ": " << o.detail
              << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
