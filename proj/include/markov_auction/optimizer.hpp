#pragma once

// Solvers for the best slate of at most j ads.
//
// Every solver ranks bidders once by adjusted ecpm (ranks_before) and only
// ever places ads in that order, so a solution is fully described by the set
// of ranked positions it uses.
//
//   brute_force_optimal  enumerates every subset; test oracle, n <= 22.
//   dp_optimal           take/skip recurrence over the ranked list, O(n j).
//   fast_optimal         grows S_1 c S_2 c ... one ad at a time; each step
//                        tries every rank gap of the current slate and asks
//                        the hull oracle for the best insertion in that gap.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "markov_auction/hull_oracle.hpp"
#include "markov_auction/model.hpp"

namespace markov_auction {

class SizeLimitExceeded : public Error {
 public:
  using Error::Error;
};

class NoCandidate : public Error {
 public:
  using Error::Error;
};

inline constexpr std::size_t kBruteForceMaxBidders = 22;
inline constexpr std::size_t kBruteForceMaxSlots = 20;

namespace detail {

inline void require_slots(std::size_t j) {
  if (j == 0) throw InvalidInstance("slot count must be >= 1");
}

inline bool lex_less(std::span<const BidderId> a, std::span<const BidderId> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

inline std::vector<Bidder> pick(std::span<const Bidder> ranked, std::span<const std::size_t> positions) {
  std::vector<Bidder> out;
  out.reserve(positions.size());
  for (std::size_t p : positions) out.push_back(ranked[p]);
  return out;
}

}  // namespace detail

/// Exhaustive optimum over all subsets of at most j bidders. Exact ties go to
/// the lexicographically smallest id sequence (the empty slate is a
/// candidate, so zero-value ads are never padded in).
inline Assignment brute_force_optimal(const AuctionInstance& inst, std::size_t j) {
  detail::require_slots(j);
  const std::size_t n = inst.size();
  const std::size_t m = std::min(j, n);
  if (n > kBruteForceMaxBidders || m > kBruteForceMaxSlots) {
    throw SizeLimitExceeded("brute force limited to " + std::to_string(kBruteForceMaxBidders) + " bidders and " +
                            std::to_string(kBruteForceMaxSlots) + " slots (got n=" + std::to_string(n) +
                            ", slots=" + std::to_string(m) + ")");
  }
  const std::vector<Bidder> ranked = canonical_order(inst.bidders());

  auto ids_of = [&](std::uint32_t mask) {
    std::vector<BidderId> ids;
    for (std::size_t p = 0; p < n; ++p) {
      if (mask >> p & 1u) ids.push_back(ranked[p].id());
    }
    return ids;
  };

  std::uint32_t best_mask = 0;
  double best = 0.0;
  const std::uint32_t limit = std::uint32_t{1} << n;
  for (std::uint32_t mask = 1; mask < limit; ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) > m) continue;
    double acc = 0.0;
    for (std::uint32_t rest = mask; rest != 0;) {
      const int p = std::bit_width(rest) - 1;
      rest &= ~(std::uint32_t{1} << p);
      acc = ranked[static_cast<std::size_t>(p)].ecpm() + ranked[static_cast<std::size_t>(p)].cont() * acc;
    }
    if (acc > best || (acc == best && detail::lex_less(ids_of(mask), ids_of(best_mask)))) {
      best = acc;
      best_mask = mask;
    }
  }

  std::vector<Bidder> order;
  for (std::size_t p = 0; p < n; ++p) {
    if (best_mask >> p & 1u) order.push_back(ranked[p]);
  }
  return make_assignment(order);
}

/// Take/skip dynamic program over the ranked list:
///   F(i, s) = max(e_i + q_i * F(i + 1, s - 1), F(i + 1, s))
/// where s is the number of slots still open. On an exact tie a positive-value
/// ad is taken (earliest ranked, i.e. lowest id among equals, as the other
/// solvers do) and a zero-value ad is skipped.
inline Assignment dp_optimal(const AuctionInstance& inst, std::size_t j) {
  detail::require_slots(j);
  const std::vector<Bidder> ranked = canonical_order(inst.bidders());
  const std::size_t n = ranked.size();
  const std::size_t m = std::min(j, n);
  const std::size_t width = m + 1;

  std::vector<std::uint8_t> take(n * width, 0);
  std::vector<double> next(width, 0.0);
  std::vector<double> cur(width, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    const double e = ranked[i].ecpm();
    const double q = ranked[i].cont();
    cur[0] = 0.0;
    for (std::size_t s = 1; s < width; ++s) {
      const double with = e + q * next[s - 1];
      if (with > next[s] || (with == next[s] && e > 0.0)) {
        cur[s] = with;
        take[i * width + s] = 1;
      } else {
        cur[s] = next[s];
      }
    }
    std::swap(cur, next);
  }

  std::vector<Bidder> order;
  order.reserve(m);
  for (std::size_t i = 0, s = m; i < n && s > 0; ++i) {
    if (take[i * width + s]) {
      order.push_back(ranked[i]);
      --s;
    }
  }
  return make_assignment(order);
}

/// Optimal slates for 1, 2, ... slots, each containing the previous one.
struct OptChain {
  std::vector<Assignment> solutions;  // solutions[i] fills i + 1 slots

  bool empty() const noexcept { return solutions.empty(); }
  std::size_t size() const noexcept { return solutions.size(); }
  /// Best slate for the largest slot count reached; empty when nothing has
  /// positive value.
  Assignment final_assignment() const { return solutions.empty() ? Assignment{} : solutions.back(); }
};

/// Running quantities of a slate s_1..s_i (in rank order) needed to price an
/// insertion into any gap:
///   cont_prefix[g] = q(s_1..s_g)     g = 0..i
///   eff_prefix[g]  = e(s_1..s_g)     g = 0..i
///   eff_suffix[g]  = e(s_{g+1}..s_i) g = 0..i
struct PrefixData {
  std::vector<double> cont_prefix;
  std::vector<double> eff_prefix;
  std::vector<double> eff_suffix;

  static PrefixData compute(std::span<const Bidder> ranked, std::span<const std::size_t> members) {
    const std::size_t i = members.size();
    PrefixData d;
    d.cont_prefix.assign(i + 1, 1.0);
    d.eff_prefix.assign(i + 1, 0.0);
    d.eff_suffix.assign(i + 1, 0.0);
    for (std::size_t g = 1; g <= i; ++g) {
      const Bidder& b = ranked[members[g - 1]];
      d.eff_prefix[g] = d.eff_prefix[g - 1] + d.cont_prefix[g - 1] * b.ecpm();
      d.cont_prefix[g] = d.cont_prefix[g - 1] * b.cont();
    }
    for (std::size_t g = i; g-- > 0;) {
      const Bidder& b = ranked[members[g]];
      d.eff_suffix[g] = b.ecpm() + b.cont() * d.eff_suffix[g + 1];
    }
    return d;
  }

  /// Efficiency of the slate itself.
  double efficiency() const noexcept { return eff_suffix.front(); }
};

struct Insertion {
  std::size_t position = 0;  // index into the ranked list
  BidderId id = 0;
  std::size_t gap = 0;       // number of slate members ranked above the newcomer
  double efficiency = 0.0;   // e(S + {x})
  double marginal = 0.0;     // e(S + {x}) - e(S)
};

/// Best single-ad extension of the slate `members` (ranked positions,
/// ascending). For each gap g between members the new efficiency is
///   eff_prefix[g] + cont_prefix[g] * (e_x + q_x * eff_suffix[g]),
/// which is linear in (q_x, e_x), so the hull oracle finds the best x in the
/// gap. Exact ties go to the lowest ranked position. Throws NoCandidate when
/// the slate already holds every bidder.
inline Insertion marginal_best_insert(std::span<const Bidder> ranked, const HullIndex& hull,
                                      std::span<const std::size_t> members, const PrefixData& data) {
  const std::size_t n = ranked.size();
  const std::size_t i = members.size();
  if (i >= n) throw NoCandidate("every bidder is already on the slate");

  std::optional<Insertion> best;
  for (std::size_t g = 0; g <= i; ++g) {
    const std::size_t first = g == 0 ? 0 : members[g - 1] + 1;
    const std::size_t last = g == i ? n : members[g];
    if (first >= last) continue;

    const double reach = data.cont_prefix[g];
    QueryResult hit{first, 0.0};
    if (reach > 0.0) {
      hit = hull.query_max(LinearQuery{reach, reach * data.eff_suffix[g], first, last});
    }
    // reach == 0: nothing at or below this gap is ever seen; every candidate
    // adds exactly nothing, so take the first.
    const double total = data.eff_prefix[g] + hit.value;
    if (!best || total > best->efficiency) {
      const Bidder& x = ranked[hit.index];
      best = Insertion{hit.index, x.id(), g, total, reach * (x.ecpm() - (1.0 - x.cont()) * data.eff_suffix[g])};
    }
  }
  return *best;
}

inline Insertion marginal_best_insert(std::span<const Bidder> ranked, const HullIndex& hull,
                                      std::span<const std::size_t> members) {
  return marginal_best_insert(ranked, hull, members, PrefixData::compute(ranked, members));
}

/// Holds the ranked bidders and their hull index so the O(n log n)
/// preprocessing can be reused (or timed) separately from the chain build.
class IncrementalSolver {
 public:
  explicit IncrementalSolver(const AuctionInstance& inst)
      : ranked_(canonical_order(inst.bidders())), hull_(build_hull(ranked_)) {}

  std::span<const Bidder> ranked() const noexcept { return ranked_; }
  const HullIndex& hull() const noexcept { return hull_; }

  /// Chain S_1 c ... c S_m, m = min(j, n). Stops early once no remaining ad
  /// adds positive value.
  OptChain run(std::size_t j) const {
    detail::require_slots(j);
    OptChain chain;
    if (ranked_.empty()) return chain;
    const std::size_t m = std::min(j, ranked_.size());
    chain.solutions.reserve(m);
    std::vector<std::size_t> members;
    members.reserve(m);
    while (members.size() < m) {
      const Insertion ins = marginal_best_insert(ranked_, hull_, members);
      if (!(ins.marginal > 0.0)) break;
      members.insert(members.begin() + static_cast<std::ptrdiff_t>(ins.gap), ins.position);
      chain.solutions.push_back(make_assignment(detail::pick(ranked_, members)));
    }
    return chain;
  }

 private:
  static HullIndex build_hull(std::span<const Bidder> ranked) {
    if (ranked.empty()) return HullIndex{};
    std::vector<HullPoint> pts;
    pts.reserve(ranked.size());
    for (const Bidder& b : ranked) pts.push_back({b.cont(), b.ecpm()});
    return HullIndex::build(pts);
  }

  std::vector<Bidder> ranked_;
  HullIndex hull_;
};

inline OptChain fast_optimal(const AuctionInstance& inst, std::size_t j) { return IncrementalSolver(inst).run(j); }

enum class Solver { brute, dp, fast };

inline std::string_view solver_name(Solver s) {
  switch (s) {
    case Solver::brute:
      return "brute";
    case Solver::dp:
      return "dp";
    case Solver::fast:
      return "fast";
  }
  return "?";
}

inline std::optional<Solver> parse_solver(std::string_view name) {
  if (name == "brute") return Solver::brute;
  if (name == "dp") return Solver::dp;
  if (name == "fast") return Solver::fast;
  return std::nullopt;
}

/// Best slate for j slots with the chosen solver.
inline Assignment solve(const AuctionInstance& inst, std::size_t j, Solver solver) {
  switch (solver) {
    case Solver::brute:
      return brute_force_optimal(inst, j);
    case Solver::dp:
      return dp_optimal(inst, j);
    case Solver::fast:
      return fast_optimal(inst, j).final_assignment();
  }
  return {};
}

inline Assignment solve(const AuctionInstance& inst, Solver solver) { return solve(inst, inst.slots(), solver); }

}  // namespace markov_auction
