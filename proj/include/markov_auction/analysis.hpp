#pragma once

// Executable checks of the structural properties of optimal slates, plus the
// ecpm-ranking (GSP order) baseline.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "markov_auction/model.hpp"
#include "markov_auction/optimizer.hpp"

namespace markov_auction {

inline constexpr double kMonotonicityTolerance = 1e-12;
inline constexpr double kDominanceTolerance = 1e-12;

struct SweepPoint {
  double bid = 0.0;
  double click_prob = 0.0;
  std::size_t position = 0;  // 1-based, 0 = unassigned
  double efficiency = 0.0;
  std::vector<BidderId> selected;  // ascending ids
};

struct SweepReport {
  BidderId bidder = 0;
  std::vector<SweepPoint> points;
};

/// Re-solves the auction at every bid in `grid`, changing only `id`'s bid.
/// Throws UnknownBidder, or Error when the grid is not strictly increasing
/// and non-negative.
inline SweepReport sweep_bid(const AuctionInstance& inst, BidderId id, std::span<const double> grid,
                             Solver solver = Solver::dp) {
  if (!inst.contains(id)) throw UnknownBidder(id);
  for (std::size_t t = 0; t < grid.size(); ++t) {
    if (!(grid[t] >= 0.0)) throw Error("sweep grid values must be >= 0");
    if (t > 0 && !(grid[t] > grid[t - 1])) throw Error("sweep grid must be strictly increasing");
  }
  SweepReport report;
  report.bidder = id;
  report.points.reserve(grid.size());
  for (double bid : grid) {
    const Assignment a = solve(inst.with_bid(id, bid), solver);
    report.points.push_back({bid, a.click_prob_of(id), a.position_of(id), a.efficiency, a.selected_set()});
  }
  return report;
}

/// Evenly spaced grid of `steps` points from `from` to `to` inclusive.
inline std::vector<double> linear_grid(double from, double to, std::size_t steps) {
  std::vector<double> grid;
  if (steps == 0) return grid;
  grid.reserve(steps);
  if (steps == 1) {
    grid.push_back(from);
    return grid;
  }
  for (std::size_t t = 0; t < steps; ++t) {
    grid.push_back(from + (to - from) * static_cast<double>(t) / static_cast<double>(steps - 1));
  }
  return grid;
}

struct MonotonicityResult {
  bool passed = true;
  std::optional<std::size_t> first_violation;  // grid index
  std::string reason;
};

/// Passes iff click probability never drops (beyond 1e-12) and the slot
/// never moves down (unassigned counts as below every slot).
inline MonotonicityResult check_monotonicity(const SweepReport& report) {
  auto rank = [](std::size_t position) {
    return position == 0 ? std::numeric_limits<std::size_t>::max() : position;
  };
  for (std::size_t t = 1; t < report.points.size(); ++t) {
    const SweepPoint& prev = report.points[t - 1];
    const SweepPoint& cur = report.points[t];
    if (cur.click_prob < prev.click_prob - kMonotonicityTolerance) {
      return {false, t, "click probability decreased"};
    }
    if (rank(cur.position) > rank(prev.position)) {
      return {false, t, "position moved down"};
    }
  }
  return {};
}

struct ComparisonReport {
  std::size_t bidders = 0;
  std::size_t slots = 0;
  std::vector<BidderId> gsp_order;
  double gsp_efficiency = 0.0;
  std::vector<BidderId> opt_order;
  double opt_efficiency = 0.0;
  double efficiency_ratio = 1.0;  // gsp / opt; 1 when both are 0
};

/// Top-k by ecpm descending (ties by id), kept in that order.
inline std::vector<Bidder> gsp_order(const AuctionInstance& inst) {
  std::vector<Bidder> order(inst.bidders().begin(), inst.bidders().end());
  std::sort(order.begin(), order.end(), [](const Bidder& a, const Bidder& b) {
    if (a.ecpm() != b.ecpm()) return a.ecpm() > b.ecpm();
    return a.id() < b.id();
  });
  order.erase(order.begin() + static_cast<std::ptrdiff_t>(inst.effective_slots()), order.end());
  return order;
}

inline ComparisonReport compare_gsp(const AuctionInstance& inst, Solver solver = Solver::dp) {
  ComparisonReport r;
  r.bidders = inst.size();
  r.slots = inst.slots();
  const Assignment gsp = make_assignment(gsp_order(inst));
  const Assignment opt = solve(inst, solver);
  r.gsp_order = gsp.order;
  r.gsp_efficiency = gsp.efficiency;
  r.opt_order = opt.order;
  r.opt_efficiency = opt.efficiency;
  r.efficiency_ratio = opt.efficiency > 0.0 ? gsp.efficiency / opt.efficiency : 1.0;
  return r;
}

struct DominanceViolation {
  BidderId placed = 0;
  BidderId substitute = 0;
  double base_efficiency = 0.0;
  double substituted_efficiency = 0.0;
};

struct DominanceResult {
  bool passed = true;
  std::size_t pairs_checked = 0;
  std::optional<DominanceViolation> violation;
};

/// For the brute-force optimum (X, i, Y) and every unplaced x with
/// e_x >= e_i and a-ecpm_x >= a-ecpm_i, checks e(X, x, Y) >= e(X, i, Y)
/// within 1e-12. Throws SizeLimitExceeded beyond brute-force limits.
inline DominanceResult check_dominance(const AuctionInstance& inst) {
  const Assignment opt = brute_force_optimal(inst, inst.slots());
  std::vector<Bidder> slate;
  for (BidderId id : opt.order) slate.push_back(inst.bidder(id));

  DominanceResult result;
  for (std::size_t pos = 0; pos < slate.size(); ++pos) {
    const Bidder placed = slate[pos];
    for (const Bidder& x : inst.bidders()) {
      if (opt.position_of(x.id()) != 0) continue;
      if (!(x.ecpm() >= placed.ecpm() && adjusted_ecpm(x) >= adjusted_ecpm(placed))) continue;
      ++result.pairs_checked;
      std::vector<Bidder> swapped = slate;
      swapped[pos] = x;
      const double value = evaluate(swapped).efficiency;
      if (value < opt.efficiency - kDominanceTolerance && result.passed) {
        result.passed = false;
        result.violation = DominanceViolation{placed.id(), x.id(), opt.efficiency, value};
      }
    }
  }
  return result;
}

}  // namespace markov_auction
