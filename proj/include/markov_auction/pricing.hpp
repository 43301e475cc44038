#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

#include "markov_auction/model.hpp"
#include "markov_auction/optimizer.hpp"

namespace markov_auction {

class DegenerateClickProb : public Error {
 public:
  using Error::Error;
};

struct WinnerPrice {
  BidderId id = 0;
  std::size_t position = 0;      // 1-based slot
  double click_prob = 0.0;
  double value = 0.0;            // click_prob * bid
  double expected_payment = 0.0; // per auction
  double per_click_price = 0.0;
  double utility = 0.0;          // value - expected_payment
};

struct PriceSchedule {
  std::vector<WinnerPrice> winners;  // slot order

  const WinnerPrice* find(BidderId id) const {
    auto it = std::find_if(winners.begin(), winners.end(), [id](const WinnerPrice& w) { return w.id == id; });
    return it == winners.end() ? nullptr : &*it;
  }

  /// Expected payment of `id`; losers pay 0.
  double payment_of(BidderId id) const {
    const WinnerPrice* w = find(id);
    return w ? w->expected_payment : 0.0;
  }

  double revenue() const {
    double total = 0.0;
    for (const WinnerPrice& w : winners) total += w.expected_payment;
    return total;
  }
};

struct PricedAssignment {
  Assignment assignment;
  PriceSchedule prices;
};

/// VCG: each winner pays the drop in everyone else's value caused by its
/// presence,
///   payment_i = e(OPT(B - i, k)) - (e(OPT(B, k)) - v_i),
/// with v_i = click_prob_i * bid_i. Uses k + 1 solver calls in total.
inline PricedAssignment vcg_prices(const AuctionInstance& inst, Solver solver = Solver::dp) {
  PricedAssignment out;
  out.assignment = solve(inst, solver);
  const Assignment& opt = out.assignment;

  out.prices.winners.reserve(opt.size());
  for (std::size_t slot = 0; slot < opt.size(); ++slot) {
    const BidderId id = opt.order[slot];
    const Bidder& b = inst.bidder(id);
    WinnerPrice w;
    w.id = id;
    w.position = slot + 1;
    w.click_prob = opt.click_probs[slot];
    if (!(w.click_prob > 0.0)) throw DegenerateClickProb("bidder " + std::to_string(id) + " has zero click probability");
    w.value = w.click_prob * b.bid();

    const double others_with = opt.efficiency - w.value;
    const double others_without = solve(inst.without(id), solver).efficiency;
    // The externality is >= 0 and <= v_i exactly; clamp rounding residue.
    w.expected_payment = std::clamp(others_without - others_with, 0.0, w.value);
    w.per_click_price = w.expected_payment / w.click_prob;
    w.utility = w.value - w.expected_payment;
    out.prices.winners.push_back(w);
  }
  return out;
}

}  // namespace markov_auction
