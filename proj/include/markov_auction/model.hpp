#pragma once

// Domain types for position auctions under a Markovian (cascade) user model.
//
// A user scans the slate top-down. On ad i they click with probability ctr_i
// and continue to the next ad with probability cont_i. The expected value of
// an ordered slate (x1, ..., xm) is therefore
//
//   e(x1) + cont(x1) * (e(x2) + cont(x2) * (... e(xm)))
//
// where e(i) = ctr_i * bid_i is the ecpm of ad i.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace markov_auction {

using BidderId = std::uint64_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidBidder : public Error {
 public:
  using Error::Error;
};

class InvalidInstance : public Error {
 public:
  using Error::Error;
};

class DuplicateBidder : public Error {
 public:
  explicit DuplicateBidder(BidderId id)
      : Error("duplicate bidder id " + std::to_string(id)), id_(id) {}
  BidderId id() const noexcept { return id_; }

 private:
  BidderId id_;
};

class UnknownBidder : public Error {
 public:
  explicit UnknownBidder(BidderId id)
      : Error("unknown bidder id " + std::to_string(id)), id_(id) {}
  BidderId id() const noexcept { return id_; }

 private:
  BidderId id_;
};

/// One advertiser: a per-click bid, a click-through rate and a continuation
/// probability. Immutable once constructed.
class Bidder {
 public:
  /// Throws InvalidBidder unless bid >= 0 (finite), 0 < ctr <= 1 and
  /// 0 <= cont < 1.
  Bidder(BidderId id, double bid, double ctr, double cont) : id_(id), bid_(bid), ctr_(ctr), cont_(cont) {
    auto fail = [id](const std::string& what) {
      throw InvalidBidder("bidder " + std::to_string(id) + ": " + what);
    };
    if (!std::isfinite(bid) || bid < 0.0) fail("bid must be a finite value >= 0");
    if (!(ctr > 0.0 && ctr <= 1.0)) fail("ctr must be in (0, 1]");
    if (!(cont >= 0.0 && cont < 1.0)) fail("cont must be in [0, 1)");
    if (!std::isfinite(ctr * bid)) fail("ecpm overflows");
  }

  BidderId id() const noexcept { return id_; }
  double bid() const noexcept { return bid_; }
  double ctr() const noexcept { return ctr_; }
  double cont() const noexcept { return cont_; }

  /// Value of an impression, ctr * bid.
  double ecpm() const noexcept { return ctr_ * bid_; }

  Bidder with_bid(double bid) const { return Bidder(id_, bid, ctr_, cont_); }

  friend bool operator==(const Bidder&, const Bidder&) = default;

 private:
  BidderId id_;
  double bid_;
  double ctr_;
  double cont_;
};

/// ecpm / (1 - cont): the ranking key for ads placed on the slate.
inline double adjusted_ecpm(const Bidder& b) noexcept { return b.ecpm() / (1.0 - b.cont()); }

/// Strict total order used everywhere a set of bidders becomes a slate:
/// adjusted ecpm descending, exact ties by ascending id.
inline bool ranks_before(const Bidder& a, const Bidder& b) noexcept {
  const double aa = adjusted_ecpm(a);
  const double ab = adjusted_ecpm(b);
  if (aa != ab) return aa > ab;
  return a.id() < b.id();
}

inline std::vector<Bidder> canonical_order(std::vector<Bidder> bidders) {
  std::sort(bidders.begin(), bidders.end(), ranks_before);
  return bidders;
}

inline std::vector<Bidder> canonical_order(std::span<const Bidder> bidders) {
  return canonical_order(std::vector<Bidder>(bidders.begin(), bidders.end()));
}

/// A set of bidders competing for `slots` positions.
class AuctionInstance {
 public:
  AuctionInstance(std::vector<Bidder> bidders, std::size_t slots) : bidders_(std::move(bidders)), slots_(slots) {
    if (slots_ == 0) throw InvalidInstance("slot count must be >= 1");
    index_.reserve(bidders_.size());
    for (std::size_t i = 0; i < bidders_.size(); ++i) {
      if (!index_.emplace(bidders_[i].id(), i).second) throw DuplicateBidder(bidders_[i].id());
    }
  }

  std::span<const Bidder> bidders() const noexcept { return bidders_; }
  std::size_t size() const noexcept { return bidders_.size(); }
  std::size_t slots() const noexcept { return slots_; }
  /// min(slots, number of bidders)
  std::size_t effective_slots() const noexcept { return std::min(slots_, bidders_.size()); }

  bool contains(BidderId id) const { return index_.count(id) != 0; }

  const Bidder& bidder(BidderId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw UnknownBidder(id);
    return bidders_[it->second];
  }

  AuctionInstance with_slots(std::size_t slots) const { return AuctionInstance(bidders_, slots); }

  AuctionInstance with_bid(BidderId id, double bid) const {
    std::vector<Bidder> copy = bidders_;
    copy[position_of(id)] = bidder(id).with_bid(bid);
    return AuctionInstance(std::move(copy), slots_);
  }

  /// The same auction with bidder `id` removed.
  AuctionInstance without(BidderId id) const {
    std::vector<Bidder> copy = bidders_;
    copy.erase(copy.begin() + static_cast<std::ptrdiff_t>(position_of(id)));
    return AuctionInstance(std::move(copy), slots_);
  }

 private:
  std::size_t position_of(BidderId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw UnknownBidder(id);
    return it->second;
  }

  std::vector<Bidder> bidders_;
  std::size_t slots_;
  std::unordered_map<BidderId, std::size_t> index_;
};

struct Evaluation {
  double efficiency = 0.0;
  double cont_product = 1.0;
};

namespace detail {

inline void require_distinct(std::span<const Bidder> order) {
  std::unordered_set<BidderId> seen;
  seen.reserve(order.size());
  for (const Bidder& b : order) {
    if (!seen.insert(b.id()).second) throw DuplicateBidder(b.id());
  }
}

// Right-to-left Horner evaluation. Every solver funnels its reported
// efficiency through this exact expression so values round-trip bit-for-bit.
template <typename Range, typename Get>
double horner(const Range& items, Get get) {
  double acc = 0.0;
  for (auto it = std::rbegin(items); it != std::rend(items); ++it) {
    const Bidder& b = get(*it);
    acc = b.ecpm() + b.cont() * acc;
  }
  return acc;
}

}  // namespace detail

/// Efficiency and continuation product of a slate in the given order. Any
/// order is accepted, including ones no optimizer would produce.
inline Evaluation evaluate(std::span<const Bidder> order) {
  detail::require_distinct(order);
  Evaluation out;
  out.efficiency = detail::horner(order, [](const Bidder& b) -> const Bidder& { return b; });
  for (const Bidder& b : order) out.cont_product *= b.cont();
  return out;
}

/// Per-slot click probability: ctr of the ad times the product of cont above it.
inline std::vector<double> click_probabilities(std::span<const Bidder> order) {
  std::vector<double> out;
  out.reserve(order.size());
  double reach = 1.0;
  for (const Bidder& b : order) {
    out.push_back(reach * b.ctr());
    reach *= b.cont();
  }
  return out;
}

/// An ordered slate, top slot first.
struct Assignment {
  std::vector<BidderId> order;
  double efficiency = 0.0;
  std::vector<double> click_probs;

  std::size_t size() const noexcept { return order.size(); }

  /// 1-based slot of `id`, or 0 when unassigned.
  std::size_t position_of(BidderId id) const noexcept {
    auto it = std::find(order.begin(), order.end(), id);
    return it == order.end() ? 0 : static_cast<std::size_t>(it - order.begin()) + 1;
  }

  double click_prob_of(BidderId id) const noexcept {
    const std::size_t pos = position_of(id);
    return pos == 0 ? 0.0 : click_probs[pos - 1];
  }

  std::vector<BidderId> selected_set() const {
    std::vector<BidderId> ids = order;
    std::sort(ids.begin(), ids.end());
    return ids;
  }
};

/// Builds the Assignment record for a slate given in display order.
inline Assignment make_assignment(std::span<const Bidder> order) {
  Assignment a;
  a.order.reserve(order.size());
  for (const Bidder& b : order) a.order.push_back(b.id());
  a.efficiency = evaluate(order).efficiency;
  a.click_probs = click_probabilities(order);
  return a;
}

/// Resolves ids against an instance and builds the Assignment in that order.
inline Assignment make_assignment(const AuctionInstance& inst, std::span<const BidderId> ids) {
  std::vector<Bidder> order;
  order.reserve(ids.size());
  for (BidderId id : ids) order.push_back(inst.bidder(id));
  return make_assignment(order);
}

inline std::string to_string(std::span<const BidderId> ids) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < ids.size(); ++i) os << (i ? "," : "") << ids[i];
  os << ')';
  return os.str();
}

}  // namespace markov_auction
