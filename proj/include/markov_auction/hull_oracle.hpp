#pragma once

// Static range oracle for "which point in index range [first, last)
// maximizes coeff_e * e + coeff_q * q", with both coefficients >= 0.
//
// Points are grouped into dyadic intervals [a * 2^l, (a + 1) * 2^l) for every
// level l. Each interval keeps only the upper-right convex chain of its (q, e)
// points, i.e. the points that can win for some non-negative direction. Chains
// at level l + 1 are produced by merging the two child chains at level l, so
// construction is O(n log n). A range splits into O(log n) intervals and each
// chain answers in O(log n) by binary search, giving O(log^2 n) per query.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "markov_auction/model.hpp"

namespace markov_auction {

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class EmptyRange : public Error {
 public:
  using Error::Error;
};

struct HullPoint {
  double q = 0.0;  // continuation probability
  double e = 0.0;  // ecpm
};

/// Maximize coeff_e * e + coeff_q * q over indices [first, last).
struct LinearQuery {
  double coeff_e = 1.0;
  double coeff_q = 0.0;
  std::size_t first = 0;
  std::size_t last = 0;

  bool empty() const noexcept { return first >= last; }
  double operator()(const HullPoint& p) const noexcept { return coeff_e * p.e + coeff_q * p.q; }
};

struct QueryResult {
  std::size_t index = 0;
  double value = 0.0;
};

struct DyadicInterval {
  std::size_t level = 0;
  std::size_t alpha = 0;
};

class HullIndex {
 public:
  /// Throws EmptyInput for an empty point set and Error for a point outside
  /// 0 <= q < 1, e >= 0.
  static HullIndex build(std::span<const HullPoint> points) {
    if (points.empty()) throw EmptyInput("hull index needs at least one point");
    for (std::size_t i = 0; i < points.size(); ++i) {
      const HullPoint& p = points[i];
      if (!(p.q >= 0.0 && p.q < 1.0) || !(p.e >= 0.0) || !std::isfinite(p.e)) {
        throw Error("hull point " + std::to_string(i) + " outside 0 <= q < 1, e >= 0");
      }
    }

    HullIndex idx;
    idx.points_.assign(points.begin(), points.end());
    const std::size_t n = points.size();
    const std::size_t level_count = static_cast<std::size_t>(std::bit_width(std::bit_ceil(n)));
    idx.levels_.resize(level_count);

    Level& leaves = idx.levels_[0];
    leaves.offsets.resize(n + 1);
    leaves.vertices.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      leaves.offsets[i] = static_cast<std::uint32_t>(i);
      leaves.vertices[i] = static_cast<std::uint32_t>(i);
    }
    leaves.offsets[n] = static_cast<std::uint32_t>(n);

    std::vector<std::uint32_t> merged;
    for (std::size_t l = 1; l < level_count; ++l) {
      const Level& child = idx.levels_[l - 1];
      Level& cur = idx.levels_[l];
      const std::size_t child_count = child.offsets.size() - 1;
      const std::size_t count = (child_count + 1) / 2;
      cur.offsets.reserve(count + 1);
      cur.offsets.push_back(0);
      for (std::size_t a = 0; a < count; ++a) {
        auto left = child.chain(2 * a);
        auto right = 2 * a + 1 < child_count ? child.chain(2 * a + 1) : std::span<const std::uint32_t>{};
        merged.clear();
        std::merge(left.begin(), left.end(), right.begin(), right.end(), std::back_inserter(merged),
                   [&](std::uint32_t x, std::uint32_t y) { return idx.sweep_before(x, y); });
        idx.append_chain(merged, cur.vertices);
        cur.offsets.push_back(static_cast<std::uint32_t>(cur.vertices.size()));
      }
    }
    return idx;
  }

  std::size_t size() const noexcept { return points_.size(); }
  std::size_t level_count() const noexcept { return levels_.size(); }
  std::size_t interval_count(std::size_t level) const { return levels_.at(level).offsets.size() - 1; }
  const HullPoint& point(std::size_t i) const { return points_.at(i); }
  std::span<const HullPoint> points() const noexcept { return points_; }

  /// Stored chain of interval `alpha` at `level`: point indices sorted by q
  /// ascending, e non-increasing.
  std::span<const std::uint32_t> chain(std::size_t level, std::size_t alpha) const {
    return levels_.at(level).chain(alpha);
  }

  /// Greedy split of [first, last) into maximal aligned dyadic intervals.
  std::vector<DyadicInterval> decompose(std::size_t first, std::size_t last) const {
    std::vector<DyadicInterval> out;
    last = std::min(last, size());
    while (first < last) {
      std::size_t level = first == 0 ? levels_.size() - 1 : static_cast<std::size_t>(std::countr_zero(first));
      level = std::min(level, levels_.size() - 1);
      while ((std::size_t{1} << level) > last - first) --level;
      out.push_back({level, first >> level});
      first += std::size_t{1} << level;
    }
    return out;
  }

  /// Best vertex of one chain. Lowest point index wins exact ties.
  QueryResult best_on_chain(std::span<const std::uint32_t> chain, const LinearQuery& query) const {
    // Objective along the chain is concave, so "next vertex is strictly
    // better" holds on a prefix; find where it stops.
    std::size_t lo = 0;
    std::size_t hi = chain.size() - 1;
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (query(points_[chain[mid + 1]]) > query(points_[chain[mid]])) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    // Rounding can blur the peak by an ulp; settle it with a short local
    // scan, extended across any plateau of equal values.
    const std::size_t begin = lo >= 2 ? lo - 2 : 0;
    QueryResult best{chain[begin], query(points_[chain[begin]])};
    for (std::size_t t = begin + 1; t < chain.size(); ++t) {
      const double v = query(points_[chain[t]]);
      if (v > best.value || (v == best.value && chain[t] < best.index)) {
        best = {chain[t], v};
      } else if (t > lo + 2 && v < best.value) {
        break;
      }
    }
    return best;
  }

  /// Argmax of the query over its index range. Throws EmptyRange.
  QueryResult query_max(const LinearQuery& query) const {
    if (query.empty() || query.first >= size()) throw EmptyRange("linear query over an empty index range");
    bool found = false;
    QueryResult best;
    for (const DyadicInterval& iv : decompose(query.first, query.last)) {
      const QueryResult r = best_on_chain(chain(iv.level, iv.alpha), query);
      if (!found || r.value > best.value || (r.value == best.value && r.index < best.index)) {
        best = r;
        found = true;
      }
    }
#ifdef MARKOV_AUCTION_HULL_CHECK
    check_against_scan(query, best);
#endif
    return best;
  }

 private:
  struct Level {
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> vertices;

    std::span<const std::uint32_t> chain(std::size_t alpha) const {
      return std::span<const std::uint32_t>(vertices).subspan(offsets.at(alpha), offsets.at(alpha + 1) - offsets[alpha]);
    }
  };

  // q ascending, then e descending, then index ascending.
  bool sweep_before(std::uint32_t x, std::uint32_t y) const {
    const HullPoint& a = points_[x];
    const HullPoint& b = points_[y];
    if (a.q != b.q) return a.q < b.q;
    if (a.e != b.e) return a.e > b.e;
    return x < y;
  }

  // True when b lies strictly below the segment a-c (a.q < b.q < c.q).
  bool strictly_below(std::uint32_t a, std::uint32_t b, std::uint32_t c) const {
    const HullPoint& pa = points_[a];
    const HullPoint& pb = points_[b];
    const HullPoint& pc = points_[c];
    const long double lhs = (static_cast<long double>(pb.e) - pa.e) * (static_cast<long double>(pc.q) - pa.q);
    const long double rhs = (static_cast<long double>(pc.e) - pa.e) * (static_cast<long double>(pb.q) - pa.q);
    return lhs < rhs;
  }

  // Appends the upper-right chain of `sorted` (in sweep order) to `out`.
  // Collinear vertices are kept so that lowest-index tie-breaking sees them.
  void append_chain(std::span<const std::uint32_t> sorted, std::vector<std::uint32_t>& out) const {
    const std::size_t base = out.size();
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const std::uint32_t p = sorted[i];
      // Equal q: only the first (highest e, then lowest index) can ever win.
      if (i > 0 && points_[sorted[i - 1]].q == points_[p].q) continue;
      while (out.size() - base >= 2 && strictly_below(out[out.size() - 2], out.back(), p)) out.pop_back();
      out.push_back(p);
    }
    // Vertices left of the first maximum-e vertex have lower q and lower e.
    auto top = std::max_element(out.begin() + static_cast<std::ptrdiff_t>(base), out.end(),
                                [&](std::uint32_t x, std::uint32_t y) { return points_[x].e < points_[y].e; });
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(base), top);
  }

#ifdef MARKOV_AUCTION_HULL_CHECK
  void check_against_scan(const LinearQuery& query, const QueryResult& got) const {
    QueryResult want{query.first, query(points_[query.first])};
    for (std::size_t i = query.first + 1; i < std::min(query.last, size()); ++i) {
      const double v = query(points_[i]);
      if (v > want.value) want = {i, v};
    }
    if (want.index != got.index || want.value != got.value) throw Error("hull oracle disagrees with linear scan");
  }
#endif

  std::vector<HullPoint> points_;
  std::vector<Level> levels_;
};

}  // namespace markov_auction
