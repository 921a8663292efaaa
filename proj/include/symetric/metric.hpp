#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <tuple>
#include <vector>

#include "symetric/scene.hpp"

namespace symetric {

/// 1 - |a & b| / |a | b| over packed sets; two empty sets are at distance 0.
inline double jaccard_words(std::span<const Word> a, std::span<const Word> b) {
  const std::size_t uni = bits::popcount_or(a, b);
  if (uni == 0) return 0.0;
  return 1.0 - static_cast<double>(bits::popcount_and(a, b)) / static_cast<double>(uni);
}

inline double jaccard(const Scene& q, const Scene& q2) {
  require_same_canvas(q, q2);
  return jaccard_words(q.words(), q2.words());
}

/// The pixels of a scene that differ from a goal, each tagged with the scene's
/// value there. Because the tag is always the negation of the goal's value,
/// the set is carried as the packed mask `scene ^ goal` next to the scene bits.
class DiffSet {
 public:
  DiffSet(const Scene& goal, const Scene& q) : mask_(q ^ goal), values_(q) {}

  /// Builds a diff set from explicit (u, v, b) triples against `goal`. Triples
  /// whose b equals the goal's pixel are not differences and are rejected.
  static DiffSet from_triples(const Scene& goal, const std::vector<std::tuple<int, int, bool>>& triples) {
    Scene q = goal;
    for (const auto& [u, v, b] : triples) {
      if (goal.get(u, v) == b) throw std::invalid_argument("triple does not differ from the goal");
      q.set(u, v, b);
    }
    return DiffSet(goal, q);
  }

  const Scene& mask() const noexcept { return mask_; }
  const Scene& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return mask_.count(); }

  std::vector<std::tuple<int, int, bool>> triples() const {
    std::vector<std::tuple<int, int, bool>> out;
    for (int v = 0; v < mask_.height(); ++v)
      for (int u = 0; u < mask_.width(); ++u)
        if (mask_.get(u, v)) out.emplace_back(u, v, values_.get(u, v));
    return out;
  }

 private:
  Scene mask_;
  Scene values_;
};

inline DiffSet diff_set(const Scene& goal, const Scene& q) {
  require_same_canvas(goal, q);
  return DiffSet(goal, q);
}

/// Reconstructs the scene whose differences from `goal` are `d`.
inline Scene diff_apply(const Scene& goal, const DiffSet& d) {
  require_same_canvas(goal, d.mask());
  return goal ^ d.mask();
}

/// Jaccard distance between the goal-difference sets of two scenes.
inline double goal_distance(const Scene& goal, const Scene& q, const Scene& q2) {
  require_same_canvas(goal, q);
  require_same_canvas(goal, q2);
  const auto g = goal.words(), a = q.words(), b = q2.words();
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Word da = a[i] ^ g[i], db = b[i] ^ g[i];
    inter += static_cast<std::size_t>(std::popcount(da & db));
    uni += static_cast<std::size_t>(std::popcount(da | db));
  }
  if (uni == 0) return 0.0;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

/// Distance used for ranking against the goal itself. The goal-aware metric
/// puts every other scene at distance 1 from the goal, so plain Jaccard is used.
inline double goal_rank(const Scene& goal, const Scene& q) { return jaccard(goal, q); }

/// Jaccard on packed scenes; pass goal-difference masks to get the goal-aware
/// metric.
struct JaccardMetric {
  double operator()(const Scene& a, const Scene& b) const { return jaccard_words(a.words(), b.words()); }
};


/// Exact "is any stored set within radius" index for Jaccard. Sets are kept in
/// buckets by population count; a query only scans buckets whose sizes can
/// reach it (|b| >= (1 - r)|a| and |b| <= |a| / (1 - r)), nearest size first.
class JaccardBuckets {
 public:
  explicit JaccardBuckets(std::size_t words, std::size_t max_bits) : words_(words), buckets_(max_bits + 1) {}

  void insert(std::span<const Word> s) {
    auto& b = buckets_.at(bits::popcount(s));
    b.insert(b.end(), s.begin(), s.end());
    ++size_;
  }

  bool any_within(std::span<const Word> q, double radius) const {
    const auto n = static_cast<std::ptrdiff_t>(bits::popcount(q));
    const auto top = static_cast<std::ptrdiff_t>(buckets_.size()) - 1;
    std::ptrdiff_t lo = 0, hi = top;
    if (radius < 1.0) {
      constexpr double kSlack = 1e-9;
      const double keep = 1.0 - radius;
      lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::floor(keep * static_cast<double>(n) - kSlack)));
      hi = std::min<std::ptrdiff_t>(top, static_cast<std::ptrdiff_t>(std::ceil(static_cast<double>(n) / keep + kSlack)));
    }
    auto scan = [&](std::ptrdiff_t k) {
      const auto& b = buckets_[static_cast<std::size_t>(k)];
      for (std::size_t i = 0; i < b.size(); i += words_) {
        ++distance_calls_;
        if (jaccard_words(q, std::span<const Word>(b.data() + i, words_)) <= radius) return true;
      }
      return false;
    };
    for (std::ptrdiff_t step = 0; n - step >= lo || n + step <= hi; ++step) {
      if (n - step >= lo && n - step <= hi && scan(n - step)) return true;
      if (step > 0 && n + step <= hi && n + step >= lo && scan(n + step)) return true;
    }
    return false;
  }

  std::size_t size() const noexcept { return size_; }
  std::size_t distance_calls() const noexcept { return distance_calls_; }

 private:
  std::size_t words_;
  std::vector<std::vector<Word>> buckets_;
  std::size_t size_ = 0;
  mutable std::size_t distance_calls_ = 0;
};

}  // namespace symetric
