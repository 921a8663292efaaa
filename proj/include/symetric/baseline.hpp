#pragma once

#include <algorithm>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include "symetric/config.hpp"
#include "symetric/eval.hpp"
#include "symetric/expr.hpp"
#include "symetric/metric.hpp"
#include "symetric/xfta.hpp"

namespace symetric {

/// Observational-equivalence store: one entry per distinct scene, holding the
/// first (cheapest) way it was built. Scenes live in one flat word buffer and
/// the hash set indexes into it.
class EquivClassStore {
 public:
  struct Entry {
    Op op;
    std::array<std::uint32_t, 2> args{};
    int cost = 0;
  };

  explicit EquivClassStore(Canvas canvas)
      : canvas_(canvas), nw_(canvas.words()), set_(64, IdHash{this}, IdEq{this}) {}
  EquivClassStore(const EquivClassStore&) = delete;
  EquivClassStore& operator=(const EquivClassStore&) = delete;

  const Canvas& canvas() const noexcept { return canvas_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const Entry& entry(std::uint32_t id) const { return entries_.at(id); }
  std::span<const Word> words(std::uint32_t id) const { return {buf_.data() + id * nw_, nw_}; }
  Scene scene(std::uint32_t id) const { return Scene(canvas_, words(id)); }

  /// Scratch slot for the next candidate scene; valid until the next call.
  std::span<Word> staging() {
    buf_.resize((entries_.size() + 1) * nw_);
    return {buf_.data() + entries_.size() * nw_, nw_};
  }

  /// Keeps the staged scene if it is new. Returns its class id and whether it was inserted.
  std::pair<std::uint32_t, bool> commit(const Entry& e) {
    const auto id = static_cast<std::uint32_t>(entries_.size());
    entries_.push_back(e);
    auto [it, inserted] = set_.insert(id);
    if (!inserted) {
      entries_.pop_back();
      buf_.resize(entries_.size() * nw_);
      return {*it, false};
    }
    return {id, true};
  }

  std::optional<std::uint32_t> find(const Scene& s) {
    auto slot = staging();
    std::copy(s.words().begin(), s.words().end(), slot.begin());
    entries_.emplace_back();
    auto it = set_.find(static_cast<std::uint32_t>(entries_.size() - 1));
    entries_.pop_back();
    buf_.resize(entries_.size() * nw_);
    if (it == set_.end()) return std::nullopt;
    return *it;
  }

  /// The recorded program for a class.
  Expr program(std::uint32_t id) const {
    const Entry& e = entries_.at(id);
    const int ar = arity(e.op.kind);
    Expr a = ar >= 1 ? program(e.args[0]) : Expr{};
    Expr b = ar >= 2 ? program(e.args[1]) : Expr{};
    return Expr::make(e.op.kind, e.op.params, a, b);
  }

  std::size_t approx_bytes() const noexcept {
    return buf_.capacity() * sizeof(Word) + entries_.capacity() * sizeof(Entry) +
           set_.size() * (sizeof(std::uint32_t) + 2 * sizeof(void*) + sizeof(std::size_t)) +
           set_.bucket_count() * sizeof(void*);
  }

 private:
  struct IdHash {
    const EquivClassStore* s;
    std::size_t operator()(std::uint32_t id) const { return bits::hash(s->words(id)); }
  };
  struct IdEq {
    const EquivClassStore* s;
    bool operator()(std::uint32_t a, std::uint32_t b) const { return bits::equal(s->words(a), s->words(b)); }
  };

  Canvas canvas_;
  std::size_t nw_;
  std::vector<Word> buf_;
  std::vector<Entry> entries_;
  std::unordered_set<std::uint32_t, IdHash, IdEq> set_;
};

struct EnumerationLimits {
  std::size_t memory_budget = std::size_t{2} << 30;
  Deadline deadline{};
};

/// Bottom-up exact enumeration by program cost. `levels[c]` lists the classes
/// first reached at cost c. `visit(id)` runs for each new class and may return
/// true to stop early. Returns false when stopped.
class ExactEnumerator {
 public:
  ExactEnumerator(const Alphabet& alphabet, Canvas canvas, EnumerationLimits limits)
      : alphabet_(alphabet), store_(canvas), raster_(canvas), limits_(std::move(limits)) {
    levels_.emplace_back();
  }

  EquivClassStore& store() noexcept { return store_; }
  const std::vector<std::vector<std::uint32_t>>& levels() const noexcept { return levels_; }
  int cost() const noexcept { return static_cast<int>(levels_.size()) - 1; }

  /// Builds the next cost level.
  bool step(const std::function<bool(std::uint32_t)>& visit) {
    const int c = cost() + 1;
    levels_.emplace_back();
    std::size_t ticks = 0;
    auto offer = [&](const Op& op, std::uint32_t a, std::uint32_t b) {
      if ((++ticks & 0xffff) == 0) {
        limits_.deadline.check();
        if (store_.approx_bytes() > limits_.memory_budget) throw ResourceExhausted("equivalence store exceeds memory budget");
      }
      auto slot = store_.staging();
      raster_.apply(op.kind, op.params, arity(op.kind) >= 1 ? store_.words(a) : std::span<const Word>{},
                    arity(op.kind) >= 2 ? store_.words(b) : std::span<const Word>{}, slot);
      auto [id, inserted] = store_.commit({op, {a, b}, c});
      if (!inserted) return false;
      levels_.back().push_back(id);
      return visit ? visit(id) : false;
    };
    if (c == 1)
      for (const Op& op : alphabet_.primitives)
        if (offer(op, 0, 0)) return false;
    if (c >= 2) {
      const auto& prev = levels_[static_cast<std::size_t>(c - 1)];
      for (std::size_t k = 0; k < prev.size(); ++k)
        for (const Op& op : alphabet_.repeats)
          if (offer(op, prev[k], 0)) return false;
    }
    for (int i = 1; i <= c - 2; ++i) {
      const int j = c - 1 - i;
      // Copies: the level vectors are appended to while iterating.
      const std::vector<std::uint32_t> li = levels_[static_cast<std::size_t>(i)];
      const std::vector<std::uint32_t> lj = levels_[static_cast<std::size_t>(j)];
      if (alphabet_.with_union && i <= j)
        for (std::uint32_t x : li)
          for (std::uint32_t y : lj)
            if (x < y && offer({Kind::union_, {}}, x, y)) return false;
      if (alphabet_.with_diff)
        for (std::uint32_t x : li)
          for (std::uint32_t y : lj)
            if (offer({Kind::diff, {}}, x, y)) return false;
    }
    if (store_.approx_bytes() > limits_.memory_budget) throw ResourceExhausted("equivalence store exceeds memory budget");
    return true;
  }

 private:
  const Alphabet& alphabet_;
  EquivClassStore store_;
  Raster raster_;
  EnumerationLimits limits_;
  std::vector<std::vector<std::uint32_t>> levels_;
};

struct BaselineResult {
  std::optional<Expr> program;
  SearchStatus status = SearchStatus::not_found;
  std::size_t classes = 0;
  int max_cost_reached = 0;
  std::size_t peak_bytes = 0;
  double time_s = 0;
};

/// Exact bottom-up FTA search: enumerate scenes by cost, keep the first
/// program per scene, stop when the goal appears.
inline BaselineResult fta_basic(const Scene& goal, const Alphabet& alphabet, int max_cost, EnumerationLimits limits) {
  BaselineResult res;
  const auto start = Clock::now();
  ExactEnumerator en(alphabet, goal.canvas(), std::move(limits));
  std::optional<std::uint32_t> hit;
  try {
    while (en.cost() < max_cost) {
      const bool done = !en.step([&](std::uint32_t id) {
        if (bits::equal(en.store().words(id), goal.words())) hit = id;
        return hit.has_value();
      });
      res.max_cost_reached = en.cost();
      if (done) break;
    }
  } catch (const TimeoutExpired&) {
    res.status = SearchStatus::timeout;
  } catch (const ResourceExhausted&) {
    res.status = SearchStatus::out_of_memory;
  }
  res.classes = en.store().size();
  res.peak_bytes = en.store().approx_bytes();
  if (hit) {
    res.program = canonicalize(en.store().program(*hit));
    res.status = SearchStatus::solved;
  }
  res.time_s = seconds_since(start);
  return res;
}

inline BaselineResult fta_basic(const Scene& goal, const SynthConfig& cfg) {
  return fta_basic(goal, Alphabet::for_canvas(goal.canvas()), cfg.max_cost,
                   {cfg.memory_budget, Deadline(cfg.time_budget)});
}

// ---------------------------------------------------------------------------
// Search-space study

struct SpaceRow {
  int n = 0;
  double total = 0;          // canonical programs with at most n nodes
  std::size_t distinct = 0;  // distinct scenes among them
  std::vector<std::size_t> clusters;  // greedy epsilon-clusters of those scenes, per epsilon
};

struct SpaceStudy {
  std::vector<double> epsilons;
  std::vector<SpaceRow> rows;
  bool truncated = false;  // a budget stopped the study before n_max
  std::string stop_reason;
};

/// Number of canonical programs of each exact size 1..n_max over `alphabet`.
inline std::vector<double> count_programs(const Alphabet& alphabet, int n_max) {
  std::vector<double> t(static_cast<std::size_t>(n_max) + 1, 0.0);
  const double prims = static_cast<double>(alphabet.primitives.size());
  const double reps = static_cast<double>(alphabet.repeats.size());
  for (int c = 1; c <= n_max; ++c) {
    double v = c == 1 ? prims : reps * t[static_cast<std::size_t>(c - 1)];
    for (int i = 1; i <= c - 2; ++i) {
      const int j = c - 1 - i;
      const double ti = t[static_cast<std::size_t>(i)], tj = t[static_cast<std::size_t>(j)];
      if (alphabet.with_diff) v += ti * tj;
      if (alphabet.with_union) {
        if (i < j) v += ti * tj;
        else if (i == j) v += ti * (ti + 1) / 2;
      }
    }
    t[static_cast<std::size_t>(c)] = v;
  }
  return t;
}

/// Grows the program space one size at a time and reports, cumulatively up to
/// each n, the canonical program count, the distinct scene count and the number
/// of greedy epsilon-clusters (plain Jaccard) covering those scenes.
inline SpaceStudy count_search_space(const Alphabet& alphabet, Canvas canvas, int n_max, std::vector<double> epsilons,
                                     EnumerationLimits limits) {
  SpaceStudy study;
  study.epsilons = epsilons;
  const std::vector<double> exact = count_programs(alphabet, n_max);
  std::vector<JaccardBuckets> clusters;
  for (std::size_t i = 0; i < epsilons.size(); ++i)
    clusters.emplace_back(canvas.words(), static_cast<std::size_t>(canvas.pixels()));
  ExactEnumerator en(alphabet, canvas, limits);
  double total = 0;
  std::size_t clustered = 0;
  try {
    for (int n = 1; n <= n_max; ++n) {
      en.step({});
      total += exact[static_cast<std::size_t>(n)];
      for (; clustered < en.store().size(); ++clustered) {
        if ((clustered & 0xfff) == 0) limits.deadline.check();
        const auto id = static_cast<std::uint32_t>(clustered);
        const auto words = en.store().words(id);
        for (std::size_t e = 0; e < clusters.size(); ++e)
          if (!clusters[e].any_within(words, epsilons[e])) clusters[e].insert(words);
      }
      SpaceRow row{n, total, en.store().size(), {}};
      for (const JaccardBuckets& c : clusters) row.clusters.push_back(c.size());
      study.rows.push_back(std::move(row));
    }
  } catch (const TimeoutExpired& e) {
    study.truncated = true;
    study.stop_reason = e.what();
  } catch (const ResourceExhausted& e) {
    study.truncated = true;
    study.stop_reason = e.what();
  }
  return study;
}

inline void write_space_csv(std::ostream& os, const SpaceStudy& s) {
  os << "n,total,distinct";
  for (double e : s.epsilons) {
    std::string t = std::to_string(e);
    t.erase(t.find_last_not_of('0') + 1);
    if (t.back() == '.') t.pop_back();
    os << ",clusters_eps" << t;
  }
  os << '\n';
  for (const SpaceRow& r : s.rows) {
    os << r.n << ',' << std::fixed << std::setprecision(0) << r.total << std::defaultfloat << ',' << r.distinct;
    for (std::size_t c : r.clusters) os << ',' << c;
    os << '\n';
  }
}

}  // namespace symetric
