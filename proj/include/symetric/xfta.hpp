#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "symetric/config.hpp"
#include "symetric/eval.hpp"
#include "symetric/expr.hpp"
#include "symetric/metric.hpp"
#include "symetric/mtree.hpp"
#include "symetric/scene.hpp"

namespace symetric {

using StateId = std::uint32_t;

/// An alphabet symbol. Scalar parameters are part of the symbol, so primitives
/// are nullary and repeat[dx, dy, c] is unary.
struct Op {
  Kind kind = Kind::circle;
  Params params{};

  friend bool operator==(const Op&, const Op&) = default;
};

inline std::string op_label(const Op& op) {
  std::string s(kind_name(op.kind));
  if (param_count(op.kind) > 0) {
    s += '[';
    for (int i = 0; i < param_count(op.kind); ++i) {
      if (i) s += ',';
      s += std::to_string(op.params[static_cast<std::size_t>(i)]);
    }
    s += ']';
  }
  return s;
}

struct Transition {
  Op op;
  std::array<StateId, 2> args{};
  StateId out = 0;
};

/// Operators available during construction.
struct Alphabet {
  std::vector<Op> primitives;
  std::vector<Op> repeats;
  bool with_union = true;
  bool with_diff = true;

  /// Every well-formed primitive and repeat symbol of `domain` on `canvas`.
  static Alphabet standard(const Canvas& canvas, const ParamDomain& domain) {
    Alphabet a;
    const int cs = std::max(1, domain.coord_step), rs = std::max(1, domain.radius_step),
              os = std::max(1, domain.offset_step);
    for (int r = domain.radius_min; r <= domain.radius_max; r += rs)
      for (int y = 0; y <= domain.y_max; y += cs)
        for (int x = 0; x <= domain.x_max; x += cs) {
          const Params p{x, y, r, 0};
          if (node_well_formed(Kind::circle, p, canvas)) a.primitives.push_back({Kind::circle, p});
        }
    const auto axis = [cs](int max) {
      std::vector<int> v;
      for (int c = 0; c <= max; c += cs) v.push_back(c);
      if (v.back() != max) v.push_back(max);
      return v;
    };
    const std::vector<int> xs = axis(domain.x_max), ys = axis(domain.y_max);
    for (int x1 : xs)
      for (int x2 : xs)
        for (int y1 : ys)
          for (int y2 : ys) {
            const Params p{x1, y1, x2, y2};
            if (node_well_formed(Kind::rect, p, canvas)) a.primitives.push_back({Kind::rect, p});
          }
    for (int c = domain.count_min; c <= domain.count_max; ++c)
      for (int dy = -(domain.dy_limit / os) * os; dy <= domain.dy_limit; dy += os)
        for (int dx = -(domain.dx_limit / os) * os; dx <= domain.dx_limit; dx += os) {
          const Params p{dx, dy, c, 0};
          if (node_well_formed(Kind::repeat, p, canvas)) a.repeats.push_back({Kind::repeat, p});
        }
    return a;
  }

  static Alphabet for_canvas(const Canvas& canvas) { return standard(canvas, ParamDomain::for_canvas(canvas)); }

  Alphabet primitives_only() const {
    Alphabet a;
    a.primitives = primitives;
    a.with_union = a.with_diff = false;
    return a;
  }
};

struct XftaState {
  Scene scene;
  int cost = 0;
  double rank = 1.0;  // goal_rank of the scene
};

/// Approximate tree automaton: states are scenes, transitions may point to a
/// state within epsilon of their true output.
class Xfta {
 public:
  Xfta(Canvas canvas, Scene goal) : canvas_(canvas), goal_(std::move(goal)) {}

  const Canvas& canvas() const noexcept { return canvas_; }
  const Scene& goal() const noexcept { return goal_; }

  StateId add_state(Scene scene, int cost, double rank) {
    const auto id = static_cast<StateId>(states_.size());
    by_scene_.emplace(scene, id);
    states_.push_back({std::move(scene), cost, rank});
    incoming_.emplace_back();
    return id;
  }

  std::size_t add_transition(const Transition& t) {
    if (t.out >= states_.size()) throw std::out_of_range("transition target is not a state");
    for (int i = 0; i < arity(t.op.kind); ++i)
      if (t.args[static_cast<std::size_t>(i)] >= states_.size()) throw std::out_of_range("transition argument is not a state");
    transitions_.push_back(t);
    incoming_[t.out].push_back(static_cast<std::uint32_t>(transitions_.size() - 1));
    return transitions_.size() - 1;
  }

  std::optional<StateId> find(const Scene& s) const {
    if (auto it = by_scene_.find(s); it != by_scene_.end()) return it->second;
    return std::nullopt;
  }

  std::size_t state_count() const noexcept { return states_.size(); }
  const XftaState& state(StateId id) const { return states_.at(id); }
  const std::vector<Transition>& transitions() const noexcept { return transitions_; }
  const std::vector<std::uint32_t>& incoming(StateId id) const { return incoming_.at(id); }
  const std::vector<StateId>& finals() const noexcept { return finals_; }
  void set_finals(std::vector<StateId> f) { finals_ = std::move(f); }

  /// Overwrites a state's scene. Intended for tests that corrupt an automaton.
  void replace_scene_for_testing(StateId id, Scene s) { states_.at(id).scene = std::move(s); }

  /// Evaluates a transition's operator on its argument states' scenes.
  void apply(const Transition& t, Raster& raster, std::span<Word> out) const {
    const int ar = arity(t.op.kind);
    std::span<const Word> a = ar >= 1 ? states_[t.args[0]].scene.words() : std::span<const Word>{};
    std::span<const Word> b = ar >= 2 ? states_[t.args[1]].scene.words() : std::span<const Word>{};
    raster.apply(t.op.kind, t.op.params, a, b, out);
  }

  std::size_t approx_bytes() const noexcept {
    return states_.size() * (canvas_.words() * sizeof(Word) + 96) + transitions_.size() * (sizeof(Transition) + 4);
  }

 private:
  Canvas canvas_;
  Scene goal_;
  std::vector<XftaState> states_;
  std::vector<Transition> transitions_;
  std::vector<std::vector<std::uint32_t>> incoming_;
  std::vector<StateId> finals_;
  std::unordered_map<Scene, StateId, SceneHash> by_scene_;
};

// ---------------------------------------------------------------------------
// Clustering

/// Greedy epsilon-clustering over an M-tree. Centers are keyed by the scene's
/// goal-difference mask when a goal is given (goal-aware metric) and by the
/// scene itself otherwise (plain Jaccard).
class Clusterer {
 public:
  Clusterer(std::optional<Scene> goal, double epsilon) : goal_(std::move(goal)), epsilon_(epsilon) {}

  Scene key(std::span<const Word> scene, const Canvas& canvas) const {
    Scene k(canvas, scene);
    if (goal_) bits::set_xor(k.mutable_words(), k.words(), goal_->words());
    return k;
  }

  /// Centers within epsilon, as indices in insertion order.
  std::vector<std::size_t> close(const Scene& key) const { return index_.range_query(key, epsilon_); }
  std::size_t add_center(Scene key) { return index_.insert(std::move(key)); }
  std::size_t size() const noexcept { return index_.size(); }
  std::size_t distance_calls() const noexcept { return index_.distance_calls(); }

 private:
  std::optional<Scene> goal_;
  double epsilon_;
  MTree<Scene, JaccardMetric> index_;
};

struct ClusterResult {
  std::vector<std::size_t> centers;               // candidate indices that opened a cluster
  std::vector<std::vector<std::size_t>> targets;  // per candidate, the clusters (indices into centers) it maps to
};

/// Processes candidate outputs in order. A candidate with no center within
/// epsilon opens a new cluster; otherwise it is attached to every close center.
inline ClusterResult cluster_frontier(std::span<const Scene> outputs, const std::optional<Scene>& goal, double epsilon) {
  ClusterResult res;
  res.targets.resize(outputs.size());
  if (outputs.empty()) return res;
  Clusterer clusters(goal, epsilon);
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    Scene k = clusters.key(outputs[i].words(), outputs[i].canvas());
    auto close = clusters.close(k);
    if (close.empty()) {
      res.targets[i] = {clusters.add_center(std::move(k))};
      res.centers.push_back(i);
    } else {
      res.targets[i] = std::move(close);
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Construction

struct ConstructStats {
  double expansion_s = 0;
  double clustering_s = 0;
  double ranking_s = 0;
  std::size_t frontier_total = 0;
  std::size_t peak_bytes = 0;
  std::vector<std::size_t> frontier_per_cost;
  std::vector<std::size_t> states_per_cost;
};

/// The k states closest to the goal; ties go to the cheaper state, then to the
/// scene that sorts first in text form.
inline std::vector<StateId> top_k(const Xfta& a, std::span<const StateId> states, int k) {
  std::vector<StateId> v(states.begin(), states.end());
  auto less = [&a](StateId x, StateId y) {
    const XftaState &sx = a.state(x), &sy = a.state(y);
    if (sx.rank != sy.rank) return sx.rank < sy.rank;
    if (sx.cost != sy.cost) return sx.cost < sy.cost;
    if (!(sx.scene == sy.scene)) return text_less(sx.scene, sy.scene);
    return x < y;
  };
  const std::size_t n = std::min<std::size_t>(v.size(), static_cast<std::size_t>(std::max(k, 0)));
  std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n), v.end(), less);
  v.resize(n);
  return v;
}

namespace detail {

struct FrontierItem {
  Op op;
  std::array<StateId, 2> args{};
};

/// Dense ranks of every Jaccard value 1 - inter/uni with uni <= pixels.
/// Fractions that round to the same double share a class, so a stable
/// counting sort over classes orders a frontier exactly as a stable sort on
/// the double would.
class RankClasses {
 public:
  static constexpr std::size_t kMaxPixels = 1024;

  explicit RankClasses(std::size_t pixels) : n_(pixels), table_((pixels + 1) * (pixels + 1), 0) {
    std::vector<std::pair<double, std::uint32_t>> vals;
    vals.reserve(table_.size() / 2 + 1);
    for (std::size_t u = 0; u <= n_; ++u)
      for (std::size_t i = 0; i <= u; ++i) vals.push_back({value(i, u), static_cast<std::uint32_t>(u * (n_ + 1) + i)});
    std::sort(vals.begin(), vals.end());
    std::uint32_t cls = 0;
    for (std::size_t k = 0; k < vals.size(); ++k) {
      if (k > 0 && vals[k].first != vals[k - 1].first) ++cls;
      table_[vals[k].second] = cls;
    }
    classes_ = cls + 1;
  }

  static double value(std::size_t inter, std::size_t uni) {
    return uni == 0 ? 0.0 : 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
  }
  std::uint32_t of(std::size_t inter, std::size_t uni) const { return table_[uni * (n_ + 1) + inter]; }
  std::uint32_t classes() const noexcept { return classes_; }

 private:
  std::size_t n_;
  std::vector<std::uint32_t> table_;
  std::uint32_t classes_ = 0;
};

}  // namespace detail

/// Builds the approximate automaton bottom-up, one program cost at a time.
/// Each cost runs expansion (apply every operator to states whose costs sum to
/// the budget), ranking (order the frontier by distance to the goal) and
/// clustering (greedy epsilon-clusters until `beam_width` new states exist).
inline Xfta construct_xfta(const Alphabet& alphabet, const Scene& goal, const SynthConfig& cfg,
                           ConstructStats* stats = nullptr, const Deadline& deadline = Deadline{}) {
  cfg.validate();
  if (!(goal.canvas() == cfg.canvas)) throw DimensionMismatch(goal.canvas(), cfg.canvas);
  ConstructStats local;
  ConstructStats& st = stats ? *stats : local;
  const Canvas canvas = cfg.canvas;
  const std::size_t nw = canvas.words();
  Xfta a(canvas, goal);
  Raster raster(canvas);
  std::mt19937_64 rng(mix_seed(cfg.seed, 0xf7a));
  const std::size_t width = static_cast<std::size_t>(cfg.beam_width);

  std::vector<std::vector<StateId>> level(static_cast<std::size_t>(cfg.max_cost) + 1);
  std::vector<detail::FrontierItem> items;
  std::vector<Word> scenes;
  std::vector<std::pair<double, std::size_t>> order;  // (rank, frontier index)
  std::optional<detail::RankClasses> classes;
  std::vector<std::uint32_t> cls, bucket;
  std::vector<double> ranks;
  if (cfg.rank_mode == RankMode::distance && canvas.pixels() <= detail::RankClasses::kMaxPixels) {
    ScopedTimer timer(st.ranking_s);
    classes.emplace(canvas.pixels());
  }

  for (int c = 1; c <= cfg.max_cost; ++c) {
    deadline.check();
    items.clear();
    // Expansion.
    {
      ScopedTimer timer(st.expansion_s);
      if (c == 1) {
        for (const Op& op : alphabet.primitives) items.push_back({op, {}});
      }
      if (c >= 2) {
        for (StateId s : level[static_cast<std::size_t>(c - 1)])
          for (const Op& op : alphabet.repeats) items.push_back({op, {s, 0}});
      }
      for (int i = 1; i <= c - 2; ++i) {
        const int j = c - 1 - i;
        const auto& li = level[static_cast<std::size_t>(i)];
        const auto& lj = level[static_cast<std::size_t>(j)];
        if (alphabet.with_union && i <= j)
          for (StateId x : li)
            for (StateId y : lj)
              if (x < y) items.push_back({{Kind::union_, {}}, {x, y}});
        if (alphabet.with_diff)
          for (StateId x : li)
            for (StateId y : lj) items.push_back({{Kind::diff, {}}, {x, y}});
      }
      const std::size_t need = a.approx_bytes() + items.size() * (nw * sizeof(Word) + sizeof(detail::FrontierItem) + 24);
      st.peak_bytes = std::max(st.peak_bytes, need);
      if (need > cfg.memory_budget)
        throw ResourceExhausted("frontier at cost " + std::to_string(c) + " needs ~" + std::to_string(need >> 20) + " MiB");
      scenes.assign(items.size() * nw, 0);
      Transition t;
      for (std::size_t i = 0; i < items.size(); ++i) {
        if ((i & 0xfff) == 0) deadline.check();
        t.op = items[i].op;
        t.args = items[i].args;
        a.apply(t, raster, std::span<Word>(scenes.data() + i * nw, nw));
      }
    }
    st.frontier_total += items.size();
    st.frontier_per_cost.push_back(items.size());
    // Ranking. Small canvases get a counting sort over rank classes. Otherwise
    // candidates are consumed best first and sorted lazily in chunks.
    std::size_t sorted = 0;
    double ranking_in_loop = 0;  // spent inside the clustering loop, moved to ranking_s below
    auto by_rank = [](const std::pair<double, std::size_t>& x, const std::pair<double, std::size_t>& y) { return x < y; };
    auto extend = [&](std::size_t upto) {
      ScopedTimer timer(ranking_in_loop);
      upto = std::min(upto, order.size());
      if (upto <= sorted) return;
      if (cfg.rank_mode == RankMode::distance) {
        if (upto < order.size())
          std::nth_element(order.begin() + static_cast<std::ptrdiff_t>(sorted), order.begin() + static_cast<std::ptrdiff_t>(upto),
                           order.end(), by_rank);
        std::sort(order.begin() + static_cast<std::ptrdiff_t>(sorted), order.begin() + static_cast<std::ptrdiff_t>(upto), by_rank);
      }
      sorted = upto;
    };
    {
      ScopedTimer timer(st.ranking_s);
      order.resize(items.size());
      if (classes) {
        // Stable counting sort over rank classes; the whole order is ready at once.
        cls.resize(items.size());
        ranks.resize(items.size());
        bucket.assign(classes->classes() + 1, 0);
        for (std::size_t i = 0; i < items.size(); ++i) {
          std::span<const Word> sw(scenes.data() + i * nw, nw);
          const std::size_t inter = bits::popcount_and(goal.words(), sw), uni = bits::popcount_or(goal.words(), sw);
          cls[i] = classes->of(inter, uni);
          ranks[i] = detail::RankClasses::value(inter, uni);
          ++bucket[cls[i] + 1];
        }
        std::partial_sum(bucket.begin(), bucket.end(), bucket.begin());
        for (std::size_t i = 0; i < items.size(); ++i) order[bucket[cls[i]]++] = {ranks[i], i};
        sorted = order.size();
      } else if (cfg.rank_mode == RankMode::distance) {
        for (std::size_t i = 0; i < items.size(); ++i)
          order[i] = {jaccard_words(goal.words(), std::span<const Word>(scenes.data() + i * nw, nw)), i};
      } else {
        for (std::size_t i = 0; i < items.size(); ++i) order[i] = {0.0, i};
        std::shuffle(order.begin(), order.end(), rng);
      }
    }
    // Clustering.
    std::size_t made = 0;
    {
      ScopedTimer timer(st.clustering_s);
      Clusterer clusters(goal, cfg.cluster ? cfg.epsilon : 0.0);
      std::vector<StateId> center_state;
      double last_rank = 0;
      for (std::size_t n = 0; n < order.size(); ++n) {
        if ((n & 0xfff) == 0) deadline.check();
        if (n == sorted) extend(std::max<std::size_t>(2 * sorted, 4 * width));
        const std::size_t i = order[n].second;
        std::span<const Word> sw(scenes.data() + i * nw, nw);
        const double rank = cfg.rank_mode == RankMode::random ? jaccard_words(goal.words(), sw) : order[n].first;
        if (made >= width && (cfg.rank_mode == RankMode::random || rank > last_rank)) break;
        Transition t{items[i].op, items[i].args, 0};
        const Scene scene(canvas, sw);
        if (auto old = a.find(scene); old && a.state(*old).cost < c) {
          // Same value as an earlier state. Keep the edge only if every argument
          // precedes the target, so extraction stays acyclic.
          const XftaState& target = a.state(*old);
          bool ok = true;
          for (int k = 0; k < arity(t.op.kind); ++k) {
            const StateId arg = t.args[static_cast<std::size_t>(k)];
            const XftaState& as = a.state(arg);
            if (!(as.cost < target.cost || (as.cost == target.cost && arg < *old))) ok = false;
          }
          if (ok) {
            t.out = *old;
            a.add_transition(t);
          }
          continue;
        }
        Scene key = clusters.key(sw, canvas);
        const std::vector<std::size_t> close = clusters.close(key);
        if (close.empty()) {
          if (made >= width) continue;
          const StateId id = a.add_state(scene, c, rank);
          clusters.add_center(std::move(key));
          center_state.push_back(id);
          level[static_cast<std::size_t>(c)].push_back(id);
          t.out = id;
          a.add_transition(t);
          ++made;
          last_rank = rank;
        } else {
          for (std::size_t ci : close) {
            t.out = center_state[ci];
            a.add_transition(t);
          }
        }
      }
    }
    st.clustering_s -= ranking_in_loop;
    st.ranking_s += ranking_in_loop;
    st.states_per_cost.push_back(made);
    st.peak_bytes = std::max(st.peak_bytes, a.approx_bytes());
    if (a.approx_bytes() > cfg.memory_budget) throw ResourceExhausted("automaton exceeds memory budget");
  }
  scenes.clear();
  scenes.shrink_to_fit();
  {
    ScopedTimer timer(st.ranking_s);
    std::vector<StateId> all(a.state_count());
    std::iota(all.begin(), all.end(), StateId{0});
    a.set_finals(top_k(a, all, cfg.final_count()));
  }
  return a;
}

// ---------------------------------------------------------------------------
// Auditing and dumps

struct InvariantViolation {
  std::size_t transition = 0;
  double distance = 0;
};

/// Re-evaluates every transition and reports those whose true output is more
/// than epsilon (goal-aware metric) from the target state's scene.
inline std::vector<InvariantViolation> audit_invariants(const Xfta& a, double epsilon) {
  std::vector<InvariantViolation> out;
  Raster raster(a.canvas());
  Scene tmp(a.canvas());
  for (std::size_t i = 0; i < a.transitions().size(); ++i) {
    const Transition& t = a.transitions()[i];
    a.apply(t, raster, tmp.mutable_words());
    const double d = goal_distance(a.goal(), tmp, a.state(t.out).scene);
    if (d > epsilon) out.push_back({i, d});
  }
  return out;
}

/// Run-length form "<first bit>:<run>,<run>,..." over row-major pixels.
inline std::string run_length(const Scene& s) {
  std::string out;
  bool cur = s.get(0, 0);
  out += cur ? "1:" : "0:";
  std::size_t run = 0;
  bool first = true;
  for (int v = 0; v < s.height(); ++v)
    for (int u = 0; u < s.width(); ++u) {
      const bool b = s.get(u, v);
      if (b == cur) {
        ++run;
      } else {
        out += (first ? "" : ",") + std::to_string(run);
        first = false;
        cur = b;
        run = 1;
      }
    }
  out += (first ? "" : ",") + std::to_string(run);
  return out;
}

inline nlohmann::json to_json(const Xfta& a) {
  nlohmann::json j;
  j["canvas"] = {a.canvas().width, a.canvas().height};
  j["goal"] = run_length(a.goal());
  auto& states = j["states"] = nlohmann::json::array();
  for (StateId i = 0; i < a.state_count(); ++i)
    states.push_back({{"id", i}, {"cost", a.state(i).cost}, {"rank", a.state(i).rank}, {"scene", run_length(a.state(i).scene)}});
  auto& trans = j["transitions"] = nlohmann::json::array();
  for (const Transition& t : a.transitions()) {
    auto args = nlohmann::json::array();
    for (int k = 0; k < arity(t.op.kind); ++k) args.push_back(t.args[static_cast<std::size_t>(k)]);
    trans.push_back({{"op", op_label(t.op)}, {"args", args}, {"out", t.out}});
  }
  j["finals"] = a.finals();
  return j;
}

}  // namespace symetric
