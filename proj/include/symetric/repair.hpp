#pragma once

#include <algorithm>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "symetric/config.hpp"
#include "symetric/eval.hpp"
#include "symetric/expr.hpp"
#include "symetric/extract.hpp"
#include "symetric/metric.hpp"

namespace symetric {

/// A single-node edit: node `node` becomes (kind, params), children kept.
struct Rewrite {
  int node = 0;
  Kind kind = Kind::circle;
  Params params{};
};

/// Program stored as an array of nodes with cached scenes and hashes, so that
/// a single-node edit is re-evaluated along one root path only.
class FlatProgram {
 public:
  struct Node {
    Kind kind = Kind::circle;
    Params params{};
    std::array<int, 2> child{-1, -1};
    int parent = -1;
    Scene scene;
    std::size_t hash = 0;
  };

  FlatProgram(const Expr& e, Raster& raster) : raster_(&raster) {
    root_ = build(e, -1);
  }

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  int root() const noexcept { return root_; }
  const Scene& scene() const { return nodes_[static_cast<std::size_t>(root_)].scene; }
  std::size_t hash() const { return nodes_[static_cast<std::size_t>(root_)].hash; }

  Expr to_expr() const { return to_expr(root_); }

  /// Scene and hash of the program after applying `r`, without modifying it.
  std::pair<const Scene*, std::size_t> preview(const Rewrite& r) {
    std::size_t h = 0;
    const Scene* s = path_apply(r, h, false);
    return {s, h};
  }

  /// Hash of the program after applying `r`, without evaluating.
  std::size_t preview_hash(const Rewrite& r) const {
    const Node& n = nodes_[static_cast<std::size_t>(r.node)];
    std::size_t h = node_hash(r.kind, r.params, child_hash(n, 0), child_hash(n, 1));
    int cur = r.node;
    for (int p = n.parent; p >= 0; cur = p, p = nodes_[static_cast<std::size_t>(p)].parent) {
      const Node& pn = nodes_[static_cast<std::size_t>(p)];
      const std::size_t h0 = pn.child[0] == cur ? h : child_hash(pn, 0);
      const std::size_t h1 = pn.child[1] == cur ? h : child_hash(pn, 1);
      h = node_hash(pn.kind, pn.params, h0, h1);
    }
    return h;
  }

  void commit(const Rewrite& r) {
    std::size_t h = 0;
    path_apply(r, h, true);
  }

 private:
  std::size_t child_hash(const Node& n, int i) const {
    const int c = n.child[static_cast<std::size_t>(i)];
    return c < 0 ? 0 : nodes_[static_cast<std::size_t>(c)].hash;
  }

  int build(const Expr& e, int parent) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({e.kind(), e.params(), {-1, -1}, parent, Scene(raster_->canvas()), 0});
    for (int i = 0; i < arity(e.kind()); ++i) {
      const int c = build(e.child(i), id);
      nodes_[static_cast<std::size_t>(id)].child[static_cast<std::size_t>(i)] = c;
    }
    Node& n = nodes_[static_cast<std::size_t>(id)];
    raster_->apply(n.kind, n.params, child_words(n, 0), child_words(n, 1), n.scene.mutable_words());
    n.hash = node_hash(n.kind, n.params, child_hash(n, 0), child_hash(n, 1));
    return id;
  }

  std::span<const Word> child_words(const Node& n, int i) const {
    const int c = n.child[static_cast<std::size_t>(i)];
    return c < 0 ? std::span<const Word>{} : nodes_[static_cast<std::size_t>(c)].scene.words();
  }

  // Recomputes scenes from the edited node to the root, either in place or
  // into scratch buffers.
  const Scene* path_apply(const Rewrite& r, std::size_t& h, bool in_place) {
    Node& n = nodes_[static_cast<std::size_t>(r.node)];
    if (scratch_.size() < 2) scratch_.assign(2, Scene(raster_->canvas()));
    Scene* cur_scene = in_place ? &n.scene : &scratch_[0];
    raster_->apply(r.kind, r.params, child_words(n, 0), child_words(n, 1), cur_scene->mutable_words());
    h = node_hash(r.kind, r.params, child_hash(n, 0), child_hash(n, 1));
    if (in_place) {
      n.kind = r.kind;
      n.params = r.params;
      n.hash = h;
    }
    int cur = r.node;
    int flip = 1;
    for (int p = n.parent; p >= 0; cur = p, p = nodes_[static_cast<std::size_t>(p)].parent) {
      Node& pn = nodes_[static_cast<std::size_t>(p)];
      std::span<const Word> a = pn.child[0] == cur ? cur_scene->words() : child_words(pn, 0);
      std::span<const Word> b = pn.child[1] == cur ? cur_scene->words() : child_words(pn, 1);
      Scene* out = in_place ? &pn.scene : &scratch_[static_cast<std::size_t>(flip)];
      raster_->apply(pn.kind, pn.params, a, b, out->mutable_words());
      const std::size_t h0 = pn.child[0] == cur ? h : child_hash(pn, 0);
      const std::size_t h1 = pn.child[1] == cur ? h : child_hash(pn, 1);
      h = node_hash(pn.kind, pn.params, h0, h1);
      if (in_place) pn.hash = h;
      cur_scene = out;
      flip ^= 1;
    }
    return cur_scene;
  }

  Expr to_expr(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    Expr a = n.child[0] >= 0 ? to_expr(n.child[0]) : Expr{};
    Expr b = n.child[1] >= 0 ? to_expr(n.child[1]) : Expr{};
    return Expr::make(n.kind, n.params, a, b);
  }

  Raster* raster_;
  std::vector<Node> nodes_;
  int root_ = 0;
  std::vector<Scene> scratch_;
};

/// All single-node rewrites of `p` that stay in `domain` and are well-formed:
/// +/-1 on any scalar, and swapping a circle for its bounding square (and a
/// square rect for its inscribed circle).
inline std::vector<Rewrite> rewrites(const FlatProgram& p, const ParamDomain& domain, const Canvas& canvas) {
  std::vector<Rewrite> out;
  const auto& nodes = p.nodes();
  auto keep = [&](const Rewrite& r) {
    for (int i = 0; i < param_count(r.kind); ++i) {
      const auto [lo, hi] = domain.bounds(r.kind, i);
      if (r.params[static_cast<std::size_t>(i)] < lo || r.params[static_cast<std::size_t>(i)] > hi) return;
    }
    if (node_well_formed(r.kind, r.params, canvas)) out.push_back(r);
  };
  for (int id = 0; id < static_cast<int>(nodes.size()); ++id) {
    const auto& n = nodes[static_cast<std::size_t>(id)];
    for (int i = 0; i < param_count(n.kind); ++i)
      for (int delta : {1, -1}) {
        Rewrite r{id, n.kind, n.params};
        r.params[static_cast<std::size_t>(i)] += delta;
        keep(r);
      }
    if (n.kind == Kind::circle) {
      const int x = n.params[0], y = n.params[1], r = n.params[2];
      keep({id, Kind::rect, {x - r, y - r, x + r, y + r}});
    } else if (n.kind == Kind::rect && n.params[2] - n.params[0] == n.params[3] - n.params[1]) {
      const int r = (n.params[2] - n.params[0]) / 2;
      keep({id, Kind::circle, {n.params[0] + r, n.params[1] + r, r, 0}});
    }
  }
  return out;
}

/// Bounded FIFO of recently visited programs, keyed by structural hash and
/// confirmed by serialized text.
class TabuList {
 public:
  explicit TabuList(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 1)) {}

  bool contains(std::size_t hash, const std::function<std::string()>& text) const {
    auto it = index_.find(hash);
    if (it == index_.end()) return false;
    const std::string t = text();
    return std::find(it->second.begin(), it->second.end(), t) != it->second.end();
  }

  void add(std::size_t hash, std::string text) {
    if (fifo_.size() == capacity_) {
      auto& bucket = index_[fifo_.front().first];
      bucket.erase(std::find(bucket.begin(), bucket.end(), fifo_.front().second));
      if (bucket.empty()) index_.erase(fifo_.front().first);
      fifo_.pop_front();
    }
    index_[hash].push_back(text);
    fifo_.emplace_back(hash, std::move(text));
  }

  std::size_t size() const noexcept { return fifo_.size(); }

 private:
  std::size_t capacity_;
  std::deque<std::pair<std::size_t, std::string>> fifo_;
  std::unordered_map<std::size_t, std::vector<std::string>> index_;
};

struct RepairOptions {
  int steps = 500;
  double sample_rate = 0.8;
  std::size_t tabu_capacity = 1000;
  ChoiceMode mode = ChoiceMode::distance;
};

struct RepairResult {
  std::optional<Expr> program;  // set when the goal was reproduced exactly
  int steps = 0;
  double best_distance = 1.0;
};

/// Tabu local search: each step moves to the sampled non-tabu neighbor closest
/// to the goal, stopping as soon as one renders the goal exactly.
inline RepairResult repair(const Expr& start, const Scene& goal, const ParamDomain& domain, const RepairOptions& opt,
                           std::mt19937_64& rng, Raster& raster) {
  require_same_canvas(goal, Scene(raster.canvas()));
  RepairResult res;
  FlatProgram p(start, raster);
  res.best_distance = jaccard(goal, p.scene());
  if (p.scene() == goal) {
    res.program = p.to_expr();
    return res;
  }
  // The start program is not tabu: only programs moved to are recorded.
  TabuList tabu(opt.tabu_capacity);
  std::vector<Rewrite> pool;
  for (res.steps = 1; res.steps <= opt.steps; ++res.steps) {
    pool.clear();
    for (const Rewrite& r : rewrites(p, domain, raster.canvas())) {
      const std::size_t h = p.preview_hash(r);
      auto text = [&] {
        FlatProgram q = p;
        q.commit(r);
        return serialize(q.to_expr());
      };
      if (!tabu.contains(h, text)) pool.push_back(r);
    }
    if (pool.empty()) break;
    const std::size_t k = sample_size(pool.size(), opt.sample_rate);
    if (k < pool.size()) {
      std::vector<Rewrite> kept;
      std::sample(pool.begin(), pool.end(), std::back_inserter(kept), k, rng);
      pool.swap(kept);
    }
    std::size_t pick = 0;
    double best = 2.0;
    if (opt.mode == ChoiceMode::random) {
      pick = std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
      best = jaccard(goal, *p.preview(pool[pick]).first);
    } else {
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const double d = jaccard(goal, *p.preview(pool[i]).first);
        if (d < best) {
          best = d;
          pick = i;
          if (d == 0.0) break;
        }
      }
    }
    p.commit(pool[pick]);
    res.best_distance = std::min(res.best_distance, best);
    if (p.scene() == goal) {
      res.program = p.to_expr();
      return res;
    }
    tabu.add(p.hash(), serialize(p.to_expr()));
  }
  res.steps = std::min(res.steps, opt.steps);
  return res;
}

}  // namespace symetric
