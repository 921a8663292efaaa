#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "symetric/config.hpp"
#include "symetric/eval.hpp"
#include "symetric/metric.hpp"
#include "symetric/xfta.hpp"

namespace symetric {

struct ExtractOptions {
  double sample_rate = 0.5;  // fraction of incoming transitions scored per step
  ChoiceMode mode = ChoiceMode::distance;
};

/// Number of items kept when sampling `n` of them at `rate`.
inline std::size_t sample_size(std::size_t n, double rate) {
  if (n == 0) return 0;
  const auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n);
}

namespace detail {

// One level of the partially extracted program above the current hole: the
// operator, the scenes of its arguments and which argument is the hole.
struct Frame {
  Op op;
  std::array<Scene, 2> args;
  int hole = 0;
  const Frame* parent = nullptr;
};

class Extractor {
 public:
  Extractor(const Xfta& a, const Scene& goal, ExtractOptions opt, std::mt19937_64& rng, Evaluator& ev)
      : a_(a), goal_(goal), opt_(opt), rng_(rng), ev_(ev), tmp_(a.canvas()), up_(a.canvas()) {}

  Expr resolve(StateId q, const Frame* ctx) {
    const auto& in = a_.incoming(q);
    if (in.empty()) throw std::logic_error("state has no incoming transitions");
    std::vector<std::uint32_t> pool;
    const std::size_t k = sample_size(in.size(), opt_.sample_rate);
    if (k == in.size()) {
      pool = in;
    } else {
      std::sample(in.begin(), in.end(), std::back_inserter(pool), k, rng_);
    }
    std::uint32_t pick = pool.front();
    if (opt_.mode == ChoiceMode::random) {
      pick = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng_)];
    } else {
      double best = 2.0;
      for (std::uint32_t ti : pool) {
        a_.apply(a_.transitions()[ti], ev_.raster(), tmp_.mutable_words());
        const double d = jaccard(goal_, complete(tmp_, ctx));
        if (d < best) {
          best = d;
          pick = ti;
        }
      }
    }
    const Transition t = a_.transitions()[pick];
    const int ar = arity(t.op.kind);
    std::array<Expr, 2> kids;
    Frame f{t.op, {}, 0, ctx};
    for (int i = 0; i < ar; ++i) f.args[static_cast<std::size_t>(i)] = a_.state(t.args[static_cast<std::size_t>(i)]).scene;
    for (int i = 0; i < ar; ++i) {
      f.hole = i;
      kids[static_cast<std::size_t>(i)] = resolve(t.args[static_cast<std::size_t>(i)], &f);
      f.args[static_cast<std::size_t>(i)] = ev_.eval(kids[static_cast<std::size_t>(i)]);
    }
    return Expr::make(t.op.kind, t.op.params, kids[0], kids[1]);
  }

 private:
  // Propagates a scene placed in the innermost hole up to the root.
  const Scene& complete(const Scene& s, const Frame* ctx) {
    if (!ctx) return s;
    up_ = s;
    Scene next(a_.canvas());
    for (const Frame* f = ctx; f; f = f->parent) {
      const int ar = arity(f->op.kind);
      std::span<const Word> x = f->hole == 0 ? up_.words() : f->args[0].words();
      std::span<const Word> y = ar < 2 ? std::span<const Word>{} : (f->hole == 1 ? up_.words() : f->args[1].words());
      ev_.raster().apply(f->op.kind, f->op.params, x, y, next.mutable_words());
      std::swap(up_, next);
    }
    return up_;
  }

  const Xfta& a_;
  const Scene& goal_;
  ExtractOptions opt_;
  std::mt19937_64& rng_;
  Evaluator& ev_;
  Scene tmp_;
  Scene up_;
};

}  // namespace detail

/// Reads one program out of the automaton, top-down from `final_state`. At each
/// hole a sample of the incoming transitions is scored by completing the
/// partial program with state scenes and measuring its distance to the goal.
inline Expr extract(const Xfta& a, StateId final_state, const Scene& goal, const ExtractOptions& opt,
                    std::mt19937_64& rng, Evaluator& ev) {
  require_same_canvas(goal, a.state(final_state).scene);
  detail::Extractor x(a, goal, opt, rng, ev);
  return x.resolve(final_state, nullptr);
}

}  // namespace symetric
