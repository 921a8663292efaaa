#pragma once

#include <cstdlib>
#include <span>
#include <unordered_map>
#include <vector>

#include "symetric/expr.hpp"
#include "symetric/scene.hpp"

namespace symetric {

/// Per-canvas rendering kernels over packed scenes. Holds scratch space, so an
/// instance must not be shared between threads.
class Raster {
 public:
  explicit Raster(Canvas canvas) : canvas_(canvas), nwords_(canvas.words()), scratch_(2 * canvas.words()) {
    const int w = canvas_.width;
    col_masks_.assign(static_cast<std::size_t>(2 * w + 1) * nwords_, 0);
    for (int dx = -w; dx <= w; ++dx) {
      std::span<Word> m = mask_slot(dx);
      for (int v = 0; v < canvas_.height; ++v)
        for (int u = 0; u < w; ++u)
          if (u + dx >= 0 && u + dx < w) set_bit(m, u, v);
    }
  }

  const Canvas& canvas() const noexcept { return canvas_; }
  std::size_t words() const noexcept { return nwords_; }

  /// out[u, v] = in[u - dx, v - dy]; reads outside the canvas are false.
  void translate(std::span<Word> out, std::span<const Word> in, int dx, int dy) {
    if (std::abs(dx) >= canvas_.width || std::abs(dy) >= canvas_.height) {
      std::fill(out.begin(), out.end(), Word{0});
      return;
    }
    std::span<Word> tmp(scratch_.data(), nwords_);
    std::span<const Word> m = mask_slot(dx);
    for (std::size_t i = 0; i < nwords_; ++i) tmp[i] = in[i] & m[i];
    bits::shift(out, tmp, static_cast<long>(dy) * canvas_.width + dx);
    clear_tail(out);
  }

  /// Union of `count` copies of `body`, copy i moved by i * (dx, dy).
  void repeat(std::span<Word> out, std::span<const Word> body, int dx, int dy, int count) {
    std::copy(body.begin(), body.end(), out.begin());
    std::span<Word> moved(scratch_.data() + nwords_, nwords_);
    for (int i = 1; i < count; ++i) {
      const int ox = i * dx, oy = i * dy;
      if (std::abs(ox) >= canvas_.width || std::abs(oy) >= canvas_.height) break;
      translate(moved, body, ox, oy);
      bits::or_into(out, moved);
    }
  }

  void circle(std::span<Word> out, int x, int y, int r) const {
    std::fill(out.begin(), out.end(), Word{0});
    const long r2 = static_cast<long>(r) * r;
    for (int v = std::max(0, y - r); v <= std::min(canvas_.height - 1, y + r); ++v)
      for (int u = std::max(0, x - r); u <= std::min(canvas_.width - 1, x + r); ++u) {
        const long du = x - u, dv = y - v;
        if (du * du + dv * dv < r2) set_bit(out, u, v);
      }
  }

  void rect(std::span<Word> out, int x1, int y1, int x2, int y2) const {
    std::fill(out.begin(), out.end(), Word{0});
    const int u0 = std::max(0, x1), u1 = std::min(canvas_.width - 1, x2);
    for (int v = std::max(0, y1); v <= std::min(canvas_.height - 1, y2); ++v)
      for (int u = u0; u <= u1; ++u) set_bit(out, u, v);
  }

  /// Applies one operator to already-evaluated arguments.
  void apply(Kind kind, const Params& p, std::span<const Word> a, std::span<const Word> b, std::span<Word> out) {
    switch (kind) {
      case Kind::circle: circle(out, p[0], p[1], p[2]); break;
      case Kind::rect: rect(out, p[0], p[1], p[2], p[3]); break;
      case Kind::union_: bits::set_union(out, a, b); break;
      case Kind::diff: bits::set_difference(out, a, b); break;
      case Kind::repeat: repeat(out, a, p[0], p[1], p[2]); break;
    }
  }

 private:
  std::span<Word> mask_slot(int dx) {
    return {col_masks_.data() + static_cast<std::size_t>(dx + canvas_.width) * nwords_, nwords_};
  }
  std::span<const Word> mask_slot(int dx) const {
    return {col_masks_.data() + static_cast<std::size_t>(dx + canvas_.width) * nwords_, nwords_};
  }
  void set_bit(std::span<Word> w, int u, int v) const {
    const std::size_t i = static_cast<std::size_t>(v) * static_cast<std::size_t>(canvas_.width) + static_cast<std::size_t>(u);
    w[i / kWordBits] |= Word{1} << (i % kWordBits);
  }
  void clear_tail(std::span<Word> w) const {
    const std::size_t rem = canvas_.pixels() % kWordBits;
    if (rem != 0) w.back() &= (Word{1} << rem) - 1;
  }

  Canvas canvas_;
  std::size_t nwords_;
  std::vector<Word> col_masks_;
  std::vector<Word> scratch_;
};

/// Evaluates programs to scenes, memoizing results by structural identity.
/// Confined to one thread.
class Evaluator {
 public:
  explicit Evaluator(Canvas canvas, bool memoize = true, std::size_t max_entries = 1 << 20)
      : raster_(canvas), memoize_(memoize), max_entries_(max_entries) {}

  const Canvas& canvas() const noexcept { return raster_.canvas(); }
  Raster& raster() noexcept { return raster_; }
  std::size_t cache_size() const noexcept { return memo_.size(); }
  std::size_t hits() const noexcept { return hits_; }

  Scene eval(const Expr& e) {
    if (memoize_) {
      if (auto it = memo_.find(e); it != memo_.end()) {
        ++hits_;
        return it->second;
      }
    }
    Scene out(raster_.canvas());
    const int ar = arity(e.kind());
    Scene a = ar >= 1 ? eval(e.child(0)) : Scene();
    Scene b = ar >= 2 ? eval(e.child(1)) : Scene();
    raster_.apply(e.kind(), e.params(), a.words(), b.words(), out.mutable_words());
    if (memoize_) {
      if (memo_.size() >= max_entries_) memo_.clear();
      memo_.emplace(e, out);
    }
    return out;
  }

  Scene operator()(const Expr& e) { return eval(e); }

 private:
  Raster raster_;
  bool memoize_;
  std::size_t max_entries_;
  std::size_t hits_ = 0;
  std::unordered_map<Expr, Scene, ExprHash> memo_;
};

/// One-shot evaluation; shared subtrees within `e` are evaluated once.
inline Scene eval(const Expr& e, const Canvas& canvas) {
  Evaluator ev(canvas);
  return ev.eval(e);
}

}  // namespace symetric
