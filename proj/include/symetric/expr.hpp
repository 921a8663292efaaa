#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include "symetric/scene.hpp"

namespace symetric {

enum class Kind : std::uint8_t { circle, rect, union_, diff, repeat };

inline constexpr std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::circle: return "circle";
    case Kind::rect: return "rect";
    case Kind::union_: return "union";
    case Kind::diff: return "diff";
    case Kind::repeat: return "repeat";
  }
  return "?";
}

/// Number of scalar parameters carried by a node of this kind.
inline constexpr int param_count(Kind k) {
  switch (k) {
    case Kind::circle: return 3;
    case Kind::rect: return 4;
    case Kind::repeat: return 3;
    default: return 0;
  }
}

/// Number of sub-program arguments.
inline constexpr int arity(Kind k) {
  switch (k) {
    case Kind::union_:
    case Kind::diff: return 2;
    case Kind::repeat: return 1;
    default: return 0;
  }
}

inline constexpr bool is_primitive(Kind k) { return arity(k) == 0; }

using Params = std::array<int, 4>;

struct ExprNode;

/// Immutable CSG program. Copies share structure.
///
///   circle(x, y, r)            pixels strictly within distance r of (x, y)
///   rect(x1, y1, x2, y2)       inclusive corner box
///   union(a, b), diff(a, b)    pixelwise or / and-not
///   repeat(body, dx, dy, c)    union of c copies, copy i moved by i * (dx, dy)
class Expr {
 public:
  static Expr circle(int x, int y, int r);
  static Expr rect(int x1, int y1, int x2, int y2);
  static Expr union_of(Expr a, Expr b);
  static Expr diff(Expr a, Expr b);
  static Expr repeat(Expr body, int dx, int dy, int count);
  /// Builds a node of `kind` with the given parameters and children. Children
  /// beyond the kind's arity are ignored.
  static Expr make(Kind kind, const Params& params, Expr a = {}, Expr b = {});

  Expr() = default;

  bool valid() const noexcept { return node_ != nullptr; }
  Kind kind() const;
  const Params& params() const;
  int param(int i) const { return params()[static_cast<std::size_t>(i)]; }
  const Expr& child(int i) const;
  const Expr& left() const { return child(0); }
  const Expr& right() const { return child(1); }
  const Expr& body() const { return child(0); }
  std::size_t hash() const;
  int size() const;
  int depth() const;
  const ExprNode* node() const noexcept { return node_.get(); }

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}
  std::shared_ptr<const ExprNode> node_;
};

struct ExprNode {
  Kind kind;
  Params params{};
  std::array<Expr, 2> children{};
  std::size_t hash = 0;
  int size = 1;
  int depth = 1;
};

struct ExprHash {
  std::size_t operator()(const Expr& e) const { return e.hash(); }
};

inline std::size_t mix_hash(std::size_t h, std::size_t v) {
  std::uint64_t x = h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  x ^= x >> 31;
  x *= 0xbf58476d1ce4e5b9ULL;
  return static_cast<std::size_t>(x ^ (x >> 29));
}

/// Structural hash of a node from its label and its children's hashes. Shared
/// with the flat program representation used during repair.
inline std::size_t node_hash(Kind kind, const Params& params, std::size_t h0, std::size_t h1) {
  std::size_t h = mix_hash(0x51ed270b27c1f3a5ULL, static_cast<std::size_t>(kind));
  for (int i = 0; i < param_count(kind); ++i)
    h = mix_hash(h, static_cast<std::size_t>(static_cast<std::uint32_t>(params[static_cast<std::size_t>(i)])));
  if (arity(kind) >= 1) h = mix_hash(h, h0);
  if (arity(kind) >= 2) h = mix_hash(h, h1);
  return h;
}

inline Expr Expr::make(Kind kind, const Params& params, Expr a, Expr b) {
  auto n = std::make_shared<ExprNode>();
  n->kind = kind;
  for (int i = 0; i < param_count(kind); ++i) n->params[static_cast<std::size_t>(i)] = params[static_cast<std::size_t>(i)];
  const int ar = arity(kind);
  if (ar >= 1) {
    if (!a.valid()) throw std::invalid_argument(std::string(kind_name(kind)) + " requires a child");
    n->children[0] = std::move(a);
  }
  if (ar >= 2) {
    if (!b.valid()) throw std::invalid_argument(std::string(kind_name(kind)) + " requires two children");
    n->children[1] = std::move(b);
  }
  n->size = 1;
  n->depth = 1;
  for (int i = 0; i < ar; ++i) {
    n->size += n->children[static_cast<std::size_t>(i)].size();
    n->depth = std::max(n->depth, 1 + n->children[static_cast<std::size_t>(i)].depth());
  }
  n->hash = node_hash(kind, n->params, ar >= 1 ? n->children[0].hash() : 0, ar >= 2 ? n->children[1].hash() : 0);
  return Expr(std::move(n));
}

inline Expr Expr::circle(int x, int y, int r) { return make(Kind::circle, {x, y, r, 0}); }
inline Expr Expr::rect(int x1, int y1, int x2, int y2) { return make(Kind::rect, {x1, y1, x2, y2}); }
inline Expr Expr::union_of(Expr a, Expr b) { return make(Kind::union_, {}, std::move(a), std::move(b)); }
inline Expr Expr::diff(Expr a, Expr b) { return make(Kind::diff, {}, std::move(a), std::move(b)); }
inline Expr Expr::repeat(Expr body, int dx, int dy, int count) {
  return make(Kind::repeat, {dx, dy, count, 0}, std::move(body));
}

inline Kind Expr::kind() const { return node_->kind; }
inline const Params& Expr::params() const { return node_->params; }
inline const Expr& Expr::child(int i) const { return node_->children[static_cast<std::size_t>(i)]; }
inline std::size_t Expr::hash() const { return node_ ? node_->hash : 0; }
inline int Expr::size() const { return node_ ? node_->size : 0; }
inline int Expr::depth() const { return node_ ? node_->depth : 0; }

inline bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  const ExprNode& x = *a.node_;
  const ExprNode& y = *b.node_;
  if (x.hash != y.hash || x.kind != y.kind || x.size != y.size || x.params != y.params) return false;
  for (int i = 0; i < arity(x.kind); ++i)
    if (!(x.children[static_cast<std::size_t>(i)] == y.children[static_cast<std::size_t>(i)])) return false;
  return true;
}

/// AST node count; primitives count 1, scalar parameters count 0.
inline int node_count(const Expr& e) { return e.size(); }

/// AST depth with the root at depth 1.
inline int ast_depth(const Expr& e) { return e.depth(); }

// ---------------------------------------------------------------------------
// Text form

inline void serialize_to(std::string& out, const Expr& e) {
  out += '(';
  out += kind_name(e.kind());
  for (int i = 0; i < arity(e.kind()); ++i) {
    out += ' ';
    serialize_to(out, e.child(i));
  }
  for (int i = 0; i < param_count(e.kind()); ++i) {
    out += ' ';
    out += std::to_string(e.param(i));
  }
  out += ')';
}

/// `(union (circle 4 8 4) (rect 7 7 15 9))`, `(repeat <body> dx dy count)`.
inline std::string serialize(const Expr& e) {
  std::string s;
  serialize_to(s, e);
  return s;
}

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : std::runtime_error("parse error at offset " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : text_(text) {}

  Expr parse_all() {
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError(pos_, "trailing input");
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size()) {
      if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      } else if (text_[pos_] == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c)
      throw ParseError(pos_, std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string_view word() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) throw ParseError(start, "expected operator name");
    return text_.substr(start, pos_ - start);
  }

  int integer() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) ++pos_;
    const std::size_t digits = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (digits == pos_) throw ParseError(start, "expected integer");
    const std::string tok(text_.substr(start, pos_ - start));
    try {
      return std::stoi(tok);
    } catch (const std::out_of_range&) {
      throw ParseError(start, "integer out of range: " + tok);
    }
  }

  Expr parse_expr() {
    expect('(');
    const std::size_t at = pos_;
    const std::string_view head = word();
    Kind kind;
    if (head == "circle")
      kind = Kind::circle;
    else if (head == "rect")
      kind = Kind::rect;
    else if (head == "union")
      kind = Kind::union_;
    else if (head == "diff")
      kind = Kind::diff;
    else if (head == "repeat")
      kind = Kind::repeat;
    else
      throw ParseError(at, "unknown operator '" + std::string(head) + "'");
    std::array<Expr, 2> kids;
    for (int i = 0; i < arity(kind); ++i) kids[static_cast<std::size_t>(i)] = parse_expr();
    Params p{};
    for (int i = 0; i < param_count(kind); ++i) p[static_cast<std::size_t>(i)] = integer();
    expect(')');
    return Expr::make(kind, p, kids[0], kids[1]);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse(std::string_view text) { return detail::ExprParser(text).parse_all(); }

// ---------------------------------------------------------------------------
// Parameter space

/// The quantized parameter space programs are drawn from. Steps > 1 restrict
/// enumeration to a coarser lattice; bounds are what rewrites clamp against.
struct ParamDomain {
  int x_max = 31;  // largest coordinate on the u axis
  int y_max = 31;
  int radius_min = 1;
  int radius_max = 16;
  int count_min = 2;
  int count_max = 8;
  int dx_limit = 16;  // dx in [-dx_limit, dx_limit]
  int dy_limit = 16;
  int coord_step = 1;
  int radius_step = 1;
  int offset_step = 1;

  static ParamDomain for_canvas(const Canvas& c) {
    ParamDomain d;
    d.x_max = c.width - 1;
    d.y_max = c.height - 1;
    d.radius_max = std::max(1, std::min(c.width, c.height) / 2);
    d.dx_limit = c.width / 2;
    d.dy_limit = c.height / 2;
    return d;
  }

  /// Inclusive bounds of parameter `i` of a node of kind `k`.
  std::pair<int, int> bounds(Kind k, int i) const {
    switch (k) {
      case Kind::circle:
        if (i == 0) return {0, x_max};
        if (i == 1) return {0, y_max};
        return {radius_min, radius_max};
      case Kind::rect: return (i % 2 == 0) ? std::pair{0, x_max} : std::pair{0, y_max};
      case Kind::repeat:
        if (i == 0) return {-dx_limit, dx_limit};
        if (i == 1) return {-dy_limit, dy_limit};
        return {count_min, count_max};
      default: return {0, 0};
    }
  }
};

/// Every scalar parameter lies within its domain bounds.
inline bool in_domain(const Expr& e, const ParamDomain& d) {
  for (int i = 0; i < param_count(e.kind()); ++i) {
    const auto [lo, hi] = d.bounds(e.kind(), i);
    if (e.param(i) < lo || e.param(i) > hi) return false;
  }
  for (int i = 0; i < arity(e.kind()); ++i)
    if (!in_domain(e.child(i), d)) return false;
  return true;
}

/// Well-formedness of a single node, ignoring its children.
inline bool node_well_formed(Kind k, const Params& p, const Canvas& c) {
  switch (k) {
    case Kind::circle: {
      const int x = p[0], y = p[1], r = p[2];
      return r > 0 && 0 <= x - r && x + r < c.width && 0 <= y - r && y + r < c.height;
    }
    case Kind::rect: return p[0] < p[2] && p[1] < p[3];
    case Kind::repeat: return (p[0] != 0 || p[1] != 0) && p[2] > 1;
    default: return true;
  }
}

/// Circles must be non-empty and fit on the canvas, rects must have positive
/// extent, repeats must move their body more than once.
inline bool well_formed(const Expr& e, const Canvas& c) {
  if (!node_well_formed(e.kind(), e.params(), c)) return false;
  for (int i = 0; i < arity(e.kind()); ++i)
    if (!well_formed(e.child(i), c)) return false;
  return true;
}

/// Union children ordered by serialized text (ties allowed), on top of the
/// per-node non-degeneracy conditions.
inline bool canonical(const Expr& e) {
  switch (e.kind()) {
    case Kind::circle: return e.param(2) > 0;
    case Kind::rect: return e.param(0) < e.param(2) && e.param(1) < e.param(3);
    case Kind::union_:
      return serialize(e.left()) <= serialize(e.right()) && canonical(e.left()) && canonical(e.right());
    case Kind::diff: return canonical(e.left()) && canonical(e.right());
    case Kind::repeat: return (e.param(0) != 0 || e.param(1) != 0) && e.param(2) > 1 && canonical(e.body());
  }
  return false;
}

/// Reorders union children into canonical order. Semantics are unchanged.
inline Expr canonicalize(const Expr& e) {
  switch (e.kind()) {
    case Kind::union_: {
      Expr a = canonicalize(e.left());
      Expr b = canonicalize(e.right());
      if (serialize(b) < serialize(a)) std::swap(a, b);
      return Expr::union_of(a, b);
    }
    case Kind::diff: return Expr::diff(canonicalize(e.left()), canonicalize(e.right()));
    case Kind::repeat: return Expr::repeat(canonicalize(e.body()), e.param(0), e.param(1), e.param(2));
    default: return e;
  }
}

}  // namespace symetric

template <>
struct std::hash<symetric::Expr> {
  std::size_t operator()(const symetric::Expr& e) const noexcept { return e.hash(); }
};
