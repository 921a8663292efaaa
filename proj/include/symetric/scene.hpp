#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace symetric {

using Word = std::uint64_t;
inline constexpr int kWordBits = 64;

/// Raster dimensions in pixels.
struct Canvas {
  int width = 32;
  int height = 32;

  constexpr std::size_t pixels() const noexcept {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  constexpr std::size_t words() const noexcept {
    return (pixels() + kWordBits - 1) / kWordBits;
  }
  constexpr bool contains(int u, int v) const noexcept {
    return u >= 0 && v >= 0 && u < width && v < height;
  }
  constexpr bool valid() const noexcept { return width >= 1 && height >= 1; }

  friend constexpr bool operator==(const Canvas&, const Canvas&) = default;
};

inline std::string to_string(const Canvas& c) {
  return std::to_string(c.width) + "x" + std::to_string(c.height);
}

/// Parses "WxH".
inline Canvas parse_canvas(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw std::invalid_argument("canvas must be WxH: " + text);
  Canvas c{std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
  if (!c.valid()) throw std::invalid_argument("canvas dimensions must be positive: " + text);
  return c;
}

class DimensionMismatch : public std::invalid_argument {
 public:
  DimensionMismatch(const Canvas& a, const Canvas& b)
      : std::invalid_argument("scene dimension mismatch: " + to_string(a) + " vs " + to_string(b)) {}
};

// Word-parallel kernels over packed row-major bit arrays. All spans in one call
// have the same length.
namespace bits {

inline std::size_t popcount(std::span<const Word> a) {
  std::size_t n = 0;
  for (Word w : a) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

inline std::size_t popcount_and(std::span<const Word> a, std::span<const Word> b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += static_cast<std::size_t>(std::popcount(a[i] & b[i]));
  return n;
}

inline std::size_t popcount_or(std::span<const Word> a, std::span<const Word> b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += static_cast<std::size_t>(std::popcount(a[i] | b[i]));
  return n;
}

inline std::size_t popcount_xor(std::span<const Word> a, std::span<const Word> b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += static_cast<std::size_t>(std::popcount(a[i] ^ b[i]));
  return n;
}

inline bool equal(std::span<const Word> a, std::span<const Word> b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

inline bool any(std::span<const Word> a) {
  return std::any_of(a.begin(), a.end(), [](Word w) { return w != 0; });
}

inline void or_into(std::span<Word> dst, std::span<const Word> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] |= src[i];
}

inline void set_union(std::span<Word> out, std::span<const Word> a, std::span<const Word> b) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] | b[i];
}

inline void set_difference(std::span<Word> out, std::span<const Word> a, std::span<const Word> b) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] & ~b[i];
}

inline void set_xor(std::span<Word> out, std::span<const Word> a, std::span<const Word> b) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] ^ b[i];
}

/// out = in shifted toward higher bit indices by `shift` (negative shifts go down).
/// Bits shifted past either end are dropped. `out` and `in` must not alias.
inline void shift(std::span<Word> out, std::span<const Word> in, long shift) {
  const long n = static_cast<long>(in.size());
  std::fill(out.begin(), out.end(), Word{0});
  if (shift >= 0) {
    const long ws = shift / kWordBits;
    const int bs = static_cast<int>(shift % kWordBits);
    for (long i = n - 1; i >= ws; --i) {
      Word w = in[static_cast<std::size_t>(i - ws)] << bs;
      if (bs != 0 && i - ws - 1 >= 0) w |= in[static_cast<std::size_t>(i - ws - 1)] >> (kWordBits - bs);
      out[static_cast<std::size_t>(i)] = w;
    }
  } else {
    const long s = -shift;
    const long ws = s / kWordBits;
    const int bs = static_cast<int>(s % kWordBits);
    for (long i = 0; i + ws < n; ++i) {
      Word w = in[static_cast<std::size_t>(i + ws)] >> bs;
      if (bs != 0 && i + ws + 1 < n) w |= in[static_cast<std::size_t>(i + ws + 1)] << (kWordBits - bs);
      out[static_cast<std::size_t>(i)] = w;
    }
  }
}

inline std::size_t hash(std::span<const Word> a) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ a.size();
  for (Word w : a) {
    h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h *= 0xff51afd7ed558ccdULL;
  }
  return static_cast<std::size_t>(h ^ (h >> 33));
}

}  // namespace bits

/// A packed boolean raster. Bit (u, v) lives at index v * width + u; bits past
/// width * height are always zero.
class Scene {
 public:
  Scene() = default;
  explicit Scene(Canvas canvas) : canvas_(canvas), words_(canvas.words(), 0) {}
  Scene(Canvas canvas, std::span<const Word> words) : canvas_(canvas), words_(words.begin(), words.end()) {
    if (words_.size() != canvas.words()) throw std::invalid_argument("scene word count does not match canvas");
    clear_tail();
  }

  const Canvas& canvas() const noexcept { return canvas_; }
  int width() const noexcept { return canvas_.width; }
  int height() const noexcept { return canvas_.height; }

  bool get(int u, int v) const noexcept {
    if (!canvas_.contains(u, v)) return false;
    const std::size_t i = index(u, v);
    return (words_[i / kWordBits] >> (i % kWordBits)) & 1U;
  }

  void set(int u, int v, bool value = true) {
    if (!canvas_.contains(u, v)) throw std::out_of_range("pixel outside canvas");
    const std::size_t i = index(u, v);
    const Word m = Word{1} << (i % kWordBits);
    if (value)
      words_[i / kWordBits] |= m;
    else
      words_[i / kWordBits] &= ~m;
  }

  std::size_t count() const noexcept { return bits::popcount(words_); }
  bool empty() const noexcept { return !bits::any(words_); }

  std::span<const Word> words() const noexcept { return words_; }
  std::span<Word> mutable_words() noexcept { return words_; }

  std::size_t hash() const noexcept { return bits::hash(words_); }

  friend bool operator==(const Scene& a, const Scene& b) {
    return a.canvas_ == b.canvas_ && a.words_ == b.words_;
  }

  /// Row-major comparison of pixel values, matching the order of the text form.
  friend bool text_less(const Scene& a, const Scene& b) {
    for (int v = 0; v < std::min(a.height(), b.height()); ++v)
      for (int u = 0; u < std::min(a.width(), b.width()); ++u)
        if (a.get(u, v) != b.get(u, v)) return b.get(u, v);
    return a.canvas_.pixels() < b.canvas_.pixels();
  }

  Scene operator|(const Scene& o) const { return combine(o, bits::set_union); }
  Scene operator-(const Scene& o) const { return combine(o, bits::set_difference); }
  Scene operator^(const Scene& o) const { return combine(o, bits::set_xor); }

  void clear_tail() noexcept {
    const std::size_t rem = canvas_.pixels() % kWordBits;
    if (rem != 0 && !words_.empty()) words_.back() &= (Word{1} << rem) - 1;
  }

 private:
  std::size_t index(int u, int v) const noexcept {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(canvas_.width) + static_cast<std::size_t>(u);
  }

  template <class Fn>
  Scene combine(const Scene& o, Fn fn) const {
    if (!(canvas_ == o.canvas_)) throw DimensionMismatch(canvas_, o.canvas_);
    Scene out(canvas_);
    fn(out.words_, words_, o.words_);
    return out;
  }

  Canvas canvas_{};
  std::vector<Word> words_;
};

struct SceneHash {
  std::size_t operator()(const Scene& s) const noexcept { return s.hash(); }
};

inline void require_same_canvas(const Scene& a, const Scene& b) {
  if (!(a.canvas() == b.canvas())) throw DimensionMismatch(a.canvas(), b.canvas());
}

// Text format:
//   scene <width> <height>
//   <height lines of width characters from {0,1}; row 0 is v = 0>

inline void write_scene(std::ostream& os, const Scene& s) {
  os << "scene " << s.width() << ' ' << s.height() << '\n';
  for (int v = 0; v < s.height(); ++v) {
    for (int u = 0; u < s.width(); ++u) os << (s.get(u, v) ? '1' : '0');
    os << '\n';
  }
}

inline std::string scene_to_string(const Scene& s) {
  std::ostringstream os;
  write_scene(os, s);
  return os.str();
}

class SceneFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Scene read_scene(std::istream& is) {
  std::string tag;
  int w = 0, h = 0;
  if (!(is >> tag >> w >> h) || tag != "scene") throw SceneFormatError("expected header 'scene <width> <height>'");
  if (w < 1 || h < 1) throw SceneFormatError("scene dimensions must be positive");
  Scene s(Canvas{w, h});
  std::string line;
  std::getline(is, line);
  for (int v = 0; v < h; ++v) {
    if (!std::getline(is, line)) throw SceneFormatError("missing row " + std::to_string(v));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (static_cast<int>(line.size()) != w)
      throw SceneFormatError("row " + std::to_string(v) + " has " + std::to_string(line.size()) +
                             " characters, expected " + std::to_string(w));
    for (int u = 0; u < w; ++u) {
      if (line[static_cast<std::size_t>(u)] == '1')
        s.set(u, v);
      else if (line[static_cast<std::size_t>(u)] != '0')
        throw SceneFormatError("row " + std::to_string(v) + " column " + std::to_string(u) + ": expected 0 or 1");
    }
  }
  return s;
}

inline Scene scene_from_string(const std::string& text) {
  std::istringstream is(text);
  return read_scene(is);
}

/// `#` for filled, `.` for empty; one row per line.
inline std::string ascii_art(const Scene& s) {
  std::string out;
  out.reserve(static_cast<std::size_t>((s.width() + 1) * s.height()));
  for (int v = 0; v < s.height(); ++v) {
    for (int u = 0; u < s.width(); ++u) out += s.get(u, v) ? '#' : '.';
    out += '\n';
  }
  return out;
}

}  // namespace symetric

template <>
struct std::hash<symetric::Scene> {
  std::size_t operator()(const symetric::Scene& s) const noexcept { return s.hash(); }
};
