#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "symetric/config.hpp"
#include "symetric/eval.hpp"
#include "symetric/expr.hpp"
#include "symetric/scene.hpp"

namespace symetric {

enum class CaseKind { generated, handwritten };

inline std::string_view case_kind_name(CaseKind k) { return k == CaseKind::generated ? "generated" : "handwritten"; }

struct BenchmarkCase {
  std::string name;
  Scene goal;
  std::optional<Expr> ground_truth;
  CaseKind kind = CaseKind::generated;
  Canvas canvas{};
};

struct GenerateOptions {
  Canvas canvas{16, 16};
  std::pair<int, int> size_range{8, 16};
  std::pair<int, int> depth_range{3, 8};  // root has depth 1
  int max_attempts = 100000;
  int subterm_attempts = 50;
};

class GenerationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

class ProgramSampler {
 public:
  ProgramSampler(std::mt19937_64& rng, const GenerateOptions& opt)
      : rng_(rng), opt_(opt), dom_(ParamDomain::for_canvas(opt.canvas)), ev_(opt.canvas, false) {}

  // A natural program of exactly `size` nodes, or nothing after the local
  // attempt budget.
  std::optional<std::pair<Expr, Scene>> sample(int size) {
    for (int t = 0; t < opt_.subterm_attempts; ++t) {
      if (auto r = try_sample(size)) return r;
    }
    return std::nullopt;
  }

 private:
  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  int param(Kind k, int i) {
    const auto [lo, hi] = dom_.bounds(k, i);
    return uniform(lo, hi);
  }

  std::optional<std::pair<Expr, Scene>> try_sample(int size) {
    if (size == 1) {
      const Kind k = uniform(0, 1) == 0 ? Kind::circle : Kind::rect;
      Params p{};
      for (int i = 0; i < param_count(k); ++i) p[static_cast<std::size_t>(i)] = param(k, i);
      if (!node_well_formed(k, p, opt_.canvas)) return std::nullopt;
      Expr e = Expr::make(k, p);
      Scene s = ev_.eval(e);
      if (s.empty()) return std::nullopt;
      return std::pair{e, s};
    }
    std::vector<Kind> ops{Kind::repeat};
    if (size >= 3) ops = {Kind::union_, Kind::diff, Kind::repeat};
    const Kind k = ops[static_cast<std::size_t>(uniform(0, static_cast<int>(ops.size()) - 1))];
    if (k == Kind::repeat) {
      auto body = sample(size - 1);
      if (!body) return std::nullopt;
      Params p{};
      for (int i = 0; i < 3; ++i) p[static_cast<std::size_t>(i)] = param(k, i);
      if (!node_well_formed(k, p, opt_.canvas)) return std::nullopt;
      // Every copy must land entirely on the canvas, as primitives must.
      Scene moved(opt_.canvas);
      const std::size_t area = body->second.count();
      for (int i = 1; i < p[2]; ++i) {
        ev_.raster().translate(moved.mutable_words(), body->second.words(), i * p[0], i * p[1]);
        if (moved.count() != area) return std::nullopt;
      }
      Scene s(opt_.canvas);
      ev_.raster().repeat(s.mutable_words(), body->second.words(), p[0], p[1], p[2]);
      if (s.empty() || s == body->second) return std::nullopt;
      return std::pair{Expr::repeat(body->first, p[0], p[1], p[2]), s};
    }
    const int left = uniform(1, size - 2);
    auto a = sample(left);
    if (!a) return std::nullopt;
    auto b = sample(size - 1 - left);
    if (!b) return std::nullopt;
    Scene s = k == Kind::union_ ? (a->second | b->second) : (a->second - b->second);
    if (s.empty() || s == a->second || s == b->second) return std::nullopt;
    Expr e = k == Kind::union_ ? Expr::union_of(a->first, b->first) : Expr::diff(a->first, b->first);
    return std::pair{e, s};
  }

  std::mt19937_64& rng_;
  const GenerateOptions& opt_;
  ParamDomain dom_;
  Evaluator ev_;
};

}  // namespace detail

/// Every subterm renders non-empty and every operator renders differently
/// from each of its arguments.
inline bool natural(const Expr& e, const Canvas& canvas) {
  Evaluator ev(canvas);
  bool ok = true;
  auto walk = [&](auto&& self, const Expr& x) -> void {
    const Scene s = ev.eval(x);
    if (s.empty()) ok = false;
    for (int i = 0; i < arity(x.kind()); ++i) {
      if (ev.eval(x.child(i)) == s) ok = false;
      self(self, x.child(i));
    }
  };
  walk(walk, e);
  return ok;
}

/// Rejection-samples a natural, well-formed, canonical program whose size and
/// depth fall in the requested ranges.
inline BenchmarkCase generate_benchmark(std::mt19937_64& rng, const GenerateOptions& opt, std::string name = "gen") {
  if (opt.size_range.first < 1 || opt.size_range.first > opt.size_range.second ||
      opt.depth_range.first < 1 || opt.depth_range.first > opt.depth_range.second)
    throw std::invalid_argument("size and depth ranges must be nonempty and positive");
  detail::ProgramSampler sampler(rng, opt);
  for (int attempt = 0; attempt < opt.max_attempts; ++attempt) {
    const int size = std::uniform_int_distribution<int>(opt.size_range.first, opt.size_range.second)(rng);
    auto r = sampler.sample(size);
    if (!r) continue;
    const int d = ast_depth(r->first);
    if (d < opt.depth_range.first || d > opt.depth_range.second) continue;
    Expr e = canonicalize(r->first);
    return {std::move(name), std::move(r->second), std::move(e), CaseKind::generated, opt.canvas};
  }
  throw GenerationFailed("no program met the size, depth and naturalness constraints within " +
                         std::to_string(opt.max_attempts) + " attempts");
}

/// `count` cases with per-case seeds derived from `seed`.
inline std::vector<BenchmarkCase> generate_corpus(std::uint64_t seed, int count, const GenerateOptions& opt,
                                                  const std::string& prefix = "gen") {
  std::vector<BenchmarkCase> out;
  for (int i = 0; i < count; ++i) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    std::ostringstream name;
    name << prefix << '_' << (i < 10 ? "0" : "") << i;
    out.push_back(generate_benchmark(rng, opt, name.str()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus files

struct CorpusError {
  std::string file;
  std::string message;
};

struct Corpus {
  std::vector<BenchmarkCase> cases;
  std::vector<CorpusError> errors;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

/// Loads `<name>.scene` files (and `<name>.csg` when present) from `dir`.
/// When `manifest.json` exists it lists the cases and their kinds; otherwise
/// every scene file is loaded as hand-written. Bad cases are reported in
/// `errors` and skipped.
inline Corpus load_corpus(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  Corpus corpus;
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<std::pair<std::string, CaseKind>> names;
  const fs::path manifest = dir / "manifest.json";
  if (fs::exists(manifest)) {
    try {
      const auto j = nlohmann::json::parse(detail::read_file(manifest));
      for (const auto& c : j.at("cases")) {
        const std::string kind = c.value("kind", "handwritten");
        names.emplace_back(c.at("name").get<std::string>(), kind == "generated" ? CaseKind::generated : CaseKind::handwritten);
      }
    } catch (const std::exception& e) {
      corpus.errors.push_back({manifest.string(), e.what()});
      names.clear();
    }
  }
  if (names.empty()) {
    for (const auto& f : fs::directory_iterator(dir))
      if (f.path().extension() == ".scene") names.emplace_back(f.path().stem().string(), CaseKind::handwritten);
    std::sort(names.begin(), names.end());
  }
  for (const auto& [name, kind] : names) {
    const fs::path scene_file = dir / (name + ".scene");
    const fs::path prog_file = dir / (name + ".csg");
    try {
      BenchmarkCase c;
      c.name = name;
      c.kind = kind;
      c.goal = scene_from_string(detail::read_file(scene_file));
      c.canvas = c.goal.canvas();
      if (fs::exists(prog_file)) {
        Expr e = parse(detail::read_file(prog_file));
        if (!well_formed(e, c.canvas)) throw std::runtime_error("program is not well-formed");
        if (!(eval(e, c.canvas) == c.goal)) throw std::runtime_error("program does not render to the scene");
        c.ground_truth = std::move(e);
      }
      corpus.cases.push_back(std::move(c));
    } catch (const std::exception& e) {
      corpus.errors.push_back({scene_file.string(), e.what()});
    }
  }
  return corpus;
}

/// Writes scenes, programs and a manifest for `cases` into `dir`.
inline void save_corpus(const std::filesystem::path& dir, const std::vector<BenchmarkCase>& cases) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["depth_convention"] = "root has depth 1, leaves add 1 per level";
  manifest["cases"] = nlohmann::json::array();
  for (const BenchmarkCase& c : cases) {
    std::ofstream(dir / (c.name + ".scene")) << scene_to_string(c.goal);
    nlohmann::json entry{{"name", c.name}, {"kind", case_kind_name(c.kind)}, {"canvas", to_string(c.canvas)}};
    if (c.ground_truth) {
      std::ofstream(dir / (c.name + ".csg")) << serialize(*c.ground_truth) << '\n';
      entry["nodes"] = node_count(*c.ground_truth);
      entry["depth"] = ast_depth(*c.ground_truth);
    }
    manifest["cases"].push_back(entry);
  }
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

}  // namespace symetric
