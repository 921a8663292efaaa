// Command-line front end: synthesis, evaluation, corpus generation, benchmark
// suites, the search-space study and ablations.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "symetric/symetric.hpp"

namespace fs = std::filesystem;
using namespace symetric;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A program argument is either a file or the program text itself.
Expr program_arg(const std::string& arg) {
  const std::string text = fs::exists(arg) ? slurp(arg) : arg;
  try {
    return parse(text);
  } catch (const ParseError& e) {
    throw UsageError(std::string("bad program: ") + e.what());
  }
}

std::pair<int, int> range_arg(const std::string& s) {
  const auto c = s.find_first_of(",-:");
  try {
    if (c == std::string::npos) {
      const int v = std::stoi(s);
      return {v, v};
    }
    return {std::stoi(s.substr(0, c)), std::stoi(s.substr(c + 1))};
  } catch (const std::exception&) {
    throw UsageError("bad range: " + s);
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

struct ConfigFlags {
  SynthConfig cfg;
  double timeout_s = 600;
  double memory_mb = 2048;

  void add(CLI::App* app) {
    app->add_option("--epsilon", cfg.epsilon, "Clustering radius")->capture_default_str();
    app->add_option("--beam-width", cfg.beam_width, "New states kept per cost level")->capture_default_str();
    app->add_option("--max-cost", cfg.max_cost, "Largest program cost explored")->capture_default_str();
    app->add_option("--repair-steps", cfg.repair_steps, "Local-search steps per repair")->capture_default_str();
    app->add_option("--finals", cfg.finals, "Final states (0: same as beam width)")->capture_default_str();
    app->add_option("--extract-samples", cfg.extract_samples, "Extraction rounds")->capture_default_str();
    app->add_option("--repair-attempts", cfg.repair_attempts, "Repairs per extracted program")->capture_default_str();
    app->add_option("--seed", cfg.seed, "Random seed (SYMETRIC_SEED overrides)")->capture_default_str();
    app->add_option("--timeout", timeout_s, "Time budget per run, seconds")->capture_default_str();
    app->add_option("--memory-limit", memory_mb, "Memory budget per run, MiB")->capture_default_str();
  }

  SynthConfig resolve() {
    cfg.time_budget = std::chrono::duration<double>(timeout_s);
    cfg.memory_budget = static_cast<std::size_t>(memory_mb * 1024 * 1024);
    if (const char* env = std::getenv("SYMETRIC_SEED")) cfg.seed = std::strtoull(env, nullptr, 10);
    return cfg;
  }
};

std::vector<BenchmarkCase> corpus_arg(const std::string& corpus, std::uint64_t seed, int count) {
  if (corpus == "gen") return generate_corpus(seed, count, GenerateOptions{});
  Corpus c = load_corpus(corpus);
  for (const auto& e : c.errors) std::cerr << "skipped " << e.file << ": " << e.message << '\n';
  return c.cases;
}

int emit_suite(const SuiteReport& rep, const std::string& report) {
  if (!report.empty()) write_text(report, to_json(rep).dump(2) + "\n");
  write_summary_table(std::cout, rep);
  std::cout << '\n';
  write_phase_table(std::cout, rep);
  return rep.summary.solved == rep.summary.cases ? kExitOk : kExitFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inverse CSG synthesis with approximate tree automata"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Synthesize a program for a scene file");
  std::string scene_path, out_path;
  ConfigFlags synth_flags;
  synth->add_option("scene", scene_path, "Goal scene file")->required();
  synth->add_option("--out", out_path, "Write the program here instead of stdout");
  synth_flags.add(synth);

  // eval
  auto* evalc = app.add_subcommand("eval", "Render a program to a scene file");
  std::string program, canvas_text = "16x16", eval_out;
  evalc->add_option("program", program, "Program text or file")->required();
  evalc->add_option("--canvas", canvas_text, "Canvas WxH")->capture_default_str();
  evalc->add_option("--out", eval_out, "Scene output path (stdout if omitted)");

  // render
  auto* render = app.add_subcommand("render", "Print a program or scene as ASCII art");
  std::string render_arg, render_canvas = "16x16";
  render->add_option("program", render_arg, "Program text, program file or .scene file")->required();
  render->add_option("--canvas", render_canvas, "Canvas WxH")->capture_default_str();

  // gen-bench
  auto* gen = app.add_subcommand("gen-bench", "Generate a random benchmark corpus");
  int gen_count = 10;
  std::string gen_size = "8,16", gen_depth = "3,8", gen_dir, gen_canvas = "16x16";
  std::uint64_t gen_seed = 1;
  gen->add_option("--count", gen_count)->capture_default_str();
  gen->add_option("--size", gen_size, "Node-count range lo,hi")->capture_default_str();
  gen->add_option("--depth", gen_depth, "Depth range lo,hi (root depth 1)")->capture_default_str();
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_option("--canvas", gen_canvas)->capture_default_str();
  gen->add_option("--out-dir", gen_dir)->required();

  // bench
  auto* bench = app.add_subcommand("bench", "Run an algorithm over a corpus");
  std::string bench_corpus, bench_algo = "symetric", bench_report;
  int bench_repeats = 1, bench_jobs = 1, bench_gen_count = 10;
  ConfigFlags bench_flags;
  bench->add_option("--corpus", bench_corpus, "Corpus directory, or 'gen' for a generated corpus")->required();
  bench->add_option("--algo", bench_algo, "symetric | fta-basic")->capture_default_str();
  bench->add_option("--repeats", bench_repeats)->capture_default_str();
  bench->add_option("--jobs", bench_jobs, "Worker threads")->capture_default_str();
  bench->add_option("--count", bench_gen_count, "Cases when --corpus gen")->capture_default_str();
  bench->add_option("--report", bench_report, "JSON report path");
  bench_flags.add(bench);

  // cluster-study
  auto* study = app.add_subcommand("cluster-study", "Count programs, distinct scenes and clusters by size");
  int study_n = 9;
  std::vector<double> study_eps{0.1, 0.2};
  std::string study_canvas = "16x16", study_out;
  ParamDomain lattice = ParamDomain::for_canvas({16, 16});
  double study_timeout = 1800, study_memory = 2048;
  study->add_option("--n-max", study_n)->capture_default_str();
  study->add_option("--epsilons", study_eps)->delimiter(',')->capture_default_str();
  study->add_option("--canvas", study_canvas)->capture_default_str();
  study->add_option("--coord-step", lattice.coord_step)->capture_default_str();
  study->add_option("--radius-step", lattice.radius_step)->capture_default_str();
  study->add_option("--offset-step", lattice.offset_step)->capture_default_str();
  study->add_option("--count-max", lattice.count_max)->capture_default_str();
  study->add_option("--timeout", study_timeout)->capture_default_str();
  study->add_option("--memory-limit", study_memory, "MiB")->capture_default_str();
  study->add_option("--out", study_out, "CSV path (stdout if omitted)");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Run one ablation over a corpus");
  std::string ablate_mode, ablate_corpus = "gen", ablate_report;
  int ablate_repeats = 1, ablate_jobs = 1, ablate_gen_count = 10;
  ConfigFlags ablate_flags;
  ablate->add_option("--mode", ablate_mode, "None | NoCluster | NoRank | ExtractRandom | RepairRandom")->required();
  ablate->add_option("--corpus", ablate_corpus)->capture_default_str();
  ablate->add_option("--repeats", ablate_repeats)->capture_default_str();
  ablate->add_option("--jobs", ablate_jobs)->capture_default_str();
  ablate->add_option("--count", ablate_gen_count)->capture_default_str();
  ablate->add_option("--report", ablate_report);
  ablate_flags.add(ablate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) {
      SynthConfig cfg = synth_flags.resolve();
      Scene goal;
      try {
        goal = scene_from_string(slurp(scene_path));
      } catch (const SceneFormatError& e) {
        throw UsageError(e.what());
      }
      cfg.canvas = goal.canvas();
      SynthResult r = metric_synth(goal, cfg);
      std::cerr << "status " << status_name(r.status) << ", " << r.stats.times.total << " s, " << r.stats.states
                << " states\n";
      if (!r.program) return kExitFailed;
      write_text(out_path, serialize(*r.program) + "\n");
      return kExitOk;
    }
    if (*evalc) {
      const Canvas c = parse_canvas(canvas_text);
      const Expr e = program_arg(program);
      if (!well_formed(e, c)) throw UsageError("program is not well-formed on " + to_string(c));
      write_text(eval_out, scene_to_string(eval(e, c)));
      return kExitOk;
    }
    if (*render) {
      if (fs::path(render_arg).extension() == ".scene") {
        std::cout << ascii_art(scene_from_string(slurp(render_arg)));
      } else {
        std::cout << ascii_art(eval(program_arg(render_arg), parse_canvas(render_canvas)));
      }
      return kExitOk;
    }
    if (*gen) {
      GenerateOptions opt;
      opt.canvas = parse_canvas(gen_canvas);
      opt.size_range = range_arg(gen_size);
      opt.depth_range = range_arg(gen_depth);
      if (const char* env = std::getenv("SYMETRIC_SEED")) gen_seed = std::strtoull(env, nullptr, 10);
      save_corpus(gen_dir, generate_corpus(gen_seed, gen_count, opt));
      return kExitOk;
    }
    if (*bench) {
      SuiteOptions opt;
      if (bench_algo == "symetric") {
        opt.algorithm = Algorithm::symetric;
      } else if (bench_algo == "fta-basic") {
        opt.algorithm = Algorithm::fta_basic;
      } else {
        throw UsageError("unknown algorithm: " + bench_algo);
      }
      opt.config = bench_flags.resolve();
      opt.repeats = bench_repeats;
      opt.jobs = bench_jobs;
      return emit_suite(run_benchmark_suite(corpus_arg(bench_corpus, opt.config.seed, bench_gen_count), opt), bench_report);
    }
    if (*study) {
      const Canvas c = parse_canvas(study_canvas);
      ParamDomain d = ParamDomain::for_canvas(c);
      d.coord_step = lattice.coord_step;
      d.radius_step = lattice.radius_step;
      d.offset_step = lattice.offset_step;
      d.count_max = lattice.count_max;
      const Alphabet alphabet = Alphabet::standard(c, d);
      std::cerr << alphabet.primitives.size() << " primitives, " << alphabet.repeats.size() << " repeat symbols\n";
      EnumerationLimits limits{static_cast<std::size_t>(study_memory * 1024 * 1024),
                               Deadline(std::chrono::duration<double>(study_timeout))};
      const SpaceStudy s = count_search_space(alphabet, c, study_n, study_eps, limits);
      std::ostringstream csv;
      write_space_csv(csv, s);
      write_text(study_out, csv.str());
      if (s.truncated) std::cerr << "stopped early: " << s.stop_reason << '\n';
      return kExitOk;
    }
    if (*ablate) {
      const auto mode = parse_ablation(ablate_mode);
      if (!mode) throw UsageError("unknown ablation mode: " + ablate_mode);
      SuiteOptions opt;
      opt.ablation = *mode;
      opt.config = ablate_flags.resolve();
      opt.repeats = ablate_repeats;
      opt.jobs = ablate_jobs;
      return emit_suite(run_benchmark_suite(corpus_arg(ablate_corpus, opt.config.seed, ablate_gen_count), opt), ablate_report);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailed;
  }
  return kExitUsage;
}
