#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "symetric/harness.hpp"

using namespace symetric;
namespace fs = std::filesystem;

namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.beam_width = 40;
  cfg.max_cost = 4;
  cfg.repair_steps = 60;
  cfg.extract_samples = 3;
  cfg.repair_attempts = 2;
  cfg.time_budget = std::chrono::duration<double>(30.0);
  return cfg;
}

std::vector<BenchmarkCase> small_cases() {
  GenerateOptions opt;
  opt.canvas = Canvas{8, 8};
  opt.size_range = {2, 4};
  opt.depth_range = {1, 4};
  return generate_corpus(5, 4, opt, "t");
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" SYMETRIC_CLI "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp_file(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Harness, ExpectedRuntime) {
  EXPECT_DOUBLE_EQ(*expected_runtime(5, 2, 10.0), 25.0);
  EXPECT_DOUBLE_EQ(*expected_runtime(3, 3, 1.5), 1.5);
  EXPECT_FALSE(expected_runtime(4, 0, 2.0));
}

TEST(Harness, Median) {
  EXPECT_FALSE(median({}));
  EXPECT_DOUBLE_EQ(*median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(*median({4, 1, 2, 3}), 2.5);
}

TEST(Harness, AblationParsing) {
  EXPECT_EQ(parse_ablation("None"), AblationMode::none);
  EXPECT_EQ(parse_ablation("NoCluster"), AblationMode::no_cluster);
  EXPECT_EQ(parse_ablation("NoRank"), AblationMode::no_rank);
  EXPECT_EQ(parse_ablation("ExtractRandom"), AblationMode::extract_random);
  EXPECT_EQ(parse_ablation("RepairRandom"), AblationMode::repair_random);
  EXPECT_FALSE(parse_ablation("nocluster"));
  const SynthConfig base = small_config();
  const SynthConfig none = apply_ablation(AblationMode::none, base);
  EXPECT_EQ(to_json(none), to_json(base));
  EXPECT_FALSE(apply_ablation(AblationMode::no_cluster, base).cluster);
  EXPECT_EQ(apply_ablation(AblationMode::no_rank, base).rank_mode, RankMode::random);
  EXPECT_EQ(apply_ablation(AblationMode::extract_random, base).extract_mode, ChoiceMode::random);
  EXPECT_EQ(apply_ablation(AblationMode::repair_random, base).repair_mode, ChoiceMode::random);
}

TEST(Harness, SuiteSummaryDefinitions) {
  SuiteOptions opt;
  opt.config = small_config();
  opt.repeats = 2;
  opt.jobs = 2;
  const auto cases = small_cases();
  const SuiteReport rep = run_benchmark_suite(cases, opt);
  ASSERT_EQ(rep.records.size(), cases.size() * 2);
  ASSERT_EQ(rep.cases.size(), cases.size());
  int solved = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const CaseSummary& cs = rep.cases[i];
    EXPECT_EQ(cs.name, cases[i].name);
    EXPECT_EQ(cs.runs, 2);
    int succ = 0;
    for (int k = 0; k < 2; ++k) {
      const RunRecord& r = rep.records[i * 2 + static_cast<std::size_t>(k)];
      EXPECT_EQ(r.case_name, cases[i].name);
      EXPECT_EQ(r.repeat, k);
      if (r.success()) {
        ++succ;
        EXPECT_EQ(eval(parse(*r.program), cases[i].canvas), cases[i].goal);
      }
      const PhaseTimes& t = r.times;
      EXPECT_LE(t.construct + t.extract + t.repair, t.total + 1e-6);
      EXPECT_LE(t.expansion + t.clustering + t.ranking, t.construct + 1e-6);
    }
    EXPECT_EQ(cs.successes, succ);
    solved += succ > 0;
  }
  EXPECT_EQ(rep.summary.solved, solved);
  EXPECT_DOUBLE_EQ(rep.summary.success_pct, 100.0 * solved / static_cast<double>(cases.size()));
}

TEST(Harness, DeterministicAlgorithmsRunOnce) {
  SuiteOptions opt;
  opt.algorithm = Algorithm::fta_basic;
  opt.config = small_config();
  opt.repeats = 5;
  const SuiteReport rep = run_benchmark_suite(small_cases(), opt);
  EXPECT_EQ(rep.repeats, 1);
  EXPECT_EQ(rep.records.size(), 4U);
  EXPECT_EQ(rep.algorithm, "fta-basic");
}

TEST(Harness, ReportsAreReproducible) {
  SuiteOptions opt;
  opt.config = small_config();
  opt.repeats = 2;
  const auto cases = small_cases();
  opt.jobs = 1;
  const auto a = strip_timing(to_json(run_benchmark_suite(cases, opt)));
  opt.jobs = 3;
  const auto b = strip_timing(to_json(run_benchmark_suite(cases, opt)));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a["schema_version"], 1);
  EXPECT_FALSE(a["records"][0].contains("times"));
}

TEST(Harness, SeedsDependOnCaseAndRepeat) {
  const auto cases = small_cases();
  const SynthConfig cfg = small_config();
  const RunRecord r0 = run_case(cases[0], Algorithm::symetric, AblationMode::none, cfg, 0);
  const RunRecord r1 = run_case(cases[0], Algorithm::symetric, AblationMode::none, cfg, 1);
  const RunRecord q0 = run_case(cases[1], Algorithm::symetric, AblationMode::none, cfg, 0);
  EXPECT_NE(r0.seed, r1.seed);
  EXPECT_NE(r0.seed, q0.seed);
  EXPECT_EQ(r0.seed, run_case(cases[0], Algorithm::symetric, AblationMode::none, cfg, 0).seed);
  EXPECT_EQ(name_hash(""), 0xcbf29ce484222325ULL);
}

TEST(Harness, ErrorsBecomeFailedRecords) {
  BenchmarkCase c = small_cases()[0];
  SynthConfig cfg = small_config();
  cfg.epsilon = 2.0;
  const RunRecord r = run_case(c, Algorithm::symetric, AblationMode::none, cfg, 0);
  EXPECT_FALSE(r.success());
  EXPECT_FALSE(r.error.empty());
}

TEST(Harness, TablesMentionEveryCase) {
  SuiteOptions opt;
  opt.config = small_config();
  const auto cases = small_cases();
  const SuiteReport rep = run_benchmark_suite(cases, opt);
  std::ostringstream s, p;
  write_summary_table(s, rep);
  write_phase_table(p, rep);
  for (const auto& c : cases) EXPECT_NE(s.str().find(c.name), std::string::npos);
  EXPECT_NE(p.str().find("ranking"), std::string::npos);
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("symetric_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("synth"), 2);
  EXPECT_EQ(run_cli("synth " + path("missing.scene")), 2);
  EXPECT_EQ(run_cli("eval \"(rect 3 0 1 3)\" --canvas 8x8"), 2);
  EXPECT_EQ(run_cli("eval \"(rect 0 0\""), 2);
  EXPECT_EQ(run_cli("ablate --mode NoSuchMode"), 2);
  EXPECT_EQ(run_cli("--help"), 0);
}

TEST_F(Cli, EvalThenSynth) {
  ASSERT_EQ(run_cli("eval \"(repeat (rect 0 0 1 1) 3 0 3)\" --canvas 12x6 --out " + path("goal.scene")), 0);
  const Scene goal = scene_from_string(slurp_file(path("goal.scene")));
  EXPECT_EQ(goal.count(), 12U);
  ASSERT_EQ(run_cli("synth " + path("goal.scene") + " --max-cost 3 --beam-width 50 --out " + path("p.csg")), 0);
  EXPECT_EQ(eval(parse(slurp_file(path("p.csg"))), goal.canvas()), goal);
}

TEST_F(Cli, UnsolvedExitsWithOne) {
  // A checkerboard needs far more than two nodes.
  Scene s(Canvas{6, 6});
  for (int v = 0; v < 6; ++v)
    for (int u = 0; u < 6; ++u)
      if ((u + v) % 2) s.set(u, v);
  std::ofstream(path("hard.scene")) << scene_to_string(s);
  EXPECT_EQ(run_cli("synth " + path("hard.scene") + " --max-cost 2 --repair-steps 5 --extract-samples 1 --repair-attempts 1"), 1);
}

TEST_F(Cli, SeedFromEnvironment) {
  ASSERT_EQ(run_cli("gen-bench --out-dir " + path("a") + " --count 3 --canvas 8x8 --size 3,5 --depth 1,5 --seed 1",
                    "SYMETRIC_SEED=99"),
            0);
  ASSERT_EQ(run_cli("gen-bench --out-dir " + path("b") + " --count 3 --canvas 8x8 --size 3,5 --depth 1,5 --seed 99"), 0);
  const Corpus a = load_corpus(path("a")), b = load_corpus(path("b"));
  ASSERT_EQ(a.cases.size(), 3U);
  ASSERT_EQ(b.cases.size(), 3U);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(*a.cases[i].ground_truth, *b.cases[i].ground_truth);
}

TEST_F(Cli, BenchWritesReport) {
  save_corpus(dir_ / "corpus", small_cases());
  const int code = run_cli("bench --corpus " + path("corpus") + " --max-cost 4 --beam-width 40 --report " + path("r.json"));
  EXPECT_TRUE(code == 0 || code == 1);
  const auto j = nlohmann::json::parse(slurp_file(path("r.json")));
  EXPECT_EQ(j["records"].size(), 4U);
  EXPECT_EQ(code == 0, j["summary"]["solved"] == j["summary"]["cases"]);
}
