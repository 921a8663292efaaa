#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "symetric/baseline.hpp"
#include "symetric/benchgen.hpp"
#include "symetric/config.hpp"
#include "symetric/synth.hpp"

namespace symetric {

enum class AblationMode { none, no_cluster, no_rank, extract_random, repair_random };

inline std::string_view ablation_name(AblationMode m) {
  switch (m) {
    case AblationMode::none: return "None";
    case AblationMode::no_cluster: return "NoCluster";
    case AblationMode::no_rank: return "NoRank";
    case AblationMode::extract_random: return "ExtractRandom";
    case AblationMode::repair_random: return "RepairRandom";
  }
  return "?";
}

inline std::optional<AblationMode> parse_ablation(std::string_view s) {
  for (AblationMode m : {AblationMode::none, AblationMode::no_cluster, AblationMode::no_rank,
                         AblationMode::extract_random, AblationMode::repair_random})
    if (s == ablation_name(m)) return m;
  return std::nullopt;
}

inline SynthConfig apply_ablation(AblationMode mode, SynthConfig cfg) {
  switch (mode) {
    case AblationMode::none: break;
    case AblationMode::no_cluster: cfg.cluster = false; break;
    case AblationMode::no_rank: cfg.rank_mode = RankMode::random; break;
    case AblationMode::extract_random: cfg.extract_mode = ChoiceMode::random; break;
    case AblationMode::repair_random: cfg.repair_mode = ChoiceMode::random; break;
  }
  return cfg;
}

enum class Algorithm { symetric, fta_basic };

inline std::string algorithm_tag(Algorithm a, AblationMode m) {
  if (a == Algorithm::fta_basic) return "fta-basic";
  if (m == AblationMode::none) return "symetric";
  return "ablation:" + std::string(ablation_name(m));
}

/// Outcome label used in reports.
inline std::string_view outcome_name(SearchStatus s) {
  switch (s) {
    case SearchStatus::solved: return "success";
    case SearchStatus::timeout: return "timeout";
    case SearchStatus::out_of_memory: return "memory";
    case SearchStatus::not_found: return "exhausted";
  }
  return "?";
}

struct RunRecord {
  std::string case_name;
  std::string algorithm;
  SearchStatus outcome = SearchStatus::not_found;
  std::uint64_t seed = 0;
  int repeat = 0;
  PhaseTimes times;
  std::size_t peak_bytes = 0;
  std::optional<std::string> program;
  int program_nodes = 0;
  std::size_t states = 0;
  std::size_t transitions = 0;
  std::string error;  // set when the run threw something other than a budget error

  bool success() const noexcept { return outcome == SearchStatus::solved; }
};

struct CaseSummary {
  std::string name;
  int runs = 0;
  int successes = 0;
  double mean_time_s = 0;
  std::optional<double> median_success_time_s;
  std::optional<double> expected_runtime_s;
};

struct SuiteSummary {
  int cases = 0;
  int solved = 0;  // cases with at least one success
  double success_pct = 0;
  std::optional<double> median_time_s;  // over successful runs
};

struct SuiteReport {
  std::string algorithm;
  SynthConfig config;
  int repeats = 1;
  std::vector<RunRecord> records;
  std::vector<CaseSummary> cases;
  SuiteSummary summary;
};

struct SuiteOptions {
  Algorithm algorithm = Algorithm::symetric;
  AblationMode ablation = AblationMode::none;
  SynthConfig config{};
  int repeats = 1;
  int jobs = 1;
};

/// (runs / successes) * mean time per run; empty when nothing succeeded.
inline std::optional<double> expected_runtime(int runs, int successes, double mean_time_s) {
  if (successes <= 0) return std::nullopt;
  return static_cast<double>(runs) / static_cast<double>(successes) * mean_time_s;
}

inline std::optional<double> median(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// FNV-1a, so derived seeds do not depend on the standard library's hash.
inline std::uint64_t name_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

inline RunRecord run_case(const BenchmarkCase& c, Algorithm algo, AblationMode mode, SynthConfig cfg, int repeat) {
  RunRecord r;
  r.case_name = c.name;
  r.algorithm = algorithm_tag(algo, mode);
  r.repeat = repeat;
  cfg.canvas = c.canvas;
  cfg.seed = mix_seed(cfg.seed, name_hash(c.name) ^ static_cast<std::uint64_t>(repeat));
  r.seed = cfg.seed;
  try {
    if (algo == Algorithm::fta_basic) {
      BaselineResult b = fta_basic(c.goal, cfg);
      r.outcome = b.status;
      r.times.construct = r.times.expansion = r.times.total = b.time_s;
      r.peak_bytes = b.peak_bytes;
      r.states = b.classes;
      if (b.program) {
        r.program = serialize(*b.program);
        r.program_nodes = node_count(*b.program);
      }
    } else {
      SynthResult s = metric_synth(c.goal, apply_ablation(mode, cfg));
      r.outcome = s.status;
      r.times = s.stats.times;
      r.peak_bytes = s.stats.peak_bytes;
      r.states = s.stats.states;
      r.transitions = s.stats.transitions;
      if (s.program) {
        r.program = serialize(*s.program);
        r.program_nodes = node_count(*s.program);
      }
    }
  } catch (const std::exception& e) {
    r.outcome = SearchStatus::not_found;
    r.error = e.what();
  }
  return r;
}

/// Runs every case `repeats` times (once for deterministic algorithms) on a
/// pool of `jobs` workers. Records come back in (case, repeat) order
/// regardless of scheduling.
inline SuiteReport run_benchmark_suite(const std::vector<BenchmarkCase>& cases, const SuiteOptions& opt) {
  if (opt.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  SuiteReport rep;
  rep.algorithm = algorithm_tag(opt.algorithm, opt.ablation);
  rep.config = apply_ablation(opt.ablation, opt.config);
  rep.repeats = opt.algorithm == Algorithm::fta_basic ? 1 : opt.repeats;
  const std::size_t total = cases.size() * static_cast<std::size_t>(rep.repeats);
  rep.records.resize(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < total;) {
      const auto& c = cases[i / static_cast<std::size_t>(rep.repeats)];
      rep.records[i] = run_case(c, opt.algorithm, opt.ablation, opt.config, static_cast<int>(i % static_cast<std::size_t>(rep.repeats)));
    }
  };
  const int jobs = std::max(1, std::min<int>(opt.jobs, static_cast<int>(std::max<std::size_t>(total, 1))));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::vector<double> success_times;
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    CaseSummary cs;
    cs.name = cases[ci].name;
    std::vector<double> mine;
    double sum = 0;
    for (int k = 0; k < rep.repeats; ++k) {
      const RunRecord& r = rep.records[ci * static_cast<std::size_t>(rep.repeats) + static_cast<std::size_t>(k)];
      ++cs.runs;
      sum += r.times.total;
      if (r.success()) {
        ++cs.successes;
        mine.push_back(r.times.total);
        success_times.push_back(r.times.total);
      }
    }
    cs.mean_time_s = cs.runs ? sum / cs.runs : 0;
    cs.median_success_time_s = median(mine);
    cs.expected_runtime_s = expected_runtime(cs.runs, cs.successes, cs.mean_time_s);
    rep.summary.solved += cs.successes > 0;
    rep.cases.push_back(std::move(cs));
  }
  rep.summary.cases = static_cast<int>(cases.size());
  rep.summary.success_pct = cases.empty() ? 0.0 : 100.0 * rep.summary.solved / rep.summary.cases;
  rep.summary.median_time_s = median(success_times);
  return rep;
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::json to_json(const SynthConfig& c) {
  return {{"epsilon", c.epsilon},
          {"beam_width", c.beam_width},
          {"max_cost", c.max_cost},
          {"repair_steps", c.repair_steps},
          {"finals", c.final_count()},
          {"tabu_capacity", c.tabu_capacity},
          {"extract_samples", c.extract_samples},
          {"repair_attempts", c.repair_attempts},
          {"transition_sample_rate", c.transition_sample_rate},
          {"rewrite_sample_rate", c.rewrite_sample_rate},
          {"seed", c.seed},
          {"time_budget_s", c.time_budget.count()},
          {"memory_budget_bytes", c.memory_budget},
          {"cluster", c.cluster},
          {"rank", c.rank_mode == RankMode::distance ? "distance" : "random"},
          {"extract", c.extract_mode == ChoiceMode::distance ? "distance" : "random"},
          {"repair", c.repair_mode == ChoiceMode::distance ? "distance" : "random"}};
}

inline nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

inline nlohmann::json to_json(const RunRecord& r) {
  nlohmann::json j{{"case", r.case_name},
                   {"algorithm", r.algorithm},
                   {"outcome", outcome_name(r.outcome)},
                   {"seed", r.seed},
                   {"repeat", r.repeat},
                   {"times", {{"construct_s", r.times.construct},
                              {"expansion_s", r.times.expansion},
                              {"clustering_s", r.times.clustering},
                              {"ranking_s", r.times.ranking},
                              {"extract_s", r.times.extract},
                              {"repair_s", r.times.repair},
                              {"total_s", r.times.total}}},
                   {"peak_bytes", r.peak_bytes},
                   {"states", r.states},
                   {"transitions", r.transitions},
                   {"program", r.program ? nlohmann::json(*r.program) : nlohmann::json()},
                   {"program_nodes", r.program_nodes}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

inline nlohmann::json to_json(const SuiteReport& rep) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["algorithm"] = rep.algorithm;
  j["repeats"] = rep.repeats;
  j["config"] = to_json(rep.config);
  j["records"] = nlohmann::json::array();
  for (const RunRecord& r : rep.records) j["records"].push_back(to_json(r));
  j["cases"] = nlohmann::json::array();
  for (const CaseSummary& c : rep.cases)
    j["cases"].push_back({{"name", c.name},
                          {"runs", c.runs},
                          {"successes", c.successes},
                          {"mean_time_s", c.mean_time_s},
                          {"median_success_time_s", optional_json(c.median_success_time_s)},
                          {"expected_runtime_s", optional_json(c.expected_runtime_s)}});
  j["summary"] = {{"cases", rep.summary.cases},
                  {"solved", rep.summary.solved},
                  {"success_pct", rep.summary.success_pct},
                  {"median_time_s", optional_json(rep.summary.median_time_s)}};
  return j;
}

/// Copy of a report with wall-clock fields removed: keys ending in "_s" and
/// the per-run "times" objects.
inline nlohmann::json strip_timing(const nlohmann::json& j) {
  if (j.is_object()) {
    nlohmann::json out = nlohmann::json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      if (k == "times" || (k.size() > 2 && k.compare(k.size() - 2, 2, "_s") == 0)) continue;
      out[k] = strip_timing(it.value());
    }
    return out;
  }
  if (j.is_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& v : j) out.push_back(strip_timing(v));
    return out;
  }
  return j;
}

namespace detail {

inline std::string fmt_time(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << *v;
  return s.str();
}

}  // namespace detail

/// Per-case success and runtime table.
inline void write_summary_table(std::ostream& os, const SuiteReport& rep) {
  std::size_t w = 9;
  for (const auto& c : rep.cases) w = std::max(w, c.name.size());
  os << rep.algorithm << '\n';
  os << std::left << std::setw(static_cast<int>(w)) << "Benchmark" << std::right << std::setw(8) << "solved"
     << std::setw(12) << "median s" << std::setw(12) << "expected s" << '\n';
  for (const auto& c : rep.cases)
    os << std::left << std::setw(static_cast<int>(w)) << c.name << std::right << std::setw(8)
       << (std::to_string(c.successes) + "/" + std::to_string(c.runs)) << std::setw(12)
       << detail::fmt_time(c.median_success_time_s) << std::setw(12) << detail::fmt_time(c.expected_runtime_s) << '\n';
  std::ostringstream pct;
  pct << std::fixed << std::setprecision(1) << rep.summary.success_pct << '%';
  os << "solved " << rep.summary.solved << '/' << rep.summary.cases << " (" << pct.str() << "), median "
     << detail::fmt_time(rep.summary.median_time_s) << " s\n";
}

/// Median and max time per phase over successful runs.
inline void write_phase_table(std::ostream& os, const SuiteReport& rep) {
  const std::pair<const char*, double PhaseTimes::*> phases[] = {
      {"construct", &PhaseTimes::construct}, {"  expansion", &PhaseTimes::expansion},
      {"  clustering", &PhaseTimes::clustering}, {"  ranking", &PhaseTimes::ranking},
      {"extract", &PhaseTimes::extract}, {"repair", &PhaseTimes::repair}};
  os << std::left << std::setw(14) << "Phase" << std::right << std::setw(10) << "Median" << std::setw(10) << "Max" << '\n';
  for (const auto& [name, field] : phases) {
    std::vector<double> v;
    for (const RunRecord& r : rep.records)
      if (r.success()) v.push_back(r.times.*field);
    const auto med = median(v);
    const std::optional<double> mx = v.empty() ? std::nullopt : std::optional<double>(*std::max_element(v.begin(), v.end()));
    os << std::left << std::setw(14) << name << std::right << std::setw(10) << detail::fmt_time(med) << std::setw(10)
       << detail::fmt_time(mx) << '\n';
  }
}

}  // namespace symetric
