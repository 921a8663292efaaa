#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

#include "symetric/scene.hpp"

namespace symetric {

enum class RankMode { distance, random };
enum class ChoiceMode { distance, random };

/// Hyperparameters for one synthesis run.
struct SynthConfig {
  double epsilon = 0.2;
  int beam_width = 200;  // w
  int max_cost = 16;     // c_max
  int repair_steps = 500;  // n
  int finals = 0;          // k; 0 means "same as beam_width"
  int tabu_capacity = 1000;
  int extract_samples = 10;
  int repair_attempts = 5;
  double transition_sample_rate = 0.5;
  double rewrite_sample_rate = 0.8;
  std::uint64_t seed = 0;
  Canvas canvas{32, 32};
  std::chrono::duration<double> time_budget{600.0};
  std::size_t memory_budget = std::size_t{2} << 30;

  bool cluster = true;
  RankMode rank_mode = RankMode::distance;
  ChoiceMode extract_mode = ChoiceMode::distance;
  ChoiceMode repair_mode = ChoiceMode::distance;

  int final_count() const { return finals > 0 ? finals : beam_width; }

  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("invalid SynthConfig: " + m); };
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) fail("epsilon must be in [0, 1]");
    if (beam_width < 1 || max_cost < 1 || repair_steps < 1 || tabu_capacity < 1 || extract_samples < 1 ||
        repair_attempts < 1 || finals < 0)
      fail("counts must be >= 1");
    if (!(transition_sample_rate > 0.0 && transition_sample_rate <= 1.0)) fail("transition_sample_rate must be in (0, 1]");
    if (!(rewrite_sample_rate > 0.0 && rewrite_sample_rate <= 1.0)) fail("rewrite_sample_rate must be in (0, 1]");
    if (!canvas.valid()) fail("canvas must be at least 1x1");
  }
};

inline constexpr int kUnbounded = std::numeric_limits<int>::max() / 4;

class ResourceExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TimeoutExpired : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

class Deadline {
 public:
  Deadline() : end_(Clock::time_point::max()) {}
  explicit Deadline(std::chrono::duration<double> budget)
      : end_(Clock::now() + std::chrono::duration_cast<Clock::duration>(budget)) {}

  bool expired() const { return Clock::now() >= end_; }
  void check() const {
    if (expired()) throw TimeoutExpired("time budget exhausted");
  }

 private:
  Clock::time_point end_;
};

/// Adds elapsed wall time to a counter on scope exit.
class ScopedTimer {
 public:
  explicit ScopedTimer(double& sink) : sink_(sink), start_(Clock::now()) {}
  ScopedTimer(const ScopedTimer&) = delete;
  ScopedTimer& operator=(const ScopedTimer&) = delete;
  ~ScopedTimer() { sink_ += seconds_since(start_); }

 private:
  double& sink_;
  Clock::time_point start_;
};

enum class SearchStatus { solved, not_found, timeout, out_of_memory };

inline std::string_view status_name(SearchStatus s) {
  switch (s) {
    case SearchStatus::solved: return "solved";
    case SearchStatus::not_found: return "not_found";
    case SearchStatus::timeout: return "timeout";
    case SearchStatus::out_of_memory: return "out_of_memory";
  }
  return "?";
}

/// splitmix64 finalizer, used to derive independent seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace symetric
