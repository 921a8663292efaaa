#pragma once

#include <optional>
#include <random>
#include <string>
#include <unordered_set>

#include "symetric/config.hpp"
#include "symetric/eval.hpp"
#include "symetric/expr.hpp"
#include "symetric/extract.hpp"
#include "symetric/repair.hpp"
#include "symetric/xfta.hpp"

namespace symetric {

/// Wall time per phase, in seconds. Expansion, clustering and ranking are
/// parts of construct.
struct PhaseTimes {
  double construct = 0;
  double expansion = 0;
  double clustering = 0;
  double ranking = 0;
  double extract = 0;
  double repair = 0;
  double total = 0;
};

struct SynthStats {
  PhaseTimes times;
  std::size_t states = 0;
  std::size_t transitions = 0;
  std::size_t frontier = 0;
  std::size_t extractions = 0;
  std::size_t repairs = 0;
  std::size_t repair_steps = 0;
  std::size_t peak_bytes = 0;  // estimated automaton and frontier footprint
};

struct SynthResult {
  std::optional<Expr> program;
  SearchStatus status = SearchStatus::not_found;
  SynthStats stats;
};

/// Approximate-automaton synthesis: build the automaton, then repeatedly
/// extract a candidate from each final state (best first) and repair it,
/// until a program renders exactly to the goal.
inline SynthResult metric_synth(const Scene& goal, const SynthConfig& cfg, const ParamDomain& domain) {
  cfg.validate();
  if (!(goal.canvas() == cfg.canvas)) throw DimensionMismatch(goal.canvas(), cfg.canvas);
  SynthResult res;
  SynthStats& st = res.stats;
  const auto start = Clock::now();
  const Deadline deadline(cfg.time_budget);
  std::mt19937_64 rng(mix_seed(cfg.seed, 1));
  Evaluator ev(cfg.canvas);
  auto finish = [&](std::optional<Expr> p, SearchStatus s) {
    if (p) {
      Expr c = canonicalize(*p);
      if (!(eval(c, cfg.canvas) == goal)) throw std::logic_error("solution does not reproduce the goal");
      res.program = std::move(c);
    }
    res.status = s;
    st.times.total = seconds_since(start);
    return res;
  };
  try {
    std::optional<Xfta> a;
    {
      ScopedTimer timer(st.times.construct);
      ConstructStats cs;
      const Alphabet alphabet = Alphabet::standard(cfg.canvas, domain);
      try {
        a.emplace(construct_xfta(alphabet, goal, cfg, &cs, deadline));
      } catch (...) {
        st.times.expansion = cs.expansion_s;
        st.times.clustering = cs.clustering_s;
        st.times.ranking = cs.ranking_s;
        st.frontier = cs.frontier_total;
        st.peak_bytes = cs.peak_bytes;
        throw;
      }
      st.times.expansion = cs.expansion_s;
      st.times.clustering = cs.clustering_s;
      st.times.ranking = cs.ranking_s;
      st.frontier = cs.frontier_total;
      st.peak_bytes = cs.peak_bytes;
      st.states = a->state_count();
      st.transitions = a->transitions().size();
    }
    std::unordered_set<std::string> seen;
    const RepairOptions ropt{cfg.repair_steps, cfg.rewrite_sample_rate, static_cast<std::size_t>(cfg.tabu_capacity),
                             cfg.repair_mode};
    auto search = [&]() -> std::optional<Expr> {
      for (int round = 0; round < cfg.extract_samples; ++round) {
        // The first pass reads the greedy best program from every final state.
        const ExtractOptions eopt{round == 0 ? 1.0 : cfg.transition_sample_rate, cfg.extract_mode};
        for (StateId f : a->finals()) {
          deadline.check();
          Expr cand;
          {
            ScopedTimer timer(st.times.extract);
            cand = extract(*a, f, goal, eopt, rng, ev);
            ++st.extractions;
          }
          if (!seen.insert(serialize(cand)).second) continue;
          if (ev.eval(cand) == goal) return cand;
          ScopedTimer timer(st.times.repair);
          for (int r = 0; r < cfg.repair_attempts; ++r) {
            deadline.check();
            RepairResult rr = repair(cand, goal, domain, ropt, rng, ev.raster());
            ++st.repairs;
            st.repair_steps += static_cast<std::size_t>(rr.steps);
            if (rr.program) return rr.program;
          }
        }
      }
      return std::nullopt;
    };
    if (auto p = search()) return finish(p, SearchStatus::solved);
  } catch (const TimeoutExpired&) {
    return finish(std::nullopt, SearchStatus::timeout);
  } catch (const ResourceExhausted&) {
    return finish(std::nullopt, SearchStatus::out_of_memory);
  }
  return finish(std::nullopt, SearchStatus::not_found);
}

inline SynthResult metric_synth(const Scene& goal, const SynthConfig& cfg) {
  return metric_synth(goal, cfg, ParamDomain::for_canvas(cfg.canvas));
}

}  // namespace symetric
