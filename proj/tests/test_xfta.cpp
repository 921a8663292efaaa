#include <gtest/gtest.h>

#include <random>
#include <set>

#include "symetric/baseline.hpp"
#include "symetric/xfta.hpp"
#include "test_support.hpp"

using namespace symetric;
using symetric::testing::mask_from_scene;
using symetric::testing::random_program;
using symetric::testing::random_scene;

namespace {

const Canvas k16{16, 16};

SynthConfig config(Canvas c, double eps, int w, int c_max) {
  SynthConfig cfg;
  cfg.canvas = c;
  cfg.epsilon = eps;
  cfg.beam_width = w;
  cfg.max_cost = c_max;
  return cfg;
}

Scene goal_of(const std::string& program, Canvas c = k16) { return eval(parse(program), c); }

}  // namespace

TEST(Alphabet, StandardOnSmallCanvas) {
  const Alphabet a = Alphabet::for_canvas(Canvas{4, 4});
  EXPECT_EQ(a.primitives.size(), 40U);       // 4 unit circles and 36 rects
  EXPECT_EQ(a.repeats.size(), 24U * 7U);     // nonzero offsets in [-2, 2]^2, counts 2..8
  for (const Op& op : a.primitives) EXPECT_TRUE(node_well_formed(op.kind, op.params, Canvas{4, 4}));
  EXPECT_EQ(op_label(a.repeats.front()), "repeat[-2,-2,2]");
  EXPECT_TRUE(a.primitives_only().repeats.empty());
}

TEST(Alphabet, CoarseLatticeKeepsCanvasEdge) {
  ParamDomain d = ParamDomain::for_canvas(k16);
  d.coord_step = 4;
  const Alphabet a = Alphabet::standard(k16, d);
  bool edge = false;
  for (const Op& op : a.primitives)
    if (op.kind == Kind::rect && op.params[2] == 15) edge = true;
  EXPECT_TRUE(edge);
}

TEST(ClusterFrontier, FarApartCandidatesEachOpenACluster) {
  const Canvas c{8, 8};
  std::vector<Scene> s{goal_of("(rect 0 0 1 1)", c), goal_of("(rect 4 4 5 5)", c), goal_of("(rect 0 6 7 7)", c)};
  const ClusterResult r = cluster_frontier(s, std::nullopt, 0.2);
  EXPECT_EQ(r.centers, (std::vector<std::size_t>{0, 1, 2}));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(r.targets[i], std::vector<std::size_t>{i});
}

TEST(ClusterFrontier, CloseCandidateJoinsEarlierCenter) {
  const Canvas c{8, 8};
  const Scene a = goal_of("(rect 0 0 4 4)", c), b = goal_of("(rect 0 0 4 3)", c);
  ASSERT_LE(jaccard(a, b), 0.2);
  const ClusterResult r = cluster_frontier(std::vector<Scene>{a, b}, std::nullopt, 0.2);
  EXPECT_EQ(r.centers, std::vector<std::size_t>{0});
  EXPECT_EQ(r.targets[1], std::vector<std::size_t>{0});
}

TEST(ClusterFrontier, RandomScenesAreCoveredAndCentersSeparated) {
  std::mt19937_64 rng(21);
  const Canvas c{16, 16};
  const Scene goal = random_scene(rng, c, 0.3);
  for (const bool goal_aware : {false, true}) {
    std::vector<Scene> s;
    // Perturbations of a few bases so that clusters actually form.
    std::vector<Scene> bases;
    for (int i = 0; i < 5; ++i) bases.push_back(random_scene(rng, c, 0.4));
    for (int i = 0; i < 100; ++i) {
      Scene q = bases[static_cast<std::size_t>(i % 5)];
      for (int f = 0; f < i % 12; ++f) q.set(static_cast<int>(rng() % 16), static_cast<int>(rng() % 16), rng() % 2);
      s.push_back(q);
    }
    const std::optional<Scene> g = goal_aware ? std::optional<Scene>(goal) : std::nullopt;
    auto dist = [&](const Scene& x, const Scene& y) { return goal_aware ? goal_distance(goal, x, y) : jaccard(x, y); };
    const ClusterResult r = cluster_frontier(s, g, 0.2);
    EXPECT_LT(r.centers.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      ASSERT_FALSE(r.targets[i].empty());
      for (std::size_t ci : r.targets[i]) EXPECT_LE(dist(s[i], s[r.centers[ci]]), 0.2 + 1e-12);
    }
    for (std::size_t i = 0; i < r.centers.size(); ++i)
      for (std::size_t j = 0; j < i; ++j) EXPECT_GT(dist(s[r.centers[i]], s[r.centers[j]]), 0.2);
  }
}

TEST(TopK, OrdersByRankCostThenScene) {
  const Canvas c{8, 8};
  const Scene goal = goal_of("(rect 0 0 3 3)", c);
  Xfta a(c, goal);
  std::mt19937_64 rng(22);
  std::vector<StateId> ids;
  for (int i = 0; i < 200; ++i) {
    const Scene s = eval(random_program(rng, c, 1 + i % 3), c);
    if (a.find(s)) continue;
    ids.push_back(a.add_state(s, 1 + static_cast<int>(rng() % 3), goal_rank(goal, s)));
  }
  ids.push_back(a.add_state(goal, 2, 0.0));
  std::vector<StateId> oracle = ids;
  std::sort(oracle.begin(), oracle.end(), [&](StateId x, StateId y) {
    const auto& sx = a.state(x);
    const auto& sy = a.state(y);
    return std::tuple(sx.rank, sx.cost, scene_to_string(sx.scene)) < std::tuple(sy.rank, sy.cost, scene_to_string(sy.scene));
  });
  const auto all = top_k(a, ids, 100000);
  EXPECT_EQ(all, oracle);
  EXPECT_EQ(all.front(), ids.back());
  const auto five = top_k(a, ids, 5);
  EXPECT_EQ(five, std::vector<StateId>(oracle.begin(), oracle.begin() + 5));
}

TEST(ConstructXfta, PrimitivesOnlyAtCostOne) {
  const Canvas c{8, 8};
  const Scene goal = goal_of("(rect 1 1 4 5)", c);
  const Alphabet alpha = Alphabet::for_canvas(c).primitives_only();
  std::set<std::pair<double, std::string>> distinct;
  for (const Op& op : alpha.primitives) {
    const Scene s = eval(Expr::make(op.kind, op.params), c);
    distinct.insert({goal_rank(goal, s), scene_to_string(s)});
  }
  {
    const Xfta a = construct_xfta(alpha, goal, config(c, 0.0, kUnbounded, 1));
    EXPECT_EQ(a.state_count(), distinct.size());
    EXPECT_EQ(a.transitions().size(), alpha.primitives.size());
  }
  const int w = 10;
  const Xfta a = construct_xfta(alpha, goal, config(c, 0.0, w, 1));
  ASSERT_EQ(a.state_count(), static_cast<std::size_t>(w));
  std::vector<double> got, want;
  for (StateId i = 0; i < a.state_count(); ++i) got.push_back(a.state(i).rank);
  for (const auto& d : distinct) want.push_back(d.first);
  want.resize(static_cast<std::size_t>(w));
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, want);
  EXPECT_EQ(a.state(a.finals().front()).scene, goal);
}

TEST(ConstructXfta, ExactModeMatchesBruteForceOn4x4) {
  const Canvas c{4, 4};
  const Alphabet alpha = Alphabet::for_canvas(c);
  for (int c_max : {3, 4}) {
    const auto oracle = symetric::testing::brute_force_scenes_4x4(c_max);
    const Xfta a = construct_xfta(alpha, Scene(c), config(c, 0.0, kUnbounded, c_max));
    std::set<std::uint16_t> got;
    for (StateId i = 0; i < a.state_count(); ++i) got.insert(static_cast<std::uint16_t>(mask_from_scene(a.state(i).scene)));
    EXPECT_EQ(got.size(), a.state_count());
    EXPECT_EQ(got, oracle) << "c_max " << c_max;
    EXPECT_TRUE(audit_invariants(a, 0.0).empty());
  }
}

TEST(ConstructXfta, StructuralInvariants) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 3; ++trial) {
    const Scene goal = eval(random_program(rng, k16, 5), k16);
    SynthConfig cfg = config(k16, 0.2, 30, 5);
    cfg.finals = 7;
    ConstructStats st;
    const Xfta a = construct_xfta(Alphabet::for_canvas(k16), goal, cfg, &st);
    EXPECT_LE(a.finals().size(), 7U);
    EXPECT_EQ(st.states_per_cost.size(), 5U);
    for (std::size_t made : st.states_per_cost) EXPECT_LE(made, 30U);
    for (StateId f : a.finals()) EXPECT_LT(f, a.state_count());
    for (const Transition& t : a.transitions()) {
      const XftaState& out = a.state(t.out);
      for (int k = 0; k < arity(t.op.kind); ++k) {
        const StateId arg = t.args[static_cast<std::size_t>(k)];
        const XftaState& as = a.state(arg);
        // Arguments strictly precede their target, so extraction terminates.
        EXPECT_TRUE(as.cost < out.cost || (as.cost == out.cost && arg < t.out));
      }
    }
    for (StateId i = 0; i < a.state_count(); ++i) EXPECT_FALSE(a.incoming(i).empty());
    EXPECT_TRUE(audit_invariants(a, 0.2).empty());
  }
}

TEST(ConstructXfta, Deterministic) {
  const Scene goal = goal_of("(diff (rect 1 1 12 12) (circle 6 6 3))");
  const SynthConfig cfg = config(k16, 0.2, 40, 5);
  const Xfta a = construct_xfta(Alphabet::for_canvas(k16), goal, cfg);
  const Xfta b = construct_xfta(Alphabet::for_canvas(k16), goal, cfg);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(ConstructXfta, NoClusterIsExact) {
  const Scene goal = goal_of("(union (rect 0 0 3 3) (circle 10 10 3))");
  SynthConfig cfg = config(k16, 0.2, 40, 4);
  cfg.cluster = false;
  const Xfta a = construct_xfta(Alphabet::for_canvas(k16), goal, cfg);
  EXPECT_TRUE(audit_invariants(a, 0.0).empty());
}

TEST(ConstructXfta, MemoryBudgetFailsGracefully) {
  SynthConfig cfg = config(k16, 0.2, 200, 6);
  cfg.memory_budget = 1 << 20;
  EXPECT_THROW(construct_xfta(Alphabet::for_canvas(k16), goal_of("(rect 0 0 3 3)"), cfg), ResourceExhausted);
}

TEST(ConstructXfta, RejectsBadConfig) {
  SynthConfig cfg = config(k16, 0.2, 0, 3);
  EXPECT_THROW(construct_xfta(Alphabet::for_canvas(k16), Scene(k16), cfg), std::invalid_argument);
  cfg = config(Canvas{8, 8}, 0.2, 10, 3);
  EXPECT_THROW(construct_xfta(Alphabet::for_canvas(k16), Scene(k16), cfg), DimensionMismatch);
}

TEST(Audit, DetectsOneCorruptedState) {
  const Scene goal = goal_of("(union (rect 0 0 5 5) (repeat (circle 10 3 2) 0 5 2))");
  const Xfta built = construct_xfta(Alphabet::for_canvas(k16), goal, config(k16, 0.2, 30, 4));
  ASSERT_TRUE(audit_invariants(built, 0.2).empty());
  // A state with one incoming edge that no transition reads from.
  std::vector<int> used(built.state_count(), 0);
  for (const Transition& t : built.transitions())
    for (int k = 0; k < arity(t.op.kind); ++k) ++used[t.args[static_cast<std::size_t>(k)]];
  std::optional<StateId> victim;
  for (StateId i = 0; i < built.state_count() && !victim; ++i)
    if (used[i] == 0 && built.incoming(i).size() == 1) victim = i;
  ASSERT_TRUE(victim);
  Xfta a = built;
  Scene flipped = a.state(*victim).scene;
  for (int v = 0; v < 16; ++v)
    for (int u = 0; u < 16; ++u) flipped.set(u, v, !flipped.get(u, v));
  a.replace_scene_for_testing(*victim, flipped);
  const auto report = audit_invariants(a, 0.2);
  ASSERT_EQ(report.size(), 1U);
  EXPECT_EQ(report[0].transition, a.incoming(*victim).front());
  EXPECT_GT(report[0].distance, 0.2);
  EXPECT_TRUE(audit_invariants(a, 1.0).empty());
}

TEST(Xfta, RejectsDanglingTransitions) {
  Xfta a(Canvas{4, 4}, Scene(Canvas{4, 4}));
  const StateId s = a.add_state(Scene(Canvas{4, 4}), 1, 0.0);
  EXPECT_THROW(a.add_transition({{Kind::union_, {}}, {s, 5}, s}), std::out_of_range);
  EXPECT_THROW(a.add_transition({{Kind::rect, {0, 0, 1, 1}}, {}, 3}), std::out_of_range);
}

TEST(Xfta, JsonDump) {
  const Scene goal = goal_of("(rect 0 0 1 1)", Canvas{4, 4});
  EXPECT_EQ(run_length(goal), "1:2,2,2,10");
  const Xfta a = construct_xfta(Alphabet::for_canvas(Canvas{4, 4}), goal, config(Canvas{4, 4}, 0.2, 5, 2));
  const auto j = to_json(a);
  EXPECT_EQ(j["states"].size(), a.state_count());
  EXPECT_EQ(j["transitions"].size(), a.transitions().size());
  EXPECT_EQ(j["finals"].size(), a.finals().size());
  EXPECT_EQ(j["states"][a.finals().front()]["scene"], "1:2,2,2,10");
}

TEST(RankClasses, OrderMatchesDoubleComparison) {
  const detail::RankClasses rc(48);
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t u = 0; u <= 48; ++u)
    for (std::size_t i = 0; i <= u; ++i) all.push_back({i, u});
  std::mt19937_64 rng(77);
  for (int t = 0; t < 20000; ++t) {
    const auto [i1, u1] = all[rng() % all.size()];
    const auto [i2, u2] = all[rng() % all.size()];
    const double a = detail::RankClasses::value(i1, u1), b = detail::RankClasses::value(i2, u2);
    EXPECT_EQ(rc.of(i1, u1) < rc.of(i2, u2), a < b);
    EXPECT_EQ(rc.of(i1, u1) == rc.of(i2, u2), a == b);
  }
  EXPECT_EQ(rc.of(0, 0), rc.of(3, 3));
  EXPECT_EQ(rc.of(1, 2), rc.of(2, 4));
}

TEST(RankClasses, ValueIsJaccard) {
  std::mt19937_64 rng(78);
  const Canvas c{6, 5};
  for (int t = 0; t < 500; ++t) {
    const Scene a = symetric::testing::random_scene(rng, c, 0.4), b = symetric::testing::random_scene(rng, c, 0.4);
    EXPECT_EQ(detail::RankClasses::value((a - (a - b)).count(), (a | b).count()), jaccard(a, b));
  }
}
