#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "symetric/baseline.hpp"
#include "test_support.hpp"

using namespace symetric;
using symetric::testing::mask_from_scene;

namespace {

std::set<std::uint16_t> store_masks(EquivClassStore& s) {
  std::set<std::uint16_t> out;
  for (std::uint32_t i = 0; i < s.size(); ++i) out.insert(static_cast<std::uint16_t>(mask_from_scene(s.scene(i))));
  return out;
}

}  // namespace

TEST(EquivClassStore, OneEntryPerScene) {
  const Canvas c{8, 8};
  EquivClassStore s(c);
  Raster r(c);
  auto put = [&](const Expr& e, int cost) {
    auto slot = s.staging();
    r.apply(e.kind(), e.params(), {}, {}, slot);
    return s.commit({{e.kind(), e.params()}, {}, cost});
  };
  const auto a = put(Expr::rect(0, 0, 1, 1), 1);
  const auto b = put(Expr::rect(2, 2, 3, 3), 1);
  const auto c2 = put(Expr::rect(0, 0, 1, 1), 1);
  EXPECT_TRUE(a.second);
  EXPECT_TRUE(b.second);
  EXPECT_FALSE(c2.second);
  EXPECT_EQ(c2.first, a.first);
  EXPECT_EQ(s.size(), 2U);
  EXPECT_EQ(s.find(eval(Expr::rect(2, 2, 3, 3), c)), b.first);
  EXPECT_FALSE(s.find(eval(Expr::rect(2, 2, 4, 3), c)));
  EXPECT_EQ(s.program(b.first), Expr::rect(2, 2, 3, 3));
}

TEST(ExactEnumerator, DistinctScenesMatchBruteForceOn4x4) {
  const Canvas c{4, 4};
  const Alphabet alpha = Alphabet::for_canvas(c);
  ExactEnumerator en(alpha, c, {});
  for (int n = 1; n <= 4; ++n) {
    ASSERT_TRUE(en.step({}));
    EXPECT_EQ(store_masks(en.store()), symetric::testing::brute_force_scenes_4x4(n)) << "n = " << n;
  }
  // Each stored program has the recorded cost and renders its class scene.
  for (std::uint32_t i = 0; i < en.store().size(); ++i) {
    const Expr e = en.store().program(i);
    EXPECT_EQ(node_count(e), en.store().entry(i).cost);
    EXPECT_TRUE(well_formed(e, c));
    EXPECT_EQ(eval(e, c), en.store().scene(i));
  }
}

TEST(ExactEnumerator, LevelsHoldMinimalCosts) {
  const Canvas c{4, 4};
  const Alphabet alpha = Alphabet::for_canvas(c);
  ExactEnumerator en(alpha, c, {});
  for (int n = 1; n <= 3; ++n) en.step({});
  const auto brute2 = symetric::testing::brute_force_scenes_4x4(2);
  const auto brute1 = symetric::testing::brute_force_scenes_4x4(1);
  for (std::uint32_t id : en.levels()[2]) {
    const auto m = static_cast<std::uint16_t>(mask_from_scene(en.store().scene(id)));
    EXPECT_TRUE(brute2.count(m));
    EXPECT_FALSE(brute1.count(m));
  }
}

TEST(FtaBasic, PrimitiveGoalAtCostOne) {
  SynthConfig cfg;
  cfg.canvas = Canvas{16, 16};
  cfg.max_cost = 3;
  const Scene goal = eval(parse("(circle 7 7 3)"), cfg.canvas);
  const BaselineResult r = fta_basic(goal, cfg);
  ASSERT_EQ(r.status, SearchStatus::solved);
  EXPECT_EQ(node_count(*r.program), 1);
  EXPECT_EQ(eval(*r.program, cfg.canvas), goal);
}

TEST(FtaBasic, CompleteOn4x4) {
  // Every scene the brute force reaches within 3 nodes is found; a scene it
  // cannot reach is reported as exhausted.
  const Canvas c{4, 4};
  const Alphabet alpha = Alphabet::for_canvas(c);
  const auto reachable = symetric::testing::brute_force_scenes_4x4(3);
  std::mt19937_64 rng(31);
  int unreachable_checked = 0;
  for (int i = 0; i < 60; ++i) {
    const auto m = static_cast<std::uint16_t>(rng() & 0xffff);
    const Scene goal = symetric::testing::scene_from_mask(m, c);
    const BaselineResult r = fta_basic(goal, alpha, 3, {});
    if (reachable.count(m)) {
      ASSERT_EQ(r.status, SearchStatus::solved);
      EXPECT_EQ(eval(*r.program, c), goal);
      EXPECT_LE(node_count(*r.program), 3);
    } else {
      EXPECT_EQ(r.status, SearchStatus::not_found);
      ++unreachable_checked;
    }
  }
  EXPECT_GT(unreachable_checked, 0);
}

TEST(FtaBasic, MemoryBudget) {
  const Canvas c{16, 16};
  const BaselineResult r =
      fta_basic(eval(parse("(diff (rect 0 0 15 15) (repeat (circle 3 3 2) 5 5 3))"), c), Alphabet::for_canvas(c), 8,
                {std::size_t{8} << 20, {}});
  EXPECT_EQ(r.status, SearchStatus::out_of_memory);
  EXPECT_GT(r.classes, 0U);
}

TEST(FtaBasic, Timeout) {
  const Canvas c{16, 16};
  const BaselineResult r = fta_basic(eval(parse("(diff (rect 0 0 15 15) (repeat (circle 3 3 2) 5 5 3))"), c),
                                     Alphabet::for_canvas(c), 8, {std::size_t{2} << 30, Deadline(std::chrono::duration<double>(0.05))});
  EXPECT_EQ(r.status, SearchStatus::timeout);
}

TEST(CountPrograms, MatchesExplicitEnumerationOn3x3) {
  const Canvas c{3, 3};
  const Alphabet alpha = Alphabet::for_canvas(c);
  std::vector<std::vector<Expr>> exact(4);
  for (const Op& op : alpha.primitives) exact[1].push_back(Expr::make(op.kind, op.params));
  for (int n = 2; n <= 3; ++n) {
    for (const Expr& b : exact[static_cast<std::size_t>(n - 1)])
      for (const Op& op : alpha.repeats) exact[static_cast<std::size_t>(n)].push_back(Expr::make(op.kind, op.params, b));
    for (int i = 1; i <= n - 2; ++i)
      for (const Expr& a : exact[static_cast<std::size_t>(i)])
        for (const Expr& b : exact[static_cast<std::size_t>(n - 1 - i)]) {
          for (Expr e : {Expr::union_of(a, b), Expr::diff(a, b)})
            if (canonical(e)) exact[static_cast<std::size_t>(n)].push_back(e);
        }
  }
  const auto counted = count_programs(alpha, 3);
  for (int n = 1; n <= 3; ++n) EXPECT_EQ(counted[static_cast<std::size_t>(n)], static_cast<double>(exact[static_cast<std::size_t>(n)].size()));
}

TEST(CountSearchSpace, ColumnsAreMonotone) {
  const Canvas c{5, 5};
  const Alphabet alpha = Alphabet::for_canvas(c);
  const SpaceStudy s = count_search_space(alpha, c, 3, {0.1, 0.2}, {});
  ASSERT_EQ(s.rows.size(), 3U);
  EXPECT_FALSE(s.truncated);
  EXPECT_EQ(s.rows[0].total, static_cast<double>(alpha.primitives.size()));
  for (const SpaceRow& r : s.rows) {
    EXPECT_GE(r.total, static_cast<double>(r.distinct));
    EXPECT_GE(r.distinct, r.clusters[0]);
    EXPECT_GE(r.clusters[0], r.clusters[1]);
  }
  for (std::size_t i = 1; i < s.rows.size(); ++i) EXPECT_GE(s.rows[i].distinct, s.rows[i - 1].distinct);
  std::ostringstream csv;
  write_space_csv(csv, s);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "n,total,distinct,clusters_eps0.1,clusters_eps0.2");
}

TEST(CountSearchSpace, TruncatesOnBudget) {
  const Canvas c{16, 16};
  const SpaceStudy s = count_search_space(Alphabet::for_canvas(c), c, 6, {0.1}, {std::size_t{4} << 20, {}});
  EXPECT_TRUE(s.truncated);
  EXPECT_FALSE(s.stop_reason.empty());
  EXPECT_LT(s.rows.size(), 6U);
}

TEST(CountSearchSpace, ClusterCountsMatchMTreeClustering) {
  const Canvas c{5, 5};
  const Alphabet alpha = Alphabet::for_canvas(c);
  const std::vector<double> eps{0.1, 0.3};
  const SpaceStudy s = count_search_space(alpha, c, 3, eps, {});
  ExactEnumerator en(alpha, c, {});
  std::vector<Clusterer> ref;
  for (double e : eps) ref.emplace_back(std::nullopt, e);
  std::uint32_t done = 0;
  for (int n = 1; n <= 3; ++n) {
    en.step({});
    for (; done < en.store().size(); ++done)
      for (Clusterer& cl : ref) {
        Scene k = cl.key(en.store().words(done), c);
        if (cl.close(k).empty()) cl.add_center(std::move(k));
      }
    const SpaceRow& row = s.rows[static_cast<std::size_t>(n - 1)];
    EXPECT_EQ(row.distinct, en.store().size());
    for (std::size_t e = 0; e < eps.size(); ++e) EXPECT_EQ(row.clusters[e], ref[e].size()) << "n = " << n;
  }
}
