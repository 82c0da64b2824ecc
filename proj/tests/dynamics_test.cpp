#include <algorithm>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "hktorus/dynamics.hpp"
#include "hktorus/graph_events.hpp"
#include "hktorus/lyapunov.hpp"

using namespace hktorus;

namespace {

const CircleParams kUnit = CircleParams::make(10.0, 1.0);

SystemState state(std::vector<double> xs, std::size_t t = 0, CircleParams params = kUnit) {
  return SystemState::make(params, xs, t);
}

std::vector<double> random_positions(std::mt19937_64& gen, std::size_t n, double p) {
  std::uniform_real_distribution<double> u(0.0, p);
  std::vector<double> xs(n);
  for (auto& x : xs) x = u(gen);
  return xs;
}

}  // namespace

TEST(SystemState, RequiresPhiOrderAtStart) {
  EXPECT_NO_THROW(state({9.5, 0.0, 1.0}));  // phi: -0.5, 0, 1
  try {
    state({0.0, 9.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidState);
  }
  EXPECT_NO_THROW(state({0.0, 9.5}, 3));
  EXPECT_THROW(SystemState::make(kUnit, std::vector<double>{}), Error);
}

TEST(SystemState, RelabelSortsByPhi) {
  const std::vector<double> xs = {3.0, 9.0, 0.5};
  const auto s = SystemState::make_relabeled(kUnit, xs);
  EXPECT_EQ(s.reps(), (std::vector<double>{9.0, 0.5, 3.0}));
}

TEST(Neighbors, ThreeAgents) {
  const auto g = compute_neighbors(state({0.0, 0.6, 1.2}));
  EXPECT_EQ(g[0].all, (std::vector<AgentIndex>{0, 1}));
  EXPECT_EQ(g[1].all, (std::vector<AgentIndex>{0, 1, 2}));
  EXPECT_EQ(g[2].all, (std::vector<AgentIndex>{1, 2}));
  EXPECT_EQ(g[0].left, (std::vector<AgentIndex>{0}));
  EXPECT_EQ(g[0].right, (std::vector<AgentIndex>{0, 1}));
  EXPECT_EQ(g[2].left, (std::vector<AgentIndex>{1, 2}));
  EXPECT_EQ(g[2].right, (std::vector<AgentIndex>{2}));
  EXPECT_EQ(g[0].ell, 0);
  EXPECT_EQ(g[0].r, 1);
  EXPECT_EQ(g.edges(), (std::vector<Edge>{{0, 1}, {1, 0}, {1, 2}, {2, 1}}));
}

TEST(Neighbors, ClosedBoundaryAndWrap) {
  // Exactly r apart across 0 still counts.
  const auto g = compute_neighbors(state({9.5, 0.5, 5.0}));
  EXPECT_TRUE(g[0].has_right(1));
  EXPECT_TRUE(g[1].has_left(0));
  EXPECT_FALSE(g[0].contains(2));
  // The window for agent 0 runs forward through agent 1.
  EXPECT_EQ(g[0].ell, 0);
  EXPECT_EQ(g[0].r, 1);
  // Agent 1's window reaches back to agent 0.
  EXPECT_EQ(g[1].ell, 0);
  EXPECT_EQ(g[1].r, 1);
}

TEST(Neighbors, WindowIgnoresCoLocatedDoubleCount) {
  // Agents 0 and 1 coincide; both sit in L_1 and in R_1.
  const auto g = compute_neighbors(state({0.0, 0.0, 0.5, 5.0}));
  EXPECT_EQ(g[1].left, (std::vector<AgentIndex>{0, 1}));
  EXPECT_EQ(g[1].right, (std::vector<AgentIndex>{0, 1, 2}));
  EXPECT_EQ(g[1].ell, 0);
  EXPECT_EQ(g[1].r, 2);
  EXPECT_EQ(g[0].ell, 0);
  EXPECT_EQ(g[0].r, 2);
}

TEST(Neighbors, WindowNegativeIndexAcrossLabelZero) {
  const auto g = compute_neighbors(state({0.0, 3.0, 9.2}, 1));
  EXPECT_EQ(g[0].ell, -1);
  EXPECT_EQ(g[0].r, 0);
  EXPECT_EQ(g[2].ell, 2);
  EXPECT_EQ(g[2].r, 3);
}

TEST(Neighbors, TolNbrWidensReach) {
  const auto s = state({0.0, 1.0 + 1e-10});
  EXPECT_FALSE(compute_neighbors(s)[0].contains(1));
  EXPECT_TRUE(compute_neighbors(s, 1e-9)[0].contains(1));
}

TEST(Step, ThreeAgentExample) {
  const auto s0 = state({0.0, 0.6, 1.2});
  const auto [s1, moves] = step(s0);
  EXPECT_EQ(s1.t, 1u);
  EXPECT_NEAR(s1.positions[0].rep(), 0.3, 1e-12);
  EXPECT_NEAR(s1.positions[1].rep(), 0.6, 1e-12);
  EXPECT_NEAR(s1.positions[2].rep(), 0.9, 1e-12);
  EXPECT_NEAR(moves[0], 0.3, 1e-12);
  EXPECT_NEAR(moves[1], 0.0, 1e-12);
  EXPECT_NEAR(moves[2], 0.3, 1e-12);
}

TEST(Step, MidpointAcrossZero) {
  const auto [s1, moves] = step(state({9.75, 0.25}));
  EXPECT_NEAR(torus_distance(s1.positions[0], canonicalize(0.0, 10)), 0.0, 1e-12);
  EXPECT_NEAR(torus_distance(s1.positions[1], canonicalize(0.0, 10)), 0.0, 1e-12);
  EXPECT_NEAR(moves[0], 0.25, 1e-12);
}

TEST(Step, EquallySpacedIsFixed) {
  const auto params = CircleParams::make(5.0, 1.0);
  const auto s0 = state({0, 1, 2, 3, 4}, 1, params);
  const auto g = compute_neighbors(s0);
  for (AgentIndex i = 0; i < 5; ++i) EXPECT_EQ(g[i].all.size(), 3u);
  const auto [s1, moves] = step(s0, g);
  for (AgentIndex i = 0; i < 5; ++i) {
    EXPECT_NEAR(torus_distance(s1.positions[i], s0.positions[i]), 0.0, 1e-12);
    EXPECT_NEAR(moves[i], 0.0, 1e-12);
  }
  EXPECT_FALSE(detect_cut(g).cut);
}

TEST(Step, IsolatedAgentStays) {
  const auto [s1, moves] = step(state({2.0}));
  EXPECT_EQ(s1.positions[0].rep(), 2.0);
  EXPECT_EQ(moves[0], 0.0);
}

TEST(Cut, ThreeAgentWitness) {
  const auto c = detect_cut(compute_neighbors(state({0.0, 0.6, 1.2})));
  EXPECT_TRUE(c.cut);
  EXPECT_EQ(c.witness, AgentIndex{2});
}

TEST(Cut, ConsensusCountsAsCut) {
  EXPECT_TRUE(detect_cut(compute_neighbors(state({4.0}))).cut);
  EXPECT_TRUE(detect_cut(compute_neighbors(state({4.0, 4.0, 4.0}))).cut);
  EXPECT_FALSE(detect_cut(compute_neighbors(state({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, 1))).cut);
}

TEST(Cut, Persists) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto xs = random_positions(gen, 2 + trial % 12, 10.0);
    auto s = SystemState::make_relabeled(kUnit, xs);
    bool was_cut = false;
    for (int k = 0; k < 30; ++k) {
      const auto g = compute_neighbors(s);
      const bool cut = detect_cut(g).cut;
      ASSERT_FALSE(was_cut && !cut) << "trial " << trial << " step " << k;
      was_cut = cut;
      s = step(s, g).next;
    }
  }
}

TEST(Merges, ClassesAroundZero) {
  const auto s = state({0.0, 1e-14, 3.0, 10.0 - 1e-14}, 1);
  const auto m = detect_merges(s, 1e-11);
  ASSERT_EQ(m.classes.size(), 2u);
  EXPECT_EQ(m.classes[0], (std::vector<AgentIndex>{2}));
  EXPECT_EQ(m.classes[1], (std::vector<AgentIndex>{3, 0, 1}));
  EXPECT_TRUE(m.merged(3, 1));
  EXPECT_FALSE(m.merged(1, 2));
}

TEST(Merges, AllTogether) {
  const auto m = detect_merges(state({1.0, 1.0, 1.0}), 1e-12);
  ASSERT_EQ(m.classes.size(), 1u);
  EXPECT_EQ(m.classes[0].size(), 3u);
}

TEST(Events, DiffIsSetDifference) {
  const auto g0 = compute_neighbors(state({0.0, 1.2, 5.0}));
  const auto g1 = compute_neighbors(state({0.0, 0.9, 5.0}));
  const auto ev = diff_graphs(g0, g1, 4);
  EXPECT_EQ(ev.t, 4u);
  EXPECT_EQ(ev.added, (std::vector<Edge>{{0, 1}, {1, 0}}));
  EXPECT_TRUE(ev.removed.empty());
  EXPECT_EQ(diff_graphs(g1, g0).removed, ev.added);
  EXPECT_TRUE(diff_graphs(g0, g0).empty());
  EXPECT_NE(g0.hash(), g1.hash());
  EXPECT_EQ(g0.hash(), compute_neighbors(state({0.1, 1.3, 5.2}, 1)).hash());
}

TEST(Line, StepAndUnroll) {
  const LineSystemState line{0, {0.0, 0.5, 3.0}, 1.0};
  const auto next = line_step(line);
  EXPECT_DOUBLE_EQ(next.positions[0], 0.25);
  EXPECT_DOUBLE_EQ(next.positions[1], 0.25);
  EXPECT_DOUBLE_EQ(next.positions[2], 3.0);

  const auto u = unroll(state({1.0, 9.0}, 1), 4);
  EXPECT_EQ(u.positions, (std::vector<double>{1, 9, 11, 19, 21, 29, 31, 39}));
  try {
    unroll(state({1.0}), 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidN);
  }
}

TEST(Lyapunov, Bounds) {
  EXPECT_DOUBLE_EQ(lyapunov_W(state({0.0, 0.5})), 0.5);
  EXPECT_DOUBLE_EQ(lyapunov_W(state({0.0, 5.0})), 2.0);
  EXPECT_DOUBLE_EQ(lyapunov_W(state({3.0, 3.0})), 0.0);
}

TEST(DynamicsProperties, RandomStates) {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 20;
    const double p = trial % 3 == 0 ? 4.0 : 10.0;
    const auto params = CircleParams::make(p, 1.0);
    auto s = SystemState::make_relabeled(params, random_positions(gen, n, p));
    for (int k = 0; k < 5; ++k) {
      const auto g = compute_neighbors(s);
      for (AgentIndex i = 0; i < n; ++i) {
        const auto& h = g[i];
        ASSERT_TRUE(h.contains(i));
        ASSERT_TRUE(h.has_left(i));
        ASSERT_TRUE(h.has_right(i));
        // N_i is the union of L_i and R_i.
        std::vector<AgentIndex> u;
        std::set_union(h.left.begin(), h.left.end(), h.right.begin(), h.right.end(),
                       std::back_inserter(u));
        ASSERT_EQ(u, h.all);
        // Window ell..r lists N_i exactly once.
        ASSERT_LE(h.ell, static_cast<std::ptrdiff_t>(i));
        ASSERT_GE(h.r, static_cast<std::ptrdiff_t>(i));
        ASSERT_EQ(static_cast<std::size_t>(h.r - h.ell + 1), h.all.size());
        std::vector<AgentIndex> window;
        for (auto k2 = h.ell; k2 <= h.r; ++k2) {
          window.push_back(static_cast<AgentIndex>(((k2 % (std::ptrdiff_t)n) + n) % n));
        }
        std::sort(window.begin(), window.end());
        ASSERT_EQ(window, h.all);
        for (AgentIndex j : h.all) ASSERT_TRUE(g[j].contains(i));  // symmetric
      }
      const auto [next, moves] = step(s, g);
      for (AgentIndex i = 0; i < n; ++i) ASSERT_LE(moves[i], params.r + 1e-12);
      s = next;
    }
  }
}
