#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "hktorus/analysis.hpp"

using namespace hktorus;

namespace {

const CircleParams kUnit = CircleParams::make(10.0, 1.0);

Trace run_from(std::vector<double> xs, std::size_t horizon = 100, CircleParams params = kUnit) {
  return run(SystemState::make_relabeled(params, xs), horizon, 1e-13 * params.p);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an hktorus::Error";
  return ErrorCode::IoError;
}

}  // namespace

TEST(LyapunovDecrease, MidpointIsTight) {
  const auto trace = run_from({0.0, 0.5});
  const auto recs = check_lyapunov_decrease(trace);
  ASSERT_GE(recs.size(), 1u);
  EXPECT_DOUBLE_EQ(recs[0].W, 0.5);
  EXPECT_DOUBLE_EQ(recs[0].W_next, 0.0);
  EXPECT_DOUBLE_EQ(recs[0].sum_sq_moves, 0.125);
  EXPECT_NEAR(recs[0].slack(), 0.0, 1e-15);
  EXPECT_TRUE(recs[0].pass);
}

TEST(LyapunovDecrease, NeedsTwoRecords) {
  const auto trace = run_from({0.0, 0.5}, 0);
  EXPECT_EQ(code_of([&] { check_lyapunov_decrease(trace); }), ErrorCode::HorizonTooShort);
}

TEST(KineticEnergy, Midpoint) {
  const auto trace = run_from({0.0, 0.5});
  EXPECT_DOUBLE_EQ(kinetic_energy(trace, 2.0).partial, 0.125);
  EXPECT_DOUBLE_EQ(kinetic_energy(trace, 1.0).partial, 0.5);
  const auto acc = kinetic_energy(trace, 2.0);
  ASSERT_EQ(acc.prefix.size(), trace.records.size() - 1);
  EXPECT_DOUBLE_EQ(acc.prefix.front(), 0.125);
}

TEST(Stability, ThreeAgents) {
  const auto trace = run_from({0.0, 0.6, 1.2});
  const auto rep = detect_stability(trace);
  EXPECT_EQ(rep.t0_candidate, 1u);
  EXPECT_EQ(rep.stable_window, trace.last_t() - 1);
  EXPECT_EQ(rep.final_edges.size(), 6u);
}

TEST(Stability, FixedPointFromStart) {
  const auto params = CircleParams::make(5.0, 1.0);
  const auto trace = run_from({0, 1, 2, 3, 4}, 50, params);
  const auto rep = detect_stability(trace);
  EXPECT_EQ(rep.t0_candidate, 0u);
  EXPECT_EQ(trace.last_t(), 1u);
  EXPECT_EQ(rep.final_edges.size(), 10u);
}

TEST(LeftGainer, AgentThatSeesNewLeftNeighbor) {
  const auto g0 = compute_neighbors(SystemState::make(kUnit, std::vector<double>{0.0, 1.2, 5.0}));
  const auto g1 = compute_neighbors(SystemState::make(kUnit, std::vector<double>{0.0, 0.9, 5.0}));
  EXPECT_EQ(find_left_gainer(g0, g1), AgentIndex{1});
  EXPECT_EQ(code_of([&] { find_left_gainer(g0, g0); }), ErrorCode::NoNewLink);
  EXPECT_EQ(code_of([&] { find_left_gainer(g1, g0); }), ErrorCode::NoNewLink);
}

TEST(AddLinkMove, ThreeAgents) {
  const auto trace = run_from({0.0, 0.6, 1.2});
  ASSERT_TRUE(trace.records[1].events.has_value());
  const auto c = check_addlink_move(trace, 0);
  EXPECT_TRUE(c.pass);
  EXPECT_DOUBLE_EQ(c.threshold, 1.0 / 18.0);
  EXPECT_NEAR(c.magnitude, 0.3, 1e-12);
  EXPECT_EQ(c.step_t, 0u);
  EXPECT_EQ(code_of([&] { check_addlink_move(trace, trace.last_t() - 1); }),
            ErrorCode::HorizonTooShort);
}

TEST(Unroll, TwoAgentValues) {
  const auto s = SystemState::make(kUnit, std::vector<double>{0.0, 0.5});
  const auto rep = unroll_check(s, 4);
  EXPECT_DOUBLE_EQ(rep.V_N_0, 50.0);
  EXPECT_DOUBLE_EQ(rep.V_N_1, 48.0);
  EXPECT_DOUBLE_EQ(rep.W_0, 0.5);
  EXPECT_DOUBLE_EQ(rep.W_1, 0.0);
  EXPECT_DOUBLE_EQ(rep.R_0, 49.0);
  EXPECT_DOUBLE_EQ(rep.R_1, 48.0);
  EXPECT_DOUBLE_EQ(rep.S, 0.125);
  EXPECT_DOUBLE_EQ(rep.line_sq_moves, 0.5);
  EXPECT_EQ(rep.interior_deviation, 0.0);
  EXPECT_TRUE(rep.line_decrease_holds());
  EXPECT_TRUE(rep.finite_inequality_holds());
  // Far pairs between copies each add 1 to V_N, so R_0 overshoots 2n^2.
  EXPECT_FALSE(rep.r0_in_bounds());
}

TEST(Unroll, LargerCopyCounts) {
  const auto s = SystemState::make(kUnit, std::vector<double>{0.0, 0.5});
  EXPECT_DOUBLE_EQ(unroll_check(s, 8).R_0, 225.0);
  EXPECT_DOUBLE_EQ(unroll_check(s, 16).R_0, 961.0);
  EXPECT_EQ(code_of([&] { unroll_check(s, 2); }), ErrorCode::InvalidN);
}

TEST(AnalysisProperties, RandomRuns) {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<double> xs(2 + trial % 15);
    for (auto& x : xs) x = u(gen);
    const auto trace = run(SystemState::make_relabeled(kUnit, xs), 200, 1e-12);
    const double n = static_cast<double>(xs.size());
    if (trace.records.size() >= 2) {
      for (const auto& rec : check_lyapunov_decrease(trace)) ASSERT_TRUE(rec.pass);
    }
    ASSERT_LE(kinetic_energy(trace, 2.0).partial, n * n / 4.0 + 1e-9);
    const auto graphs = trace.graphs();
    for (std::size_t k = 0; k + 1 < graphs.size(); ++k) {
      if (diff_graphs(graphs[k], graphs[k + 1]).added.empty()) continue;
      ASSERT_TRUE(find_left_gainer(graphs[k], graphs[k + 1]).has_value());
      if (k + 2 <= trace.last_t()) {
        ASSERT_TRUE(check_addlink_move(trace, k).pass);
      }
    }
    for (int N : {4, 8}) {
      const auto rep = unroll_check(trace.state_at(0), N);
      ASSERT_TRUE(rep.line_decrease_holds());
      ASSERT_TRUE(rep.finite_inequality_holds());
      ASSERT_LT(rep.interior_deviation, 1e-9);
    }
  }
}
