#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "hktorus/dynamics.hpp"
#include "hktorus/graph_events.hpp"
#include "hktorus/lyapunov.hpp"
#include "hktorus/trace.hpp"

namespace hktorus {

// ---------------------------------------------------------------------------
// Lyapunov decrease and kinetic energy
// ---------------------------------------------------------------------------

struct LyapunovRecord {
  std::size_t t = 0;
  double W = 0.0;
  double W_next = 0.0;
  double sum_sq_moves = 0.0;  // sum_i delta(x_i(t), x_i(t+1))^2
  bool pass = true;

  /// How far W(t) - W(t+1) exceeds 4 * sum_sq_moves; negative means violation.
  double slack() const { return (W - W_next) - 4.0 * sum_sq_moves; }
};

namespace detail {
inline std::vector<double> step_sq_moves(const Trace& trace) {
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
    const auto& a = trace.records[k].positions;
    const auto& b = trace.records[k + 1].positions;
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = torus_distance(canonicalize(a[i], trace.params.p),
                                      canonicalize(b[i], trace.params.p));
      s += d * d;
    }
    out.push_back(s);
  }
  return out;
}

inline void require_steps(const Trace& trace, std::size_t count, const char* what) {
  if (trace.records.size() < count) {
    throw Error(ErrorCode::HorizonTooShort, what);
  }
}
}  // namespace detail

/// Checks W(t) - W(t+1) >= 4 sum_i delta(x_i(t), x_i(t+1))^2 at every step,
/// up to an absolute tolerance of 1e-9 n^2. W is recomputed from positions.
inline std::vector<LyapunovRecord> check_lyapunov_decrease(const Trace& trace) {
  detail::require_steps(trace, 2, "the Lyapunov check needs at least two records");
  const double n = static_cast<double>(trace.agents());
  const double tol = 1e-9 * n * n;
  const auto sq = detail::step_sq_moves(trace);
  std::vector<double> w;
  w.reserve(trace.records.size());
  for (std::size_t k = 0; k < trace.records.size(); ++k) w.push_back(lyapunov_W(trace.state_at(k)));
  std::vector<LyapunovRecord> out;
  for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
    LyapunovRecord rec{trace.records[k].t, w[k], w[k + 1], sq[k], true};
    rec.pass = rec.slack() >= -tol;
    out.push_back(rec);
  }
  return out;
}

/// Running sum over recorded steps of sum_i delta(x_i(t), x_i(t+1))^s.
struct KineticEnergyAccumulator {
  double s = 2.0;
  double partial = 0.0;
  std::vector<double> prefix;  // prefix[k]: energy of the first k+1 steps

  void add_step(std::span<const double> moves) {
    for (double m : moves) partial += std::pow(m, s);
    prefix.push_back(partial);
  }
};

inline KineticEnergyAccumulator kinetic_energy(const Trace& trace, double s) {
  if (!(s > 0.0)) throw Error(ErrorCode::ConfigInvalid, "kinetic energy exponent must be positive");
  KineticEnergyAccumulator acc{s, 0.0, {}};
  for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
    const auto& a = trace.records[k].positions;
    const auto& b = trace.records[k + 1].positions;
    std::vector<double> moves(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      moves[i] = torus_distance(canonicalize(a[i], trace.params.p),
                                canonicalize(b[i], trace.params.p));
    }
    acc.add_step(moves);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Influence-graph events
// ---------------------------------------------------------------------------

struct GraphStabilityReport {
  std::size_t t0_candidate = 0;
  std::size_t stable_window = 0;
  std::vector<Edge> final_edges;
};

/// t0_candidate is one past the last step whose graph differs from its
/// successor; the window never extends past the last record.
inline GraphStabilityReport detect_stability(const Trace& trace,
                                             const std::vector<InfluenceGraph>& graphs) {
  detail::require_steps(trace, 1, "stability needs at least one record");
  GraphStabilityReport rep;
  for (std::size_t k = 0; k + 1 < graphs.size(); ++k) {
    if (!graphs[k].same_edges(graphs[k + 1])) rep.t0_candidate = trace.records[k + 1].t;
  }
  rep.stable_window = trace.last_t() - rep.t0_candidate;
  rep.final_edges = graphs.back().edges();
  return rep;
}

inline GraphStabilityReport detect_stability(const Trace& trace) {
  return detect_stability(trace, trace.graphs());
}

/// An agent with L_i(t) strictly inside L_i(t+1) and R_i(t+1) inside R_i(t).
/// Every step that adds a link has one; nullopt flags a counterexample.
inline std::optional<AgentIndex> find_left_gainer(const InfluenceGraph& g_t,
                                                  const InfluenceGraph& g_t1) {
  if (diff_graphs(g_t, g_t1).added.empty()) {
    throw Error(ErrorCode::NoNewLink, "no link was added between the two graphs");
  }
  auto subset = [](const std::vector<AgentIndex>& a, const std::vector<AgentIndex>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
  };
  for (AgentIndex i = 0; i < g_t.size(); ++i) {
    const auto& before = g_t[i];
    const auto& after = g_t1[i];
    const bool gains_left = subset(before.left, after.left) && before.left != after.left;
    const bool no_new_right = subset(after.right, before.right);
    if (gains_left && no_new_right) return i;
  }
  return std::nullopt;
}

struct AddLinkMoveCheck {
  bool pass = false;
  double threshold = 0.0;  // 1 / (6n)
  double magnitude = 0.0;  // largest single-step move over both steps
  AgentIndex agent = 0;
  std::size_t step_t = 0;  // the move measured is from step_t to step_t + 1
};

/// After a link appears between event_t and event_t+1, some agent moves by
/// more than 1/(6n) in one of the steps event_t -> event_t+1 or
/// event_t+1 -> event_t+2. The maximum is taken over all agents.
inline AddLinkMoveCheck check_addlink_move(const Trace& trace, std::size_t event_t) {
  if (event_t + 2 > trace.last_t()) {
    throw Error(ErrorCode::HorizonTooShort,
                "trace ends before t = " + std::to_string(event_t + 2));
  }
  const std::size_t n = trace.agents();
  AddLinkMoveCheck out;
  out.threshold = 1.0 / (6.0 * static_cast<double>(n));
  out.magnitude = -1.0;
  for (std::size_t k = event_t; k < event_t + 2; ++k) {
    const auto& a = trace.records[k].positions;
    const auto& b = trace.records[k + 1].positions;
    for (AgentIndex i = 0; i < n; ++i) {
      const double d = torus_distance(canonicalize(a[i], trace.params.p),
                                      canonicalize(b[i], trace.params.p));
      if (d > out.magnitude) {
        out.magnitude = d;
        out.agent = i;
        out.step_t = k;
      }
    }
  }
  out.pass = out.magnitude > out.threshold;
  return out;
}

// ---------------------------------------------------------------------------
// Unrolling the circle onto the line
// ---------------------------------------------------------------------------

struct UnrollReport {
  int N = 4;
  std::size_t n = 0;
  double V_N_0 = 0.0;
  double V_N_1 = 0.0;
  double W_0 = 0.0;
  double W_1 = 0.0;
  double R_0 = 0.0;  // V_N_0 - (N-2) W_0
  double R_1 = 0.0;  // V_N_1 - (N-4) W_1
  double S = 0.0;    // sum_i delta(x_i(0), x_i(1))^2
  double line_sq_moves = 0.0;       // sum over all nN line agents of |y_i(1) - y_i(0)|^2
  double interior_deviation = 0.0;  // max gap between interior line copies and the lifted circle step
  double tolerance = 1e-9;

  bool r0_in_bounds() const {
    const double nn = static_cast<double>(n * n);
    return R_0 >= -tolerance && R_0 <= 2.0 * nn + tolerance;
  }
  bool r1_in_bounds() const {
    const double nn = static_cast<double>(n * n);
    return R_1 >= -tolerance && R_1 <= 4.0 * nn + tolerance;
  }
  /// V_N(0) - V_N(1) >= 4 sum |y_i(1) - y_i(0)|^2 for the line system.
  bool line_decrease_holds() const {
    return (V_N_0 - V_N_1) - 4.0 * line_sq_moves >= -tolerance * static_cast<double>(n * n * N * N);
  }
  /// 4((N-2) S - n^2) / (N-4); infinite at N = 4.
  double finite_bound() const {
    const double nn = static_cast<double>(n * n);
    return 4.0 * ((N - 2) * S - nn) / (N - 4);
  }
  /// W(0) - W(1) >= 4((N-2) S - n^2) / (N-4), checked with both sides
  /// multiplied by N-4 so that N = 4 is covered.
  bool finite_inequality_holds() const {
    const double nn = static_cast<double>(n * n);
    return (N - 4) * (W_0 - W_1) >= 4.0 * ((N - 2) * S - nn) - tolerance * nn * N;
  }
};

inline UnrollReport unroll_check(const SystemState& state, int copies) {
  const LineSystemState line0 = unroll(state, copies);
  const LineSystemState line1 = line_step(line0);
  const auto circle1 = step(state).next;
  const std::size_t n = state.size();
  const double p = state.params.p;

  UnrollReport rep;
  rep.N = copies;
  rep.n = n;
  rep.V_N_0 = line_lyapunov(line0);
  rep.V_N_1 = line_lyapunov(line1);
  rep.W_0 = lyapunov_W(state);
  rep.W_1 = lyapunov_W(circle1);
  rep.R_0 = rep.V_N_0 - (copies - 2) * rep.W_0;
  rep.R_1 = rep.V_N_1 - (copies - 4) * rep.W_1;
  for (AgentIndex i = 0; i < n; ++i) {
    const double d = torus_distance(state.positions[i], circle1.positions[i]);
    rep.S += d * d;
  }
  for (std::size_t a = 0; a < line0.positions.size(); ++a) {
    const double d = line1.positions[a] - line0.positions[a];
    rep.line_sq_moves += d * d;
  }
  // Copies 1..N-2 see a full circle's worth of neighbors on both sides.
  for (int k = 1; k + 1 < copies; ++k) {
    for (AgentIndex i = 0; i < n; ++i) {
      const std::size_t a = static_cast<std::size_t>(k) * n + i;
      const double lifted =
          state.positions[i].rep() + k * p + torus_vect(state.positions[i], circle1.positions[i]);
      rep.interior_deviation = std::max(rep.interior_deviation, std::abs(line1.positions[a] - lifted));
    }
  }
  return rep;
}

}  // namespace hktorus
