#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

#include "hktorus/analysis.hpp"
#include "hktorus/dynamics.hpp"
#include "hktorus/trace.hpp"

namespace hktorus {

/// Signed gaps between circular neighbors: entry i is vect(x_i, x_{i+1}),
/// the last entry closes the circle with vect(x_n, x_1).
struct DiffVector {
  std::size_t t = 0;
  std::vector<double> entries;

  double sum() const {
    double s = 0.0;
    for (double e : entries) s += e;
    return s;
  }
};

inline DiffVector diff_vector(const SystemState& state) {
  const std::size_t n = state.size();
  DiffVector out{state.t, std::vector<double>(n)};
  for (AgentIndex i = 0; i < n; ++i) {
    out.entries[i] = torus_vect(state.positions[i], state.positions[(i + 1) % n]);
  }
  return out;
}

enum class MatrixKind { A, B };

/// Dense row-major n x n matrix tagged with its time step and role.
struct TransitionMatrix {
  std::size_t t = 0;
  MatrixKind kind = MatrixKind::A;
  std::size_t n = 0;
  std::vector<double> entries;

  TransitionMatrix() = default;
  TransitionMatrix(std::size_t t, MatrixKind kind, std::size_t n)
      : t(t), kind(kind), n(n), entries(n * n, 0.0) {}

  double& operator()(std::size_t i, std::size_t k) { return entries[i * n + k]; }
  double operator()(std::size_t i, std::size_t k) const { return entries[i * n + k]; }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += (*this)(i, k) * x[k];
      y[i] = s;
    }
    return y;
  }

  double min_entry() const { return *std::min_element(entries.begin(), entries.end()); }
};

namespace detail {
inline std::size_t wrap_index(std::ptrdiff_t k, std::size_t n) {
  const auto m = static_cast<std::ptrdiff_t>(n);
  return static_cast<std::size_t>(((k % m) + m) % m);
}

inline void require_gap_regime(const CircleParams& params, const InfluenceGraph& graph) {
  if (!params.strict_sixth()) {
    throw Error(ErrorCode::RadiusTooLarge, "the gap identities need r < p/6");
  }
  const auto cut = detect_cut(graph);
  if (cut.cut) {
    throw Error(ErrorCode::CutPresent,
                "system is cut after agent " + std::to_string(cut.witness.value_or(0) + 1));
  }
}
}  // namespace detail

/// The matrix A_t with x*(t+1) = A_t x*(t), from the neighbor windows at t.
///
/// Row i combines the windows [l, r] of agent i and [l', r'] of agent i+1,
/// both expressed in the unrolled frame where agent i+1 sits at index i+1:
///   (k-l+1)/(r-l+1)                          for l  <= k <= l'-1
///   (k-l+1)/(r-l+1) - (k-l'+1)/(r'-l'+1)     for l' <= k <= i-1
///   (r'-k)/(r'-l'+1) - (r-k)/(r-l+1)         for i  <= k <= r-1
///   (r'-k)/(r'-l'+1)                         for r  <= k <= r'-1
/// and zero elsewhere. Unrolled k maps to column k mod n; hits accumulate.
inline TransitionMatrix build_A(const SystemState& state, const InfluenceGraph& graph) {
  detail::require_gap_regime(state.params, graph);
  const std::size_t n = state.size();
  TransitionMatrix A(state.t, MatrixKind::A, n);
  for (AgentIndex i = 0; i < n; ++i) {
    const AgentIndex j = (i + 1) % n;
    const auto ii = static_cast<std::ptrdiff_t>(i);
    // Shift agent j's window so that j sits at unrolled index i+1.
    const std::ptrdiff_t shift = (ii + 1) - static_cast<std::ptrdiff_t>(j);
    const std::ptrdiff_t l = graph[i].ell;
    const std::ptrdiff_t r = graph[i].r;
    const std::ptrdiff_t l2 = graph[j].ell + shift;
    const std::ptrdiff_t r2 = graph[j].r + shift;
    const double size1 = static_cast<double>(r - l + 1);
    const double size2 = static_cast<double>(r2 - l2 + 1);
    for (std::ptrdiff_t k = l; k <= r2 - 1; ++k) {
      double v = 0.0;
      if (k <= l2 - 1) {
        v = static_cast<double>(k - l + 1) / size1;
      } else if (k <= ii - 1) {
        v = static_cast<double>(k - l + 1) / size1 - static_cast<double>(k - l2 + 1) / size2;
      } else if (k <= r - 1) {
        v = static_cast<double>(r2 - k) / size2 - static_cast<double>(r - k) / size1;
      } else {
        v = static_cast<double>(r2 - k) / size2;
      }
      A(i, detail::wrap_index(k, n)) += v;
    }
  }
  return A;
}

inline std::vector<double> column_sums(const TransitionMatrix& m) {
  if (m.kind != MatrixKind::A) {
    throw Error(ErrorCode::WrongKind, "column sums are defined for A matrices");
  }
  std::vector<double> sums(m.n, 0.0);
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t k = 0; k < m.n; ++k) sums[k] += m(i, k);
  }
  return sums;
}

struct RootednessResult {
  bool rooted = false;
  AgentIndex root = 0;
  std::vector<Edge> tree_edges;  // (u, v): A(u, v) > 0
};

/// Spanning out-tree of the graph of A (edge u -> v when A(u, v) > 0), built
/// from the merge classes at t+1. Starting from the first agent i1 not merged
/// with its successor, agents are attached in circular order: an agent merged
/// with its predecessor hangs off the same parent as that predecessor,
/// otherwise it hangs off its predecessor.
///
/// The caller guarantees no cut at t (A can only be built then).
inline RootednessResult check_rooted(const TransitionMatrix& m, const MergePartition& merges) {
  if (m.kind != MatrixKind::A) {
    throw Error(ErrorCode::WrongKind, "rootedness is checked on A matrices");
  }
  const std::size_t n = m.n;
  RootednessResult out;
  if (n == 1) {
    out.rooted = true;
    return out;
  }
  std::optional<AgentIndex> first;
  for (AgentIndex i = 0; i < n; ++i) {
    if (!merges.merged(i, (i + 1) % n)) {
      first = i;
      break;
    }
  }
  if (!first) {
    throw Error(ErrorCode::AllMerged, "every consecutive pair has merged; the system cannot be uncut");
  }
  out.root = *first;
  AgentIndex parent = *first;
  for (std::size_t k = 1; k < n; ++k) {
    const AgentIndex prev = (*first + k - 1) % n;
    const AgentIndex cur = (*first + k) % n;
    if (k > 1 && merges.merged(prev, cur)) {
      out.tree_edges.emplace_back(parent, cur);
    } else {
      out.tree_edges.emplace_back(prev, cur);
      parent = prev;
    }
  }
  out.rooted = std::all_of(out.tree_edges.begin(), out.tree_edges.end(),
                           [&m](const Edge& e) { return m(e.first, e.second) > 0.0; });
  return out;
}

/// Signed per-agent displacement vect(x_i(t), x_i(t+1)).
struct VelocityVector {
  std::size_t t = 0;
  std::vector<double> entries;

  double max_abs() const {
    double m = 0.0;
    for (double e : entries) m = std::max(m, std::abs(e));
    return m;
  }
};

inline VelocityVector velocity(const SystemState& now, const SystemState& next) {
  if (next.t != now.t + 1 || next.size() != now.size() || !(next.params == now.params)) {
    throw Error(ErrorCode::NonConsecutive, "velocity needs the states at t and t+1 of one system");
  }
  VelocityVector out{now.t, std::vector<double>(now.size())};
  for (AgentIndex i = 0; i < now.size(); ++i) {
    out.entries[i] = torus_vect(now.positions[i], next.positions[i]);
  }
  return out;
}

/// Row-stochastic averaging operator of a fixed influence graph.
inline TransitionMatrix build_B(const InfluenceGraph& graph, std::size_t t0 = 0) {
  const std::size_t n = graph.size();
  TransitionMatrix B(t0, MatrixKind::B, n);
  for (AgentIndex i = 0; i < n; ++i) {
    const double w = 1.0 / static_cast<double>(graph[i].all.size());
    for (AgentIndex k : graph[i].all) B(i, k) = w;
  }
  return B;
}

struct VelocityRecursionResult {
  std::size_t t0 = 0;
  std::vector<double> residuals;  // residuals[m]: step t0 + 1 + m
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

/// For every t > t0 with x(t+1) recorded: || xdot(t) - B xdot(t-1) ||_inf,
/// flagged above 1e-9 p.
inline VelocityRecursionResult check_velocity_recursion(const Trace& trace, std::size_t t0,
                                                        const std::vector<InfluenceGraph>& graphs) {
  if (!trace.params.strict_sixth()) {
    throw Error(ErrorCode::RadiusTooLarge, "the velocity recursion needs r < p/6");
  }
  if (t0 + 2 > trace.last_t()) {
    throw Error(ErrorCode::HorizonTooShort,
                "need records through t = " + std::to_string(t0 + 2));
  }
  for (std::size_t k = t0; k < graphs.size(); ++k) {
    if (detect_cut(graphs[k]).cut) {
      throw Error(ErrorCode::CutPresent, "cut at t = " + std::to_string(k));
    }
    if (k > t0 && !graphs[k].same_edges(graphs[t0])) {
      throw Error(ErrorCode::StaleT0, "influence graph changes at t = " + std::to_string(k));
    }
  }
  const TransitionMatrix B = build_B(graphs[t0], t0);
  VelocityRecursionResult out;
  out.t0 = t0;
  out.tolerance = 1e-9 * trace.params.p;
  VelocityVector prev = velocity(trace.state_at(t0), trace.state_at(t0 + 1));
  for (std::size_t t = t0 + 1; t + 1 <= trace.last_t(); ++t) {
    VelocityVector cur = velocity(trace.state_at(t), trace.state_at(t + 1));
    const auto predicted = B.apply(prev.entries);
    double res = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      res = std::max(res, std::abs(cur.entries[i] - predicted[i]));
    }
    out.residuals.push_back(res);
    out.max_residual = std::max(out.max_residual, res);
    prev = std::move(cur);
  }
  out.pass = out.max_residual <= out.tolerance;
  return out;
}

inline VelocityRecursionResult check_velocity_recursion(const Trace& trace, std::size_t t0) {
  return check_velocity_recursion(trace, t0, trace.graphs());
}

struct RateEstimate {
  double rho_hat = 1.0;
  std::size_t fit_first = 0;
  std::size_t fit_last = 0;
  std::size_t points = 0;
  double r_squared = 0.0;
  double worst_case_rate = 1.0;  // 1 - n^-n, reported for context only
};

/// 1 - n^{-n}, evaluated in log space so large n does not underflow badly.
inline double contraction_bound(std::size_t n) {
  const double nn = static_cast<double>(n);
  return 1.0 - std::exp(-nn * std::log(nn));
}

/// Least-squares slope of log max_i |xdot_i(t)| against t over post-t0 steps
/// whose largest move exceeds 1e-13 p; rho_hat = exp(slope).
inline RateEstimate estimate_rate(const Trace& trace, std::size_t t0) {
  const double floor = 1e-13 * trace.params.p;
  std::vector<double> ts, ys;
  for (std::size_t t = t0; t + 1 <= trace.last_t(); ++t) {
    const double m = velocity(trace.state_at(t), trace.state_at(t + 1)).max_abs();
    if (m > floor) {
      ts.push_back(static_cast<double>(t));
      ys.push_back(std::log(m));
    }
  }
  if (ts.size() < 10) {
    throw Error(ErrorCode::InsufficientDecayData,
                "only " + std::to_string(ts.size()) + " post-t0 steps above the noise floor");
  }
  const double k = static_cast<double>(ts.size());
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    my += ys[i];
  }
  mt /= k;
  my /= k;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - mt) * (ts[i] - mt);
    sty += (ts[i] - mt) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sty / stt;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double fit = my + slope * (ts[i] - mt);
    ss_res += (ys[i] - fit) * (ys[i] - fit);
  }
  RateEstimate out;
  out.rho_hat = std::exp(slope);
  out.fit_first = static_cast<std::size_t>(ts.front());
  out.fit_last = static_cast<std::size_t>(ts.back());
  out.points = ts.size();
  out.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  out.worst_case_rate = contraction_bound(trace.agents());
  return out;
}

}  // namespace hktorus
