#pragma once

#include <algorithm>
#include <cmath>

#include "hktorus/dynamics.hpp"

namespace hktorus {

/// W(t): sum over all ordered pairs (i, j), i = j included, of
/// min(1, delta(x_i, x_j)^2). Lies in [0, n^2].
inline double lyapunov_W(const SystemState& state) {
  const std::size_t n = state.size();
  double w = 0.0;
  for (AgentIndex i = 0; i < n; ++i) {
    for (AgentIndex j = 0; j < n; ++j) {
      const double d = torus_distance(state.positions[i], state.positions[j]);
      w += std::min(1.0, d * d);
    }
  }
  return w;
}

/// Line counterpart of W over every ordered pair of line agents.
inline double line_lyapunov(const LineSystemState& state) {
  double v = 0.0;
  for (double yi : state.positions) {
    for (double yj : state.positions) {
      const double d = yi - yj;
      v += std::min(1.0, d * d);
    }
  }
  return v;
}

}  // namespace hktorus
