#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hktorus/error.hpp"
#include "hktorus/torus.hpp"

namespace hktorus {

/// Agents are indexed 0..n-1 in the library; files and reports use 1-based
/// labels.
using AgentIndex = std::size_t;
using Edge = std::pair<AgentIndex, AgentIndex>;

/// Positions of all agents at one time step.
///
/// At t = 0 the agents must be labeled in nondecreasing order of phi; the
/// dynamics preserves the circular order afterwards but not the phi order.
struct SystemState {
  std::size_t t = 0;
  std::vector<TorusPoint> positions;
  CircleParams params;

  std::size_t size() const noexcept { return positions.size(); }

  static SystemState make(const CircleParams& params, std::span<const double> xs,
                          std::size_t t = 0) {
    if (xs.empty()) {
      throw Error(ErrorCode::InvalidState, "a system needs at least one agent");
    }
    SystemState s{t, {}, params};
    s.positions.reserve(xs.size());
    for (double x : xs) s.positions.push_back(canonicalize(x, params.p));
    if (t == 0) {
      for (std::size_t i = 1; i < s.positions.size(); ++i) {
        if (phi(s.positions[i]) < phi(s.positions[i - 1])) {
          throw Error(ErrorCode::InvalidState,
                      "initial positions must be sorted by phi (agent " +
                          std::to_string(i + 1) + " precedes agent " + std::to_string(i) + ")");
        }
      }
    }
    return s;
  }

  /// Sorts the inputs by phi and relabels, then builds a t = 0 state.
  static SystemState make_relabeled(const CircleParams& params, std::span<const double> xs) {
    std::vector<double> phis;
    phis.reserve(xs.size());
    for (double x : xs) phis.push_back(phi(canonicalize(x, params.p)));
    std::sort(phis.begin(), phis.end());
    return make(params, phis, 0);
  }

  std::vector<double> reps() const {
    std::vector<double> out;
    out.reserve(positions.size());
    for (const auto& x : positions) out.push_back(x.rep());
    return out;
  }
};

/// Neighborhood of one agent.
///
/// `ell` and `r` are the ends of the agent's neighbor window in unrolled index
/// space (0-based, so ell may be negative and r may exceed n-1): the window
/// ell..r taken mod n lists N_i in circular order.
struct Neighborhood {
  std::vector<AgentIndex> all;
  std::vector<AgentIndex> left;
  std::vector<AgentIndex> right;
  std::ptrdiff_t ell = 0;
  std::ptrdiff_t r = 0;

  bool contains(AgentIndex j) const {
    return std::binary_search(all.begin(), all.end(), j);
  }
  bool has_left(AgentIndex j) const {
    return std::binary_search(left.begin(), left.end(), j);
  }
  bool has_right(AgentIndex j) const {
    return std::binary_search(right.begin(), right.end(), j);
  }
};

class InfluenceGraph {
 public:
  InfluenceGraph() = default;
  explicit InfluenceGraph(std::vector<Neighborhood> agents) : agents_(std::move(agents)) {}

  std::size_t size() const noexcept { return agents_.size(); }
  const Neighborhood& operator[](AgentIndex i) const { return agents_[i]; }
  const std::vector<Neighborhood>& agents() const noexcept { return agents_; }

  /// Ordered pairs (i, j), i != j, with j in N_i; sorted.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (AgentIndex i = 0; i < agents_.size(); ++i) {
      for (AgentIndex j : agents_[i].all) {
        if (j != i) out.emplace_back(i, j);
      }
    }
    return out;
  }

  /// FNV-1a over the sorted edge list.
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
      for (int b = 0; b < 8; ++b) {
        h ^= (v >> (8 * b)) & 0xffU;
        h *= 0x100000001b3ULL;
      }
    };
    mix(agents_.size());
    for (const auto& [i, j] : edges()) {
      mix(i);
      mix(j);
    }
    return h;
  }

  bool same_edges(const InfluenceGraph& other) const {
    if (size() != other.size()) return false;
    for (AgentIndex i = 0; i < size(); ++i) {
      if (agents_[i].all != other.agents_[i].all) return false;
    }
    return true;
  }

 private:
  std::vector<Neighborhood> agents_;
};

/// Builds N_i, L_i, R_i for every agent. Membership uses the closed window
/// [-r, r]; `tol_nbr` widens it to r + tol_nbr.
inline InfluenceGraph compute_neighbors(const SystemState& state, double tol_nbr = 0.0) {
  const std::size_t n = state.size();
  const double reach = state.params.r + tol_nbr;
  std::vector<Neighborhood> hoods(n);
  for (AgentIndex i = 0; i < n; ++i) {
    auto& h = hoods[i];
    const auto& xi = state.positions[i];
    for (AgentIndex j = 0; j < n; ++j) {
      const auto& xj = state.positions[j];
      const double fwd = torus_vect(xi, xj);
      const double bwd = torus_vect(xj, xi);
      if (fwd >= -reach && fwd <= reach) h.all.push_back(j);
      if (fwd >= 0.0 && fwd <= reach) h.right.push_back(j);
      if (bwd >= 0.0 && bwd <= reach) h.left.push_back(j);
    }
    // Window ends: walk the circular order outward from i while still in N_i.
    std::size_t covered = 1;
    std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(i);
    while (covered < n && h.contains((static_cast<std::size_t>(hi) + 1) % n)) {
      ++hi;
      ++covered;
    }
    std::ptrdiff_t lo = static_cast<std::ptrdiff_t>(i);
    while (covered < n) {
      const auto prev = static_cast<std::size_t>(((lo - 1) % static_cast<std::ptrdiff_t>(n) +
                                                  static_cast<std::ptrdiff_t>(n)) %
                                                 static_cast<std::ptrdiff_t>(n));
      if (!h.contains(prev)) break;
      --lo;
      ++covered;
    }
    h.ell = lo;
    h.r = hi;
  }
  return InfluenceGraph(std::move(hoods));
}

struct StepResult {
  SystemState next;
  std::vector<double> moves;
};

/// One synchronous HK update using the neighbor sets in `graph` (taken at
/// state.t).
inline StepResult step(const SystemState& state, const InfluenceGraph& graph) {
  const std::size_t n = state.size();
  StepResult out{SystemState{state.t + 1, {}, state.params}, std::vector<double>(n, 0.0)};
  out.next.positions.reserve(n);
  for (AgentIndex i = 0; i < n; ++i) {
    const auto& xi = state.positions[i];
    const auto& nbrs = graph[i].all;
    double sum = 0.0;
    for (AgentIndex j : nbrs) sum += torus_vect(xi, state.positions[j]);
    const double shift = sum / static_cast<double>(nbrs.size());
    out.next.positions.push_back(canonicalize(xi.rep() + shift, state.params.p));
    out.moves[i] = torus_distance(xi, out.next.positions.back());
  }
  return out;
}

inline StepResult step(const SystemState& state, double tol_nbr = 0.0) {
  return step(state, compute_neighbors(state, tol_nbr));
}

struct CutResult {
  bool cut = false;
  std::optional<AgentIndex> witness;
};

/// A cut is a consecutive pair (i, i+1 mod n) with i+1 outside R_i. A system
/// whose agents have all merged into one point (including n = 1) is also
/// reported as cut, with witness 0: its gaps no longer wind around the circle.
inline CutResult detect_cut(const InfluenceGraph& graph) {
  const std::size_t n = graph.size();
  for (AgentIndex i = 0; i < n; ++i) {
    if (!graph[i].has_right((i + 1) % n)) return {true, i};
  }
  // Agents in both L_0 and R_0 sit on top of agent 0 (r < p/2).
  const auto& h0 = graph[0];
  std::size_t colocated = 0;
  for (AgentIndex j : h0.left) {
    if (h0.has_right(j)) ++colocated;
  }
  if (colocated == n) return {true, 0};
  return {false, std::nullopt};
}

/// Maximal runs of consecutive agents (in circular order) whose neighboring
/// members are within `tol_merge` of each other.
struct MergePartition {
  std::vector<std::vector<AgentIndex>> classes;
  std::vector<std::size_t> class_of;

  bool merged(AgentIndex i, AgentIndex j) const { return class_of[i] == class_of[j]; }
};

inline MergePartition detect_merges(const SystemState& state, double tol_merge) {
  const std::size_t n = state.size();
  MergePartition out;
  out.class_of.assign(n, 0);
  std::vector<bool> linked(n);  // linked[i]: i and i+1 (mod n) merged
  std::size_t breaks = 0;
  for (AgentIndex i = 0; i < n; ++i) {
    linked[i] = torus_distance(state.positions[i], state.positions[(i + 1) % n]) <= tol_merge;
    if (!linked[i]) ++breaks;
  }
  if (breaks == 0 || n == 1) {
    std::vector<AgentIndex> all(n);
    std::iota(all.begin(), all.end(), AgentIndex{0});
    out.classes.push_back(std::move(all));
    return out;
  }
  // Start right after a break so no class straddles the scan boundary.
  AgentIndex start = 0;
  while (linked[(start + n - 1) % n]) ++start;
  std::vector<AgentIndex> current;
  for (std::size_t k = 0; k < n; ++k) {
    const AgentIndex i = (start + k) % n;
    current.push_back(i);
    if (!linked[i]) {
      out.classes.push_back(std::move(current));
      current.clear();
    }
  }
  std::sort(out.classes.begin(), out.classes.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  for (std::size_t c = 0; c < out.classes.size(); ++c) {
    for (AgentIndex i : out.classes[c]) out.class_of[i] = c;
  }
  return out;
}

/// Classical HK system on the real line. Labels need not be sorted: the line
/// rule is equivariant under relabeling.
struct LineSystemState {
  std::size_t t = 0;
  std::vector<double> positions;
  double radius = 1.0;
};

inline LineSystemState line_step(const LineSystemState& state) {
  const std::size_t m = state.positions.size();
  LineSystemState out{state.t + 1, std::vector<double>(m), state.radius};
  for (std::size_t i = 0; i < m; ++i) {
    const double yi = state.positions[i];
    double sum = 0.0;
    std::size_t count = 0;
    for (double yj : state.positions) {
      if (std::abs(yi - yj) <= state.radius) {
        sum += yj;
        ++count;
      }
    }
    out.positions[i] = sum / static_cast<double>(count);
  }
  return out;
}

/// N copies of the circle laid end to end: agent k*n + i sits at rep_i + k*p.
inline LineSystemState unroll(const SystemState& state, int copies) {
  if (copies < 4) {
    throw Error(ErrorCode::InvalidN, "unrolling needs N >= 4, got " + std::to_string(copies));
  }
  const std::size_t n = state.size();
  LineSystemState out{state.t, {}, state.params.r};
  out.positions.reserve(n * static_cast<std::size_t>(copies));
  for (int k = 0; k < copies; ++k) {
    for (AgentIndex i = 0; i < n; ++i) {
      out.positions.push_back(state.positions[i].rep() + k * state.params.p);
    }
  }
  return out;
}

}  // namespace hktorus
