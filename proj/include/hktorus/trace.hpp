#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "hktorus/dynamics.hpp"
#include "hktorus/graph_events.hpp"
#include "hktorus/lyapunov.hpp"

namespace hktorus {

/// Observables at time t. `moves[i]` is the distance agent i travelled to
/// reach its time-t position (zero at t = 0); `events` holds the change from
/// G_{t-1} to G_t and is present only when that change is nonempty.
struct TraceRecord {
  std::size_t t = 0;
  std::vector<double> positions;
  std::vector<double> moves;
  double W = 0.0;
  std::uint64_t graph_hash = 0;
  bool cut = false;
  std::optional<GraphEvent> events;

  double max_move() const {
    return moves.empty() ? 0.0 : *std::max_element(moves.begin(), moves.end());
  }

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct Trace {
  CircleParams params;
  double tol_nbr = 0.0;
  std::vector<TraceRecord> records;

  std::size_t agents() const { return records.empty() ? 0 : records.front().positions.size(); }
  std::size_t last_t() const { return records.empty() ? 0 : records.back().t; }

  SystemState state_at(std::size_t k) const {
    const auto& rec = records.at(k);
    return SystemState::make(params, rec.positions, rec.t);
  }

  std::vector<InfluenceGraph> graphs() const {
    std::vector<InfluenceGraph> out;
    out.reserve(records.size());
    for (std::size_t k = 0; k < records.size(); ++k) {
      out.push_back(compute_neighbors(state_at(k), tol_nbr));
    }
    return out;
  }
};

struct RunOptions {
  /// Stop after this many consecutive steps whose largest move is <= stop_eps.
  std::size_t stop_consecutive = 1;
  double tol_nbr = 0.0;
};

inline TraceRecord make_record(const SystemState& state, const InfluenceGraph& graph,
                               std::vector<double> moves) {
  TraceRecord rec;
  rec.t = state.t;
  rec.positions = state.reps();
  rec.moves = std::move(moves);
  rec.W = lyapunov_W(state);
  rec.graph_hash = graph.hash();
  rec.cut = detect_cut(graph).cut;
  return rec;
}

/// Iterates `step` from `initial` for at most `horizon` steps. Deterministic.
inline Trace run(const SystemState& initial, std::size_t horizon, double stop_eps,
                 const RunOptions& opts = {}) {
  if (!(stop_eps >= 0.0)) {
    throw Error(ErrorCode::ConfigInvalid, "stop_eps must be nonnegative");
  }
  Trace trace{initial.params, opts.tol_nbr, {}};
  SystemState state = initial;
  InfluenceGraph graph = compute_neighbors(state, opts.tol_nbr);
  trace.records.push_back(make_record(state, graph, std::vector<double>(state.size(), 0.0)));
  std::size_t quiet = 0;
  for (std::size_t k = 0; k < horizon; ++k) {
    auto [next, moves] = step(state, graph);
    InfluenceGraph next_graph = compute_neighbors(next, opts.tol_nbr);
    TraceRecord rec = make_record(next, next_graph, std::move(moves));
    GraphEvent ev = diff_graphs(graph, next_graph, state.t);
    if (!ev.empty()) rec.events = std::move(ev);
    const bool still = rec.max_move() <= stop_eps;
    trace.records.push_back(std::move(rec));
    state = std::move(next);
    graph = std::move(next_graph);
    quiet = still ? quiet + 1 : 0;
    if (quiet >= std::max<std::size_t>(opts.stop_consecutive, 1)) break;
  }
  return trace;
}

}  // namespace hktorus
