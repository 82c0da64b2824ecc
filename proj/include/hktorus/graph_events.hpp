#pragma once

#include <algorithm>
#include <iterator>
#include <vector>

#include "hktorus/dynamics.hpp"

namespace hktorus {

/// Links that appear or disappear between G_t and G_{t+1}.
struct GraphEvent {
  std::size_t t = 0;
  std::vector<Edge> added;
  std::vector<Edge> removed;

  bool empty() const noexcept { return added.empty() && removed.empty(); }
  friend bool operator==(const GraphEvent&, const GraphEvent&) = default;
};

inline GraphEvent diff_graphs(const InfluenceGraph& before, const InfluenceGraph& after,
                              std::size_t t = 0) {
  if (before.size() != after.size()) {
    throw Error(ErrorCode::InvalidState, "cannot diff graphs of different sizes");
  }
  const auto e1 = before.edges();
  const auto e2 = after.edges();
  GraphEvent ev;
  ev.t = t;
  std::set_difference(e2.begin(), e2.end(), e1.begin(), e1.end(), std::back_inserter(ev.added));
  std::set_difference(e1.begin(), e1.end(), e2.begin(), e2.end(), std::back_inserter(ev.removed));
  return ev;
}

}  // namespace hktorus
