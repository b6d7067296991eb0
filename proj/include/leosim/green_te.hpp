#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "leosim/routing.hpp"

namespace leosim {

struct GreenParams {
  double cpu_th_pct = 80.0;
  double idle_cpu_pct = 10.0;
  double idle_time_s = 600.0;
  double baseline = 100.0;

  /// Human-readable violations; empty if valid.
  std::vector<std::string> violations() const;
};

/// Per-link weights indexed like TopologySnapshot::links(). Weight 0 = pruned.
struct WeightedLinks {
  std::vector<double> weights;
  std::set<NodeId> overloaded;
};

/// weight = baseline - max(endpoint cpu); 0 when either endpoint exceeds cpu_th_pct.
WeightedLinks calculate_weights(const TopologySnapshot& snapshot, const GreenParams& params,
                                OpCounter* counter = nullptr);

struct IdleTracker {
  std::map<NodeId, double> below_since;

  void reset(NodeId node) { below_since.erase(node); }
};

/// Feeds one round of readings (taken at time t) into the tracker and returns the awake
/// satellites (ids below `satellite_count`) whose CPU has stayed under idle_cpu_pct for at
/// least idle_time_s. Nodes already in low-power mode are never returned.
std::vector<NodeId> update_idle(IdleTracker& tracker, std::span<const NodeResources> resources,
                                double t, const GreenParams& params, std::size_t satellite_count);

struct GreenRouting {
  RouteSet routes;
  WeightedLinks weights;
  /// Snapshot the routes were computed on: the input with woken nodes' links re-activated.
  TopologySnapshot snapshot;
  /// Low-power nodes that some flow had to be routed through.
  std::vector<NodeId> woken;
};

/// Weighted SRv6 routes. Overloaded links and low-power nodes are pruned; a flow left
/// disconnected falls back to unit weights (overloaded nodes still avoided if possible),
/// and low-power nodes on such a fallback path are woken before recomputing.
GreenRouting green_routes(const TopologySnapshot& snapshot, std::span<const FlowSpec> flows,
                          const GreenParams& params, OpCounter* counter = nullptr);

}  // namespace leosim
