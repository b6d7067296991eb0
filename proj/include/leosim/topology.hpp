#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "leosim/constellation.hpp"

namespace leosim {

enum class LinkKind : std::uint8_t { ISL, GroundLink };

/// Active links carry traffic. Inactive means geometric loss of visibility;
/// LowPower means an endpoint was put to sleep by the green controller.
enum class LinkState : std::uint8_t { Active, Inactive, LowPower };

std::string to_string(LinkKind kind);
std::string to_string(LinkState state);

inline constexpr double kDefaultLinkCapacityBps = 20'000'000.0;

struct Link {
  NodeId endpoint_a;  // endpoint_a < endpoint_b
  NodeId endpoint_b;
  LinkKind kind = LinkKind::ISL;
  double capacity_bps = kDefaultLinkCapacityBps;
  LinkState state = LinkState::Active;
  double length_km = 0.0;
  /// First probe instant inside the refresh period at which the pair lost line of sight;
  /// +inf if the link survives the whole period.
  double lost_at_s = std::numeric_limits<double>::infinity();

  bool joins(NodeId a, NodeId b) const {
    return (endpoint_a == a && endpoint_b == b) || (endpoint_a == b && endpoint_b == a);
  }
  NodeId other(NodeId n) const { return n == endpoint_a ? endpoint_b : endpoint_a; }
};

struct NodeResources {
  NodeId node_id;
  double cpu_pct = 0.0;
  double mem_bytes = 0.0;
  bool low_power = false;
  std::optional<double> idle_since_s;
};

struct TopologyParams {
  double refresh_s = 10.0;
  double link_capacity_bps = kDefaultLinkCapacityBps;
  /// Resolution of the in-period line-of-sight probe that sets Link::lost_at_s.
  double loss_probe_s = 1.0;
};

/// Network graph frozen at one refresh instant. Immutable once built.
class TopologySnapshot {
 public:
  struct Adjacent {
    NodeId neighbor;
    std::size_t link_index = 0;
  };

  TopologySnapshot() = default;
  TopologySnapshot(double t_s, std::size_t node_count, std::vector<Link> links,
                   std::vector<NodeResources> resources);

  double t_s() const { return t_s_; }
  std::size_t node_count() const { return node_count_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<NodeResources>& resources() const { return resources_; }
  const NodeResources& resources_of(NodeId id) const { return resources_.at(id.value); }

  /// All links incident to `node` (any state), sorted by neighbour id.
  const std::vector<Adjacent>& adjacency(NodeId node) const { return adjacency_.at(node.value); }
  std::optional<std::size_t> link_index(NodeId a, NodeId b) const {
    if (a.value >= node_count_ || b.value >= node_count_) return std::nullopt;
    const auto i = index_[static_cast<std::size_t>(a.value) * node_count_ + b.value];
    if (i < 0) return std::nullopt;
    return static_cast<std::size_t>(i);
  }

  std::size_t active_link_count() const;

 private:
  double t_s_ = 0.0;
  std::size_t node_count_ = 0;
  std::vector<Link> links_;
  std::vector<NodeResources> resources_;
  std::vector<std::vector<Adjacent>> adjacency_;
  std::vector<std::int32_t> index_;  // node_count^2, -1 where no link
};

/// Up to four same-shell neighbours of `sat` at time t: previous and next slot in its
/// plane (always), plus the same slot in each adjacent plane when visible. No links
/// across a Walker-star seam and none between shells.
std::vector<NodeId> grid_isl_neighbors(const Constellation& constellation, NodeId sat, double t);

/// Cold-start resources: every node at 0 % CPU, awake.
std::vector<NodeResources> initial_resources(std::size_t node_count);

/// Snapshot at time t: every grid ISL visible at t and every visible ground-satellite
/// pair. A link is Active unless one of its endpoints is in low-power mode.
TopologySnapshot build_snapshot(const Constellation& constellation, double t,
                                std::vector<NodeResources> resources,
                                const TopologyParams& params = {});

/// Refresh instants 0, refresh, 2*refresh, ... <= duration: floor(duration/refresh) + 1.
std::size_t snapshot_count(double duration_s, double refresh_s);

/// Debug dump, one link per line: `t a b kind state`.
std::string export_snapshot(const TopologySnapshot& snapshot, const Constellation& constellation);

}  // namespace leosim
