#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "leosim/topology.hpp"

namespace leosim {

enum class ProtocolKind : std::uint8_t { IPv4, IPv6, MPLS, SRv6, SRv6Green };

inline constexpr std::array<ProtocolKind, 5> kAllProtocols = {
    ProtocolKind::IPv4, ProtocolKind::IPv6, ProtocolKind::MPLS, ProtocolKind::SRv6,
    ProtocolKind::SRv6Green};

/// CLI spelling: ipv4, ipv6, mpls, srv6, srv6-green.
std::string to_string(ProtocolKind p);
std::optional<ProtocolKind> parse_protocol(std::string_view name);
bool is_srv6(ProtocolKind p);

struct Path {
  std::vector<NodeId> hops;
  double cost = 0.0;

  bool operator==(const Path&) const = default;
};

struct FlowSpec {
  std::uint32_t flow_id = 0;
  NodeId src;
  NodeId dst;
};

class NoRoute : public std::runtime_error {
 public:
  explicit NoRoute(std::uint32_t flow_id)
      : std::runtime_error("no route for flow " + std::to_string(flow_id)), flow_id_(flow_id) {}
  std::uint32_t flow_id() const { return flow_id_; }

 private:
  std::uint32_t flow_id_;
};

class MalformedHeader : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation tally for the complexity budget: every edge relaxation, every link scored,
/// and log2 of the heap size for every heap push/pop.
struct OpCounter {
  std::uint64_t relaxations = 0;
  std::uint64_t heap_ops_weighted = 0;
  std::uint64_t link_visits = 0;

  std::uint64_t total() const { return relaxations + heap_ops_weighted + link_visits; }
};

/// Weighted undirected graph over the usable links of a snapshot.
///
/// A link is usable if its state is admitted (Active only by default) and its weight is
/// strictly positive; weight 0 is the pruned sentinel, never a free edge. Nodes may be
/// excluded wholesale. Ground stations (the upper endpoint of a ground link) terminate
/// paths but never relay them.
class RoutingGraph {
 public:
  struct Edge {
    NodeId to;
    double weight = 1.0;
    std::uint32_t link_index = 0;
  };

  RoutingGraph() = default;
  RoutingGraph(const TopologySnapshot& snapshot, std::span<const double> link_weights,
               bool admit_low_power = false, std::span<const NodeId> excluded_nodes = {});

  /// Unit weight on every Active link.
  static RoutingGraph unit(const TopologySnapshot& snapshot, bool admit_low_power = false);

  std::size_t node_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t link_slots() const { return link_slots_; }
  std::span<const Edge> edges(NodeId u) const {
    return {edges_.data() + offsets_[u.value], edges_.data() + offsets_[u.value + 1]};
  }
  std::size_t edge_count() const { return edges_.size() / 2; }
  bool unit_weights() const { return unit_weights_; }
  double total_weight() const { return total_weight_; }
  std::optional<double> weight(NodeId a, NodeId b) const;
  bool relays(NodeId u) const { return relay_[u.value] != 0; }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<std::uint8_t> relay_;
  std::vector<Edge> edges_;
  std::size_t link_slots_ = 0;
  bool unit_weights_ = true;
  double total_weight_ = 0.0;
};

/// Single-source shortest paths. `first_hop[d]` is the smallest-id neighbour of the
/// source that starts some minimum-cost path to d; `pred[d]` the smallest-id
/// predecessor of d on a minimum-cost path. -1 marks unreachable.
struct SpfTree {
  NodeId source;
  std::vector<double> dist;
  std::vector<std::int32_t> first_hop;
  std::vector<std::int32_t> pred;

  bool reachable(NodeId d) const { return pred[d.value] >= 0 || d == source; }
  Path path_to(NodeId d) const;
};

/// Dijkstra from `src`. `penalty`, if non-empty, is added per link index.
SpfTree spf_tree(const RoutingGraph& graph, NodeId src, OpCounter* counter = nullptr,
                 std::span<const double> penalty = {});

/// Minimum-weight path to every reachable destination other than `src`.
std::map<NodeId, Path> spf(const RoutingGraph& graph, NodeId src);
std::map<NodeId, Path> spf(const TopologySnapshot& snapshot, std::span<const double> link_weights,
                           NodeId src);

/// Next hop toward one destination for every node: the smallest-id neighbour that lies on
/// a minimum-cost path. Hop-by-hop forwarding along these next hops is loop-free and
/// suffix-consistent.
struct DestinationTree {
  NodeId destination;
  std::vector<double> dist;
  std::vector<std::int32_t> next_hop;
};

DestinationTree destination_tree(const RoutingGraph& graph, NodeId destination);

/// Lazily built per-destination trees over one graph (single-threaded use).
class NextHopTable {
 public:
  explicit NextHopTable(std::shared_ptr<const RoutingGraph> graph);

  const RoutingGraph& graph() const { return *graph_; }
  const DestinationTree& toward(NodeId destination) const;
  std::optional<NodeId> next_hop(NodeId from, NodeId destination) const;
  double distance(NodeId from, NodeId destination) const;
  /// Hop-by-hop walk; nullopt if unreachable.
  std::optional<Path> walk(NodeId from, NodeId destination) const;
  /// True if walking from path[i] toward path[j] reproduces path[i..j] exactly.
  bool walk_matches(std::span<const NodeId> path, std::size_t i, std::size_t j) const;
  void fill_all() const;

 private:
  std::shared_ptr<const RoutingGraph> graph_;
  mutable std::vector<std::unique_ptr<DestinationTree>> trees_;
};

/// Dense all-pairs next hops: row u, column d. -1 = unreachable, u == d maps to itself.
struct AllPairsNextHops {
  std::size_t node_count = 0;
  std::vector<std::int32_t> next;

  std::int32_t at(NodeId u, NodeId d) const { return next[u.value * node_count + d.value]; }
};

/// One Dijkstra per source, parallel over sources.
AllPairsNextHops all_pairs_next_hops(const RoutingGraph& graph);
/// Single-threaded reference.
AllPairsNextHops all_pairs_next_hops_serial(const RoutingGraph& graph);

struct Fib {
  NodeId owner;
  std::map<NodeId, NodeId> entries;  // destination -> next hop
};

Fib fib_of(const NextHopTable& table, NodeId owner);

inline constexpr std::uint32_t kFirstUnreservedLabel = 16;

struct LabelAction {
  std::uint32_t out_label = 0;
  NodeId next_hop;
  bool pop = false;
};

struct LabelMap {
  NodeId owner;
  std::map<std::uint32_t, LabelAction> entries;
};

struct IngressStack {
  NodeId ingress;
  std::vector<std::uint32_t> labels;
  NodeId next_hop;
};

struct MplsDecision {
  enum class Kind : std::uint8_t { Swap, Pop, NoLabelEntry };
  Kind kind = Kind::NoLabelEntry;
  std::uint32_t out_label = 0;
  NodeId next_hop;
};

MplsDecision mpls_forward(const LabelMap& map, std::uint32_t in_label);

/// Node SIDs in visiting order, last = egress. The active SID is
/// sids[size - segments_left - 1]; segments_left == size means "still at the source".
struct SegmentList {
  std::vector<NodeId> sids;
  int segments_left = 0;

  int waypoints() const { return static_cast<int>(sids.size()) - 1; }
  NodeId active() const { return sids.at(sids.size() - segments_left - 1); }
  bool operator==(const SegmentList&) const = default;
};

struct Srv6Step {
  NodeId next_destination;
  SegmentList updated;
  bool delivered_locally = false;
};

/// SRH processing at a segment endpoint (or at the source when segments_left == size):
/// decrement segments_left and retarget at the new active SID; deliver locally at 0.
Srv6Step srv6_process(const SegmentList& seglist, NodeId current_node);

/// Greedy node-SID encoding of `path` under `table`: each SID is the farthest node whose
/// hop-by-hop walk reproduces the path so far. With `ensure_waypoint`, a path encodable by
/// its egress alone gets one waypoint: the farthest consistent interior node.
SegmentList encode_segments(std::span<const NodeId> path, const NextHopTable& table,
                            bool ensure_waypoint);

/// Path visited by a packet that starts at `src` and follows `seglist` under `table`.
std::optional<Path> expand_segments(NodeId src, const SegmentList& seglist,
                                    const NextHopTable& table);

struct SrPolicy {
  SegmentList primary;
  Path primary_path;
  std::optional<SegmentList> backup;
  std::optional<Path> backup_path;
  int fallback_tier = 0;  // 0 = primary graph, 1 = unit minus fallback_excluded, 2 = unit
};

/// Fewest links that are lost before the next refresh, then fewest ISLs shared with the
/// primary, then minimum weight. Empty if the only path is the primary itself.
std::optional<Path> disjoint_backup(const RoutingGraph& graph, const TopologySnapshot& snapshot,
                                    const Path& primary, NodeId src, NodeId dst,
                                    OpCounter* counter = nullptr);

/// Per-protocol routing artifacts computed from one snapshot.
struct RouteSet {
  ProtocolKind protocol = ProtocolKind::IPv4;
  double computed_at_s = 0.0;

  // IPv4 / IPv6: hop-by-hop FIBs of every node.
  std::shared_ptr<const NextHopTable> fibs;

  // MPLS.
  std::vector<LabelMap> label_maps;                   // indexed by node
  std::map<std::uint32_t, IngressStack> ingress_stacks;  // by flow id; no labels = plain IP

  // SRv6 / SRv6Green.
  std::map<std::uint32_t, SrPolicy> policies;  // by flow id

  std::vector<std::uint32_t> unrouted;  // flows with no path in the admitted graph
};

/// Label of flow f on every LSP hop (per-flow label space, stable across refreshes).
inline std::uint32_t flow_label(std::uint32_t flow_id) { return kFirstUnreservedLabel + flow_id; }

struct RouteOptions {
  /// Link weights for SPF (indexed by snapshot link); empty = unit weights.
  std::span<const double> link_weights;
  /// Nodes removed from the primary graph.
  std::span<const NodeId> excluded_nodes;
  /// If a flow is disconnected in the primary graph, retry with unit weights over Active
  /// and LowPower links minus `fallback_excluded`, then over all of them.
  bool unit_fallback = false;
  std::span<const NodeId> fallback_excluded;
};

/// Builds the protocol's RouteSet. Flows without any path are listed in `unrouted`.
RouteSet build_routeset(const TopologySnapshot& snapshot, ProtocolKind protocol,
                        std::span<const FlowSpec> flows, const RouteOptions& options = {});

/// Same as build_routeset, but a disconnected flow is an error.
RouteSet compute_routeset(const TopologySnapshot& snapshot, ProtocolKind protocol,
                          std::span<const FlowSpec> flows, std::span<const double> link_weights = {});

/// Hops a packet of `flow` traverses under the route set (primary path for SRv6).
std::optional<Path> hop_sequence(const RouteSet& routes, const FlowSpec& flow);

/// Header model: IPv4 20 B, IPv6 40 B, MPLS 40 + 4 B per label, SRv6 40 + 8 + 16 B per
/// waypoint SID (the egress rides in the destination address).
int header_bytes(ProtocolKind protocol, int srv6_waypoints = 1, int mpls_labels = 1);

struct HeaderModel {
  int header_bytes = 0;
  double overhead_ratio = 0.0;  // header / (header + payload)
};

/// Header for a packet of `payload_bytes`. SRv6 variants carry the policy's waypoints (one
/// by default); an engaged backup appends one SID.
HeaderModel encapsulate(ProtocolKind protocol, int payload_bytes, const SrPolicy* policy = nullptr,
                        bool backup_engaged = false);

}  // namespace leosim
