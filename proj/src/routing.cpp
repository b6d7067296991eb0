#include "leosim/routing.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>

namespace leosim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool same_cost(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }

std::uint64_t heap_cost(std::size_t size) { return std::bit_width(size + 1); }

using HeapItem = std::pair<double, std::uint32_t>;
using MinHeap = std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>>;

}  // namespace

std::string to_string(ProtocolKind p) {
  switch (p) {
    case ProtocolKind::IPv4: return "ipv4";
    case ProtocolKind::IPv6: return "ipv6";
    case ProtocolKind::MPLS: return "mpls";
    case ProtocolKind::SRv6: return "srv6";
    case ProtocolKind::SRv6Green: return "srv6-green";
  }
  return "unknown";
}

std::optional<ProtocolKind> parse_protocol(std::string_view name) {
  for (auto p : kAllProtocols) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

bool is_srv6(ProtocolKind p) { return p == ProtocolKind::SRv6 || p == ProtocolKind::SRv6Green; }

RoutingGraph::RoutingGraph(const TopologySnapshot& snapshot, std::span<const double> link_weights,
                           bool admit_low_power, std::span<const NodeId> excluded_nodes) {
  const std::size_t n = snapshot.node_count();
  const auto& links = snapshot.links();
  if (!link_weights.empty() && link_weights.size() != links.size()) {
    throw std::invalid_argument("link weight count does not match the snapshot");
  }
  link_slots_ = links.size();
  relay_.assign(n, 1);
  std::vector<std::uint8_t> excluded(n, 0);
  for (auto id : excluded_nodes) excluded.at(id.value) = 1;
  for (const auto& l : links) {
    if (l.kind == LinkKind::GroundLink) relay_[l.endpoint_b.value] = 0;
  }

  auto usable = [&](std::size_t i) {
    const auto& l = links[i];
    if (l.state == LinkState::Inactive) return false;
    if (l.state == LinkState::LowPower && !admit_low_power) return false;
    if (excluded[l.endpoint_a.value] || excluded[l.endpoint_b.value]) return false;
    const double w = link_weights.empty() ? 1.0 : link_weights[i];
    return w > 0.0 && std::isfinite(w);
  };

  offsets_.assign(n + 1, 0);
  for (std::size_t u = 0; u < n; ++u) {
    offsets_[u + 1] = offsets_[u];
    for (const auto& adj : snapshot.adjacency(NodeId{static_cast<std::uint16_t>(u)})) {
      if (usable(adj.link_index)) ++offsets_[u + 1];
    }
  }
  edges_.reserve(offsets_[n]);
  for (std::size_t u = 0; u < n; ++u) {
    for (const auto& adj : snapshot.adjacency(NodeId{static_cast<std::uint16_t>(u)})) {
      if (!usable(adj.link_index)) continue;
      const double w = link_weights.empty() ? 1.0 : link_weights[adj.link_index];
      edges_.push_back({adj.neighbor, w, static_cast<std::uint32_t>(adj.link_index)});
      if (w != 1.0) unit_weights_ = false;
      if (static_cast<std::size_t>(adj.neighbor.value) > u) total_weight_ += w;
    }
  }
}

RoutingGraph RoutingGraph::unit(const TopologySnapshot& snapshot, bool admit_low_power) {
  return RoutingGraph(snapshot, {}, admit_low_power);
}

std::optional<double> RoutingGraph::weight(NodeId a, NodeId b) const {
  for (const auto& e : edges(a)) {
    if (e.to == b) return e.weight;
  }
  return std::nullopt;
}

Path SpfTree::path_to(NodeId d) const {
  Path p;
  if (!reachable(d)) return p;
  for (std::int32_t v = d.value; v >= 0; v = pred[v]) {
    p.hops.push_back(NodeId{static_cast<std::uint16_t>(v)});
    if (v == source.value) break;
  }
  std::reverse(p.hops.begin(), p.hops.end());
  p.cost = dist[d.value];
  return p;
}

SpfTree spf_tree(const RoutingGraph& graph, NodeId src, OpCounter* counter,
                 std::span<const double> penalty) {
  const std::size_t n = graph.node_count();
  SpfTree tree;
  tree.source = src;
  tree.dist.assign(n, kInf);
  tree.first_hop.assign(n, -1);
  tree.pred.assign(n, -1);
  std::vector<std::uint8_t> done(n, 0);

  MinHeap heap;
  tree.dist[src.value] = 0.0;
  heap.push({0.0, src.value});
  if (counter) counter->heap_ops_weighted += heap_cost(heap.size());

  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    if (counter) counter->heap_ops_weighted += heap_cost(heap.size());
    heap.pop();
    if (done[u]) continue;
    done[u] = 1;
    const NodeId un{static_cast<std::uint16_t>(u)};
    if (un != src && !graph.relays(un)) continue;
    for (const auto& e : graph.edges(un)) {
      if (counter) ++counter->relaxations;
      const std::uint32_t v = e.to.value;
      if (done[v]) continue;
      double w = e.weight;
      if (!penalty.empty()) w += penalty[e.link_index];
      const double nd = d + w;
      const std::int32_t fh = un == src ? static_cast<std::int32_t>(v) : tree.first_hop[u];
      if (nd < tree.dist[v] && !same_cost(nd, tree.dist[v])) {
        tree.dist[v] = nd;
        tree.pred[v] = static_cast<std::int32_t>(u);
        tree.first_hop[v] = fh;
        heap.push({nd, v});
        if (counter) counter->heap_ops_weighted += heap_cost(heap.size());
      } else if (same_cost(nd, tree.dist[v])) {
        tree.pred[v] = std::min(tree.pred[v], static_cast<std::int32_t>(u));
        tree.first_hop[v] = std::min(tree.first_hop[v], fh);
      }
    }
  }
  return tree;
}

std::map<NodeId, Path> spf(const RoutingGraph& graph, NodeId src) {
  const auto tree = spf_tree(graph, src);
  std::map<NodeId, Path> out;
  for (std::size_t v = 0; v < graph.node_count(); ++v) {
    const NodeId d{static_cast<std::uint16_t>(v)};
    if (d == src || !tree.reachable(d)) continue;
    out.emplace(d, tree.path_to(d));
  }
  return out;
}

std::map<NodeId, Path> spf(const TopologySnapshot& snapshot, std::span<const double> link_weights,
                           NodeId src) {
  return spf(RoutingGraph(snapshot, link_weights), src);
}

DestinationTree destination_tree(const RoutingGraph& graph, NodeId destination) {
  const std::size_t n = graph.node_count();
  DestinationTree tree;
  tree.destination = destination;
  tree.dist.assign(n, kInf);
  tree.next_hop.assign(n, -1);
  tree.dist[destination.value] = 0.0;

  if (graph.unit_weights()) {
    std::deque<std::uint32_t> queue{destination.value};
    while (!queue.empty()) {
      const auto u = queue.front();
      queue.pop_front();
      const NodeId un{static_cast<std::uint16_t>(u)};
      if (un != destination && !graph.relays(un)) continue;
      for (const auto& e : graph.edges(un)) {
        if (std::isinf(tree.dist[e.to.value])) {
          tree.dist[e.to.value] = tree.dist[u] + 1.0;
          queue.push_back(e.to.value);
        }
      }
    }
  } else {
    std::vector<std::uint8_t> done(n, 0);
    MinHeap heap;
    heap.push({0.0, destination.value});
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (done[u]) continue;
      done[u] = 1;
      const NodeId un{static_cast<std::uint16_t>(u)};
      if (un != destination && !graph.relays(un)) continue;
      for (const auto& e : graph.edges(un)) {
        const double nd = d + e.weight;
        if (nd < tree.dist[e.to.value] && !same_cost(nd, tree.dist[e.to.value])) {
          tree.dist[e.to.value] = nd;
          heap.push({nd, e.to.value});
        }
      }
    }
  }

  // Smallest-id neighbour that continues a minimum-cost path. A node that does not relay
  // can still start a path, but never continue one.
  for (std::size_t u = 0; u < n; ++u) {
    if (u == destination.value || std::isinf(tree.dist[u])) continue;
    for (const auto& e : graph.edges(NodeId{static_cast<std::uint16_t>(u)})) {
      const auto v = e.to.value;
      if (std::isinf(tree.dist[v])) continue;
      if (e.to != destination && !graph.relays(e.to)) continue;
      if (same_cost(tree.dist[v] + e.weight, tree.dist[u])) {
        tree.next_hop[u] = static_cast<std::int32_t>(v);
        break;
      }
    }
  }
  tree.next_hop[destination.value] = destination.value;
  return tree;
}

NextHopTable::NextHopTable(std::shared_ptr<const RoutingGraph> graph)
    : graph_(std::move(graph)), trees_(graph_->node_count()) {}

const DestinationTree& NextHopTable::toward(NodeId destination) const {
  auto& slot = trees_.at(destination.value);
  if (!slot) slot = std::make_unique<DestinationTree>(destination_tree(*graph_, destination));
  return *slot;
}

std::optional<NodeId> NextHopTable::next_hop(NodeId from, NodeId destination) const {
  const auto nh = toward(destination).next_hop[from.value];
  if (nh < 0) return std::nullopt;
  return NodeId{static_cast<std::uint16_t>(nh)};
}

double NextHopTable::distance(NodeId from, NodeId destination) const {
  return toward(destination).dist[from.value];
}

std::optional<Path> NextHopTable::walk(NodeId from, NodeId destination) const {
  const auto& tree = toward(destination);
  if (tree.next_hop[from.value] < 0) return std::nullopt;
  Path p;
  p.cost = tree.dist[from.value];
  NodeId cur = from;
  p.hops.push_back(cur);
  while (cur != destination) {
    cur = NodeId{static_cast<std::uint16_t>(tree.next_hop[cur.value])};
    p.hops.push_back(cur);
  }
  return p;
}

bool NextHopTable::walk_matches(std::span<const NodeId> path, std::size_t i, std::size_t j) const {
  const auto& tree = toward(path[j]);
  for (std::size_t k = i; k < j; ++k) {
    if (tree.next_hop[path[k].value] != path[k + 1].value) return false;
  }
  return true;
}

void NextHopTable::fill_all() const {
  const auto n = static_cast<std::int64_t>(trees_.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t d = 0; d < n; ++d) {
    if (!trees_[d]) {
      trees_[d] = std::make_unique<DestinationTree>(
          destination_tree(*graph_, NodeId{static_cast<std::uint16_t>(d)}));
    }
  }
}

namespace {

void fill_column(const RoutingGraph& graph, AllPairsNextHops& out, std::size_t d) {
  const auto tree = destination_tree(graph, NodeId{static_cast<std::uint16_t>(d)});
  for (std::size_t u = 0; u < out.node_count; ++u) out.next[u * out.node_count + d] = tree.next_hop[u];
}

}  // namespace

AllPairsNextHops all_pairs_next_hops(const RoutingGraph& graph) {
  AllPairsNextHops out;
  out.node_count = graph.node_count();
  out.next.assign(out.node_count * out.node_count, -1);
  const auto n = static_cast<std::int64_t>(out.node_count);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t d = 0; d < n; ++d) fill_column(graph, out, static_cast<std::size_t>(d));
  return out;
}

AllPairsNextHops all_pairs_next_hops_serial(const RoutingGraph& graph) {
  AllPairsNextHops out;
  out.node_count = graph.node_count();
  out.next.assign(out.node_count * out.node_count, -1);
  for (std::size_t d = 0; d < out.node_count; ++d) fill_column(graph, out, d);
  return out;
}

Fib fib_of(const NextHopTable& table, NodeId owner) {
  Fib fib{owner, {}};
  for (std::size_t d = 0; d < table.graph().node_count(); ++d) {
    const NodeId dst{static_cast<std::uint16_t>(d)};
    if (dst == owner) continue;
    if (auto nh = table.next_hop(owner, dst)) fib.entries.emplace(dst, *nh);
  }
  return fib;
}

MplsDecision mpls_forward(const LabelMap& map, std::uint32_t in_label) {
  auto it = map.entries.find(in_label);
  if (it == map.entries.end()) return {};
  const auto& a = it->second;
  if (a.pop) return {MplsDecision::Kind::Pop, 0, a.next_hop};
  return {MplsDecision::Kind::Swap, a.out_label, a.next_hop};
}

Srv6Step srv6_process(const SegmentList& seglist, NodeId current_node) {
  const int len = static_cast<int>(seglist.sids.size());
  if (len < 1) throw MalformedHeader("empty segment list");
  if (seglist.segments_left < 0 || seglist.segments_left > len) {
    throw MalformedHeader("segments_left " + std::to_string(seglist.segments_left) +
                          " outside [0, " + std::to_string(len) + "]");
  }
  Srv6Step step{current_node, seglist, false};
  if (seglist.segments_left == 0) {
    step.delivered_locally = true;
    return step;
  }
  step.updated.segments_left = seglist.segments_left - 1;
  step.next_destination = step.updated.active();
  return step;
}

SegmentList encode_segments(std::span<const NodeId> path, const NextHopTable& table,
                            bool ensure_waypoint) {
  if (path.size() < 2) throw std::invalid_argument("path needs at least two hops");
  const std::size_t k = path.size() - 1;
  SegmentList sl;
  std::size_t cur = 0;
  while (cur < k) {
    std::size_t best = cur + 1;  // falls back to the adjacent node when nothing matches
    for (std::size_t j = k; j > cur; --j) {
      if (table.walk_matches(path, cur, j)) {
        best = j;
        break;
      }
    }
    sl.sids.push_back(path[best]);
    cur = best;
  }
  if (ensure_waypoint && sl.sids.size() == 1 && k >= 2) {
    sl.sids.insert(sl.sids.begin(), path[k - 1]);
  }
  sl.segments_left = static_cast<int>(sl.sids.size());
  return sl;
}

std::optional<Path> expand_segments(NodeId src, const SegmentList& seglist,
                                    const NextHopTable& table) {
  Path out;
  out.hops.push_back(src);
  NodeId cur = src;
  for (auto sid : seglist.sids) {
    auto leg = table.walk(cur, sid);
    if (!leg) return std::nullopt;
    out.hops.insert(out.hops.end(), leg->hops.begin() + 1, leg->hops.end());
    out.cost += leg->cost;
    cur = sid;
  }
  return out;
}

namespace {

double path_weight(const RoutingGraph& graph, const std::vector<NodeId>& hops) {
  double w = 0.0;
  for (std::size_t i = 0; i + 1 < hops.size(); ++i) w += graph.weight(hops[i], hops[i + 1]).value_or(kInf);
  return w;
}

std::size_t doomed_links(const TopologySnapshot& snapshot, const std::vector<NodeId>& hops) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < hops.size(); ++i) {
    const auto idx = snapshot.link_index(hops[i], hops[i + 1]);
    n += !idx || std::isfinite(snapshot.links()[*idx].lost_at_s);
  }
  return n;
}

bool has_repeat(std::vector<NodeId> hops) {
  std::sort(hops.begin(), hops.end());
  return std::adjacent_find(hops.begin(), hops.end()) != hops.end();
}

}  // namespace

std::optional<Path> disjoint_backup(const RoutingGraph& graph, const TopologySnapshot& snapshot,
                                    const Path& primary, NodeId src, NodeId dst,
                                    OpCounter* counter) {
  std::vector<double> penalty(graph.link_slots(), 0.0);
  const double big = 1.0 + graph.total_weight();
  for (std::size_t i = 0; i + 1 < primary.hops.size(); ++i) {
    const auto idx = snapshot.link_index(primary.hops[i], primary.hops[i + 1]);
    if (idx && snapshot.links()[*idx].kind == LinkKind::ISL) penalty[*idx] = big;
  }
  // A link that drops out of sight before the next refresh outweighs any number of shared ones.
  const double doomed = big * static_cast<double>(snapshot.node_count() + 1);
  for (std::size_t i = 0; i < snapshot.links().size(); ++i) {
    if (std::isfinite(snapshot.links()[i].lost_at_s)) penalty[i] += doomed;
  }
  const auto tree = spf_tree(graph, src, counter, penalty);
  if (!tree.reachable(dst)) return std::nullopt;
  Path p = tree.path_to(dst);
  if (p.hops == primary.hops) return std::nullopt;
  p.cost = path_weight(graph, p.hops);
  return p;
}

namespace {

void install_lsp(RouteSet& rs, const FlowSpec& flow, const Path& path) {
  // path = [src_gs, s1, ..., sk, dst_gs]; s1 pushes, s2..sk hold label maps, sk pops.
  const std::size_t k = path.hops.size() - 2;
  IngressStack stack{path.hops[1], {}, path.hops[2]};
  if (k >= 2) {
    const auto label = flow_label(flow.flow_id);
    stack.labels.push_back(label);
    for (std::size_t i = 2; i <= k; ++i) {
      const NodeId owner = path.hops[i];
      LabelAction action{label, path.hops[i + 1], i == k};
      if (action.pop) action.out_label = 0;
      rs.label_maps[owner.value].entries[label] = action;
    }
  }
  rs.ingress_stacks[flow.flow_id] = std::move(stack);
}

}  // namespace

RouteSet build_routeset(const TopologySnapshot& snapshot, ProtocolKind protocol,
                        std::span<const FlowSpec> flows, const RouteOptions& options) {
  RouteSet rs;
  rs.protocol = protocol;
  rs.computed_at_s = snapshot.t_s();

  struct Tier {
    std::shared_ptr<const RoutingGraph> graph;
    std::shared_ptr<const NextHopTable> table;
  };
  std::vector<Tier> tiers(options.unit_fallback ? 3 : 1);
  auto tier = [&](std::size_t i) -> const Tier& {
    auto& t = tiers[i];
    if (!t.graph) {
      if (i == 0) {
        t.graph = std::make_shared<const RoutingGraph>(snapshot, options.link_weights, false,
                                                       options.excluded_nodes);
      } else if (i == 1) {
        t.graph = std::make_shared<const RoutingGraph>(snapshot, std::span<const double>{}, true,
                                                       options.fallback_excluded);
      } else {
        t.graph = std::make_shared<const RoutingGraph>(RoutingGraph::unit(snapshot, true));
      }
      t.table = std::make_shared<const NextHopTable>(t.graph);
    }
    return t;
  };

  if (protocol == ProtocolKind::IPv4 || protocol == ProtocolKind::IPv6) rs.fibs = tier(0).table;
  if (protocol == ProtocolKind::MPLS) {
    rs.label_maps.resize(snapshot.node_count());
    for (std::size_t i = 0; i < rs.label_maps.size(); ++i) {
      rs.label_maps[i].owner = NodeId{static_cast<std::uint16_t>(i)};
    }
  }

  for (const auto& flow : flows) {
    std::optional<Path> path;
    std::size_t used = 0;
    for (; used < tiers.size(); ++used) {
      path = tier(used).table->walk(flow.src, flow.dst);
      if (path) break;
    }
    const NextHopTable* t = path ? tiers[used].table.get() : nullptr;
    if (!path || path->hops.size() < 3) {
      rs.unrouted.push_back(flow.flow_id);
      continue;
    }

    switch (protocol) {
      case ProtocolKind::IPv4:
      case ProtocolKind::IPv6:
        break;
      case ProtocolKind::MPLS:
        install_lsp(rs, flow, *path);
        break;
      case ProtocolKind::SRv6:
      case ProtocolKind::SRv6Green: {
        SrPolicy pol;
        pol.primary = encode_segments(path->hops, *t, true);
        pol.primary_path = *path;
        pol.fallback_tier = static_cast<int>(used);
        auto backup_on = [&](const Tier& on) -> bool {
          auto b = disjoint_backup(*on.graph, snapshot, *path, flow.src, flow.dst);
          if (!b) return false;
          auto seg = encode_segments(b->hops, *on.table, false);
          auto expanded = expand_segments(flow.src, seg, *on.table);
          if (!expanded || expanded->hops == path->hops || has_repeat(expanded->hops)) return false;
          if (pol.backup_path && doomed_links(snapshot, expanded->hops) >=
                                     doomed_links(snapshot, pol.backup_path->hops)) {
            return false;
          }
          expanded->cost = path_weight(*on.graph, expanded->hops);
          pol.backup = std::move(seg);
          pol.backup_path = std::move(*expanded);
          return true;
        };
        backup_on(tiers[used]);
        // A backup that cannot outlast the period on the primary graph may borrow low-power
        // links, never overloaded nodes.
        const bool fragile = !pol.backup_path || doomed_links(snapshot, pol.backup_path->hops) > 0;
        if (fragile && options.unit_fallback && used == 0) backup_on(tier(1));
        rs.policies.emplace(flow.flow_id, std::move(pol));
        break;
      }
    }
  }
  return rs;
}

RouteSet compute_routeset(const TopologySnapshot& snapshot, ProtocolKind protocol,
                          std::span<const FlowSpec> flows, std::span<const double> link_weights) {
  RouteOptions opts;
  opts.link_weights = link_weights;
  auto rs = build_routeset(snapshot, protocol, flows, opts);
  if (!rs.unrouted.empty()) throw NoRoute(rs.unrouted.front());
  return rs;
}

std::optional<Path> hop_sequence(const RouteSet& routes, const FlowSpec& flow) {
  switch (routes.protocol) {
    case ProtocolKind::IPv4:
    case ProtocolKind::IPv6:
      if (!routes.fibs) return std::nullopt;
      return routes.fibs->walk(flow.src, flow.dst);
    case ProtocolKind::MPLS: {
      auto it = routes.ingress_stacks.find(flow.flow_id);
      if (it == routes.ingress_stacks.end()) return std::nullopt;
      const auto& stack = it->second;
      Path p;
      p.hops = {flow.src, stack.ingress, stack.next_hop};
      if (stack.labels.empty()) {
        p.cost = 2.0;
        return p;
      }
      std::uint32_t label = stack.labels.front();
      NodeId cur = stack.next_hop;
      for (std::size_t guard = 0; guard <= routes.label_maps.size(); ++guard) {
        const auto dec = mpls_forward(routes.label_maps.at(cur.value), label);
        if (dec.kind == MplsDecision::Kind::NoLabelEntry) return std::nullopt;
        p.hops.push_back(dec.next_hop);
        if (dec.kind == MplsDecision::Kind::Pop) {
          p.cost = static_cast<double>(p.hops.size() - 1);
          return p;
        }
        label = dec.out_label;
        cur = dec.next_hop;
      }
      return std::nullopt;
    }
    case ProtocolKind::SRv6:
    case ProtocolKind::SRv6Green: {
      auto it = routes.policies.find(flow.flow_id);
      if (it == routes.policies.end()) return std::nullopt;
      return it->second.primary_path;
    }
  }
  return std::nullopt;
}

int header_bytes(ProtocolKind protocol, int srv6_waypoints, int mpls_labels) {
  switch (protocol) {
    case ProtocolKind::IPv4: return 20;
    case ProtocolKind::IPv6: return 40;
    case ProtocolKind::MPLS: return 40 + 4 * mpls_labels;
    case ProtocolKind::SRv6:
    case ProtocolKind::SRv6Green: return 48 + 16 * srv6_waypoints;
  }
  return 0;
}

HeaderModel encapsulate(ProtocolKind protocol, int payload_bytes, const SrPolicy* policy,
                        bool backup_engaged) {
  if (payload_bytes <= 0) throw std::invalid_argument("payload_bytes must be positive");
  int waypoints = policy ? std::max(policy->primary.waypoints(), 1) : 1;
  if (backup_engaged) waypoints += 1;
  HeaderModel h;
  h.header_bytes = header_bytes(protocol, waypoints, 1);
  h.overhead_ratio = static_cast<double>(h.header_bytes) / (h.header_bytes + payload_bytes);
  return h;
}

}  // namespace leosim
