#include "leosim/topology.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace leosim {

std::string to_string(LinkKind kind) { return kind == LinkKind::ISL ? "isl" : "ground"; }

std::string to_string(LinkState state) {
  switch (state) {
    case LinkState::Active: return "active";
    case LinkState::Inactive: return "inactive";
    case LinkState::LowPower: return "low_power";
  }
  return "unknown";
}

TopologySnapshot::TopologySnapshot(double t_s, std::size_t node_count, std::vector<Link> links,
                                   std::vector<NodeResources> resources)
    : t_s_(t_s),
      node_count_(node_count),
      links_(std::move(links)),
      resources_(std::move(resources)),
      adjacency_(node_count),
      index_(node_count * node_count, -1) {
  if (resources_.size() != node_count_) {
    throw std::invalid_argument("snapshot needs one resource record per node");
  }
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const auto& l = links_[i];
    adjacency_.at(l.endpoint_a.value).push_back({l.endpoint_b, i});
    adjacency_.at(l.endpoint_b.value).push_back({l.endpoint_a, i});
    for (auto slot : {l.endpoint_a.value * node_count_ + l.endpoint_b.value,
                      l.endpoint_b.value * node_count_ + l.endpoint_a.value}) {
      if (index_.at(slot) < 0) index_[slot] = static_cast<std::int32_t>(i);
    }
  }
  for (auto& adj : adjacency_) {
    std::sort(adj.begin(), adj.end(),
              [](const Adjacent& x, const Adjacent& y) { return x.neighbor < y.neighbor; });
  }
}

std::size_t TopologySnapshot::active_link_count() const {
  return static_cast<std::size_t>(std::count_if(
      links_.begin(), links_.end(), [](const Link& l) { return l.state == LinkState::Active; }));
}

std::vector<NodeId> grid_isl_neighbors(const Constellation& c, NodeId sat, double t) {
  const auto slot = c.slot_of(sat);
  const auto& shell = c.shells()[slot.shell_index];
  std::vector<NodeId> out;
  const int n = shell.sats_per_plane;
  if (n > 1) {
    out.push_back(c.satellite_id(slot.shell_index, slot.plane, (slot.slot + n - 1) % n));
    out.push_back(c.satellite_id(slot.shell_index, slot.plane, (slot.slot + 1) % n));
  }
  const int planes = shell.plane_count;
  if (planes > 1) {
    const bool first = slot.plane == 0;
    const bool last = slot.plane + 1 == planes;
    if (!first || !shell.has_seam()) {
      const NodeId west = c.satellite_id(slot.shell_index, (slot.plane + planes - 1) % planes, slot.slot);
      if (c.visible(sat, west, t)) out.push_back(west);
    }
    if (!last || !shell.has_seam()) {
      const NodeId east = c.satellite_id(slot.shell_index, (slot.plane + 1) % planes, slot.slot);
      if (c.visible(sat, east, t)) out.push_back(east);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  out.erase(std::remove(out.begin(), out.end(), sat), out.end());
  return out;
}

std::vector<NodeResources> initial_resources(std::size_t node_count) {
  std::vector<NodeResources> out(node_count);
  for (std::size_t i = 0; i < node_count; ++i) {
    out[i].node_id = NodeId{static_cast<std::uint16_t>(i)};
  }
  return out;
}

TopologySnapshot build_snapshot(const Constellation& c, double t,
                                std::vector<NodeResources> resources,
                                const TopologyParams& params) {
  const auto pos = c.positions(t);
  const auto& vis = c.visibility();

  std::vector<Link> links;
  for (const auto& [a, b] : c.grid_isl_candidates()) {
    if (!visible(pos[a.value], pos[b.value], vis)) continue;
    links.push_back({a, b, LinkKind::ISL, params.link_capacity_bps, LinkState::Active,
                     distance_km(pos[a.value], pos[b.value])});
  }
  for (std::size_t s = 0; s < c.satellite_count(); ++s) {
    for (const auto& gs : c.ground_stations()) {
      if (!visible(pos[s], pos[gs.node_id.value], vis)) continue;
      links.push_back({NodeId{static_cast<std::uint16_t>(s)}, gs.node_id, LinkKind::GroundLink,
                       params.link_capacity_bps, LinkState::Active,
                       distance_km(pos[s], pos[gs.node_id.value])});
    }
  }

  for (auto& link : links) {
    const bool asleep = resources.at(link.endpoint_a.value).low_power ||
                        resources.at(link.endpoint_b.value).low_power;
    link.state = asleep ? LinkState::LowPower : LinkState::Active;
  }

  if (params.loss_probe_s > 0.0) {
    const int probes = static_cast<int>(std::floor(params.refresh_s / params.loss_probe_s + 1e-9));
    for (int k = 1; k <= probes; ++k) {
      const double tp = t + k * params.loss_probe_s;
      const auto probe = c.positions(tp);
      for (auto& link : links) {
        if (std::isfinite(link.lost_at_s)) continue;
        if (!visible(probe[link.endpoint_a.value], probe[link.endpoint_b.value], vis)) {
          link.lost_at_s = tp;
        }
      }
    }
  }

  std::sort(links.begin(), links.end(), [](const Link& x, const Link& y) {
    return std::tie(x.endpoint_a, x.endpoint_b) < std::tie(y.endpoint_a, y.endpoint_b);
  });
  return TopologySnapshot(t, c.node_count(), std::move(links), std::move(resources));
}

std::size_t snapshot_count(double duration_s, double refresh_s) {
  if (!(refresh_s > 0.0) || duration_s < 0.0) throw std::invalid_argument("bad cadence");
  return static_cast<std::size_t>(std::floor(duration_s / refresh_s + 1e-9)) + 1;
}

std::string export_snapshot(const TopologySnapshot& snapshot, const Constellation& c) {
  std::ostringstream os;
  for (const auto& l : snapshot.links()) {
    os << snapshot.t_s() << ' ' << c.node_name(l.endpoint_a) << ' ' << c.node_name(l.endpoint_b)
       << ' ' << to_string(l.kind) << ' ' << to_string(l.state) << '\n';
  }
  return os.str();
}

}  // namespace leosim
