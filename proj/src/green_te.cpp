#include "leosim/green_te.hpp"

#include <algorithm>
#include <string>

namespace leosim {

std::vector<std::string> GreenParams::violations() const {
  std::vector<std::string> out;
  if (!(idle_cpu_pct > 0.0)) out.push_back("green.idle_cpu_pct must be > 0");
  if (!(idle_cpu_pct < cpu_th_pct)) out.push_back("green.idle_cpu_pct must be < green.cpu_th_pct");
  if (!(cpu_th_pct <= 100.0)) out.push_back("green.cpu_th_pct must be <= 100");
  if (!(idle_time_s >= 0.0)) out.push_back("green.idle_time_s must be >= 0");
  if (!(baseline >= 100.0)) out.push_back("green.baseline must be >= 100");
  return out;
}

WeightedLinks calculate_weights(const TopologySnapshot& snapshot, const GreenParams& params,
                                OpCounter* counter) {
  WeightedLinks out;
  const auto& links = snapshot.links();
  out.weights.resize(links.size());
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (counter) ++counter->link_visits;
    const auto& l = links[i];
    const double cpu_a = snapshot.resources_of(l.endpoint_a).cpu_pct;
    const double cpu_b = snapshot.resources_of(l.endpoint_b).cpu_pct;
    const double worst = std::max(cpu_a, cpu_b);
    if (worst > params.cpu_th_pct) {
      out.weights[i] = 0.0;
      if (cpu_a > params.cpu_th_pct) out.overloaded.insert(l.endpoint_a);
      if (cpu_b > params.cpu_th_pct) out.overloaded.insert(l.endpoint_b);
    } else {
      out.weights[i] = params.baseline - worst;
    }
  }
  return out;
}

std::vector<NodeId> update_idle(IdleTracker& tracker, std::span<const NodeResources> resources,
                                double t, const GreenParams& params, std::size_t satellite_count) {
  std::vector<NodeId> out;
  for (const auto& r : resources) {
    if (r.node_id.value >= satellite_count) continue;
    if (r.low_power) {
      tracker.reset(r.node_id);
      continue;
    }
    if (r.cpu_pct >= params.idle_cpu_pct) {
      tracker.reset(r.node_id);
      continue;
    }
    const auto [it, fresh] = tracker.below_since.try_emplace(r.node_id, t);
    if (t - it->second >= params.idle_time_s) out.push_back(r.node_id);
  }
  return out;
}

namespace {

TopologySnapshot wake(const TopologySnapshot& snapshot, const std::set<NodeId>& woken) {
  auto resources = snapshot.resources();
  for (auto id : woken) resources.at(id.value).low_power = false;
  auto links = snapshot.links();
  for (auto& l : links) {
    if (l.state != LinkState::LowPower) continue;
    if (!resources[l.endpoint_a.value].low_power && !resources[l.endpoint_b.value].low_power) {
      l.state = LinkState::Active;
    }
  }
  return TopologySnapshot(snapshot.t_s(), snapshot.node_count(), std::move(links),
                          std::move(resources));
}

}  // namespace

GreenRouting green_routes(const TopologySnapshot& snapshot, std::span<const FlowSpec> flows,
                          const GreenParams& params, OpCounter* counter) {
  // Nodes woken only to carry a backup stay out of the primary graph.
  std::set<NodeId> woken, backup_only;
  TopologySnapshot current = snapshot;
  for (std::size_t round = 0; round <= 2 * snapshot.node_count(); ++round) {
    GreenRouting g{{}, calculate_weights(current, params, counter), current, {}};

    std::vector<NodeId> excluded(backup_only.begin(), backup_only.end());
    for (const auto& r : current.resources()) {
      if (r.low_power) excluded.push_back(r.node_id);
    }
    const std::vector<NodeId> overloaded(g.weights.overloaded.begin(), g.weights.overloaded.end());

    RouteOptions opts;
    opts.link_weights = g.weights.weights;
    opts.excluded_nodes = excluded;
    opts.unit_fallback = true;
    opts.fallback_excluded = overloaded;
    g.routes = build_routeset(current, ProtocolKind::SRv6Green, flows, opts);

    std::set<NodeId> need, promote;
    for (const auto& [flow_id, pol] : g.routes.policies) {
      for (auto n : pol.primary_path.hops) {
        if (current.resources_of(n).low_power) need.insert(n);
        if (backup_only.count(n)) promote.insert(n);
      }
      if (!pol.backup_path) continue;
      for (auto n : pol.backup_path->hops) {
        if (current.resources_of(n).low_power && !need.count(n)) backup_only.insert(n);
      }
    }
    std::set<NodeId> fresh;
    for (auto n : backup_only) {
      if (!woken.count(n)) fresh.insert(n);
    }
    for (auto n : need) backup_only.erase(n);
    for (auto n : promote) backup_only.erase(n);
    if (need.empty() && fresh.empty() && promote.empty()) {
      g.woken.assign(woken.begin(), woken.end());
      return g;
    }
    woken.insert(need.begin(), need.end());
    woken.insert(fresh.begin(), fresh.end());
    current = wake(snapshot, woken);
  }
  throw std::logic_error("green route computation did not settle");
}

}  // namespace leosim
