#include "leosim/engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <queue>
#include <random>
#include <tuple>

namespace leosim {

EventQueue::EventQueue(double bucket_s, std::size_t buckets) : width_(bucket_s), wheel_(buckets) {
  if (!(bucket_s > 0.0) || buckets == 0) throw std::invalid_argument("bad calendar geometry");
}

std::uint64_t EventQueue::bucket_of(double t) const {
  return t <= 0.0 ? 0 : static_cast<std::uint64_t>(t / width_);
}

void EventQueue::push(const Event& e) {
  ++size_;
  const auto b = bucket_of(e.t_s);
  if (b <= current_) {
    now_.insert(std::upper_bound(now_.begin(), now_.end(), e, std::greater<>{}), e);
  } else if (b - current_ < wheel_.size()) {
    wheel_[b % wheel_.size()].push_back(e);
    ++in_wheel_;
  } else {
    far_.push(e);
  }
}

void EventQueue::refill() {
  while (now_.empty()) {
    if (in_wheel_ == 0) {
      current_ = std::max(current_ + 1, bucket_of(far_.top().t_s));
    } else {
      ++current_;
    }
    auto& slot = wheel_[current_ % wheel_.size()];
    now_.swap(slot);
    in_wheel_ -= now_.size();
    while (!far_.empty() && bucket_of(far_.top().t_s) <= current_) {
      now_.push_back(far_.top());
      far_.pop();
    }
    std::sort(now_.begin(), now_.end(), std::greater<>{});
  }
}

const Event& EventQueue::top() {
  refill();
  return now_.back();
}

void EventQueue::pop() {
  refill();
  now_.pop_back();
  --size_;
}

double LinkQueue::backlog_bytes(double now) const {
  return std::max(0.0, busy_until_ - now) * rate_bps_ / 8.0;
}

std::optional<double> LinkQueue::admit(double now, int bytes) {
  if (backlog_bytes(now) + bytes > capacity_) return std::nullopt;
  busy_until_ = std::max(busy_until_, now) + 8.0 * bytes / rate_bps_;
  return busy_until_;
}

bool link_usable(const TopologySnapshot& snapshot, NodeId a, NodeId b, double t) {
  const auto idx = snapshot.link_index(a, b);
  if (!idx) return false;
  const auto& l = snapshot.links()[*idx];
  return l.state == LinkState::Active && t < l.lost_at_s;
}

namespace {

HopDecision dropped(DropReason r) {
  HopDecision d;
  d.kind = HopDecision::Kind::Dropped;
  d.reason = r;
  return d;
}

HopDecision progressed(const TopologySnapshot& snapshot, NodeId from, NodeId next, double units,
                       double t) {
  if (!link_usable(snapshot, from, next, t)) return dropped(DropReason::StaleLink);
  HopDecision d;
  d.kind = HopDecision::Kind::Progressed;
  d.next = next;
  d.cpu_units = units;
  return d;
}

bool path_usable(const TopologySnapshot& snapshot, const Path& path, double t) {
  for (std::size_t i = 0; i + 1 < path.hops.size(); ++i) {
    if (!link_usable(snapshot, path.hops[i], path.hops[i + 1], t)) return false;
  }
  return true;
}

}  // namespace

HopDecision forward(Packet& packet, const RouteSet& routes, const TopologySnapshot& snapshot,
                    const Constellation& constellation, const CostModel& cost, double t,
                    bool use_backup) {
  const NodeId u = packet.current_node;
  if (t > packet.deadline_s) return dropped(DropReason::Deadline);
  if (u == packet.dst) {
    HopDecision d;
    d.kind = HopDecision::Kind::Delivered;
    d.next = u;
    return d;
  }
  // Ground stations never relay, so a packet at a ground station is at its source.
  const bool at_source = constellation.is_ground(u);
  // Link state is judged at the packet's creation: flight times are milliseconds against a
  // one-second loss probe.
  const double born = packet.created_s;

  switch (routes.protocol) {
    case ProtocolKind::IPv4:
    case ProtocolKind::IPv6: {
      const auto nh = routes.fibs ? routes.fibs->next_hop(u, packet.dst) : std::nullopt;
      if (!nh) return dropped(DropReason::NoRoute);
      const double lookup =
          routes.protocol == ProtocolKind::IPv4 ? cost.c_lookup_v4 : cost.c_lookup_v6;
      return progressed(snapshot, u, *nh, at_source ? cost.c_encap : lookup, born);
    }

    case ProtocolKind::MPLS: {
      const auto stack = routes.ingress_stacks.find(packet.flow_id);
      if (at_source) {
        if (stack == routes.ingress_stacks.end()) return dropped(DropReason::NoRoute);
        return progressed(snapshot, u, stack->second.ingress, cost.c_encap, born);
      }
      if (!packet.label) {
        if (stack == routes.ingress_stacks.end() || stack->second.ingress != u) {
          return dropped(DropReason::NoRoute);
        }
        double units = cost.c_lookup_v6;
        if (!stack->second.labels.empty()) {
          packet.label = stack->second.labels.front();
          units = cost.c_mpls_push;
        }
        return progressed(snapshot, u, stack->second.next_hop, units, born);
      }
      if (routes.label_maps.size() <= u.value) return dropped(DropReason::NoRoute);
      const auto dec = mpls_forward(routes.label_maps[u.value], *packet.label);
      switch (dec.kind) {
        case MplsDecision::Kind::NoLabelEntry: return dropped(DropReason::NoRoute);
        case MplsDecision::Kind::Swap: packet.label = dec.out_label; break;
        case MplsDecision::Kind::Pop: packet.label.reset(); break;
      }
      return progressed(snapshot, u, dec.next_hop, cost.c_mpls_swap, born);
    }

    case ProtocolKind::SRv6:
    case ProtocolKind::SRv6Green: {
      if (at_source) {
        const auto it = routes.policies.find(packet.flow_id);
        if (it == routes.policies.end()) return dropped(DropReason::NoRoute);
        const auto& pol = it->second;
        bool backup = use_backup && pol.backup.has_value();
        if (!backup && pol.backup && !path_usable(snapshot, pol.primary_path, born)) backup = true;
        const Path& path = backup ? *pol.backup_path : pol.primary_path;
        const SegmentList& sl = backup ? *pol.backup : pol.primary;
        // The source acts on a full list: segments_left = size, then one decrement.
        packet.seglist = &sl;
        packet.segments_left = static_cast<int>(sl.sids.size()) - 1;
        packet.sr_path = &path;
        packet.path_pos = 1;
        packet.on_backup = backup;
        packet.header_bytes =
            encapsulate(routes.protocol, packet.payload_bytes, &pol, backup).header_bytes;
        auto d = progressed(snapshot, u, path.hops[1], cost.c_encap, born);
        d.failover = backup;
        return d;
      }
      if (!packet.sr_path || !packet.seglist ||
          packet.path_pos + 1 >= packet.sr_path->hops.size() ||
          packet.sr_path->hops[packet.path_pos] != u) {
        return dropped(DropReason::NoRoute);
      }
      double units = cost.c_srv6_transit;
      const auto& sids = packet.seglist->sids;
      const int len = static_cast<int>(sids.size());
      if (packet.segments_left > 0 && sids[len - packet.segments_left - 1] == u) {
        --packet.segments_left;
        units = cost.c_srv6_end;
      }
      const NodeId next = packet.sr_path->hops[packet.path_pos + 1];
      ++packet.path_pos;
      return progressed(snapshot, u, next, units, born);
    }
  }
  return dropped(DropReason::NoRoute);
}

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

NodeId ground_id(const Constellation& c, const std::string& name) {
  for (const auto& gs : c.ground_stations()) {
    if (gs.name == name) return gs.node_id;
  }
  throw std::invalid_argument("unknown ground station '" + name + "'");
}

std::size_t controller_for(const Constellation& c, NodeId src) {
  std::vector<const GroundStation*> controllers;
  for (const auto& gs : c.ground_stations()) {
    if (gs.is_controller_site) controllers.push_back(&gs);
  }
  const bool north = c.ground_station(src).latitude_deg >= 0.0;
  for (std::size_t i = 0; i < controllers.size(); ++i) {
    if ((controllers[i]->latitude_deg >= 0.0) == north) return i;
  }
  return 0;
}

}  // namespace

std::map<std::pair<NodeId, NodeId>, double> ground_link_load(const TopologySnapshot& snapshot,
                                                             std::span<const Flow> flows) {
  NextHopTable table(std::make_shared<const RoutingGraph>(RoutingGraph::unit(snapshot)));
  std::map<std::pair<NodeId, NodeId>, double> load;
  for (const auto& f : flows) {
    const auto path = table.walk(f.src_gs, f.dst_gs);
    if (!path || path->hops.size() < 3) continue;
    const auto& h = path->hops;
    load[{h[0], h[1]}] += f.rate_bps;
    load[{h[h.size() - 2], h.back()}] += f.rate_bps;
  }
  return load;
}

std::vector<Flow> make_flows(const Scenario& scenario, const Constellation& constellation,
                             ProtocolKind protocol, double load_fraction, std::uint64_t seed) {
  std::vector<Flow> flows;
  if (!(load_fraction > 0.0)) return flows;
  const auto& gss = constellation.ground_stations();

  if (!scenario.flows.empty()) {
    for (const auto& fe : scenario.flows) {
      Flow f;
      f.src_gs = ground_id(constellation, fe.src);
      f.dst_gs = ground_id(constellation, fe.dst);
      flows.push_back(f);
    }
  } else if (gss.size() >= 2) {
    std::mt19937_64 rng(mix(seed, 0x7261666669ULL));
    std::uniform_int_distribution<std::size_t> pick_src(0, gss.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_dst(0, gss.size() - 2);
    for (int i = 0; i < scenario.auto_flows; ++i) {
      const auto s = pick_src(rng);
      auto d = pick_dst(rng);
      if (d >= s) ++d;
      Flow f;
      f.src_gs = gss[s].node_id;
      f.dst_gs = gss[d].node_id;
      flows.push_back(f);
    }
  }

  const int header = header_bytes(protocol, 1, 1);
  for (std::size_t i = 0; i < flows.size(); ++i) {
    auto& f = flows[i];
    f.flow_id = static_cast<std::uint32_t>(i);
    f.payload_bytes = scenario.payload_bytes;
    f.header_bytes = header;
    f.controller = controller_for(constellation, f.src_gs);
  }

  // Equal shares of one bottleneck's worth of traffic, rounded to whole packets per second so
  // that every flow loses exactly rate x seconds to a link outage on the probe grid.
  for (auto& f : flows) {
    const double share = load_fraction * scenario.link_capacity_bps / static_cast<double>(flows.size());
    const double pps = std::max(1.0, std::round(share / f.packet_bits()));
    f.rate_bps = pps * f.packet_bits();
  }
  return flows;
}

double start_phase(const Flow& flow, std::uint64_t seed) {
  std::mt19937_64 rng(mix(seed, 0x1000 + flow.flow_id));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) * flow.gap_s();
}

std::vector<double> send_times(const Flow& flow, double duration_s, std::uint64_t seed) {
  std::vector<double> out;
  const double phase = start_phase(flow, seed);
  const double gap = flow.gap_s();
  for (std::uint64_t k = 0;; ++k) {
    const double t = phase + static_cast<double>(k) * gap;
    if (t >= duration_s) break;
    out.push_back(t);
  }
  return out;
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

struct Simulation {
  const Scenario& sc;
  ProtocolKind protocol;
  double load;
  std::uint64_t seed;
  const CostModel& cost;

  Constellation constellation;
  std::size_t n = 0;
  std::size_t nsat = 0;
  TopologyParams topo_params;

  std::vector<Flow> flows;
  std::vector<FlowSpec> specs;
  std::vector<double> phase;
  std::vector<std::uint64_t> next_send;

  std::vector<NodeResources> resources;
  IdleTracker idle;
  std::vector<double> low_power_since;

  // A packet is forwarded under the generation it was created in. Deadlines are shorter than
  // the refresh period, so only the previous generation can still have packets in flight.
  struct Generation {
    std::shared_ptr<const TopologySnapshot> snapshot;
    std::shared_ptr<const RouteSet> routes;
  };
  Generation current;
  Generation previous;
  std::uint32_t generation = 0;
  std::shared_ptr<const TopologySnapshot> fresh;  // built by the refresh, routed by the recompute

  std::vector<double> cpu_free;
  std::vector<double> window_units;
  std::vector<double> background;  // units per second
  std::vector<double> background_units;
  std::vector<double> background_since;
  std::vector<double> mem;
  std::vector<double> link_busy;  // directed, n x n
  std::vector<double> controller_units;

  std::vector<Packet> pool;
  std::vector<std::uint32_t> pool_tally;
  std::vector<std::uint32_t> free_slots;
  std::uint64_t next_packet_id = 0;

  std::vector<PacketTally> tallies;
  std::vector<std::vector<std::uint32_t>> flow_tallies;

  EventQueue queue;
  std::uint64_t seq = 0;

  RunTrace trace;
  RunAudit audit;

  Simulation(const Scenario& s, ProtocolKind p, double l, std::uint64_t sd)
      : sc(s), protocol(p), load(l), seed(sd), cost(s.cost), constellation(s.constellation()) {
    n = constellation.node_count();
    nsat = constellation.satellite_count();
    topo_params.refresh_s = sc.refresh_s;
    topo_params.link_capacity_bps = sc.link_capacity_bps;
    topo_params.loss_probe_s = sc.loss_probe_s;

    flows = make_flows(sc, constellation, protocol, load, seed);
    for (const auto& f : flows) specs.push_back({f.flow_id, f.src_gs, f.dst_gs});
    phase.resize(flows.size());
    for (std::size_t i = 0; i < flows.size(); ++i) phase[i] = start_phase(flows[i], seed);
    next_send.assign(flows.size(), 0);
    flow_tallies.resize(flows.size());

    resources = initial_resources(n);
    low_power_since.assign(n, -1.0);
    cpu_free.assign(n, 0.0);
    window_units.assign(n, 0.0);
    background.assign(n, 0.0);
    background_units.assign(n, 0.0);
    background_since.assign(n, 0.0);
    mem.assign(n, 0.0);
    link_busy.assign(n * n, 0.0);

    std::size_t controllers = 0;
    for (const auto& gs : constellation.ground_stations()) controllers += gs.is_controller_site;
    controller_units.assign(std::max<std::size_t>(controllers, 1), 0.0);

    trace.protocol = protocol;
    trace.load_fraction = load;
    trace.seed = seed;
    trace.duration_s = sc.duration_s;
    trace.window_s = cost.window_s;
    trace.satellite_count = nsat;
    trace.node_count = n;
  }

  void push(double t, EventKind kind, std::uint32_t payload) { queue.push({t, kind, seq++, payload}); }

  std::uint32_t tally_for(std::uint32_t flow_id, int header, int payload) {
    for (auto idx : flow_tallies[flow_id]) {
      if (tallies[idx].header_bytes == header) return idx;
    }
    PacketTally pt;
    pt.flow_id = flow_id;
    pt.header_bytes = header;
    pt.payload_bytes = payload;
    tallies.push_back(pt);
    const auto idx = static_cast<std::uint32_t>(tallies.size() - 1);
    flow_tallies[flow_id].push_back(idx);
    return idx;
  }

  std::uint32_t alloc_packet() {
    if (!free_slots.empty()) {
      const auto i = free_slots.back();
      free_slots.pop_back();
      return i;
    }
    pool.emplace_back();
    pool_tally.push_back(0);
    return static_cast<std::uint32_t>(pool.size() - 1);
  }

  void release(std::uint32_t i) {
    pool[i].sr_path = nullptr;
    free_slots.push_back(i);
  }

  void set_background(NodeId u, double t, double units_per_s) {
    background_units[u.value] += background[u.value] * (t - background_since[u.value]);
    background_since[u.value] = t;
    background[u.value] = units_per_s;
  }

  double capacity(NodeId u) const {
    return constellation.is_satellite(u) ? cost.capacity_units_per_s
                                         : cost.ground_capacity_units_per_s;
  }

  // ---- periodic events ------------------------------------------------------------

  void on_sample(double t) {
    const bool cold = t <= 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const NodeId u{static_cast<std::uint16_t>(i)};
      set_background(u, t, background[i]);
      double pct = 0.0;
      if (!cold) {
        const double units = window_units[i] + background_units[i];
        pct = std::min(100.0, 100.0 * units / (cost.window_s * capacity(u)));
      }
      trace.samples.push_back({t, u, pct, cold ? 0.0 : mem[i], resources[i].low_power});
      resources[i].cpu_pct = pct;
      resources[i].mem_bytes = cold ? 0.0 : mem[i];
      window_units[i] = 0.0;
      background_units[i] = 0.0;
    }
    if (!cold) {
      for (auto& units : controller_units) {
        trace.controller_cpu_pct.push_back(
            std::min(100.0, 100.0 * units / (cost.window_s * cost.ground_capacity_units_per_s)));
      }
    }
    std::fill(controller_units.begin(), controller_units.end(), 0.0);
  }

  void sleep(NodeId u, double t) {
    resources[u.value].low_power = true;
    low_power_since[u.value] = t;
    set_background(u, t, 0.0);
  }

  void wake(NodeId u, double t) {
    resources[u.value].low_power = false;
    idle.reset(u);
    if (low_power_since[u.value] >= 0.0) {
      trace.low_power.push_back({u, low_power_since[u.value], t});
      low_power_since[u.value] = -1.0;
    }
  }

  void on_idle_scan(double t) {
    if (protocol != ProtocolKind::SRv6Green || t <= 0.0) return;
    for (auto u : update_idle(idle, resources, t, sc.green, nsat)) sleep(u, t);
  }

  const Generation& generation_of(const Packet& p) const {
    return p.generation == generation ? current : previous;
  }

  void on_refresh(double t) {
    fresh = std::make_shared<const TopologySnapshot>(
        build_snapshot(constellation, t, resources, topo_params));
    ++audit.snapshots;
    ++trace.snapshots;
  }

  double spf_units(const TopologySnapshot& s) const {
    std::size_t m = 0;
    for (const auto& l : s.links()) m += l.state == LinkState::Active;
    const double nn = static_cast<double>(s.node_count());
    return cost.c_spf_per_unit * (static_cast<double>(m) + nn) * std::log2(std::max(2.0, nn));
  }

  void audit_green(const GreenRouting& g) {
    const auto& s = g.snapshot;
    auto check = [&](const Path& p) {
      ++audit.green_paths_checked;
      for (std::size_t i = 0; i + 1 < p.hops.size(); ++i) {
        const double a = s.resources_of(p.hops[i]).cpu_pct;
        const double b = s.resources_of(p.hops[i + 1]).cpu_pct;
        if (std::max(a, b) > sc.green.cpu_th_pct) ++audit.overloaded_path_links;
      }
    };
    for (const auto& [id, pol] : g.routes.policies) {
      check(pol.primary_path);
      if (pol.backup_path) check(*pol.backup_path);
      if (pol.fallback_tier > 0) ++audit.fallback_routes;
    }
  }

  void on_recompute(double t) {
    RouteSet rs;
    auto snapshot = fresh;
    if (protocol == ProtocolKind::SRv6Green) {
      auto g = green_routes(*snapshot, specs, sc.green);
      for (auto u : g.woken) wake(u, t);
      audit_green(g);
      snapshot = std::make_shared<const TopologySnapshot>(std::move(g.snapshot));
      rs = std::move(g.routes);
    } else {
      rs = build_routeset(*snapshot, protocol, specs);
    }
    ++audit.route_computations;
    previous = std::move(current);
    current = {snapshot, std::make_shared<const RouteSet>(std::move(rs))};
    ++generation;

    const double spf = spf_units(*snapshot);
    const bool distributed = protocol == ProtocolKind::IPv4 || protocol == ProtocolKind::IPv6;
    for (std::size_t i = 0; i < nsat; ++i) {
      const NodeId u{static_cast<std::uint16_t>(i)};
      double bg = resources[i].low_power ? 0.0 : cost.c_base_units_per_s;
      if (distributed) bg += spf / sc.refresh_s;
      set_background(u, t, bg);
    }

    std::vector<double> runs(controller_units.size(), 1.0);
    double per_flow = 0.0;
    switch (protocol) {
      case ProtocolKind::IPv4:
      case ProtocolKind::IPv6: per_flow = 0.0; break;
      case ProtocolKind::MPLS: per_flow = 1.0; break;
      case ProtocolKind::SRv6:
      case ProtocolKind::SRv6Green: per_flow = 2.0; break;
    }
    for (const auto& f : flows) runs[f.controller % runs.size()] += per_flow;
    for (std::size_t k = 0; k < runs.size(); ++k) {
      controller_units[k] += spf * runs[k];
      if (protocol == ProtocolKind::SRv6Green) {
        controller_units[k] += cost.c_lookup_v6 * static_cast<double>(snapshot->links().size());
      }
    }

    update_memory();
  }

  void update_memory() {
    std::fill(mem.begin(), mem.end(), 0.0);
    const auto& rs = *current.routes;
    const auto& snapshot = current.snapshot;
    switch (protocol) {
      case ProtocolKind::IPv4:
      case ProtocolKind::IPv6:
      case ProtocolKind::MPLS: {
        const double entry = protocol == ProtocolKind::IPv4 ? 32.0 : 60.0;
        NextHopTable own(std::make_shared<const RoutingGraph>(RoutingGraph::unit(*snapshot)));
        const NextHopTable& table = rs.fibs ? *rs.fibs : own;
        std::vector<std::size_t> reach(n, 0);
        for (std::size_t d = 0; d < n; ++d) {
          const auto& tree = table.toward(NodeId{static_cast<std::uint16_t>(d)});
          for (std::size_t u = 0; u < n; ++u) reach[u] += (u != d && tree.next_hop[u] >= 0);
        }
        for (std::size_t u = 0; u < n; ++u) mem[u] = entry * static_cast<double>(reach[u]);
        if (protocol == ProtocolKind::MPLS) {
          for (std::size_t u = 0; u < rs.label_maps.size(); ++u) {
            mem[u] += 24.0 * static_cast<double>(rs.label_maps[u].entries.size());
          }
          for (const auto& [id, stack] : rs.ingress_stacks) mem[stack.ingress.value] += 24.0;
        }
        break;
      }
      case ProtocolKind::SRv6:
      case ProtocolKind::SRv6Green: {
        std::set<std::pair<std::uint16_t, std::uint16_t>> entries;  // (node, sid)
        auto add = [&](const SegmentList& sl, const Path& p) {
          std::size_t seg = 0;
          for (std::size_t i = 1; i < p.hops.size() && seg < sl.sids.size(); ++i) {
            entries.insert({p.hops[i].value, sl.sids[seg].value});
            if (p.hops[i] == sl.sids[seg]) ++seg;
          }
        };
        for (const auto& [id, pol] : rs.policies) {
          add(pol.primary, pol.primary_path);
          if (pol.backup) add(*pol.backup, *pol.backup_path);
          const auto src = pol.primary_path.hops.front().value;
          mem[src] += 24.0 + 16.0 * static_cast<double>(pol.primary.sids.size());
          if (pol.backup) mem[src] += 24.0 + 16.0 * static_cast<double>(pol.backup->sids.size());
        }
        for (const auto& [node, sid] : entries) mem[node] += 60.0;
        if (protocol == ProtocolKind::SRv6Green) {
          for (std::size_t u = 0; u < nsat; ++u) {
            mem[u] += 32.0 * static_cast<double>(
                                 snapshot->adjacency(NodeId{static_cast<std::uint16_t>(u)}).size());
          }
        }
        break;
      }
    }
  }

  // ---- packets ----------------------------------------------------------------------

  void on_send(double t, std::uint32_t flow_idx) {
    const auto& f = flows[flow_idx];
    const auto k = ++next_send[flow_idx];
    const double tn = phase[flow_idx] + static_cast<double>(k) * f.gap_s();
    if (tn < sc.duration_s) push(tn, EventKind::PacketArrival, flow_idx);

    const auto slot = alloc_packet();
    Packet& p = pool[slot];
    p = Packet{};
    p.packet_id = next_packet_id++;
    p.flow_id = f.flow_id;
    p.created_s = t;
    p.deadline_s = t + sc.packet_timeout_s;
    p.header_bytes = f.header_bytes;
    p.payload_bytes = f.payload_bytes;
    p.current_node = f.src_gs;
    p.dst = f.dst_gs;
    p.generation = generation;

    HopDecision d;
    if (current.routes) d = forward(p, *current.routes, *current.snapshot, constellation, cost, t);
    if (d.kind == HopDecision::Kind::Progressed) {
      auto depart = transmit(p, d, t);
      if (!depart && last_drop == DropReason::QueueOverflow && is_srv6(protocol) && !p.on_backup) {
        Packet retry = p;
        auto d2 = forward(retry, *current.routes, *current.snapshot, constellation, cost, t, true);
        if (d2.kind == HopDecision::Kind::Progressed && retry.on_backup) {
          d2.cpu_units = 0.0;  // encapsulation already charged
          if (auto dep = transmit(retry, d2, t)) {
            p = retry;
            d = d2;
            depart = dep;
          }
        }
      }
      pool_tally[slot] = tally_for(f.flow_id, p.header_bytes, p.payload_bytes);
      ++tallies[pool_tally[slot]].sent;
      if (depart) {
        launch(slot, d.next, *depart);
      } else {
        finish(slot, last_drop);
      }
      return;
    }
    pool_tally[slot] = tally_for(f.flow_id, p.header_bytes, p.payload_bytes);
    ++tallies[pool_tally[slot]].sent;
    if (d.kind == HopDecision::Kind::Delivered) {
      ++tallies[pool_tally[slot]].delivered;
      release(slot);
    } else {
      finish(slot, d.reason);
    }
  }

  DropReason last_drop = DropReason::NoRoute;

  // CPU service at the current node, then the outgoing link queue. Returns the arrival
  // time at the next node, or nullopt with last_drop set.
  std::optional<double> transmit(const Packet& p, const HopDecision& d, double t) {
    const NodeId u = p.current_node;
    const double cap = capacity(u) - (constellation.is_satellite(u) ? background[u.value] : 0.0);
    const double start = std::max(t, cpu_free[u.value]);
    const double done = start + (cap > 0.0 ? d.cpu_units / cap : 1e9);
    if (done > p.deadline_s) {
      last_drop = DropReason::Deadline;
      return std::nullopt;
    }
    double& busy = link_busy[static_cast<std::size_t>(u.value) * n + d.next.value];
    const double rate = sc.link_capacity_bps;
    const double backlog = std::max(0.0, busy - done) * rate / 8.0;
    if (backlog + p.size_bytes() > sc.queue_bytes()) {
      cpu_free[u.value] = done;
      window_units[u.value] += d.cpu_units;
      last_drop = DropReason::QueueOverflow;
      return std::nullopt;
    }
    cpu_free[u.value] = done;
    window_units[u.value] += d.cpu_units;
    busy = std::max(busy, done) + 8.0 * p.size_bytes() / rate;
    const auto& snapshot = *generation_of(p).snapshot;
    const auto idx = snapshot.link_index(u, d.next);
    const double km = idx ? snapshot.links()[*idx].length_km : 0.0;
    return busy + km / constants::kSpeedOfLightKmPerS;
  }

  void launch(std::uint32_t slot, NodeId next, double arrive) {
    Packet& p = pool[slot];
    if (next == p.dst) {
      // Nothing competes at the destination: settle the outcome now.
      auto& tally = tallies[pool_tally[slot]];
      if (arrive > p.deadline_s) {
        ++tally.dropped[static_cast<std::size_t>(DropReason::Deadline)];
      } else {
        ++tally.delivered;
      }
      release(slot);
      return;
    }
    p.current_node = next;
    push(arrive, EventKind::PacketForward, slot);
  }

  void finish(std::uint32_t slot, DropReason reason) {
    ++tallies[pool_tally[slot]].dropped[static_cast<std::size_t>(reason)];
    release(slot);
  }

  void on_hop(double t, std::uint32_t slot) {
    Packet& p = pool[slot];
    const auto& g = generation_of(p);
    auto d = forward(p, *g.routes, *g.snapshot, constellation, cost, t);
    switch (d.kind) {
      case HopDecision::Kind::Delivered:
        ++tallies[pool_tally[slot]].delivered;
        release(slot);
        return;
      case HopDecision::Kind::Dropped:
        finish(slot, d.reason);
        return;
      case HopDecision::Kind::Progressed:
        if (auto arrive = transmit(p, d, t)) {
          launch(slot, d.next, *arrive);
        } else {
          finish(slot, last_drop);
        }
        return;
    }
  }

  void run() {
    const double duration = sc.duration_s;
    const auto samples = static_cast<std::size_t>(std::floor(duration / cost.window_s + 1e-9));
    for (std::size_t k = 0; k <= samples; ++k) {
      push(static_cast<double>(k) * cost.window_s, EventKind::MetricsSample, 0);
    }
    const auto refreshes = snapshot_count(duration, sc.refresh_s);
    for (std::size_t k = 0; k < refreshes; ++k) {
      const double t = static_cast<double>(k) * sc.refresh_s;
      push(t, EventKind::IdleScan, 0);
      push(t, EventKind::TopologyRefresh, 0);
      push(t, EventKind::RouteRecompute, 0);
    }
    for (std::size_t i = 0; i < flows.size(); ++i) {
      if (phase[i] < duration) push(phase[i], EventKind::PacketArrival, static_cast<std::uint32_t>(i));
    }

    std::uint64_t hash = kFnvOffset;
    while (!queue.empty() && queue.top().t_s <= duration) {
      const Event e = queue.top();
      queue.pop();
      ++audit.events;
      std::uint64_t bits;
      std::memcpy(&bits, &e.t_s, sizeof bits);
      hash = (hash ^ bits) * kFnvPrime;
      hash = (hash ^ (static_cast<std::uint64_t>(e.kind) << 32 | e.payload)) * kFnvPrime;
      switch (e.kind) {
        case EventKind::PacketArrival: on_send(e.t_s, e.payload); break;
        case EventKind::PacketForward: on_hop(e.t_s, e.payload); break;
        case EventKind::MetricsSample: on_sample(e.t_s); break;
        case EventKind::IdleScan: on_idle_scan(e.t_s); break;
        case EventKind::TopologyRefresh: on_refresh(e.t_s); break;
        case EventKind::RouteRecompute: on_recompute(e.t_s); break;
      }
    }
    audit.trace_hash = hash;

    // Packets already sent finish their journey (bounded by their deadline); nothing new
    // is generated or sampled past the horizon.
    while (!queue.empty()) {
      const Event e = queue.top();
      queue.pop();
      if (e.kind == EventKind::PacketForward) on_hop(e.t_s, e.payload);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (low_power_since[i] >= 0.0) {
        trace.low_power.push_back({NodeId{static_cast<std::uint16_t>(i)}, low_power_since[i], duration});
      }
    }
    std::sort(trace.low_power.begin(), trace.low_power.end(),
              [](const LowPowerSpan& a, const LowPowerSpan& b) {
                return std::tie(a.start_s, a.node_id) < std::tie(b.start_s, b.node_id);
              });
    std::sort(tallies.begin(), tallies.end(), [](const PacketTally& a, const PacketTally& b) {
      return std::tie(a.flow_id, a.header_bytes) < std::tie(b.flow_id, b.header_bytes);
    });
    trace.packets = tallies;
  }
};

}  // namespace

RunResult run(const Scenario& scenario, ProtocolKind protocol, double load_fraction,
              std::uint64_t seed) {
  if (auto issues = validate(scenario); !issues.empty()) throw ScenarioInvalid(std::move(issues));
  if (load_fraction < 0.0 || load_fraction > 1.0) {
    throw ScenarioInvalid({{0, "load", "load must be in [0, 1]"}});
  }
  Simulation sim(scenario, protocol, load_fraction, seed);
  sim.run();
  RunResult out;
  out.trace = std::move(sim.trace);
  out.audit = sim.audit;
  out.summary = aggregate(out.trace);
  return out;
}

}  // namespace leosim
