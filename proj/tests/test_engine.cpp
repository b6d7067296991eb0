#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "leosim/engine.hpp"

using namespace leosim;

namespace {

Scenario short_scenario(double duration = 60.0) {
  Scenario sc;
  sc.duration_s = duration;
  return sc;
}

const Constellation& net() {
  static const Constellation c = Constellation::lightspeed();
  return c;
}

Packet packet_for(const Flow& f, double created) {
  Packet p;
  p.flow_id = f.flow_id;
  p.created_s = created;
  p.deadline_s = created + 1.0;
  p.header_bytes = f.header_bytes;
  p.payload_bytes = f.payload_bytes;
  p.current_node = f.src_gs;
  p.dst = f.dst_gs;
  return p;
}

// Copy of `snap` with the link a-b marked as lost at `lost_at`.
TopologySnapshot with_lost_link(const TopologySnapshot& snap, NodeId a, NodeId b, double lost_at) {
  auto links = snap.links();
  links.at(*snap.link_index(a, b)).lost_at_s = lost_at;
  return TopologySnapshot(snap.t_s(), snap.node_count(), std::move(links), snap.resources());
}

std::vector<FlowSpec> specs(const std::vector<Flow>& flows) {
  std::vector<FlowSpec> out;
  for (const auto& f : flows) out.push_back({f.flow_id, f.src_gs, f.dst_gs});
  return out;
}

}  // namespace

TEST(EventQueue, MatchesBinaryHeapOrder) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dt(0.0, 0.5);
  std::uniform_int_distribution<int> kind(0, 5);
  EventQueue q;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> ref;
  std::uint64_t seq = 0;
  double now = 0.0;
  for (int step = 0; step < 200000; ++step) {
    if (ref.empty() || rng() % 3 != 0) {
      // Mostly near-future events, some far beyond the wheel, some exact ties.
      double t = now + (rng() % 50 == 0 ? 100.0 * dt(rng) : dt(rng) * 1e-2);
      if (rng() % 10 == 0) t = now;
      const Event e{t, static_cast<EventKind>(kind(rng)), seq++, static_cast<std::uint32_t>(step)};
      q.push(e);
      ref.push(e);
    } else {
      ASSERT_FALSE(q.empty());
      const Event got = q.top();
      const Event want = ref.top();
      ASSERT_EQ(got.seq, want.seq);
      ASSERT_EQ(got.t_s, want.t_s);
      now = got.t_s;
      q.pop();
      ref.pop();
    }
    ASSERT_EQ(q.size(), ref.size());
  }
}

TEST(EventQueue, KindBreaksTimeTies) {
  EventQueue q;
  q.push({5.0, EventKind::RouteRecompute, 0, 0});
  q.push({5.0, EventKind::PacketArrival, 1, 0});
  q.push({5.0, EventKind::TopologyRefresh, 2, 0});
  q.push({5.0, EventKind::PacketArrival, 3, 0});
  std::vector<std::uint64_t> order;
  while (!q.empty()) {
    order.push_back(q.top().seq);
    q.pop();
  }
  EXPECT_EQ(order, (std::vector<std::uint64_t>{1, 3, 2, 0}));
}

TEST(LinkQueue, AdmitsUntilFull) {
  LinkQueue q(8000.0, 2500.0);  // 1000 B/s
  EXPECT_TRUE(q.admit(0.0, 1000).has_value());
  EXPECT_TRUE(q.admit(0.0, 1000).has_value());
  EXPECT_FALSE(q.admit(0.0, 1000).has_value());
  EXPECT_NEAR(q.backlog_bytes(0.0), 2000.0, 1e-9);
  EXPECT_NEAR(*q.admit(1.0, 500), 2.5, 1e-12);
}

TEST(LinkQueue, FifoDepartures) {
  LinkQueue q(20e6, 625000.0);
  double last = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto d = q.admit(i * 1e-5, 564);
    ASSERT_TRUE(d.has_value());
    EXPECT_GT(*d, last);
    last = *d;
  }
}

TEST(LinkQueue, FluidLimitDropFraction) {
  const double rate = 20e6;
  const int bytes = 564;
  LinkQueue q(rate, 625000.0);
  const double gap = 8.0 * bytes / (1.2 * rate);
  std::uint64_t offered = 0, dropped = 0;
  for (double t = 0.0; t < 120.0; t += gap) {
    ++offered;
    if (!q.admit(t, bytes)) ++dropped;
  }
  EXPECT_NEAR(static_cast<double>(dropped) / offered, 1.0 / 6.0, 0.005);
}

TEST(Flows, DefaultMatrixSharesLoad) {
  Scenario sc;
  const auto flows = make_flows(sc, net(), ProtocolKind::IPv4, 0.5, 1);
  ASSERT_EQ(flows.size(), 120u);
  const double share = 0.5 * 20e6 / 120.0;
  for (const auto& f : flows) {
    EXPECT_NE(f.src_gs, f.dst_gs);
    EXPECT_TRUE(net().is_ground(f.src_gs));
    EXPECT_EQ(f.payload_bytes, 512);
    EXPECT_EQ(f.header_bytes, 20);
    const double pps = f.rate_bps / f.packet_bits();
    EXPECT_DOUBLE_EQ(pps, std::round(pps));
    EXPECT_LE(std::abs(f.rate_bps - share), f.packet_bits() / 2.0 + 1e-9);
  }
  EXPECT_EQ(make_flows(sc, net(), ProtocolKind::IPv4, 0.5, 1)[7].dst_gs, flows[7].dst_gs);
  EXPECT_TRUE(make_flows(sc, net(), ProtocolKind::IPv4, 0.0, 1).empty());
}

TEST(Flows, SingleFlowGap) {
  Scenario sc;
  sc.flows = {{"london", "tokyo"}};
  const auto f = make_flows(sc, net(), ProtocolKind::IPv6, 0.5, 1).at(0);
  const double bits = 8.0 * (40 + 512);
  // Whole packets per second: within half a packet of the exact CBR gap.
  EXPECT_NEAR(f.gap_s(), bits / (0.5 * 20e6), bits / (0.5 * 20e6) * 1e-3);
  EXPECT_DOUBLE_EQ(f.gap_s(), 1.0 / std::round(0.5 * 20e6 / bits));
}

TEST(Flows, TwoFlowsOnOneGroundLinkHalveTheRate) {
  Scenario sc;
  sc.flows = {{"london", "tokyo"}, {"london", "sydney"}};
  const auto flows = make_flows(sc, net(), ProtocolKind::IPv4, 1.0, 1);
  ASSERT_EQ(flows.size(), 2u);
  EXPECT_DOUBLE_EQ(flows[0].rate_bps, flows[1].rate_bps);
  EXPECT_NEAR(flows[0].rate_bps, 10e6, 0.01 * 10e6);
  // No ground link is offered more than one link's worth.
  const auto snap = build_snapshot(net(), 0.0, initial_resources(net().node_count()));
  double busiest = 0.0;
  for (const auto& [link, bps] : ground_link_load(snap, flows)) busiest = std::max(busiest, bps);
  EXPECT_LE(busiest, 1.01 * 20e6);
}

TEST(Flows, SendTimesAreSeededCbr) {
  Scenario sc;
  sc.flows = {{"ottawa", "sydney"}};
  const auto f = make_flows(sc, net(), ProtocolKind::SRv6, 0.2, 1).at(0);
  const auto a = send_times(f, 5.0, 42);
  const auto b = send_times(f, 5.0, 42);
  const auto c = send_times(f, 5.0, 43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.front(), c.front());
  EXPECT_GE(a.front(), 0.0);
  EXPECT_LT(a.front(), f.gap_s());
  EXPECT_LT(a.back(), 5.0);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_NEAR(a[i] - a[i - 1], f.gap_s(), 1e-9);
}

TEST(Forward, DeadlineChecked) {
  Scenario sc;
  sc.flows = {{"london", "tokyo"}};
  const auto flows = make_flows(sc, net(), ProtocolKind::IPv4, 0.1, 1);
  const auto snap = build_snapshot(net(), 0.0, initial_resources(net().node_count()));
  const auto rs = compute_routeset(snap, ProtocolKind::IPv4, specs(flows));
  auto p = packet_for(flows[0], 0.0);
  EXPECT_EQ(forward(p, rs, snap, net(), sc.cost, 1.5).reason, DropReason::Deadline);
  const auto d = forward(p, rs, snap, net(), sc.cost, 0.5);
  EXPECT_EQ(d.kind, HopDecision::Kind::Progressed);
  EXPECT_DOUBLE_EQ(d.cpu_units, sc.cost.c_encap);
}

TEST(Forward, HopByHopDropsOnVanishedLink) {
  Scenario sc;
  sc.flows = {{"london", "tokyo"}};
  const auto flows = make_flows(sc, net(), ProtocolKind::IPv4, 0.1, 1);
  const auto base = build_snapshot(net(), 0.0, initial_resources(net().node_count()));
  const auto rs = compute_routeset(base, ProtocolKind::IPv4, specs(flows));
  const auto path = hop_sequence(rs, {0, flows[0].src_gs, flows[0].dst_gs}).value();
  ASSERT_GE(path.hops.size(), 4u);
  const auto snap = with_lost_link(base, path.hops[1], path.hops[2], 3.0);
  auto p = packet_for(flows[0], 4.0);
  p.current_node = path.hops[1];
  const auto d = forward(p, rs, snap, net(), sc.cost, 4.01);
  EXPECT_EQ(d.kind, HopDecision::Kind::Dropped);
  EXPECT_EQ(d.reason, DropReason::StaleLink);
  auto early = packet_for(flows[0], 2.0);
  early.current_node = path.hops[1];
  EXPECT_EQ(forward(early, rs, snap, net(), sc.cost, 2.01).kind, HopDecision::Kind::Progressed);
}

TEST(Forward, Srv6SourceFailsOverToBackup) {
  Scenario sc;
  sc.flows = {{"london", "tokyo"}};
  const auto flows = make_flows(sc, net(), ProtocolKind::SRv6, 0.1, 1);
  const auto base = build_snapshot(net(), 0.0, initial_resources(net().node_count()));
  const auto rs = compute_routeset(base, ProtocolKind::SRv6, specs(flows));
  const auto& pol = rs.policies.at(0);
  ASSERT_TRUE(pol.backup_path.has_value());
  // Lose a primary ISL that the backup does not use.
  std::size_t k = 1;
  for (; k + 2 < pol.primary_path.hops.size(); ++k) {
    const auto a = pol.primary_path.hops[k], b = pol.primary_path.hops[k + 1];
    bool shared = false;
    for (std::size_t j = 0; j + 1 < pol.backup_path->hops.size(); ++j) {
      shared |= Link{std::min(a, b), std::max(a, b)}.joins(pol.backup_path->hops[j],
                                                          pol.backup_path->hops[j + 1]);
    }
    if (!shared) break;
  }
  ASSERT_LT(k + 2, pol.primary_path.hops.size());
  const auto snap = with_lost_link(base, pol.primary_path.hops[k], pol.primary_path.hops[k + 1], 2.0);

  auto p = packet_for(flows[0], 5.0);
  const auto d = forward(p, rs, snap, net(), sc.cost, 5.0);
  EXPECT_EQ(d.kind, HopDecision::Kind::Progressed);
  EXPECT_TRUE(d.failover);
  EXPECT_TRUE(p.on_backup);
  EXPECT_EQ(d.next, pol.backup_path->hops[1]);
  EXPECT_EQ(p.header_bytes, encapsulate(ProtocolKind::SRv6, 512, &pol, true).header_bytes);

  auto q = packet_for(flows[0], 1.0);
  const auto e = forward(q, rs, snap, net(), sc.cost, 1.0);
  EXPECT_FALSE(e.failover);
  EXPECT_EQ(e.next, pol.primary_path.hops[1]);
}

TEST(Forward, Srv6WalksThePathAndChargesEndpoints) {
  Scenario sc;
  sc.flows = {{"ottawa", "singapore"}};
  const auto flows = make_flows(sc, net(), ProtocolKind::SRv6, 0.1, 1);
  const auto snap = build_snapshot(net(), 0.0, initial_resources(net().node_count()));
  const auto rs = compute_routeset(snap, ProtocolKind::SRv6, specs(flows));
  const auto& pol = rs.policies.at(0);
  auto p = packet_for(flows[0], 0.0);
  std::vector<NodeId> visited{p.current_node};
  double end_units = 0.0;
  for (int guard = 0; guard < 64; ++guard) {
    const auto d = forward(p, rs, snap, net(), sc.cost, 0.0);
    if (d.kind == HopDecision::Kind::Delivered) break;
    ASSERT_EQ(d.kind, HopDecision::Kind::Progressed);
    if (d.cpu_units == sc.cost.c_srv6_end) end_units += d.cpu_units;
    p.current_node = d.next;
    visited.push_back(d.next);
  }
  EXPECT_EQ(visited, pol.primary_path.hops);
  EXPECT_EQ(p.segments_left, 0);
  EXPECT_DOUBLE_EQ(end_units, sc.cost.c_srv6_end * (pol.primary.sids.size() - 1));
}

TEST(Forward, MplsPushSwapPop) {
  Scenario sc;
  sc.flows = {{"ottawa", "johannesburg"}};
  const auto flows = make_flows(sc, net(), ProtocolKind::MPLS, 0.1, 1);
  const auto snap = build_snapshot(net(), 0.0, initial_resources(net().node_count()));
  const auto rs = compute_routeset(snap, ProtocolKind::MPLS, specs(flows));
  const auto path = hop_sequence(rs, specs(flows)[0]).value();
  auto p = packet_for(flows[0], 0.0);
  std::vector<double> units;
  std::vector<NodeId> visited{p.current_node};
  for (int guard = 0; guard < 64; ++guard) {
    const auto d = forward(p, rs, snap, net(), sc.cost, 0.0);
    if (d.kind == HopDecision::Kind::Delivered) break;
    ASSERT_EQ(d.kind, HopDecision::Kind::Progressed);
    units.push_back(d.cpu_units);
    p.current_node = d.next;
    visited.push_back(d.next);
  }
  EXPECT_EQ(visited, path.hops);
  EXPECT_FALSE(p.label.has_value());
  ASSERT_GE(units.size(), 3u);
  EXPECT_DOUBLE_EQ(units[0], sc.cost.c_encap);
  EXPECT_DOUBLE_EQ(units[1], sc.cost.c_mpls_push);
  for (std::size_t i = 2; i < units.size(); ++i) EXPECT_DOUBLE_EQ(units[i], sc.cost.c_mpls_swap);

  auto stray = packet_for(flows[0], 0.0);
  stray.current_node = path.hops[2];
  stray.label = 9999;
  EXPECT_EQ(forward(stray, rs, snap, net(), sc.cost, 0.0).reason, DropReason::NoRoute);
}

TEST(Run, ConservationForEveryProtocol) {
  const auto sc = short_scenario(120.0);
  for (auto proto : kAllProtocols) {
    for (double load : {0.3, 1.0}) {
      const auto r = run(sc, proto, load, 5);
      std::uint64_t sent = 0, accounted = 0;
      for (const auto& t : r.trace.packets) {
        EXPECT_EQ(t.sent, t.delivered + t.dropped_total() + t.in_flight);
        sent += t.sent;
        accounted += t.delivered + t.dropped_total() + t.in_flight;
      }
      EXPECT_EQ(sent, accounted);
      EXPECT_EQ(r.summary.sent, sent);
      EXPECT_GT(sent, 0u);
      EXPECT_GE(r.summary.pdr_pct, 0.0);
      EXPECT_LE(r.summary.pdr_pct, 100.0);
      EXPECT_LE(r.summary.avg_cpu_pct, r.summary.peak_cpu_pct);
    }
  }
}

TEST(Run, Deterministic) {
  const auto sc = short_scenario(60.0);
  for (auto proto : {ProtocolKind::IPv4, ProtocolKind::MPLS, ProtocolKind::SRv6Green}) {
    const auto a = run(sc, proto, 0.7, 9);
    const auto b = run(sc, proto, 0.7, 9);
    EXPECT_EQ(a.summary, b.summary);
    EXPECT_EQ(a.trace, b.trace);
    EXPECT_EQ(a.audit.trace_hash, b.audit.trace_hash);
    EXPECT_EQ(summary_to_json(a.summary), summary_to_json(b.summary));
  }
  EXPECT_NE(run(sc, ProtocolKind::IPv4, 0.7, 9).audit.trace_hash,
            run(sc, ProtocolKind::IPv4, 0.7, 10).audit.trace_hash);
}

TEST(Run, ZeroLoadIsRecomputationFloor) {
  const auto sc = short_scenario(60.0);
  const auto v4 = run(sc, ProtocolKind::IPv4, 0.0, 1).summary;
  const auto v6 = run(sc, ProtocolKind::IPv6, 0.0, 1).summary;
  const auto sr = run(sc, ProtocolKind::SRv6, 0.0, 1).summary;
  const auto mp = run(sc, ProtocolKind::MPLS, 0.0, 1).summary;
  for (const auto& s : {v4, v6, sr, mp}) {
    EXPECT_EQ(s.sent, 0u);
    EXPECT_DOUBLE_EQ(s.pdr_pct, 100.0);
  }
  const double housekeeping = 100.0 * sc.cost.c_base_units_per_s / sc.cost.capacity_units_per_s;
  EXPECT_NEAR(sr.avg_cpu_pct, housekeeping, 1e-9);
  EXPECT_NEAR(mp.avg_cpu_pct, housekeeping, 1e-9);
  EXPECT_DOUBLE_EQ(v4.avg_cpu_pct, v6.avg_cpu_pct);
  EXPECT_GT(v4.avg_cpu_pct, housekeeping);
}

TEST(Run, RejectsLoadOutsideUnitInterval) {
  const auto sc = short_scenario(10.0);
  EXPECT_THROW(run(sc, ProtocolKind::IPv4, 1.5, 1), ScenarioInvalid);
  EXPECT_THROW(run(sc, ProtocolKind::IPv4, -0.1, 1), ScenarioInvalid);
  Scenario bad = sc;
  bad.green.cpu_th_pct = 105.0;
  EXPECT_THROW(run(bad, ProtocolKind::SRv6Green, 0.5, 1), ScenarioInvalid);
}

TEST(Run, SampleCadence) {
  const auto sc = short_scenario(100.0);
  const auto r = run(sc, ProtocolKind::SRv6, 0.2, 1);
  EXPECT_EQ(r.audit.snapshots, 11u);
  EXPECT_EQ(r.summary.snapshots, 11u);
  EXPECT_EQ(r.trace.samples.size(), 208u * 11u);
  EXPECT_EQ(r.summary.samples, 208u * 11u);
}

TEST(Run, GreenAuditClean) {
  const auto r = run(short_scenario(300.0), ProtocolKind::SRv6Green, 1.0, 2);
  EXPECT_GT(r.audit.green_paths_checked, 0u);
  EXPECT_EQ(r.audit.overloaded_path_links, 0u);
}
