// Randomised checks of invariants that hold for any input.
#include <gtest/gtest.h>

#include <random>
#include <set>

#include "leosim/engine.hpp"

using namespace leosim;

namespace {

const Constellation& net() {
  static const Constellation c = Constellation::lightspeed();
  return c;
}

std::vector<NodeResources> random_resources(std::mt19937_64& rng, double sleep_p) {
  std::uniform_real_distribution<double> cpu(0.0, 100.0);
  std::bernoulli_distribution asleep(sleep_p);
  auto res = initial_resources(net().node_count());
  for (std::size_t i = 0; i < net().satellite_count(); ++i) {
    res[i].cpu_pct = cpu(rng);
    res[i].low_power = asleep(rng);
  }
  return res;
}

}  // namespace

TEST(Property, SnapshotLinksRespectGeometryAndPower) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> when(0.0, 86400.0);
  for (int trial = 0; trial < 25; ++trial) {
    const double t = when(rng);
    const auto res = random_resources(rng, 0.2);
    const auto snap = build_snapshot(net(), t, res);
    std::set<std::pair<NodeId, NodeId>> seen;
    for (const auto& l : snap.links()) {
      EXPECT_TRUE(seen.insert({l.endpoint_a, l.endpoint_b}).second);
      EXPECT_TRUE(net().visible(l.endpoint_a, l.endpoint_b, t));
      const bool sleepy = res[l.endpoint_a.value].low_power || res[l.endpoint_b.value].low_power;
      EXPECT_EQ(l.state == LinkState::Active, !sleepy);
      EXPECT_FALSE(net().is_ground(l.endpoint_a) && net().is_ground(l.endpoint_b));
    }
  }
}

TEST(Property, RoutesAreSimpleAdjacentAndActive) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> when(0.0, 3600.0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto res = random_resources(rng, 0.1);
    const auto snap = build_snapshot(net(), when(rng), res);
    std::vector<FlowSpec> flows;
    for (std::uint16_t a = 198; a < 208; ++a) {
      for (std::uint16_t b = 198; b < 208; ++b) {
        if (a != b) flows.push_back({static_cast<std::uint32_t>(flows.size()), NodeId{a}, NodeId{b}});
      }
    }
    const auto proto = static_cast<ProtocolKind>(trial % 4);
    const auto rs = build_routeset(snap, proto, flows);
    std::set<std::uint32_t> unrouted(rs.unrouted.begin(), rs.unrouted.end());
    for (const auto& f : flows) {
      const auto p = hop_sequence(rs, f);
      if (unrouted.count(f.flow_id)) continue;
      ASSERT_TRUE(p.has_value()) << to_string(proto);
      std::set<NodeId> uniq(p->hops.begin(), p->hops.end());
      EXPECT_EQ(uniq.size(), p->hops.size());
      for (std::size_t i = 0; i + 1 < p->hops.size(); ++i) {
        const auto idx = snap.link_index(p->hops[i], p->hops[i + 1]);
        ASSERT_TRUE(idx.has_value());
        EXPECT_EQ(snap.links()[*idx].state, LinkState::Active);
        if (i > 0) EXPECT_TRUE(net().is_satellite(p->hops[i]));
      }
    }
  }
}

TEST(Property, GreenWeightsBoundedAndMonotone) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto res = random_resources(rng, 0.0);
    const auto snap = build_snapshot(net(), 60.0 * trial, res);
    GreenParams p;
    p.baseline = 100.0 + trial * 10.0;
    const auto w = calculate_weights(snap, p);
    for (std::size_t i = 0; i < snap.links().size(); ++i) {
      const auto& l = snap.links()[i];
      const double worst = std::max(res[l.endpoint_a.value].cpu_pct, res[l.endpoint_b.value].cpu_pct);
      if (worst > p.cpu_th_pct) {
        EXPECT_EQ(w.weights[i], 0.0);
      } else {
        EXPECT_DOUBLE_EQ(w.weights[i], p.baseline - worst);
      }
    }
  }
}

TEST(Property, SegmentListsRoundTripThroughExpansion) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> when(0.0, 3600.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto snap = build_snapshot(net(), when(rng), initial_resources(net().node_count()));
    NextHopTable table(std::make_shared<const RoutingGraph>(RoutingGraph::unit(snap)));
    const NodeId src{static_cast<std::uint16_t>(198 + rng() % 10)};
    NodeId dst{static_cast<std::uint16_t>(198 + rng() % 10)};
    if (dst == src) continue;
    const auto p = table.walk(src, dst);
    ASSERT_TRUE(p.has_value());
    for (bool waypoint : {false, true}) {
      const auto sl = encode_segments(p->hops, table, waypoint);
      EXPECT_EQ(sl.sids.back(), dst);
      if (waypoint) EXPECT_GE(sl.waypoints(), 1);
      EXPECT_EQ(expand_segments(src, sl, table)->hops, p->hops);
      // Walking the list with srv6_process visits every SID in order.
      SegmentList cur = sl;
      cur.segments_left = static_cast<int>(sl.sids.size());
      NodeId at = src;
      std::vector<NodeId> targets;
      for (int guard = 0; guard < 16; ++guard) {
        const auto step = srv6_process(cur, at);
        if (step.delivered_locally) break;
        targets.push_back(step.next_destination);
        cur = step.updated;
        at = step.next_destination;
      }
      EXPECT_EQ(targets, sl.sids);
    }
  }
}

TEST(Property, Srv6ProcessRejectsOutOfRange) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 500; ++trial) {
    SegmentList sl;
    const int len = 1 + static_cast<int>(rng() % 6);
    for (int k = 0; k < len; ++k) sl.sids.push_back(NodeId{static_cast<std::uint16_t>(rng() % 208)});
    sl.segments_left = static_cast<int>(rng() % 10) - 2;
    if (sl.segments_left < 0 || sl.segments_left > len) {
      EXPECT_THROW(srv6_process(sl, sl.sids[0]), MalformedHeader);
    } else {
      const auto step = srv6_process(sl, sl.sids[0]);
      EXPECT_GE(step.updated.segments_left, 0);
      EXPECT_LE(step.updated.segments_left, len);
    }
  }
}

TEST(Property, QueueNeverExceedsCapacity) {
  std::mt19937_64 rng(16);
  std::exponential_distribution<double> gap(30000.0);
  std::uniform_int_distribution<int> size(64, 1500);
  LinkQueue q(20e6, 625000.0);
  double t = 0.0, last_departure = 0.0;
  for (int i = 0; i < 200000; ++i) {
    t += gap(rng);
    const auto d = q.admit(t, size(rng));
    EXPECT_LE(q.backlog_bytes(t), 625000.0 + 1e-6);
    if (d) {
      EXPECT_GE(*d, last_departure);
      last_departure = *d;
    }
  }
}

TEST(Property, RandomRunsConserveAndStayInRange) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> load(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    Scenario sc;
    sc.duration_s = 20.0 + static_cast<double>(rng() % 40);
    sc.auto_flows = 5 + static_cast<int>(rng() % 150);
    sc.queue_ms = 20.0 + static_cast<double>(rng() % 300);
    const auto proto = kAllProtocols[rng() % kAllProtocols.size()];
    const double l = load(rng);
    const auto r = run(sc, proto, l, rng());
    for (const auto& t : r.trace.packets) {
      EXPECT_EQ(t.sent, t.delivered + t.dropped_total() + t.in_flight);
    }
    const auto& s = r.summary;
    EXPECT_GE(s.pdr_pct, 0.0);
    EXPECT_LE(s.pdr_pct, 100.0);
    EXPECT_LE(s.avg_cpu_pct, s.peak_cpu_pct + 1e-12);
    EXPECT_LE(s.peak_cpu_pct, 100.0);
    EXPECT_EQ(s.snapshots, snapshot_count(sc.duration_s, sc.refresh_s));
    EXPECT_EQ(s.samples, net().node_count() * s.snapshots);
    for (std::size_t i = 1; i < r.trace.samples.size(); ++i) {
      const auto& a = r.trace.samples[i - 1];
      const auto& b = r.trace.samples[i];
      EXPECT_TRUE(a.t_s < b.t_s || (a.t_s == b.t_s && a.node_id < b.node_id));
    }
  }
}

TEST(Property, HeaderOverheadFlatForHopByHop) {
  Scenario sc;
  sc.duration_s = 30.0;
  for (auto proto : {ProtocolKind::IPv4, ProtocolKind::IPv6}) {
    const double a = run(sc, proto, 0.2, 1).summary.overhead_pct;
    const double b = run(sc, proto, 0.9, 1).summary.overhead_pct;
    EXPECT_DOUBLE_EQ(a, b);
  }
}
