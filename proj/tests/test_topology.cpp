#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "leosim/topology.hpp"

using namespace leosim;

namespace {

const Constellation& net() {
  static const Constellation c = Constellation::lightspeed();
  return c;
}

TopologySnapshot snap_at(double t, std::vector<NodeResources> res = {}) {
  if (res.empty()) res = initial_resources(net().node_count());
  return build_snapshot(net(), t, std::move(res));
}

bool contains(const std::vector<NodeId>& v, NodeId x) { return std::find(v.begin(), v.end(), x) != v.end(); }

}  // namespace

TEST(GridNeighbors, PolarRingAdjacency) {
  const auto sat = net().satellite_id(0, 2, 5);
  const auto n = grid_isl_neighbors(net(), sat, 0.0);
  EXPECT_TRUE(contains(n, net().satellite_id(0, 2, 4)));
  EXPECT_TRUE(contains(n, net().satellite_id(0, 2, 6)));
  EXPECT_LE(n.size(), 4u);
}

TEST(GridNeighbors, PolarSeamSuppressed) {
  for (double t : {0.0, 600.0, 1800.0}) {
    for (int slot = 0; slot < 13; ++slot) {
      const auto sat = net().satellite_id(0, 0, slot);
      for (auto nb : grid_isl_neighbors(net(), sat, t)) {
        const auto s = net().slot_of(nb);
        EXPECT_EQ(s.shell_index, 0u);
        EXPECT_TRUE(s.plane == 0 || s.plane == 1) << "plane " << s.plane;
        if (s.plane == 1) EXPECT_TRUE(net().visible(sat, nb, t));
      }
    }
  }
}

TEST(GridNeighbors, InclinedSixSlotRing) {
  const auto sat = net().satellite_id(1, 19, 0);
  const auto n = grid_isl_neighbors(net(), sat, 0.0);
  EXPECT_TRUE(contains(n, net().satellite_id(1, 19, 1)));
  EXPECT_TRUE(contains(n, net().satellite_id(1, 19, 5)));
}

TEST(Snapshot, ColdStartResources) {
  const auto s = snap_at(0.0);
  EXPECT_EQ(s.node_count(), 208u);
  for (const auto& r : s.resources()) {
    EXPECT_EQ(r.cpu_pct, 0.0);
    EXPECT_FALSE(r.low_power);
  }
}

TEST(Snapshot, Cadence) {
  EXPECT_EQ(snapshot_count(3600.0, 10.0), 361u);
  EXPECT_EQ(snapshot_count(3605.0, 10.0), 361u);
  EXPECT_EQ(snapshot_count(0.0, 10.0), 1u);
  EXPECT_EQ(snapshot_count(95.0, 10.0), 10u);
}

TEST(Snapshot, LinksHonourVisibilityAndShells) {
  for (double t : {0.0, 730.0, 2400.0}) {
    const auto s = snap_at(t);
    EXPECT_EQ(s.node_count(), 208u);
    for (const auto& l : s.links()) {
      EXPECT_LT(l.endpoint_a, l.endpoint_b);
      EXPECT_DOUBLE_EQ(l.capacity_bps, 20'000'000.0);
      EXPECT_TRUE(net().visible(l.endpoint_a, l.endpoint_b, t));
      if (l.kind == LinkKind::ISL) {
        EXPECT_EQ(net().slot_of(l.endpoint_a).shell_index, net().slot_of(l.endpoint_b).shell_index);
      } else {
        EXPECT_TRUE(net().is_satellite(l.endpoint_a));
        EXPECT_TRUE(net().is_ground(l.endpoint_b));
      }
      EXPECT_GT(l.lost_at_s, t);
    }
  }
}

TEST(Snapshot, IntraPlaneLinksAlwaysPresent) {
  for (double t : {0.0, 1000.0, 3600.0}) {
    const auto s = snap_at(t);
    for (std::size_t sh = 0; sh < 2; ++sh) {
      const auto& shell = net().shells()[sh];
      for (int p = 0; p < shell.plane_count; ++p) {
        for (int k = 0; k < shell.sats_per_plane; ++k) {
          const auto a = net().satellite_id(sh, p, k);
          const auto b = net().satellite_id(sh, p, (k + 1) % shell.sats_per_plane);
          const auto idx = s.link_index(a, b);
          ASSERT_TRUE(idx.has_value());
          EXPECT_EQ(s.links()[*idx].state, LinkState::Active);
        }
      }
    }
  }
}

TEST(Snapshot, LowPowerEndpointDeactivatesLinks) {
  auto res = initial_resources(net().node_count());
  res[5].low_power = true;
  const auto s = snap_at(10.0, res);
  std::size_t touched = 0;
  for (const auto& l : s.links()) {
    const bool asleep = res[l.endpoint_a.value].low_power || res[l.endpoint_b.value].low_power;
    if (asleep) {
      ++touched;
      EXPECT_EQ(l.state, LinkState::LowPower);
    } else {
      EXPECT_EQ(l.state, LinkState::Active);
    }
  }
  EXPECT_GE(touched, 2u);
}

TEST(Snapshot, LostAtMarksFirstFailedProbe) {
  const double t = 600.0;
  const auto s = snap_at(t);
  std::size_t lost = 0;
  for (const auto& l : s.links()) {
    if (!std::isfinite(l.lost_at_s)) {
      for (int k = 1; k <= 10; ++k) EXPECT_TRUE(net().visible(l.endpoint_a, l.endpoint_b, t + k));
      continue;
    }
    ++lost;
    EXPECT_FALSE(net().visible(l.endpoint_a, l.endpoint_b, l.lost_at_s));
    for (double tp = t + 1.0; tp < l.lost_at_s; tp += 1.0) {
      EXPECT_TRUE(net().visible(l.endpoint_a, l.endpoint_b, tp));
    }
  }
  EXPECT_GT(lost, 0u);
}

TEST(Snapshot, AdjacencyAndLookup) {
  const auto s = snap_at(0.0);
  for (std::size_t i = 0; i < s.links().size(); ++i) {
    const auto& l = s.links()[i];
    EXPECT_EQ(s.link_index(l.endpoint_a, l.endpoint_b), i);
    EXPECT_EQ(s.link_index(l.endpoint_b, l.endpoint_a), i);
  }
  EXPECT_FALSE(s.link_index(NodeId{198}, NodeId{199}).has_value());
  for (std::uint16_t u = 0; u < 208; ++u) {
    const auto& adj = s.adjacency(NodeId{u});
    EXPECT_TRUE(std::is_sorted(adj.begin(), adj.end(),
                               [](const auto& a, const auto& b) { return a.neighbor < b.neighbor; }));
  }
  EXPECT_EQ(s.active_link_count(), s.links().size());
}

TEST(Snapshot, ExportOneLinkPerLine) {
  const auto s = snap_at(0.0);
  const auto text = export_snapshot(s, net());
  std::istringstream in(text);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    ++rows;
    std::istringstream fields(line);
    std::string t, a, b, kind, state;
    fields >> t >> a >> b >> kind >> state;
    EXPECT_FALSE(state.empty()) << line;
  }
  EXPECT_EQ(rows, s.links().size());
}
