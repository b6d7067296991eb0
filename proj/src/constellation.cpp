#include "leosim/constellation.hpp"

#include <algorithm>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace leosim {

using constants::kDegToRad;
using constants::kEarthRadiusKm;

std::string to_string(ShellId id) { return id == ShellId::Polar ? "polar" : "inclined"; }

double OrbitalShell::mean_motion_rad_per_s() const {
  const double r = radius_km();
  return std::sqrt(constants::kMuKm3PerS2 / (r * r * r));
}

double OrbitalShell::period_s() const { return 2.0 * constants::kPi / mean_motion_rad_per_s(); }

OrbitalShell default_polar_shell() {
  return OrbitalShell{.shell_id = ShellId::Polar,
                      .sat_count = 78,
                      .altitude_km = 1015.0,
                      .inclination_deg = 99.5,
                      .plane_count = 6,
                      .sats_per_plane = 13,
                      .phasing_offset_deg = 360.0 / 13.0 / 2.0,
                      .raan_spread_deg = 180.0};
}

OrbitalShell default_inclined_shell() {
  return OrbitalShell{.shell_id = ShellId::Inclined,
                      .sat_count = 120,
                      .altitude_km = 1325.0,
                      .inclination_deg = 50.88,
                      .plane_count = 20,
                      .sats_per_plane = 6,
                      .phasing_offset_deg = 360.0 / 120.0,
                      .raan_spread_deg = 360.0};
}

std::vector<GroundStation> default_ground_stations() {
  // Spread over both hemispheres; Svalbard is the polar site.
  return {
      {{}, "ottawa", 45.42, -75.70, true},     {{}, "inuvik", 68.36, -133.72, false},
      {{}, "svalbard", 78.23, 15.41, false},   {{}, "london", 51.51, -0.13, false},
      {{}, "tokyo", 35.68, 139.69, false},     {{}, "honolulu", 21.31, -157.86, false},
      {{}, "singapore", 1.35, 103.82, false},  {{}, "sao_paulo", -23.55, -46.63, false},
      {{}, "johannesburg", -26.20, 28.05, false}, {{}, "sydney", -33.87, 151.21, true},
  };
}

namespace {

Vec3 orbit_position(const OrbitalShell& shell, int plane, int slot, double t) {
  const double raan = plane * shell.raan_spread_deg / shell.plane_count * kDegToRad;
  const double u0 =
      (360.0 * slot / shell.sats_per_plane + plane * shell.phasing_offset_deg) * kDegToRad;
  const double u = u0 + shell.mean_motion_rad_per_s() * t;
  const double inc = shell.inclination_deg * kDegToRad;
  const double r = shell.radius_km();
  const double cu = std::cos(u), su = std::sin(u);
  const double co = std::cos(raan), so = std::sin(raan);
  const double ci = std::cos(inc), si = std::sin(inc);
  return {r * (co * cu - so * su * ci), r * (so * cu + co * su * ci), r * (su * si)};
}

bool is_surface_point(const Vec3& p) { return p.norm() < kEarthRadiusKm + 1.0; }

}  // namespace

std::vector<SatelliteEphemeris> propagate(const OrbitalShell& shell, double t,
                                          std::uint16_t first_id) {
  std::vector<SatelliteEphemeris> out;
  out.reserve(static_cast<std::size_t>(shell.sat_count));
  for (int p = 0; p < shell.plane_count; ++p) {
    for (int s = 0; s < shell.sats_per_plane; ++s) {
      const auto id = static_cast<std::uint16_t>(first_id + p * shell.sats_per_plane + s);
      out.push_back({NodeId{id}, shell.shell_id, p, s, orbit_position(shell, p, s, t), t});
    }
  }
  return out;
}

Vec3 ground_position_eci(double latitude_deg, double longitude_deg, double t) {
  const double lat = latitude_deg * kDegToRad;
  const double lon = longitude_deg * kDegToRad + constants::kEarthRotationRadPerS * t;
  return {kEarthRadiusKm * std::cos(lat) * std::cos(lon),
          kEarthRadiusKm * std::cos(lat) * std::sin(lon), kEarthRadiusKm * std::sin(lat)};
}

double elevation_deg(const Vec3& ground, const Vec3& sat) {
  const Vec3 d = sat - ground;
  const double range = d.norm();
  const double gnorm = ground.norm();
  if (range <= 0.0 || gnorm <= 0.0) return 90.0;
  const double sin_el = std::clamp(d.dot(ground) / (range * gnorm), -1.0, 1.0);
  return std::asin(sin_el) / kDegToRad;
}

bool segment_clears_sphere(const Vec3& a, const Vec3& b, double radius_km) {
  const Vec3 ab = b - a;
  const double len2 = ab.dot(ab);
  double s = len2 > 0.0 ? -a.dot(ab) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  const Vec3 closest = a + ab * s;
  return closest.norm() > radius_km;
}

bool visible(const Vec3& a, const Vec3& b, const VisibilityParams& params) {
  const bool a_ground = is_surface_point(a);
  const bool b_ground = is_surface_point(b);
  if (a_ground && b_ground) return false;
  if (a_ground) return elevation_deg(a, b) >= params.elevation_mask_deg;
  if (b_ground) return elevation_deg(b, a) >= params.elevation_mask_deg;
  return segment_clears_sphere(a, b, kEarthRadiusKm + params.isl_margin_km);
}

Constellation::Constellation(std::vector<OrbitalShell> shells,
                             std::vector<GroundStation> ground_stations,
                             VisibilityParams visibility)
    : shells_(std::move(shells)),
      ground_stations_(std::move(ground_stations)),
      visibility_(visibility) {
  for (const auto& shell : shells_) {
    if (shell.plane_count <= 0 || shell.sats_per_plane <= 0 ||
        shell.plane_count * shell.sats_per_plane != shell.sat_count) {
      throw std::invalid_argument("shell plane layout does not match its satellite count");
    }
    shell_first_id_.push_back(satellite_count_);
    satellite_count_ += static_cast<std::size_t>(shell.sat_count);
  }
  if (node_count() > 0xFFFF) throw std::invalid_argument("too many nodes");
  for (std::size_t i = 0; i < ground_stations_.size(); ++i) {
    ground_stations_[i].node_id = NodeId{static_cast<std::uint16_t>(satellite_count_ + i)};
  }

  for (std::size_t si = 0; si < shells_.size(); ++si) {
    const auto& shell = shells_[si];
    auto add = [&](NodeId a, NodeId b) {
      if (a == b) return;
      if (b < a) std::swap(a, b);
      isl_candidates_.emplace_back(a, b);
    };
    for (int p = 0; p < shell.plane_count; ++p) {
      for (int s = 0; s < shell.sats_per_plane; ++s) {
        const NodeId self = satellite_id(si, p, s);
        if (shell.sats_per_plane > 1) add(self, satellite_id(si, p, (s + 1) % shell.sats_per_plane));
        const bool last_plane = p + 1 == shell.plane_count;
        if (shell.plane_count > 1 && (!last_plane || !shell.has_seam())) {
          add(self, satellite_id(si, (p + 1) % shell.plane_count, s));
        }
      }
    }
  }
  std::sort(isl_candidates_.begin(), isl_candidates_.end());
  isl_candidates_.erase(std::unique(isl_candidates_.begin(), isl_candidates_.end()),
                        isl_candidates_.end());
}

Constellation Constellation::lightspeed() {
  return Constellation({default_polar_shell(), default_inclined_shell()},
                       default_ground_stations());
}

const GroundStation& Constellation::ground_station(NodeId id) const {
  if (!is_ground(id) || id.value >= node_count()) {
    throw std::out_of_range("not a ground station id");
  }
  return ground_stations_[id.value - satellite_count_];
}

Constellation::Slot Constellation::slot_of(NodeId sat) const {
  if (!is_satellite(sat)) throw std::out_of_range("not a satellite id");
  std::size_t si = shells_.size() - 1;
  while (shell_first_id_[si] > sat.value) --si;
  const auto local = static_cast<int>(sat.value - shell_first_id_[si]);
  const int per_plane = shells_[si].sats_per_plane;
  return {si, local / per_plane, local % per_plane};
}

NodeId Constellation::satellite_id(std::size_t shell_index, int plane, int slot) const {
  const auto& shell = shells_.at(shell_index);
  return NodeId{static_cast<std::uint16_t>(shell_first_id_[shell_index] +
                                           plane * shell.sats_per_plane + slot)};
}

std::string Constellation::node_name(NodeId id) const {
  if (is_ground(id)) return ground_station(id).name;
  const Slot s = slot_of(id);
  const char prefix = shells_[s.shell_index].shell_id == ShellId::Polar ? 'P' : 'I';
  return std::string(1, prefix) + std::to_string(s.plane) + "-" + std::to_string(s.slot);
}

Vec3 Constellation::position(NodeId id, double t) const {
  if (is_ground(id)) {
    const auto& gs = ground_station(id);
    return ground_position_eci(gs.latitude_deg, gs.longitude_deg, t);
  }
  const Slot s = slot_of(id);
  return orbit_position(shells_[s.shell_index], s.plane, s.slot, t);
}

std::vector<Vec3> Constellation::positions(double t) const {
  std::vector<Vec3> out;
  out.reserve(node_count());
  for (std::size_t si = 0; si < shells_.size(); ++si) {
    for (const auto& e : propagate(shells_[si], t)) out.push_back(e.position_eci);
  }
  for (const auto& gs : ground_stations_) {
    out.push_back(ground_position_eci(gs.latitude_deg, gs.longitude_deg, t));
  }
  return out;
}

bool Constellation::visible(NodeId a, NodeId b, double t) const {
  return leosim::visible(position(a, t), position(b, t), visibility_);
}

std::vector<std::pair<NodeId, NodeId>> access_candidate_pairs(const Constellation& c) {
  std::vector<std::pair<NodeId, NodeId>> pairs = c.grid_isl_candidates();
  for (std::size_t s = 0; s < c.satellite_count(); ++s) {
    for (const auto& gs : c.ground_stations()) {
      pairs.emplace_back(NodeId{static_cast<std::uint16_t>(s)}, gs.node_id);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

namespace {

std::vector<double> sample_times(double duration_s, double step_s) {
  if (!(duration_s > 0.0) || !(step_s > 0.0)) {
    throw std::invalid_argument("duration and step must be positive");
  }
  std::vector<double> times;
  const auto n = static_cast<std::size_t>(std::floor(duration_s / step_s + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) times.push_back(static_cast<double>(k) * step_s);
  return times;
}

// Positions for every sample instant, indexed [sample][node].
std::vector<std::vector<Vec3>> sample_positions(const Constellation& c,
                                                const std::vector<double>& times) {
  std::vector<std::vector<Vec3>> out(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) out[k] = c.positions(times[k]);
  return out;
}

void scan_pair(const Constellation& c, const std::pair<NodeId, NodeId>& pair,
               const std::vector<double>& times, const std::vector<std::vector<Vec3>>& pos,
               double duration_s, double step_s, std::vector<AccessInterval>& out) {
  bool open = false;
  double start = 0.0;
  double last = 0.0;
  auto close = [&] {
    const double end = std::min(last + step_s, duration_s);
    if (end > start) out.push_back({pair.first, pair.second, start, end});
    open = false;
  };
  for (std::size_t k = 0; k < times.size(); ++k) {
    const bool vis = leosim::visible(pos[k][pair.first.value], pos[k][pair.second.value],
                                     c.visibility());
    if (vis) {
      if (!open) {
        open = true;
        start = times[k];
      }
      last = times[k];
    } else if (open) {
      close();
    }
  }
  if (open) close();
}

}  // namespace

std::vector<AccessInterval> compute_access_intervals_serial(const Constellation& c,
                                                            double duration_s, double step_s) {
  const auto times = sample_times(duration_s, step_s);
  const auto pos = sample_positions(c, times);
  std::vector<AccessInterval> out;
  for (const auto& pair : access_candidate_pairs(c)) {
    scan_pair(c, pair, times, pos, duration_s, step_s, out);
  }
  return out;
}

std::vector<AccessInterval> compute_access_intervals(const Constellation& c, double duration_s,
                                                     double step_s) {
  const auto times = sample_times(duration_s, step_s);
  const auto pairs = access_candidate_pairs(c);
  std::vector<std::vector<Vec3>> pos(times.size());
  std::vector<std::vector<AccessInterval>> per_pair(pairs.size());

  const auto n_times = static_cast<std::ptrdiff_t>(times.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n_times; ++k) pos[k] = c.positions(times[k]);

  const auto n_pairs = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n_pairs; ++i) {
    scan_pair(c, pairs[i], times, pos, duration_s, step_s, per_pair[i]);
  }

  std::vector<AccessInterval> out;
  for (auto& v : per_pair) out.insert(out.end(), v.begin(), v.end());
  return out;
}

}  // namespace leosim
