#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "leosim/types.hpp"

namespace leosim {

enum class ShellId : std::uint8_t { Polar, Inclined };

std::string to_string(ShellId id);

/// One circular-orbit shell laid out as `plane_count` planes of `sats_per_plane`.
///
/// Planes are spread evenly over `raan_spread_deg` of right ascension. A spread of
/// 180 degrees gives a Walker-star layout with a counter-rotating seam between the
/// last and the first plane; 360 degrees gives a Walker-delta layout with no seam.
/// Satellite k of plane p starts at argument of latitude
/// `360 * k / sats_per_plane + p * phasing_offset_deg`.
struct OrbitalShell {
  ShellId shell_id = ShellId::Polar;
  int sat_count = 0;
  double altitude_km = 0.0;
  double inclination_deg = 0.0;
  int plane_count = 0;
  int sats_per_plane = 0;
  double phasing_offset_deg = 0.0;
  double raan_spread_deg = 360.0;

  double radius_km() const { return constants::kEarthRadiusKm + altitude_km; }
  double mean_motion_rad_per_s() const;
  double period_s() const;
  bool has_seam() const { return raan_spread_deg < 359.999; }
};

/// 6 planes x 13 satellites at 1015 km, 99.5 deg, Walker-star layout.
OrbitalShell default_polar_shell();
/// 20 planes x 6 satellites at 1325 km, 50.88 deg, Walker-delta layout.
OrbitalShell default_inclined_shell();

struct SatelliteEphemeris {
  NodeId node_id;
  ShellId shell_id = ShellId::Polar;
  int plane_index = 0;
  int slot_index = 0;
  Vec3 position_eci;
  double epoch_s = 0.0;
};

struct GroundStation {
  NodeId node_id;
  std::string name;
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
  bool is_controller_site = false;
};

struct AccessInterval {
  NodeId endpoint_a;
  NodeId endpoint_b;
  double start_s = 0.0;
  double end_s = 0.0;

  bool operator==(const AccessInterval&) const = default;
};

struct VisibilityParams {
  double isl_margin_km = 80.0;
  double elevation_mask_deg = 10.0;
};

/// Satellite positions of one shell at time t (seconds since simulation start).
/// Node ids are assigned consecutively from `first_id`, plane-major.
std::vector<SatelliteEphemeris> propagate(const OrbitalShell& shell, double t,
                                          std::uint16_t first_id = 0);

/// ECI position of a point on the Earth's surface, accounting for Earth rotation
/// (Greenwich aligned with the ECI x axis at t = 0).
Vec3 ground_position_eci(double latitude_deg, double longitude_deg, double t);

/// Elevation of `sat` above the local horizon of surface point `ground`, degrees.
double elevation_deg(const Vec3& ground, const Vec3& sat);

/// True if segment a-b stays strictly outside the sphere of `radius_km` about the origin.
bool segment_clears_sphere(const Vec3& a, const Vec3& b, double radius_km);

/// Line-of-sight test. Endpoints within 1 km of the Earth's surface are treated as
/// ground points: a ground-satellite pair needs elevation >= the mask, two ground
/// points never see each other, and two satellites need the chord to clear the Earth
/// plus the atmosphere margin.
bool visible(const Vec3& a, const Vec3& b, const VisibilityParams& params = {});

/// Shells, ground stations and node numbering of the whole network.
class Constellation {
 public:
  struct Slot {
    std::size_t shell_index = 0;
    int plane = 0;
    int slot = 0;
  };

  Constellation(std::vector<OrbitalShell> shells, std::vector<GroundStation> ground_stations,
                VisibilityParams visibility = {});

  /// Default two-shell geometry with the ten default ground stations.
  static Constellation lightspeed();

  std::size_t satellite_count() const { return satellite_count_; }
  std::size_t ground_station_count() const { return ground_stations_.size(); }
  std::size_t node_count() const { return satellite_count_ + ground_stations_.size(); }

  bool is_satellite(NodeId id) const { return id.value < satellite_count_; }
  bool is_ground(NodeId id) const { return !is_satellite(id); }

  const std::vector<OrbitalShell>& shells() const { return shells_; }
  const std::vector<GroundStation>& ground_stations() const { return ground_stations_; }
  const GroundStation& ground_station(NodeId id) const;
  const VisibilityParams& visibility() const { return visibility_; }

  Slot slot_of(NodeId sat) const;
  NodeId satellite_id(std::size_t shell_index, int plane, int slot) const;
  std::string node_name(NodeId id) const;

  Vec3 position(NodeId id, double t) const;
  /// Positions of every node at time t, indexed by NodeId::value.
  std::vector<Vec3> positions(double t) const;

  bool visible(NodeId a, NodeId b, double t) const;

  /// Static +Grid candidate ISLs (a < b): ring neighbours within a plane and same-slot
  /// neighbours in adjacent planes of the same shell, never across a Walker-star seam.
  const std::vector<std::pair<NodeId, NodeId>>& grid_isl_candidates() const {
    return isl_candidates_;
  }

 private:
  std::vector<OrbitalShell> shells_;
  std::vector<GroundStation> ground_stations_;
  VisibilityParams visibility_;
  std::vector<std::size_t> shell_first_id_;
  std::size_t satellite_count_ = 0;
  std::vector<std::pair<NodeId, NodeId>> isl_candidates_;
};

/// The ten default ground stations; two are controller sites, one is polar.
std::vector<GroundStation> default_ground_stations();

/// Every candidate pair (grid ISLs and every ground-satellite pair) with the maximal
/// runs of sampled visibility over [0, duration_s]. Samples are taken at k * step_s;
/// a run whose last visible sample is t_last ends at min(t_last + step_s, duration_s).
/// Output is sorted by (endpoint_a, endpoint_b, start_s).
std::vector<AccessInterval> compute_access_intervals(const Constellation& constellation,
                                                     double duration_s, double step_s);

/// Single-threaded reference for compute_access_intervals.
std::vector<AccessInterval> compute_access_intervals_serial(const Constellation& constellation,
                                                            double duration_s, double step_s);

/// All candidate pairs scanned by compute_access_intervals, in output order.
std::vector<std::pair<NodeId, NodeId>> access_candidate_pairs(const Constellation& constellation);

}  // namespace leosim
