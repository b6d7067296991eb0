#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>

namespace leosim {

/// Index of a node (satellite or ground station) in the network graph.
/// Satellites come first (polar shell, then inclined shell), ground stations last.
struct NodeId {
  std::uint16_t value = 0;

  constexpr auto operator<=>(const NodeId&) const = default;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

inline double distance_km(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

namespace constants {
inline constexpr double kEarthRadiusKm = 6378.137;
inline constexpr double kMuKm3PerS2 = 398600.4418;
inline constexpr double kEarthRotationRadPerS = 7.2921159e-5;
inline constexpr double kSpeedOfLightKmPerS = 299792.458;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;
}  // namespace constants

}  // namespace leosim

template <>
struct std::hash<leosim::NodeId> {
  std::size_t operator()(const leosim::NodeId& id) const noexcept { return id.value; }
};
