#pragma once

#include <cstddef>
#include <iosfwd>
#include <numbers>
#include <vector>

#include <Eigen/Core>

namespace ambidoa {

using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Azimuth in (-pi, pi], elevation in [-pi/2, pi/2]. At the poles the azimuth
// is pinned to 0 so that conversions are total functions.
struct Direction {
  double azimuth = 0.0;
  double elevation = 0.0;

  Vec3 unit() const;
  bool operator==(const Direction&) const = default;
};

// Maps any angle into (-pi, pi].
double wrap_azimuth(double theta);

Vec3 to_cartesian(double azimuth, double elevation);
inline Vec3 to_cartesian(const Direction& d) { return to_cartesian(d.azimuth, d.elevation); }

// Normalizes first; throws std::invalid_argument on a zero (or non-finite) vector.
Direction to_spherical(const Vec3& v);

// Haversine great-circle distance on the unit sphere, radians.
double great_circle(const Direction& a, const Direction& b);

// Quasi-uniform ring grid. Elevation rings are spaced evenly from pole to
// pole (step = 180 / round(180 / resolution) degrees, so both poles are
// always centers); the ring at elevation phi holds
// max(1, round(360 cos(phi) / resolution)) azimuths starting at 0.
class SphereGrid {
 public:
  explicit SphereGrid(double resolution_deg);

  double resolution_deg() const { return resolution_deg_; }
  std::size_t size() const { return centers_.size(); }
  const std::vector<Direction>& centers() const { return centers_; }
  const Direction& center(std::size_t i) const { return centers_.at(i); }
  const Vec3& center_unit(std::size_t i) const { return units_.at(i); }

  // Smallest great-circle distance; ties go to the lowest index.
  std::size_t nearest_class(const Direction& d) const;
  std::size_t nearest_class(const Vec3& v) const;

  // Max over probes of the distance to the nearest center, degrees.
  double coverage_radius_deg(const std::vector<Direction>& probes) const;

  // CSV rows "index,azimuth_deg,elevation_deg" with a header line.
  void write_csv(std::ostream& os) const;

 private:
  struct Ring {
    double elevation;
    std::size_t first;
    std::size_t count;
  };

  double resolution_deg_;
  std::vector<Direction> centers_;
  std::vector<Vec3> units_;
  std::vector<Ring> rings_;
};

// Throws std::invalid_argument unless 1 <= resolution <= 90.
SphereGrid build_grid(double resolution_deg);

// Deterministic uniform directions on the sphere (used by probes and tests).
std::vector<Direction> random_directions(std::size_t count, unsigned long long seed);

}  // namespace ambidoa
