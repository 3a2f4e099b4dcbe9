#include "ambidoa/spheregrid.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

namespace ambidoa {

Vec3 Direction::unit() const { return to_cartesian(azimuth, elevation); }

double wrap_azimuth(double theta) {
  double t = std::remainder(theta, 2.0 * kPi);  // [-pi, pi]
  if (t <= -kPi) t += 2.0 * kPi;
  return t;
}

Vec3 to_cartesian(double azimuth, double elevation) {
  const double ce = std::cos(elevation);
  return {std::cos(azimuth) * ce, std::sin(azimuth) * ce, std::sin(elevation)};
}

Direction to_spherical(const Vec3& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("to_spherical: zero or non-finite vector");
  }
  const Vec3 u = v / n;
  const double rho = std::hypot(u.x(), u.y());
  Direction d;
  d.elevation = std::atan2(u.z(), rho);
  d.azimuth = rho == 0.0 ? 0.0 : wrap_azimuth(std::atan2(u.y(), u.x()));
  return d;
}

double great_circle(const Direction& a, const Direction& b) {
  const double s_el = std::sin(0.5 * (b.elevation - a.elevation));
  const double s_az = std::sin(0.5 * (b.azimuth - a.azimuth));
  double h = s_el * s_el + std::cos(a.elevation) * std::cos(b.elevation) * s_az * s_az;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * std::asin(std::sqrt(h));
}

SphereGrid::SphereGrid(double resolution_deg) : resolution_deg_(resolution_deg) {
  if (!(resolution_deg > 0.0 && resolution_deg <= 180.0)) {
    throw std::invalid_argument("SphereGrid: resolution must be in (0, 180] degrees");
  }
  const auto n_steps = std::max<long>(1, std::lround(180.0 / resolution_deg));
  const double step = 180.0 / static_cast<double>(n_steps);
  for (long k = 0; k <= n_steps; ++k) {
    const double el_deg = -90.0 + step * static_cast<double>(k);
    const double el = deg2rad(el_deg);
    std::size_t count = 1;
    if (k != 0 && k != n_steps) {
      count = static_cast<std::size_t>(
          std::max(1L, std::lround(360.0 * std::cos(el) / resolution_deg)));
    }
    rings_.push_back({k == 0 ? -kPi / 2 : (k == n_steps ? kPi / 2 : el), centers_.size(), count});
    for (std::size_t j = 0; j < count; ++j) {
      Direction d;
      d.elevation = rings_.back().elevation;
      d.azimuth = count == 1 ? 0.0
                             : wrap_azimuth(2.0 * kPi * static_cast<double>(j) /
                                            static_cast<double>(count));
      centers_.push_back(d);
      units_.push_back(d.unit());
    }
  }
}

std::size_t SphereGrid::nearest_class(const Direction& d) const {
  // Rings in order of elevation gap; a ring cannot hold a center closer
  // than its elevation gap, which bounds the search.
  std::vector<std::size_t> order(rings_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto gap = [&](std::size_t r) { return std::abs(rings_[r].elevation - d.elevation); };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return gap(a) < gap(b); });

  std::size_t best = centers_.size();
  double best_dist = std::numeric_limits<double>::infinity();
  auto consider = [&](std::size_t idx) {
    const double dist = great_circle(d, centers_[idx]);
    if (dist < best_dist || (dist == best_dist && idx < best)) {
      best_dist = dist;
      best = idx;
    }
  };

  for (std::size_t r : order) {
    if (gap(r) - 1e-12 > best_dist) break;
    const Ring& ring = rings_[r];
    if (ring.count == 1) {
      consider(ring.first);
      continue;
    }
    const double spacing = 2.0 * kPi / static_cast<double>(ring.count);
    double pos = d.azimuth / spacing;
    if (pos < 0) pos += static_cast<double>(ring.count);
    const auto lo = static_cast<std::size_t>(std::floor(pos)) % ring.count;
    const auto hi = (lo + 1) % ring.count;
    consider(ring.first + lo);
    consider(ring.first + hi);
    // A direction exactly between two centers can round either way; the
    // neighbours on both sides cover it.
    consider(ring.first + (lo + ring.count - 1) % ring.count);
    consider(ring.first + (hi + 1) % ring.count);
  }
  return best;
}

std::size_t SphereGrid::nearest_class(const Vec3& v) const { return nearest_class(to_spherical(v)); }

double SphereGrid::coverage_radius_deg(const std::vector<Direction>& probes) const {
  double worst = 0.0;
  for (const auto& p : probes) {
    worst = std::max(worst, great_circle(p, centers_[nearest_class(p)]));
  }
  return rad2deg(worst);
}

void SphereGrid::write_csv(std::ostream& os) const {
  os << "index,azimuth_deg,elevation_deg\n";
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    os << i << ',' << rad2deg(centers_[i].azimuth) << ',' << rad2deg(centers_[i].elevation)
       << '\n';
  }
}

SphereGrid build_grid(double resolution_deg) {
  if (!(resolution_deg >= 1.0 && resolution_deg <= 90.0)) {
    throw std::invalid_argument("build_grid: resolution must be within [1, 90] degrees");
  }
  return SphereGrid(resolution_deg);
}

std::vector<Direction> random_directions(std::size_t count, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<Direction> out;
  out.reserve(count);
  while (out.size() < count) {
    Vec3 v(n01(rng), n01(rng), n01(rng));
    if (v.norm() < 1e-9) continue;
    out.push_back(to_spherical(v));
  }
  return out;
}

}  // namespace ambidoa
