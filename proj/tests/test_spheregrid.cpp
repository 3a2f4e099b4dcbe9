#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ambidoa/spheregrid.hpp"

using namespace ambidoa;

namespace {

std::size_t brute_nearest(const SphereGrid& g, const Vec3& u) {
  std::size_t best = 0;
  double best_d = 1e9;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = great_circle(to_spherical(u), g.center(i));
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("to_cartesian basics") {
  const Vec3 v = to_cartesian(0.0, 0.0);
  CHECK(v.x() == doctest::Approx(1.0));
  CHECK(v.y() == doctest::Approx(0.0));
  CHECK(v.z() == doctest::Approx(0.0));
}

TEST_CASE("to_spherical pole convention and zero vector") {
  const Direction d = to_spherical(Vec3(0, 0, 1));
  CHECK(d.azimuth == 0.0);
  CHECK(d.elevation == doctest::Approx(kPi / 2).epsilon(1e-15));
  CHECK_THROWS_AS(to_spherical(Vec3::Zero()), std::invalid_argument);
}

TEST_CASE("spherical round trip") {
  for (const auto& d : random_directions(1000, 3)) {
    if (std::abs(d.elevation) >= deg2rad(89.0)) continue;
    const Direction r = to_spherical(to_cartesian(d));
    CHECK(std::abs(r.azimuth - d.azimuth) < 1e-12);
    CHECK(std::abs(r.elevation - d.elevation) < 1e-12);
  }
}

TEST_CASE("wrap_azimuth range") {
  CHECK(wrap_azimuth(kPi) == doctest::Approx(kPi));
  CHECK(wrap_azimuth(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_azimuth(3 * kPi / 2) == doctest::Approx(-kPi / 2));
}

TEST_CASE("great_circle known values") {
  CHECK(great_circle({0, 0}, {0, 0}) == 0.0);
  CHECK(great_circle({0, 0}, {kPi, 0}) == doctest::Approx(kPi).epsilon(1e-12));
  CHECK(great_circle({0, 0}, {kPi / 2, 0}) == doctest::Approx(kPi / 2).epsilon(1e-12));
  const Direction a{deg2rad(10), deg2rad(20)}, b{deg2rad(30), deg2rad(40)};
  CHECK(std::abs(great_circle(a, b) - std::acos(a.unit().dot(b.unit()))) < 1e-12);
}

TEST_CASE("great_circle symmetric and bounded") {
  const auto a = random_directions(500, 11), b = random_directions(500, 12);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = great_circle(a[i], b[i]);
    CHECK(d == great_circle(b[i], a[i]));
    CHECK(d >= 0.0);
    CHECK(d <= kPi);
  }
}

TEST_CASE("resolution 90 gives 6 points") {
  const SphereGrid g = build_grid(90);
  REQUIRE(g.size() == 6);
  std::size_t poles = 0;
  for (const auto& c : g.centers()) {
    if (std::abs(std::abs(c.elevation) - kPi / 2) < 1e-12) ++poles;
  }
  CHECK(poles == 2);
}

TEST_CASE("resolution 10 class count is fixed") {
  const SphereGrid g = build_grid(10);
  CHECK(g.size() == 412);
}

TEST_CASE("invalid resolution throws") {
  CHECK_THROWS_AS(build_grid(0.5), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(91), std::invalid_argument);
}

TEST_CASE("centers map to themselves") {
  for (double res : {5.0, 10.0, 17.0, 30.0, 90.0}) {
    const SphereGrid g = build_grid(res);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.nearest_class(g.center(i)) == i);
  }
}

TEST_CASE("north pole maps to the pole class") {
  for (double res : {3.0, 10.0, 25.0, 90.0}) {
    const SphereGrid g = build_grid(res);
    const std::size_t k = g.nearest_class(Direction{0.7, kPi / 2});
    CHECK(g.center(k).elevation == doctest::Approx(kPi / 2));
  }
}

TEST_CASE("nearest_class matches brute force") {
  for (double res : {10.0, 7.0}) {
    const SphereGrid g = build_grid(res);
    for (const auto& d : random_directions(1000, 5)) {
      const Vec3 u = d.unit();
      const std::size_t fast = g.nearest_class(u);
      const std::size_t slow = brute_nearest(g, u);
      // Equal-distance ties can only differ in index if distances are equal.
      if (fast != slow) {
        CHECK(great_circle(d, g.center(fast)) == doctest::Approx(great_circle(d, g.center(slow))).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("coverage radius at resolution 10") {
  const SphereGrid g = build_grid(10);
  CHECK(g.coverage_radius_deg(random_directions(10000, 9)) <= 10.0);
}

TEST_CASE("csv export") {
  std::ostringstream os;
  build_grid(90).write_csv(os);
  const std::string s = os.str();
  CHECK(s.rfind("index,azimuth_deg,elevation_deg\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 7);
}
