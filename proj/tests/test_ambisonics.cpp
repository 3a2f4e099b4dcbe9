#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ambidoa/ambisonics.hpp"

using namespace ambidoa;

namespace {
const double s3 = std::sqrt(3.0);
}

TEST_CASE("foa_gains reference directions") {
  auto g = foa_gains(Direction{0, 0});
  CHECK(g[0] == 1.0);
  CHECK(g[1] == doctest::Approx(s3));
  CHECK(g[2] == doctest::Approx(0.0));
  CHECK(g[3] == doctest::Approx(0.0));
  g = foa_gains(Direction{kPi / 2, 0});
  CHECK(g[1] == doctest::Approx(0.0));
  CHECK(g[2] == doctest::Approx(s3));
  g = foa_gains(Direction{0, kPi / 2});
  CHECK(g[1] == 0.0);
  CHECK(g[2] == 0.0);
  CHECK(g[3] == doctest::Approx(s3));
  g = foa_gains(Direction{kPi / 4, 0});
  CHECK(g[1] == doctest::Approx(std::sqrt(6.0) / 2));
  CHECK(g[2] == doctest::Approx(std::sqrt(6.0) / 2));
}

TEST_CASE("foa_gains norm is 4") {
  for (const auto& d : random_directions(2000, 1)) {
    const auto g = foa_gains(d);
    CHECK(std::abs(g[0] * g[0] + g[1] * g[1] + g[2] * g[2] + g[3] * g[3] - 4.0) < 1e-12);
    const auto h = foa_gains(d.unit());
    for (int c = 0; c < 4; ++c) CHECK(std::abs(g[c] - h[c]) < 1e-12);
  }
}

TEST_CASE("encode_srir single path") {
  AcousticPath p;
  p.direction = Vec3(-2, -3, -1).normalized();
  p.delay = std::sqrt(14.0) / 343.0;
  p.amplitude = 1.0;
  const FoaIR ir = encode_srir(std::span(&p, 1), 16000, 400);
  for (std::size_t n = 0; n < ir.length(); ++n) {
    if (n == 175) continue;
    for (int c = 0; c < 4; ++c) CHECK(ir.channels[c][n] == 0.0);
  }
  CHECK(ir.channels[0][175] == doctest::Approx(1.0));
  CHECK(ir.channels[1][175] == doctest::Approx(s3 * -2 / std::sqrt(14.0)));
  CHECK(ir.channels[2][175] == doctest::Approx(s3 * -3 / std::sqrt(14.0)));
  CHECK(ir.channels[3][175] == doctest::Approx(s3 * -1 / std::sqrt(14.0)));
}

TEST_CASE("encode_srir empty and linear") {
  const FoaIR z = encode_srir({}, 16000, 64);
  for (const auto& ch : z.channels) {
    for (double v : ch) CHECK(v == 0.0);
  }
  std::vector<AcousticPath> a(3), b(2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i].direction = random_directions(3, 2)[i].unit();
    a[i].delay = 0.001 * (i + 1);
    a[i].amplitude = 0.5 + 0.1 * i;
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    b[i].direction = random_directions(2, 4)[i].unit();
    b[i].delay = 0.0015 * (i + 1);
    b[i].amplitude = 0.3;
  }
  std::vector<AcousticPath> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  const FoaIR ia = encode_srir(a, 16000, 128), ib = encode_srir(b, 16000, 128), iab = encode_srir(ab, 16000, 128);
  for (int c = 0; c < 4; ++c) {
    for (std::size_t n = 0; n < 128; ++n) {
      CHECK(iab.channels[c][n] == doctest::Approx(ia.channels[c][n] + ib.channels[c][n]));
    }
  }
}

TEST_CASE("encode_srir rejects late paths") {
  AcousticPath p;
  p.delay = 1.0;
  p.amplitude = 1.0;
  CHECK_THROWS_AS(encode_srir(std::span(&p, 1), 16000, 100), std::out_of_range);
}

TEST_CASE("plane wave identities") {
  std::vector<double> imp(16, 0.0);
  imp[0] = 1.0;
  FoaSignal s = encode_plane_wave(imp, Direction{0, 0});
  CHECK(s.channels[0][0] == 1.0);
  CHECK(s.channels[1][0] == doctest::Approx(s3));
  CHECK(s.channels[2][0] == doctest::Approx(0.0));

  std::vector<double> sine(256);
  for (std::size_t i = 0; i < sine.size(); ++i) sine[i] = std::sin(0.1 * i);
  s = encode_plane_wave(sine, Direction{0.3, kPi / 2});
  for (std::size_t i = 0; i < sine.size(); ++i) {
    CHECK(s.channels[1][i] == 0.0);
    CHECK(s.channels[2][i] == 0.0);
  }
  s = encode_plane_wave(sine, Direction{kPi / 4, kPi / 6});
  for (std::size_t i = 0; i < sine.size(); ++i) {
    if (std::abs(sine[i]) < 1e-3) continue;
    CHECK(s.channels[1][i] / s.channels[0][i] == doctest::Approx(s3 * std::cos(kPi / 4) * std::cos(kPi / 6)));
  }
}

TEST_CASE("FoaBuffer validation") {
  FoaBuffer b(10, 16000);
  CHECK_NOTHROW(b.validate());
  b.channels[2].resize(9);
  CHECK_THROWS_AS(b.validate(), std::invalid_argument);
  FoaBuffer c(10, 16000);
  c.channels[1][3] = std::nan("");
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
