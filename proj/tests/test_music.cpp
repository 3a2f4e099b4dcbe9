#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "ambidoa/music.hpp"

using namespace ambidoa;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0, 1);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

constexpr std::size_t kLen = 1024 + 30 * 512;

}  // namespace

TEST_CASE("covariance of a plane wave has rank one") {
  const FoaSignal s = encode_plane_wave(noise(kLen, 1), Direction{0.4, 0.3});
  const Spectrogram spec = stft(s, 25);
  const auto cov = spatial_covariance(spec, bin_range_hz(spec, 300, 4000));
  REQUIRE(!cov.matrices.empty());
  for (const auto& r : cov.matrices) {
    CHECK((r - r.adjoint()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix4c> es(r);
    CHECK(es.eigenvalues()[2] < 1e-8 * es.eigenvalues()[3]);
  }
}

TEST_CASE("covariance of silence is zero; too few frames throws") {
  FoaSignal z(kLen, kDefaultSampleRate);
  const Spectrogram spec = stft(z, 25);
  for (const auto& r : spatial_covariance(spec, {1, 20}).matrices) CHECK(r.norm() == 0.0);
  CHECK_THROWS_AS(spatial_covariance(spec, {1, 20}, 3, 4), std::invalid_argument);
}

TEST_CASE("covariance is Hermitian for random input") {
  FoaSignal s(kLen, kDefaultSampleRate);
  for (int c = 0; c < 4; ++c) s.channels[c] = noise(kLen, 10 + c);
  const Spectrogram spec = stft(s, 25);
  for (const auto& r : spatial_covariance(spec, {1, 100}).matrices) CHECK((r - r.adjoint()).norm() == 0.0);
}

TEST_CASE("plane wave from a class center peaks at that class") {
  const SphereGrid grid = build_grid(10);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 10; ++k) {
    const std::size_t c = std::uniform_int_distribution<std::size_t>(0, grid.size() - 1)(rng);
    const FoaSignal s = encode_plane_wave(noise(kLen, 20 + k), grid.center(c));
    const MusicResult r = music_estimate(s, grid);
    CHECK(r.best_class == c);
    for (double v : r.scores) CHECK(v > 0.0);
  }
}

TEST_CASE("isotropic noise gives a flat spectrum") {
  const SphereGrid grid = build_grid(10);
  const FoaSignal s = speech_shaped_noise(kLen, 5);
  const MusicResult r = music_estimate(s, grid);
  const auto [lo, hi] = std::minmax_element(r.scores.begin(), r.scores.end());
  CHECK(*hi / *lo < 3.0);
}

TEST_CASE("noisy plane wave within the grid resolution; deterministic") {
  const SphereGrid grid = build_grid(10);
  for (const auto& d : random_directions(10, 8)) {
    const FoaSignal clean = encode_plane_wave(speech_shaped_mono(kLen, 4), d);
    const FoaSignal mixed = mix_noise(clean, speech_shaped_noise(kLen, 9), 20.0);
    const MusicResult a = music_estimate(mixed, grid);
    CHECK(rad2deg(great_circle(a.direction, d)) <= 10.0);
    const MusicResult b = music_estimate(mixed, grid);
    CHECK(a.scores == b.scores);
  }
}

TEST_CASE("music spectrum serial and parallel agree bitwise") {
  const SphereGrid grid = build_grid(10);
  FoaSignal s(kLen, kDefaultSampleRate);
  for (int c = 0; c < 4; ++c) s.channels[c] = noise(kLen, 40 + c);
  const Spectrogram spec = stft(s, 25);
  const auto cov = spatial_covariance(spec, bin_range_hz(spec, 300, 4000));
  CHECK(music_spectrum(cov, grid, 1, Exec::serial) == music_spectrum(cov, grid, 1, Exec::parallel));
}

TEST_CASE("short signals are rejected") {
  FoaSignal s(2000, kDefaultSampleRate);
  CHECK_THROWS_AS(music_estimate(s, build_grid(10)), std::invalid_argument);
}

TEST_CASE("ranking is ordered") {
  const SphereGrid grid = build_grid(20);
  const MusicResult r = music_estimate(encode_plane_wave(noise(kLen, 2), Direction{1.0, 0.2}), grid);
  const auto top = r.ranking(5);
  REQUIRE(top.size() == 5);
  CHECK(top[0] == r.best_class);
  for (std::size_t i = 1; i < top.size(); ++i) CHECK(r.scores[top[i - 1]] >= r.scores[top[i]]);
}
