#pragma once

#include <vector>

#include <Eigen/Core>

#include "ambidoa/dsp.hpp"
#include "ambidoa/parallel.hpp"
#include "ambidoa/spheregrid.hpp"

namespace ambidoa {

using Matrix4c = Eigen::Matrix<std::complex<double>, 4, 4>;

// Per-bin 4x4 spatial covariance averaged over frames.
struct CovarianceSet {
  std::vector<std::size_t> bins;
  std::vector<Matrix4c> matrices;
};

// Inclusive bin indices [first, last].
struct BinRange {
  std::size_t first = 0;
  std::size_t last = 0;
};

// Bins whose center frequency lies in [lo_hz, hi_hz].
BinRange bin_range_hz(const Spectrogram& spec, double lo_hz, double hi_hz);

// R_f = (1/T) sum_t x(t,f) x(t,f)^H over frames [frame_begin, frame_end).
// Throws std::invalid_argument with fewer than 2 frames.
CovarianceSet spatial_covariance(const Spectrogram& spec, BinRange bins);
CovarianceSet spatial_covariance(const Spectrogram& spec, BinRange bins, std::size_t frame_begin,
                                 std::size_t frame_end);

inline constexpr double kMusicEpsilon = 1e-12;

// Pseudospectrum 1 / (|E_n^H a(d)|^2 + eps) with a(d) = foa_gains(d), each
// bin normalized to a peak of 1, then averaged over bins. All-zero bins are
// skipped. Throws std::runtime_error if an eigendecomposition fails.
std::vector<double> music_spectrum(const CovarianceSet& cov, const SphereGrid& grid,
                                   std::size_t n_sources = 1, Exec exec = Exec::parallel);

struct MusicConfig {
  StftConfig stft{};
  double lo_hz = 300.0;
  double hi_hz = 4000.0;
};

struct MusicResult {
  Direction direction;
  std::size_t best_class = 0;
  std::vector<double> scores;
  // Class indices by descending score.
  std::vector<std::size_t> ranking(std::size_t k) const;
};

// STFT over every full frame, covariance, spectrum, argmax class center.
// Throws std::invalid_argument if the signal holds fewer than 25 frames.
MusicResult music_estimate(const FoaSignal& signal, const SphereGrid& grid, const MusicConfig& cfg = {});

// Same, restricted to a frame window of an existing spectrogram.
MusicResult music_estimate_window(const Spectrogram& spec, std::size_t frame_begin, std::size_t frame_end,
                                  const SphereGrid& grid, const MusicConfig& cfg = {});

}  // namespace ambidoa
