#include "ambidoa/music.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "ambidoa/ambisonics.hpp"

namespace ambidoa {

BinRange bin_range_hz(const Spectrogram& spec, double lo_hz, double hi_hz) {
  BinRange r{spec.bins, 0};
  for (std::size_t f = 0; f < spec.bins; ++f) {
    const double hz = spec.bin_frequency(f);
    if (hz >= lo_hz && hz <= hi_hz) {
      r.first = std::min(r.first, f);
      r.last = std::max(r.last, f);
    }
  }
  if (r.first > r.last) throw std::invalid_argument("bin_range_hz: no bins in the requested band");
  return r;
}

CovarianceSet spatial_covariance(const Spectrogram& spec, BinRange bins) {
  return spatial_covariance(spec, bins, 0, spec.frames);
}

CovarianceSet spatial_covariance(const Spectrogram& spec, BinRange bins, std::size_t frame_begin,
                                 std::size_t frame_end) {
  if (spec.channels != 4) throw std::invalid_argument("spatial_covariance: need 4 channels");
  if (frame_end > spec.frames || frame_end < frame_begin + 2) {
    throw std::invalid_argument("spatial_covariance: need at least 2 frames");
  }
  if (bins.last >= spec.bins || bins.first > bins.last) {
    throw std::invalid_argument("spatial_covariance: bin range outside the spectrogram");
  }
  CovarianceSet cov;
  const double inv_t = 1.0 / static_cast<double>(frame_end - frame_begin);
  for (std::size_t f = bins.first; f <= bins.last; ++f) {
    Matrix4c r = Matrix4c::Zero();
    for (std::size_t t = frame_begin; t < frame_end; ++t) {
      Eigen::Vector4cd x;
      for (int c = 0; c < 4; ++c) x[c] = spec.at(static_cast<std::size_t>(c), t, f);
      r.noalias() += x * x.adjoint();
    }
    r *= inv_t;
    // Exact Hermitian symmetry.
    r = (0.5 * (r + r.adjoint())).eval();
    cov.bins.push_back(f);
    cov.matrices.push_back(r);
  }
  return cov;
}

std::vector<double> music_spectrum(const CovarianceSet& cov, const SphereGrid& grid,
                                   std::size_t n_sources, Exec exec) {
  if (n_sources < 1 || n_sources >= 4) throw std::invalid_argument("music_spectrum: n_sources must be 1..3");
  const std::size_t n_bins = cov.matrices.size();
  const std::size_t n_dirs = grid.size();
  std::vector<Eigen::Vector4d> steering(n_dirs);
  for (std::size_t d = 0; d < n_dirs; ++d) {
    const auto g = foa_gains(grid.center(d));
    steering[d] = Eigen::Vector4d(g[0], g[1], g[2], g[3]);
  }

  std::vector<std::vector<double>> per_bin(n_bins);
  std::vector<char> failed(n_bins, 0);
  auto one_bin = [&](std::size_t b) {
    const Matrix4c& r = cov.matrices[b];
    if (r.cwiseAbs().maxCoeff() == 0.0) return;
    Eigen::SelfAdjointEigenSolver<Matrix4c> solver(r);
    if (solver.info() != Eigen::Success) {
      failed[b] = 1;
      return;
    }
    // Eigenvalues ascend; the noise subspace is the smallest 4 - n_sources.
    const auto noise = solver.eigenvectors().leftCols(static_cast<Eigen::Index>(4 - n_sources));
    std::vector<double> scores(n_dirs);
    double peak = 0.0;
    for (std::size_t d = 0; d < n_dirs; ++d) {
      const Eigen::VectorXcd proj = noise.adjoint() * steering[d].cast<std::complex<double>>();
      scores[d] = 1.0 / (proj.squaredNorm() + kMusicEpsilon);
      peak = std::max(peak, scores[d]);
    }
    for (double& s : scores) s /= peak;
    per_bin[b] = std::move(scores);
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(n_bins); ++b) one_bin(static_cast<std::size_t>(b));
  } else {
    for (std::size_t b = 0; b < n_bins; ++b) one_bin(b);
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (failed[b]) {
      throw std::runtime_error("music_spectrum: eigendecomposition failed at bin " + std::to_string(cov.bins[b]));
    }
  }

  std::vector<double> out(n_dirs, 0.0);
  std::size_t used = 0;
  for (const auto& scores : per_bin) {
    if (scores.empty()) continue;
    ++used;
    for (std::size_t d = 0; d < n_dirs; ++d) out[d] += scores[d];
  }
  if (used == 0) {
    // Silent input: flat spectrum.
    std::fill(out.begin(), out.end(), 1.0);
    return out;
  }
  for (double& s : out) s /= static_cast<double>(used);
  return out;
}

std::vector<std::size_t> MusicResult::ranking(std::size_t k) const {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

MusicResult music_estimate_window(const Spectrogram& spec, std::size_t frame_begin, std::size_t frame_end,
                                  const SphereGrid& grid, const MusicConfig& cfg) {
  const BinRange bins = bin_range_hz(spec, cfg.lo_hz, cfg.hi_hz);
  MusicResult res;
  res.scores = music_spectrum(spatial_covariance(spec, bins, frame_begin, frame_end), grid);
  res.best_class = static_cast<std::size_t>(
      std::max_element(res.scores.begin(), res.scores.end()) - res.scores.begin());
  res.direction = grid.center(res.best_class);
  return res;
}

MusicResult music_estimate(const FoaSignal& signal, const SphereGrid& grid, const MusicConfig& cfg) {
  constexpr std::size_t kMinFrames = 25;
  if (signal.length() < cfg.stft.samples_for(kMinFrames)) {
    throw std::invalid_argument("music_estimate: signal shorter than 25 STFT frames");
  }
  const std::size_t frames = (signal.length() - cfg.stft.window) / cfg.stft.hop + 1;
  const Spectrogram spec = stft(signal, frames, cfg.stft);
  return music_estimate_window(spec, 0, frames, grid, cfg);
}

}  // namespace ambidoa
