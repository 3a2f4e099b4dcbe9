#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ambidoa/ambisonics.hpp"
#include "ambidoa/parallel.hpp"

namespace ambidoa {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Rendering

// Channel-wise full linear convolution (length dry + ir - 1) via FFT.
// Throws std::invalid_argument on a sample-rate mismatch.
FoaSignal convolve_foa(std::span<const double> dry, double dry_rate, const FoaIR& ir,
                       Exec exec = Exec::parallel);

// O(N*M) time-domain convolution, the reference for the FFT path.
std::vector<double> convolve_direct(std::span<const double> a, std::span<const double> b);

inline constexpr double kSnrMeanDb = 15.0;
inline constexpr double kSnrStdDb = 1.0;

double sample_snr(std::mt19937_64& rng);

// Factor applied to the noise so that the W-channel SNR equals `snr_db`.
double noise_scale(double signal_power, double noise_power, double snr_db);

// Adds scaled noise (first signal.length() samples) to all four channels.
// Throws std::invalid_argument on zero power or short noise.
FoaSignal mix_noise(const FoaSignal& signal, const FoaSignal& noise, double snr_db);

double mean_power(std::span<const double> x);

// White Gaussian noise through a one-pole speech-like envelope
// (flat below 500 Hz, -6 dB/octave above), length samples, unit power.
std::vector<double> speech_shaped_mono(std::size_t length, std::uint64_t seed,
                                       double sample_rate = kDefaultSampleRate);

// Diffuse FOA field: independent speech-shaped streams from the 12
// icosahedron vertices, summed. Throws if length < 1024.
FoaSignal speech_shaped_noise(std::size_t length, std::uint64_t seed,
                              double sample_rate = kDefaultSampleRate);

// Six speech-shaped fields with independent syllable-rate envelopes.
FoaSignal babble_noise(std::size_t length, std::uint64_t seed,
                       double sample_rate = kDefaultSampleRate);

// Stand-in dry source when no speech corpus is available: band-limited
// speech-shaped noise gated by syllable-like bursts, peak-normalized.
std::vector<double> synthetic_speech(std::size_t length, std::uint64_t seed,
                                     double sample_rate = kDefaultSampleRate);

// ---------------------------------------------------------------------------
// Time-frequency analysis

struct StftConfig {
  std::size_t window = 1024;
  std::size_t hop = 512;

  std::size_t bins() const { return window / 2 + 1; }
  // Samples needed for `frames` frames.
  std::size_t samples_for(std::size_t frames) const {
    return frames == 0 ? 0 : (frames - 1) * hop + window;
  }
};

// Complex spectrogram, layout [channel][frame][bin].
struct Spectrogram {
  std::size_t channels = kFoaChannels;
  std::size_t frames = 0;
  std::size_t bins = 0;
  double sample_rate = kDefaultSampleRate;
  StftConfig config;
  std::vector<cplx> data;

  Spectrogram() = default;
  Spectrogram(std::size_t channels, std::size_t frames, std::size_t bins);

  cplx& at(std::size_t c, std::size_t t, std::size_t f) { return data[(c * frames + t) * bins + f]; }
  const cplx& at(std::size_t c, std::size_t t, std::size_t f) const {
    return data[(c * frames + t) * bins + f];
  }
  double bin_frequency(std::size_t f) const {
    return static_cast<double>(f) * sample_rate / static_cast<double>(config.window);
  }
};

// Periodic Hann window of `size` points.
std::vector<double> hann_window(std::size_t size);

// First `frames` Hann-windowed frames, one-sided bins. Throws
// std::invalid_argument when the signal is too short.
Spectrogram stft(const FoaSignal& signal, std::size_t frames, const StftConfig& config = {});

// Feature rows in order Ia_x, Ia_y, Ia_z, Ir_x, Ir_y, Ir_z; layout [row][frame][bin].
struct FeatureTensor {
  static constexpr std::size_t kRows = 6;
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<double> values;

  FeatureTensor() = default;
  FeatureTensor(std::size_t frames, std::size_t bins)
      : frames(frames), bins(bins), values(kRows * frames * bins, 0.0) {}

  double& at(std::size_t r, std::size_t t, std::size_t f) { return values[(r * frames + t) * bins + f]; }
  double at(std::size_t r, std::size_t t, std::size_t f) const {
    return values[(r * frames + t) * bins + f];
  }
};

inline constexpr double kIntensityEpsilon = 1e-12;

// Active (Re) and reactive (Im) parts of conj(W) * (X, Y, Z), each divided by
// |W|^2 + (|X|^2 + |Y|^2 + |Z|^2) / 3 + eps.
FeatureTensor intensity_features(const Spectrogram& spec, Exec exec = Exec::parallel);

// Direction of the mean active intensity over bins whose W energy exceeds
// `active_floor` times the spectrogram's peak W energy.
Vec3 mean_active_intensity(const FeatureTensor& features, const Spectrogram& spec,
                           double active_floor = 1e-6);

}  // namespace ambidoa
