#include "ambidoa/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace ambidoa {

namespace {

// fftw_plan creation is not thread-safe; execution on fresh aligned buffers is.
class FftPlans {
 public:
  static FftPlans& instance() {
    static FftPlans plans;
    return plans;
  }

  fftw_plan forward(std::size_t n) { return get(n, true); }
  fftw_plan inverse(std::size_t n) { return get(n, false); }

 private:
  fftw_plan get(std::size_t n, bool fwd) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto& table = fwd ? forward_ : inverse_;
    if (auto it = table.find(n); it != table.end()) return it->second;
    double* real = fftw_alloc_real(n);
    fftw_complex* spec = fftw_alloc_complex(n / 2 + 1);
    const int len = static_cast<int>(n);
    fftw_plan p = fwd ? fftw_plan_dft_r2c_1d(len, real, spec, FFTW_ESTIMATE)
                      : fftw_plan_dft_c2r_1d(len, spec, real, FFTW_ESTIMATE);
    fftw_free(real);
    fftw_free(spec);
    table.emplace(n, p);
    return p;
  }

  std::mutex mutex_;
  std::map<std::size_t, fftw_plan> forward_;
  std::map<std::size_t, fftw_plan> inverse_;
};

struct RealBuf {
  explicit RealBuf(std::size_t n) : ptr(fftw_alloc_real(n)), size(n) { std::fill_n(ptr, n, 0.0); }
  ~RealBuf() { fftw_free(ptr); }
  RealBuf(const RealBuf&) = delete;
  RealBuf& operator=(const RealBuf&) = delete;
  double* ptr;
  std::size_t size;
};

struct ComplexBuf {
  explicit ComplexBuf(std::size_t n) : ptr(fftw_alloc_complex(n)), size(n) {}
  ~ComplexBuf() { fftw_free(ptr); }
  ComplexBuf(const ComplexBuf&) = delete;
  ComplexBuf& operator=(const ComplexBuf&) = delete;
  fftw_complex* ptr;
  std::size_t size;
};

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Single-tap filter response, shared by the noise generators.
void shape_speech_spectrum(std::vector<double>& x, double sample_rate) {
  const std::size_t n = x.size();
  RealBuf in(n);
  ComplexBuf spec(n / 2 + 1);
  std::copy(x.begin(), x.end(), in.ptr);
  fftw_execute_dft_r2c(FftPlans::instance().forward(n), in.ptr, spec.ptr);
  constexpr double kCorner = 500.0;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n);
    const double g = 1.0 / std::sqrt(1.0 + (f / kCorner) * (f / kCorner));
    spec.ptr[k][0] *= g;
    spec.ptr[k][1] *= g;
  }
  fftw_execute_dft_c2r(FftPlans::instance().inverse(n), spec.ptr, in.ptr);
  for (std::size_t i = 0; i < n; ++i) x[i] = in.ptr[i] / static_cast<double>(n);
}

void normalize_power(std::vector<double>& x) {
  const double p = mean_power(x);
  if (p > 0.0) {
    const double s = 1.0 / std::sqrt(p);
    for (double& v : x) v *= s;
  }
}

std::vector<Vec3> icosahedron_vertices() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v;
  for (double a : {-1.0, 1.0}) {
    for (double b : {-phi, phi}) {
      v.emplace_back(0.0, a, b);
      v.emplace_back(a, b, 0.0);
      v.emplace_back(b, 0.0, a);
    }
  }
  for (auto& p : v) p.normalize();
  return v;
}

// Random syllable-like on/off envelope with short raised-cosine ramps.
std::vector<double> syllable_envelope(std::size_t length, double sample_rate, std::mt19937_64& rng,
                                      double min_gap_s, double max_gap_s) {
  std::uniform_real_distribution<double> burst(0.08, 0.30);
  std::uniform_real_distribution<double> gap(min_gap_s, max_gap_s);
  std::uniform_real_distribution<double> level(0.4, 1.0);
  std::vector<double> env(length, 0.0);
  const auto ramp = static_cast<std::size_t>(0.01 * sample_rate);
  std::size_t pos = 0;
  while (pos < length) {
    const auto on = static_cast<std::size_t>(burst(rng) * sample_rate);
    const double amp = level(rng);
    for (std::size_t i = 0; i < on && pos + i < length; ++i) {
      double g = amp;
      if (i < ramp) g *= 0.5 - 0.5 * std::cos(kPi * static_cast<double>(i) / static_cast<double>(ramp));
      if (on - i <= ramp) {
        g *= 0.5 - 0.5 * std::cos(kPi * static_cast<double>(on - i) / static_cast<double>(ramp));
      }
      env[pos + i] = g;
    }
    pos += on + static_cast<std::size_t>(gap(rng) * sample_rate);
  }
  return env;
}

}  // namespace

std::vector<double> convolve_direct(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

FoaSignal convolve_foa(std::span<const double> dry, double dry_rate, const FoaIR& ir, Exec exec) {
  if (dry_rate != ir.sample_rate) {
    throw std::invalid_argument("convolve_foa: sample-rate mismatch between dry signal and IR");
  }
  if (dry.empty() || ir.length() == 0) throw std::invalid_argument("convolve_foa: empty input");
  const std::size_t out_len = dry.size() + ir.length() - 1;
  const std::size_t n = next_pow2(out_len);
  const std::size_t nb = n / 2 + 1;

  ComplexBuf dry_spec(nb);
  {
    RealBuf in(n);
    std::copy(dry.begin(), dry.end(), in.ptr);
    fftw_execute_dft_r2c(FftPlans::instance().forward(n), in.ptr, dry_spec.ptr);
  }
  FoaSignal out(out_len, ir.sample_rate);
  fftw_plan fwd = FftPlans::instance().forward(n);
  fftw_plan inv = FftPlans::instance().inverse(n);

  auto one_channel = [&](std::size_t c) {
    const auto& h = ir.channels[c];
    if (std::all_of(h.begin(), h.end(), [](double v) { return v == 0.0; })) return;
    RealBuf buf(n);
    ComplexBuf spec(nb);
    std::copy(h.begin(), h.end(), buf.ptr);
    fftw_execute_dft_r2c(fwd, buf.ptr, spec.ptr);
    for (std::size_t k = 0; k < nb; ++k) {
      const double re = spec.ptr[k][0] * dry_spec.ptr[k][0] - spec.ptr[k][1] * dry_spec.ptr[k][1];
      const double im = spec.ptr[k][0] * dry_spec.ptr[k][1] + spec.ptr[k][1] * dry_spec.ptr[k][0];
      spec.ptr[k][0] = re;
      spec.ptr[k][1] = im;
    }
    fftw_execute_dft_c2r(inv, spec.ptr, buf.ptr);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < out_len; ++i) out.channels[c][i] = buf.ptr[i] * scale;
  };

  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int c = 0; c < static_cast<int>(kFoaChannels); ++c) one_channel(static_cast<std::size_t>(c));
  } else {
    for (std::size_t c = 0; c < kFoaChannels; ++c) one_channel(c);
  }
  return out;
}

double sample_snr(std::mt19937_64& rng) {
  std::normal_distribution<double> dist(kSnrMeanDb, kSnrStdDb);
  return dist(rng);
}

double mean_power(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

double noise_scale(double signal_power, double noise_power, double snr_db) {
  if (!(signal_power > 0.0)) throw std::invalid_argument("mix_noise: signal has zero power");
  if (!(noise_power > 0.0)) throw std::invalid_argument("mix_noise: noise has zero power");
  return std::sqrt(signal_power / (noise_power * std::pow(10.0, snr_db / 10.0)));
}

FoaSignal mix_noise(const FoaSignal& signal, const FoaSignal& noise, double snr_db) {
  const std::size_t n = signal.length();
  if (noise.length() < n) throw std::invalid_argument("mix_noise: noise shorter than signal");
  const double ps = mean_power(signal.w());
  const double pn = mean_power(std::span<const double>(noise.w().data(), n));
  const double g = noise_scale(ps, pn, snr_db);
  FoaSignal out = signal;
  for (std::size_t c = 0; c < kFoaChannels; ++c) {
    for (std::size_t i = 0; i < n; ++i) out.channels[c][i] += g * noise.channels[c][i];
  }
  return out;
}

std::vector<double> speech_shaped_mono(std::size_t length, std::uint64_t seed, double sample_rate) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> x(length);
  for (double& v : x) v = n01(rng);
  shape_speech_spectrum(x, sample_rate);
  normalize_power(x);
  return x;
}

FoaSignal speech_shaped_noise(std::size_t length, std::uint64_t seed, double sample_rate) {
  if (length < 1024) throw std::invalid_argument("speech_shaped_noise: length must be >= 1024");
  FoaSignal out(length, sample_rate);
  const auto dirs = icosahedron_vertices();
  const double norm = 1.0 / std::sqrt(static_cast<double>(dirs.size()));
  std::mt19937_64 seeder(seed);
  for (const Vec3& d : dirs) {
    const auto stream = speech_shaped_mono(length, seeder(), sample_rate);
    const auto g = foa_gains(d);
    for (std::size_t c = 0; c < kFoaChannels; ++c) {
      for (std::size_t i = 0; i < length; ++i) out.channels[c][i] += norm * g[c] * stream[i];
    }
  }
  return out;
}

FoaSignal babble_noise(std::size_t length, std::uint64_t seed, double sample_rate) {
  constexpr int kTalkers = 6;
  FoaSignal out(length, sample_rate);
  std::mt19937_64 seeder(seed);
  const double norm = 1.0 / std::sqrt(static_cast<double>(kTalkers));
  for (int k = 0; k < kTalkers; ++k) {
    const FoaSignal stream = speech_shaped_noise(length, seeder(), sample_rate);
    std::mt19937_64 env_rng(seeder());
    const auto env = syllable_envelope(length, sample_rate, env_rng, 0.02, 0.12);
    for (std::size_t c = 0; c < kFoaChannels; ++c) {
      for (std::size_t i = 0; i < length; ++i) {
        out.channels[c][i] += norm * env[i] * stream.channels[c][i];
      }
    }
  }
  return out;
}

std::vector<double> synthetic_speech(std::size_t length, std::uint64_t seed, double sample_rate) {
  std::mt19937_64 rng(seed);
  auto x = speech_shaped_mono(length, rng(), sample_rate);
  // Crude 80 Hz high-pass by removing a running mean.
  const auto win = static_cast<std::size_t>(sample_rate / 80.0);
  std::vector<double> hp(length);
  double acc = 0.0;
  for (std::size_t i = 0; i < length; ++i) {
    acc += x[i];
    if (i >= win) acc -= x[i - win];
    hp[i] = x[i] - acc / static_cast<double>(std::min(i + 1, win));
  }
  const auto env = syllable_envelope(length, sample_rate, rng, 0.01, 0.06);
  double peak = 0.0;
  for (std::size_t i = 0; i < length; ++i) {
    hp[i] *= env[i];
    peak = std::max(peak, std::abs(hp[i]));
  }
  if (peak > 0.0) {
    for (double& v : hp) v *= 0.5 / peak;
  }
  return hp;
}

Spectrogram::Spectrogram(std::size_t channels, std::size_t frames, std::size_t bins)
    : channels(channels), frames(frames), bins(bins), data(channels * frames * bins) {}

std::vector<double> hann_window(std::size_t size) {
  std::vector<double> w(size);
  for (std::size_t n = 0; n < size; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(n) / static_cast<double>(size));
  }
  return w;
}

Spectrogram stft(const FoaSignal& signal, std::size_t frames, const StftConfig& config) {
  if (config.window < 2 || config.hop == 0) throw std::invalid_argument("stft: bad window/hop");
  if (frames == 0) throw std::invalid_argument("stft: frames must be >= 1");
  if (signal.length() < config.samples_for(frames)) {
    throw std::invalid_argument("stft: signal too short for the requested frame count");
  }
  const std::size_t n = config.window;
  const std::size_t nb = config.bins();
  Spectrogram spec(kFoaChannels, frames, nb);
  spec.sample_rate = signal.sample_rate;
  spec.config = config;
  const auto window = hann_window(n);
  fftw_plan plan = FftPlans::instance().forward(n);
  RealBuf in(n);
  ComplexBuf out(nb);
  for (std::size_t c = 0; c < kFoaChannels; ++c) {
    const auto& x = signal.channels[c];
    for (std::size_t t = 0; t < frames; ++t) {
      const std::size_t start = t * config.hop;
      for (std::size_t i = 0; i < n; ++i) in.ptr[i] = x[start + i] * window[i];
      fftw_execute_dft_r2c(plan, in.ptr, out.ptr);
      for (std::size_t f = 0; f < nb; ++f) spec.at(c, t, f) = {out.ptr[f][0], out.ptr[f][1]};
    }
  }
  return spec;
}

FeatureTensor intensity_features(const Spectrogram& spec, Exec exec) {
  if (spec.channels != kFoaChannels) throw std::invalid_argument("intensity_features: need 4 channels");
  FeatureTensor feat(spec.frames, spec.bins);
  auto one_frame = [&](std::size_t t) {
    for (std::size_t f = 0; f < spec.bins; ++f) {
      const cplx w = spec.at(0, t, f);
      const cplx x = spec.at(1, t, f);
      const cplx y = spec.at(2, t, f);
      const cplx z = spec.at(3, t, f);
      const double denom = std::norm(w) + (std::norm(x) + std::norm(y) + std::norm(z)) / 3.0 +
                           kIntensityEpsilon;
      const cplx wc = std::conj(w);
      const cplx ix = wc * x / denom;
      const cplx iy = wc * y / denom;
      const cplx iz = wc * z / denom;
      feat.at(0, t, f) = ix.real();
      feat.at(1, t, f) = iy.real();
      feat.at(2, t, f) = iz.real();
      feat.at(3, t, f) = ix.imag();
      feat.at(4, t, f) = iy.imag();
      feat.at(5, t, f) = iz.imag();
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(spec.frames); ++t) {
      one_frame(static_cast<std::size_t>(t));
    }
  } else {
    for (std::size_t t = 0; t < spec.frames; ++t) one_frame(t);
  }
  return feat;
}

Vec3 mean_active_intensity(const FeatureTensor& features, const Spectrogram& spec,
                           double active_floor) {
  double peak = 0.0;
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t f = 0; f < spec.bins; ++f) peak = std::max(peak, std::norm(spec.at(0, t, f)));
  }
  Vec3 acc = Vec3::Zero();
  if (!(peak > 0.0)) return acc;
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t f = 0; f < spec.bins; ++f) {
      if (std::norm(spec.at(0, t, f)) <= active_floor * peak) continue;
      acc += Vec3(features.at(0, t, f), features.at(1, t, f), features.at(2, t, f));
    }
  }
  return acc;
}

}  // namespace ambidoa
