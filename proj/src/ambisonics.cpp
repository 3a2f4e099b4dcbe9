#include "ambidoa/ambisonics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ambidoa {

namespace {
const double kSqrt3 = std::sqrt(3.0);
}

FoaBuffer::FoaBuffer(std::size_t length, double rate) : sample_rate(rate) {
  for (auto& ch : channels) ch.assign(length, 0.0);
}

void FoaBuffer::validate() const {
  const std::size_t n = channels[0].size();
  if (n == 0) throw std::invalid_argument("FoaBuffer: empty");
  if (!(sample_rate > 0.0)) throw std::invalid_argument("FoaBuffer: sample rate must be > 0");
  for (const auto& ch : channels) {
    if (ch.size() != n) throw std::invalid_argument("FoaBuffer: channel lengths differ");
    for (double v : ch) {
      if (!std::isfinite(v)) throw std::invalid_argument("FoaBuffer: non-finite sample");
    }
  }
}

std::array<double, 4> foa_gains(const Direction& d) {
  // cos(pi/2) is not exactly 0 in floating point; the poles carry no X/Y.
  const double ce = std::abs(d.elevation) == kPi / 2 ? 0.0 : std::cos(d.elevation);
  return {1.0, kSqrt3 * std::cos(d.azimuth) * ce, kSqrt3 * std::sin(d.azimuth) * ce,
          kSqrt3 * std::sin(d.elevation)};
}

std::array<double, 4> foa_gains(const Vec3& u) {
  return {1.0, kSqrt3 * u.x(), kSqrt3 * u.y(), kSqrt3 * u.z()};
}

FoaIR encode_srir(std::span<const AcousticPath> paths, double sample_rate, std::size_t length) {
  if (!(sample_rate > 0.0)) throw std::invalid_argument("encode_srir: sample rate must be > 0");
  FoaIR ir(length, sample_rate);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const AcousticPath& p = paths[i];
    const double pos = std::round(p.delay * sample_rate);
    if (!(p.delay >= 0.0) || !(pos < static_cast<double>(length))) {
      std::ostringstream msg;
      msg << "encode_srir: path " << i << " (delay " << p.delay << " s, order " << p.order
          << ") falls outside the " << length << "-sample response";
      throw std::out_of_range(msg.str());
    }
    const auto n = static_cast<std::size_t>(pos);
    const auto g = foa_gains(p.direction);
    for (std::size_t c = 0; c < kFoaChannels; ++c) ir.channels[c][n] += p.amplitude * g[c];
  }
  return ir;
}

FoaSignal encode_plane_wave(std::span<const double> signal, const Direction& d,
                            double sample_rate) {
  if (signal.empty()) throw std::invalid_argument("encode_plane_wave: empty signal");
  FoaSignal out(signal.size(), sample_rate);
  const auto g = foa_gains(d);
  out.channels[0].assign(signal.begin(), signal.end());
  for (std::size_t c = 1; c < kFoaChannels; ++c) {
    for (std::size_t i = 0; i < signal.size(); ++i) out.channels[c][i] = g[c] * signal[i];
  }
  return out;
}

}  // namespace ambidoa
