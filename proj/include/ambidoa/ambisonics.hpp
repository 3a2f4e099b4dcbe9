#pragma once

#include <array>
#include <span>
#include <vector>

#include "ambidoa/acoustics.hpp"
#include "ambidoa/spheregrid.hpp"

namespace ambidoa {

inline constexpr double kDefaultSampleRate = 16000.0;
inline constexpr std::size_t kFoaChannels = 4;

// Four equal-length channels in W, X, Y, Z order.
struct FoaBuffer {
  std::array<std::vector<double>, kFoaChannels> channels;
  double sample_rate = kDefaultSampleRate;

  FoaBuffer() = default;
  FoaBuffer(std::size_t length, double rate);

  std::size_t length() const { return channels[0].size(); }
  std::vector<double>& w() { return channels[0]; }
  const std::vector<double>& w() const { return channels[0]; }
  // Throws std::invalid_argument if channels differ in length, are empty,
  // or hold non-finite samples.
  void validate() const;
};

using FoaIR = FoaBuffer;
using FoaSignal = FoaBuffer;

// (1, sqrt3 cos(az) cos(el), sqrt3 sin(az) cos(el), sqrt3 sin(el)).
std::array<double, 4> foa_gains(const Direction& d);
std::array<double, 4> foa_gains(const Vec3& unit_direction);

// Nearest-sample rendering of a path set. Throws std::out_of_range naming
// the first path whose delay does not fit in `length` samples.
FoaIR encode_srir(std::span<const AcousticPath> paths, double sample_rate, std::size_t length);

FoaSignal encode_plane_wave(std::span<const double> signal, const Direction& d,
                            double sample_rate = kDefaultSampleRate);

}  // namespace ambidoa
