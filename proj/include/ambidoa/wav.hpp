#pragma once

#include <filesystem>
#include <vector>

#include "ambidoa/ambisonics.hpp"

namespace ambidoa::wav {

// 32-bit IEEE float RIFF/WAVE, channels W,X,Y,Z.
void write_foa(const std::filesystem::path& path, const FoaBuffer& buffer);

// Accepts 4-channel files in 16/24/32-bit PCM or 32/64-bit float.
FoaBuffer read_foa(const std::filesystem::path& path);

struct MonoAudio {
  std::vector<double> samples;
  double sample_rate = 0.0;
};

// Any channel count; only the first channel is kept.
MonoAudio read_mono(const std::filesystem::path& path);
void write_mono(const std::filesystem::path& path, const MonoAudio& audio);

}  // namespace ambidoa::wav
