#pragma once

#include <filesystem>

#include "ambidoa/dsp.hpp"

namespace ambidoa {

// "ADOA" container: magic, u32 version, u32 rows (6), u32 frames, u32 bins,
// then rows*frames*bins little-endian float32 values, row-major.
inline constexpr std::uint32_t kFeatureFormatVersion = 1;

void write_features(const std::filesystem::path& path, const FeatureTensor& features);
FeatureTensor read_features(const std::filesystem::path& path);

}  // namespace ambidoa
