#include "ambidoa/features_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ambidoa {

static_assert(std::endian::native == std::endian::little, "feature files are little-endian");

namespace {
constexpr char kMagic[4] = {'A', 'D', 'O', 'A'};

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  if (!is) throw std::runtime_error("read_features: truncated header");
  return v;
}
}  // namespace

void write_features(const std::filesystem::path& path, const FeatureTensor& features) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_features: cannot open " + path.string());
  os.write(kMagic, 4);
  put_u32(os, kFeatureFormatVersion);
  put_u32(os, static_cast<std::uint32_t>(FeatureTensor::kRows));
  put_u32(os, static_cast<std::uint32_t>(features.frames));
  put_u32(os, static_cast<std::uint32_t>(features.bins));
  std::vector<float> payload(features.values.begin(), features.values.end());
  os.write(reinterpret_cast<const char*>(payload.data()),
           static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!os) throw std::runtime_error("write_features: write failed for " + path.string());
}

FeatureTensor read_features(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_features: cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("read_features: bad magic in " + path.string());
  }
  const auto version = get_u32(is);
  if (version != kFeatureFormatVersion) throw std::runtime_error("read_features: unsupported version");
  const auto rows = get_u32(is);
  const auto frames = get_u32(is);
  const auto bins = get_u32(is);
  if (rows != FeatureTensor::kRows) throw std::runtime_error("read_features: expected 6 rows");
  FeatureTensor out(frames, bins);
  std::vector<float> payload(out.values.size());
  is.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!is) throw std::runtime_error("read_features: truncated payload in " + path.string());
  std::copy(payload.begin(), payload.end(), out.values.begin());
  return out;
}

}  // namespace ambidoa
