#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "ambidoa/estimator.hpp"

namespace ambidoa {

static_assert(std::endian::native == std::endian::little, "checkpoints are little-endian");

namespace {

constexpr char kMagic[4] = {'A', 'D', 'O', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("load_checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Network& net, const nlohmann::json& extra) {
  nlohmann::json header;
  header["network"] = net.config().to_json();
  header["formulation"] = net.formulation().name();
  if (net.formulation().kind() == FormulationKind::categorical) {
    header["grid_resolution_deg"] = net.formulation().grid_resolution_deg();
  }
  nlohmann::json layout = nlohmann::json::array();
  std::vector<double> blob;
  for (const nn::Param* p : net.parameters()) {
    layout.push_back({{"name", p->name}, {"shape", p->shape}});
    blob.insert(blob.end(), p->value.begin(), p->value.end());
  }
  std::size_t buffer_values = 0;
  for (const auto* b : net.buffers()) {
    blob.insert(blob.end(), b->begin(), b->end());
    buffer_values += b->size();
  }
  header["parameters"] = layout;
  header["param_count"] = net.param_count();
  header["buffer_values"] = buffer_values;
  if (!extra.is_null()) header["extra"] = extra;

  const std::string text = header.dump();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint64_t>(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  put<std::uint64_t>(os, blob.size());
  os.write(reinterpret_cast<const char*>(blob.data()),
           static_cast<std::streamsize>(blob.size() * sizeof(double)));
  if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("load_checkpoint: " + path.string() + " is not a model checkpoint");
  }
  if (get<std::uint32_t>(is) != kVersion) throw std::runtime_error("load_checkpoint: unsupported version");
  const auto text_len = get<std::uint64_t>(is);
  std::string text(text_len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(text_len));
  if (!is) throw std::runtime_error("load_checkpoint: truncated header");
  const auto header = nlohmann::json::parse(text);

  const auto cfg = NetworkConfig::from_json(header.at("network"));
  const auto formulation = Formulation::parse(header.at("formulation").get<std::string>(),
                                              header.value("grid_resolution_deg", 10.0));
  Network net(cfg, formulation, 0);

  const auto count = get<std::uint64_t>(is);
  std::vector<double> blob(count);
  is.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw std::runtime_error("load_checkpoint: truncated parameter blob");

  std::size_t expected = net.param_count();
  for (const auto* b : net.buffers()) expected += b->size();
  if (expected != count) throw std::runtime_error("load_checkpoint: parameter count mismatch");
  std::size_t off = 0;
  for (nn::Param* p : net.parameters()) {
    std::copy_n(blob.begin() + static_cast<std::ptrdiff_t>(off), p->size(), p->value.begin());
    off += p->size();
  }
  for (auto* b : net.buffers()) {
    std::copy_n(blob.begin() + static_cast<std::ptrdiff_t>(off), b->size(), b->begin());
    off += b->size();
  }
  return net;
}

}  // namespace ambidoa
