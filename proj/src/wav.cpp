#include "ambidoa/wav.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace ambidoa::wav {

namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(const std::vector<char>& buf, std::size_t off) {
  if (off + sizeof(T) > buf.size()) throw std::runtime_error("wav: truncated file");
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  return v;
}

void write_float_wav(const std::filesystem::path& path,
                     const std::vector<const std::vector<double>*>& channels, double rate) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("wav: cannot open " + path.string() + " for writing");
  const auto n_ch = static_cast<std::uint16_t>(channels.size());
  const std::size_t frames = channels.empty() ? 0 : channels[0]->size();
  const auto data_bytes = static_cast<std::uint32_t>(frames * n_ch * sizeof(float));
  const auto sr = static_cast<std::uint32_t>(rate);

  os.write("RIFF", 4);
  put<std::uint32_t>(os, 4 + (8 + 18) + (8 + 4) + (8 + data_bytes));
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put<std::uint32_t>(os, 18);
  put<std::uint16_t>(os, kFormatFloat);
  put<std::uint16_t>(os, n_ch);
  put<std::uint32_t>(os, sr);
  put<std::uint32_t>(os, sr * n_ch * 4);
  put<std::uint16_t>(os, static_cast<std::uint16_t>(n_ch * 4));
  put<std::uint16_t>(os, 32);
  put<std::uint16_t>(os, 0);
  // Non-PCM formats carry a fact chunk.
  os.write("fact", 4);
  put<std::uint32_t>(os, 4);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(frames));
  os.write("data", 4);
  put<std::uint32_t>(os, data_bytes);
  std::vector<float> interleaved(frames * n_ch);
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < n_ch; ++c) {
      interleaved[i * n_ch + c] = static_cast<float>((*channels[c])[i]);
    }
  }
  os.write(reinterpret_cast<const char*>(interleaved.data()),
           static_cast<std::streamsize>(interleaved.size() * sizeof(float)));
  if (!os) throw std::runtime_error("wav: write failed for " + path.string());
}

struct Decoded {
  std::vector<std::vector<double>> channels;
  double sample_rate = 0.0;
};

Decoded read_any(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("wav: cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("wav: " + path.string() + " is not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, n_ch = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_off = 0, data_len = 0;
  bool have_fmt = false;
  std::size_t off = 12;
  while (off + 8 <= buf.size()) {
    const std::string id(buf.data() + off, 4);
    const auto len = get<std::uint32_t>(buf, off + 4);
    const std::size_t body = off + 8;
    if (id == "fmt ") {
      format = get<std::uint16_t>(buf, body);
      n_ch = get<std::uint16_t>(buf, body + 2);
      rate = get<std::uint32_t>(buf, body + 4);
      bits = get<std::uint16_t>(buf, body + 14);
      if (format == kFormatExtensible && len >= 40) format = get<std::uint16_t>(buf, body + 24);
      have_fmt = true;
    } else if (id == "data") {
      data_off = body;
      data_len = std::min<std::size_t>(len, buf.size() - body);
      break;
    }
    off = body + len + (len & 1);
  }
  if (!have_fmt || data_off == 0) throw std::runtime_error("wav: missing fmt or data chunk");
  if (n_ch == 0) throw std::runtime_error("wav: zero channels");

  const std::size_t bytes = bits / 8;
  const std::size_t frames = data_len / (bytes * n_ch);
  Decoded out;
  out.sample_rate = rate;
  out.channels.assign(n_ch, std::vector<double>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < n_ch; ++c) {
      const std::size_t p = data_off + (i * n_ch + c) * bytes;
      double v = 0.0;
      if (format == kFormatFloat && bits == 32) {
        v = get<float>(buf, p);
      } else if (format == kFormatFloat && bits == 64) {
        v = get<double>(buf, p);
      } else if (format == kFormatPcm && bits == 16) {
        v = get<std::int16_t>(buf, p) / 32768.0;
      } else if (format == kFormatPcm && bits == 24) {
        const auto b0 = static_cast<std::uint8_t>(buf[p]);
        const auto b1 = static_cast<std::uint8_t>(buf[p + 1]);
        const auto b2 = static_cast<std::uint8_t>(buf[p + 2]);
        std::int32_t s = (b0 | (b1 << 8) | (b2 << 16));
        if (s & 0x800000) s -= 0x1000000;
        v = s / 8388608.0;
      } else if (format == kFormatPcm && bits == 32) {
        v = get<std::int32_t>(buf, p) / 2147483648.0;
      } else {
        throw std::runtime_error("wav: unsupported sample format in " + path.string());
      }
      out.channels[c][i] = v;
    }
  }
  return out;
}

}  // namespace

void write_foa(const std::filesystem::path& path, const FoaBuffer& buffer) {
  buffer.validate();
  std::vector<const std::vector<double>*> chans;
  for (const auto& ch : buffer.channels) chans.push_back(&ch);
  write_float_wav(path, chans, buffer.sample_rate);
}

FoaBuffer read_foa(const std::filesystem::path& path) {
  Decoded d = read_any(path);
  if (d.channels.size() != kFoaChannels) {
    throw std::runtime_error("wav: " + path.string() + " has " + std::to_string(d.channels.size()) +
                             " channels, expected 4 (W,X,Y,Z)");
  }
  FoaBuffer out;
  out.sample_rate = d.sample_rate;
  for (std::size_t c = 0; c < kFoaChannels; ++c) out.channels[c] = std::move(d.channels[c]);
  return out;
}

MonoAudio read_mono(const std::filesystem::path& path) {
  Decoded d = read_any(path);
  return {std::move(d.channels[0]), d.sample_rate};
}

void write_mono(const std::filesystem::path& path, const MonoAudio& audio) {
  write_float_wav(path, {&audio.samples}, audio.sample_rate);
}

}  // namespace ambidoa::wav
