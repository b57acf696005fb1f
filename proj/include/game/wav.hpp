#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "game/error.hpp"

namespace game {

inline constexpr std::uint32_t kWavSampleRate = 16000;

namespace detail {
inline std::uint32_t le32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
}  // namespace detail

/// Reads RIFF PCM, 16-bit signed little-endian, mono, 16 kHz. Samples are
/// scaled to [-1, 1) by 1/32768. Anything else is rejected.
inline std::vector<double> read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
  const std::string where = "wav " + path.string() + ": ";
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw DataError(where + "not a RIFF/WAVE file");
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = detail::le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw DataError(where + "truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw DataError(where + "fmt chunk too short");
      const auto* f = bytes.data() + body;
      const auto format = detail::le16(f), channels = detail::le16(f + 2),
                 bits = detail::le16(f + 14);
      const auto rate = detail::le32(f + 4);
      if (format != 1) throw DataError(where + "only PCM (format 1) is supported");
      if (channels != 1) throw DataError(where + "only mono audio is supported");
      if (bits != 16) throw DataError(where + "only 16-bit samples are supported");
      if (rate != kWavSampleRate)
        throw DataError(where + "sample rate " + std::to_string(rate) + " Hz, expected 16000 Hz");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw DataError(where + "data chunk before fmt chunk");
      std::vector<double> samples(size / 2);
      for (std::size_t i = 0; i < samples.size(); ++i)
        samples[i] = static_cast<std::int16_t>(detail::le16(bytes.data() + body + 2 * i)) / 32768.0;
      return samples;
    }
    pos = body + size + (size & 1u);
  }
  throw DataError(where + "no data chunk");
}

/// Writes mono 16-bit PCM at 16 kHz; samples are clipped to [-1, 1).
inline void write_wav(const std::filesystem::path& path, std::span<const double> samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  auto put16 = [&](std::uint16_t v) {
    out.put(static_cast<char>(v & 0xff));
    out.put(static_cast<char>(v >> 8));
  };
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  put32(36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put32(16);
  put16(1);
  put16(1);
  put32(kWavSampleRate);
  put32(kWavSampleRate * 2);
  put16(2);
  put16(16);
  out.write("data", 4);
  put32(data_bytes);
  for (double s : samples) {
    double scaled = std::clamp(s, -1.0, 32767.0 / 32768.0) * 32768.0;
    put16(static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(scaled))));
  }
}

}  // namespace game
