// SPDX-License-Identifier: Apache-2.0
#include "emovc/dsp/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "emovc/binary_io.hpp"
#include "emovc/error.hpp"

namespace emovc::dsp {

namespace {

std::string tag(std::istream& is) {
  char b[4];
  is.read(b, 4);
  if (is.gcount() != 4) fail(ErrorCode::io, "truncated WAV chunk header");
  return std::string(b, 4);
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::io, "cannot open WAV file " + path.string());
  const std::string where = "WAV file " + path.string();
  if (tag(is) != "RIFF") fail(ErrorCode::io, where + " is not RIFF");
  binio::get_uint<std::uint32_t>(is, "RIFF size");
  if (tag(is) != "WAVE") fail(ErrorCode::io, where + " is not WAVE");

  Waveform w;
  bool have_fmt = false;
  for (;;) {
    const std::string id = tag(is);
    const auto size = binio::get_uint<std::uint32_t>(is, "chunk size");
    if (id == "fmt ") {
      const auto format = binio::get_uint<std::uint16_t>(is, "format");
      const auto channels = binio::get_uint<std::uint16_t>(is, "channels");
      const auto rate = binio::get_uint<std::uint32_t>(is, "sample rate");
      binio::get_uint<std::uint32_t>(is, "byte rate");
      binio::get_uint<std::uint16_t>(is, "block align");
      const auto bits = binio::get_uint<std::uint16_t>(is, "bits per sample");
      if (format != 1 || channels != 1 || bits != 16)
        fail(ErrorCode::io, where + ": only 16-bit PCM mono is supported (format " + std::to_string(format) +
                                ", " + std::to_string(channels) + " channels, " + std::to_string(bits) + " bits)");
      if (rate == 0) fail(ErrorCode::io, where + ": zero sample rate");
      w.sample_rate = rate;
      is.ignore(size - 16 + (size & 1));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) fail(ErrorCode::io, where + ": data chunk before fmt chunk");
      const std::size_t n = size / 2;
      w.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto u = binio::get_uint<std::uint16_t>(is, "sample");
        w.samples[i] = static_cast<std::int16_t>(u) / 32768.0;
      }
      return w;
    } else {
      is.ignore(size + (size & 1));
      if (!is) fail(ErrorCode::io, where + ": missing data chunk");
    }
  }
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
  require(w.sample_rate > 0, "write_wav: sample rate must be positive");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::io, "cannot write WAV file " + path.string());
  const auto rate = static_cast<std::uint32_t>(std::lround(w.sample_rate));
  const auto bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  os.write("RIFF", 4);
  binio::put_uint<std::uint32_t>(os, 36 + bytes);
  os.write("WAVEfmt ", 8);
  binio::put_uint<std::uint32_t>(os, 16);
  binio::put_uint<std::uint16_t>(os, 1);
  binio::put_uint<std::uint16_t>(os, 1);
  binio::put_uint<std::uint32_t>(os, rate);
  binio::put_uint<std::uint32_t>(os, rate * 2);
  binio::put_uint<std::uint16_t>(os, 2);
  binio::put_uint<std::uint16_t>(os, 16);
  os.write("data", 4);
  binio::put_uint<std::uint32_t>(os, bytes);
  for (double s : w.samples) {
    const double c = std::clamp(std::isfinite(s) ? s : 0.0, -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(std::lround(std::clamp(c * 32768.0, -32768.0, 32767.0)));
    binio::put_uint<std::uint16_t>(os, static_cast<std::uint16_t>(q));
  }
  if (!os) fail(ErrorCode::io, "failed writing WAV file " + path.string());
}

}  // namespace emovc::dsp
