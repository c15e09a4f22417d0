// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>
#include <iomanip>

#include "emovc/binary_io.hpp"
#include "emovc/dsp/features.hpp"
#include "emovc/error.hpp"

namespace emovc::dsp {

namespace {
constexpr std::uint32_t kFeatureVersion = 1;

void put_vec(std::ostream& os, const std::vector<double>& v) {
  for (double x : v) binio::put_f64(os, x);
}

std::vector<double> get_vec(std::istream& is, std::size_t n, const char* what) {
  std::vector<double> v(n);
  for (auto& x : v) x = binio::get_f64(is, what);
  return v;
}
}  // namespace

void write_features(std::ostream& os, const FeatureSet& fs) {
  fs.validate();
  binio::put_magic(os, "EMFS");
  binio::put_uint<std::uint32_t>(os, kFeatureVersion);
  binio::put_uint<std::uint64_t>(os, fs.frames());
  binio::put_uint<std::uint32_t>(os, static_cast<std::uint32_t>(fs.mcc.cols));
  binio::put_f64(os, fs.frame_shift);
  binio::put_f64(os, fs.sample_rate);
  binio::put_uint<std::uint32_t>(os, static_cast<std::uint32_t>(fs.window));
  binio::put_uint<std::uint32_t>(os, static_cast<std::uint32_t>(fs.fft_size));
  binio::put_f64(os, fs.warp);
  binio::put_string(os, fs.provenance);
  put_vec(os, fs.mcc.data);
  put_vec(os, fs.f0);
  for (auto v : fs.voicing) binio::put_uint<std::uint8_t>(os, v);
  put_vec(os, fs.energy);
  put_vec(os, fs.aperiodicity);
}

FeatureSet read_features(std::istream& is) {
  binio::expect_magic(is, "EMFS", "feature file");
  const auto version = binio::get_uint<std::uint32_t>(is, "feature version");
  if (version != kFeatureVersion) fail(ErrorCode::io, "unsupported feature file version " + std::to_string(version));
  FeatureSet fs;
  const auto frames = binio::get_uint<std::uint64_t>(is, "frame count");
  const auto order = binio::get_uint<std::uint32_t>(is, "mcc order");
  if (frames > (1u << 24) || order > 4096) fail(ErrorCode::io, "implausible feature file dimensions");
  fs.frame_shift = binio::get_f64(is, "frame shift");
  fs.sample_rate = binio::get_f64(is, "sample rate");
  fs.window = binio::get_uint<std::uint32_t>(is, "window");
  fs.fft_size = binio::get_uint<std::uint32_t>(is, "fft size");
  fs.warp = binio::get_f64(is, "warp");
  fs.provenance = binio::get_string(is, "provenance");
  fs.mcc = Matrix(frames, order);
  fs.mcc.data = get_vec(is, frames * order, "mcc");
  fs.f0 = get_vec(is, frames, "f0");
  fs.voicing.resize(frames);
  for (auto& v : fs.voicing) v = binio::get_uint<std::uint8_t>(is, "voicing");
  fs.energy = get_vec(is, frames, "energy");
  fs.aperiodicity = get_vec(is, frames, "aperiodicity");
  fs.validate();
  return fs;
}

void save_features(const std::filesystem::path& path, const FeatureSet& fs) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::io, "cannot write feature file " + path.string());
  write_features(os, fs);
  if (!os) fail(ErrorCode::io, "failed writing feature file " + path.string());
}

FeatureSet load_features(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::io, "cannot open feature file " + path.string());
  return read_features(is);
}

void write_features_csv(std::ostream& os, const FeatureSet& fs) {
  os << "f0,voicing,energy";
  for (std::size_t m = 0; m < fs.mcc.cols; ++m) os << ",mcc" << m;
  os << '\n' << std::setprecision(17);
  for (std::size_t t = 0; t < fs.frames(); ++t) {
    os << fs.f0[t] << ',' << int(fs.voicing[t]) << ',' << fs.energy[t];
    for (double v : fs.mcc.row(t)) os << ',' << v;
    os << '\n';
  }
}

}  // namespace emovc::dsp
