// SPDX-License-Identifier: Apache-2.0
#include "emovc/ndgrad/checkpoint.hpp"

#include <fstream>

#include "emovc/binary_io.hpp"
#include "emovc/error.hpp"

namespace emovc::nd {

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t.tensor;
  return nullptr;
}

const Tensor& Checkpoint::get(const std::string& name) const {
  const Tensor* t = find(name);
  if (!t) fail(ErrorCode::configuration, "checkpoint has no entry named '" + name + "'");
  return *t;
}

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  binio::put_magic(os, "EMVC");
  binio::put_uint<std::uint32_t>(os, ckpt.version);
  binio::put_uint<std::uint64_t>(os, ckpt.config_hash);
  for (const auto& [name, t] : ckpt.tensors) {
    binio::put_string(os, name);
    binio::put_uint<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) binio::put_uint<std::uint64_t>(os, e);
    for (double v : t.data()) binio::put_f64(os, v);
  }
}

Checkpoint read_checkpoint(std::istream& is) {
  binio::expect_magic(is, "EMVC", "checkpoint");
  Checkpoint ckpt;
  ckpt.version = binio::get_uint<std::uint32_t>(is, "checkpoint version");
  if (ckpt.version != kCheckpointVersion)
    fail(ErrorCode::io, "unsupported checkpoint version " + std::to_string(ckpt.version));
  ckpt.config_hash = binio::get_uint<std::uint64_t>(is, "checkpoint config hash");
  while (is.peek() != std::char_traits<char>::eof()) {
    std::string name = binio::get_string(is, "tensor name");
    const auto rank = binio::get_uint<std::uint32_t>(is, "tensor rank");
    if (rank == 0 || rank > 8) fail(ErrorCode::io, "implausible rank for tensor '" + name + "'");
    Shape shape(rank);
    for (auto& e : shape) e = binio::get_uint<std::uint64_t>(is, "tensor extent");
    const std::size_t n = numel(shape);
    if (n > (std::size_t{1} << 32)) fail(ErrorCode::io, "implausible size for tensor '" + name + "'");
    std::vector<double> values(n);
    for (auto& v : values) v = binio::get_f64(is, "tensor values");
    ckpt.tensors.push_back({std::move(name), Tensor::from(shape, std::move(values))});
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorCode::io, "cannot open checkpoint for writing: " + tmp.string());
    write_checkpoint(os, ckpt);
    os.flush();
    if (!os) fail(ErrorCode::io, "write failed for checkpoint: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::io, "cannot move checkpoint into place at " + path.string() + " (partial state left at " +
                                  tmp.string() + "): " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::io, "cannot open checkpoint: " + path.string());
  return read_checkpoint(is);
}

}  // namespace emovc::nd
