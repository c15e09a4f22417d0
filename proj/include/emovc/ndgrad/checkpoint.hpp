// SPDX-License-Identifier: Apache-2.0
//
// Little-endian parameter file:
//   "EMVC" | u32 version | u64 config hash |
//   repeated until EOF: u32 name length | name bytes | u32 rank | u64 extents[rank] | f64 values[prod]
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "emovc/ndgrad/tensor.hpp"

namespace emovc::nd {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t config_hash = 0;
  std::vector<NamedTensor> tensors;

  const Tensor* find(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
};

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);

/// Writes to a sibling temp file and renames, so a failed write never leaves a truncated checkpoint.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace emovc::nd
