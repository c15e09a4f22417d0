// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace emovc {

/// SplitMix64 finaliser over a sequence of keys; used to derive independent,
/// reproducible sub-seeds (per network, per step, per utterance).
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> keys) {
  std::uint64_t z = 0x243F6A8885A308D3ULL;
  for (auto k : keys) {
    z += 0x9E3779B97F4A7C15ULL + k;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
  }
  return z;
}

/// 64-bit FNV-1a; stable string keys for seeds and config hashes.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

}  // namespace emovc
