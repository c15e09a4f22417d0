// SPDX-License-Identifier: Apache-2.0
//
// Flat key=value run configuration shared by every subcommand. All defaults
// live in one table; unknown keys are rejected. The hash covers every
// non-path key, so artifacts can be traced back to the settings that made them.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "emovc/evalkit/evaluate.hpp"
#include "emovc/evalkit/probe.hpp"
#include "emovc/trainer/trainer.hpp"

namespace emovc::harness {

enum class KeyKind { text, path, count, number, flag };

struct KeySpec {
  std::string name;
  KeyKind kind = KeyKind::text;
  std::string default_value;
  std::string help;
};

const std::vector<KeySpec>& config_keys();
const KeySpec& key_spec(const std::string& name);  // configuration error when unknown

class RunConfig {
 public:
  RunConfig();

  /// Dashes in `key` are read as underscores. Values are checked against the
  /// key's kind.
  void set(const std::string& key, const std::string& value);
  /// key = value lines; '#' starts a comment; blank lines ignored.
  void load_file(const std::filesystem::path& path);
  void parse_text(const std::string& text, const std::string& origin = "config");

  const std::string& get(const std::string& key) const;
  std::filesystem::path path(const std::string& key) const { return get(key); }
  std::size_t count(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  double number(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<std::string> list(const std::string& key) const;  // comma separated, empty entries dropped

  /// FNV-1a over "key=value\n" of the non-path keys in name order.
  std::uint64_t hash() const;
  /// Every key in name order, as a config file.
  std::string dump() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::string hash_hex(std::uint64_t h);

// Typed views used by the commands.
corpus::SynthSpec synth_spec(const RunConfig& c);
trainer::TrainingConfig training_config(const RunConfig& c);
evalkit::ProbeConfig probe_config(const RunConfig& c);
converter::Direction direction(const RunConfig& c);  // "a2b" | "b2a"
model::FeatureCombo combo(const RunConfig& c);

}  // namespace emovc::harness
