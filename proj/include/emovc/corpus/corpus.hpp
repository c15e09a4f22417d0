// SPDX-License-Identifier: Apache-2.0
//
// Emotional speech corpora on disk (root/<emotion>/<split>/<name>.wav), the
// synthetic pseudo-speech generator, feature extraction and the corpus-level
// normalisation statistics.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "emovc/converter/assemble.hpp"
#include "emovc/dsp/features.hpp"
#include "emovc/dsp/wav.hpp"

namespace emovc::corpus {

inline const std::vector<std::string> kSplits{"train", "val", "eval"};

struct EmotionPreset {
  std::string name;
  double f0_mean = 150.0;         // Hz
  double f0_range = 2.0;          // semitones of declination/accent excursion
  double amplitude = 0.25;        // eight times the RMS of the voiced stretch
  double tilt = 0.0;              // > 0 darkens (one-pole low-pass), < 0 brightens (pre-emphasis)
  double syllable_rate = 4.5;     // syllables per second
};

/// neutral, sad (low, quiet, dark, slow) and angry (high, loud, bright, fast).
std::vector<EmotionPreset> default_presets();

struct SynthSpec {
  std::vector<EmotionPreset> emotions = default_presets();
  std::size_t train = 52, val = 4, eval = 4;
  std::size_t min_syllables = 5, max_syllables = 9;
  std::uint64_t seed = 7;
  double sample_rate = 16000.0;

  /// The proportions of the paper's 260/20/20 split at full size.
  static SynthSpec full_scale();
  std::size_t count(const std::string& split) const;
  void validate() const;
};

struct ManifestEntry {
  std::string emotion;
  std::string split;
  std::string name;
  std::string path;  // relative to the corpus root
  bool operator==(const ManifestEntry&) const = default;
};

struct CorpusManifest {
  std::filesystem::path root;
  std::vector<std::string> emotions;
  std::vector<ManifestEntry> entries;
  std::map<std::string, converter::CorpusStats> stats;  // keyed by combination name
  std::vector<std::string> unreadable;                  // "path: reason", skipped by load_corpus

  std::vector<ManifestEntry> select(const std::string& emotion, const std::string& split) const;
  std::size_t count(const std::string& emotion, const std::string& split) const;
  bool has_emotion(const std::string& emotion) const;
  /// Each emotion present in each split; names unique per emotion.
  void validate() const;
};

void save_manifest(const std::filesystem::path& path, const CorpusManifest& m);
CorpusManifest load_manifest(const std::filesystem::path& path);

/// Renders one utterance of parallel content `index` in the given style.
dsp::Waveform synthesize_utterance(const SynthSpec& spec, const EmotionPreset& preset, std::size_t index);

/// Writes every WAV plus manifest.json under `out_dir`; deterministic given the spec.
CorpusManifest generate_synthetic_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir);

/// Scans root/<emotion>/<split>/*.wav. Every emotion directory must contain
/// the three split directories and at least one WAV. Files that fail to parse
/// are listed in `unreadable` and left out of the entries.
CorpusManifest load_corpus(const std::filesystem::path& root);

/// Loads manifest.json when present, else scans the directory.
CorpusManifest open_corpus(const std::filesystem::path& root);

struct Utterance {
  ManifestEntry entry;
  dsp::FeatureSet features;  // provenance = entry.split
};

/// Path of the cached feature file of an entry (root/features/<emotion>/<split>/<name>.emfs).
std::filesystem::path feature_path(const CorpusManifest& m, const ManifestEntry& e);

/// Analyses every WAV and writes the feature cache.
std::vector<Utterance> extract_features(const CorpusManifest& m, const dsp::AnalysisConfig& cfg = {});

/// Reads the cache, extracting any missing entries. Optional filters on emotion / split.
std::vector<Utterance> load_utterances(const CorpusManifest& m, const std::vector<std::string>& emotions = {},
                                       const std::vector<std::string>& splits = {},
                                       const dsp::AnalysisConfig& cfg = {});

/// Per-row mean/std pooled over the training-split frames of `emotions`
/// (std floored at 1e-6), plus per-emotion LF0/LE statistics. Non-training
/// utterances are ignored; a training entry whose features carry another
/// provenance tag is a contract violation.
converter::CorpusStats compute_stats(const std::vector<Utterance>& utterances, model::FeatureCombo combo,
                                     const std::vector<std::string>& emotions);

}  // namespace emovc::corpus
