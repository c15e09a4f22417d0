// SPDX-License-Identifier: Apache-2.0
//
// Frame-level speech analysis: spectral envelope, warped mel-cepstra, F0 with
// voicing, power-domain energy, and a per-frame aperiodicity stub.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "emovc/common/matrix.hpp"
#include "emovc/dsp/wav.hpp"

namespace emovc::dsp {

struct AnalysisConfig {
  double frame_length = 0.025;  // seconds
  double frame_shift = 0.005;   // seconds
  std::size_t fft_size = 1024;
  double f0_min = 60.0;
  double f0_max = 500.0;
  double voicing_threshold = 0.5;  // minimum normalised autocorrelation peak
  std::size_t mcc_order = 36;
  double warp = 0.42;               // all-pass warping constant (16 kHz convention)
  std::size_t lifter = 30;          // cepstral cutoff of the envelope smoother, in samples
  double envelope_floor = 1e-10;

  std::size_t window_samples(double sample_rate) const;
  std::size_t shift_samples(double sample_rate) const;
  void validate(double sample_rate) const;
};

/// T = floor((len - window) / shift) + 1; throws insufficient_input when len < window.
std::size_t frame_count(std::size_t length, std::size_t window, std::size_t shift);

struct FeatureSet {
  Matrix mcc;                        // T x order, includes the 0th (gain) coefficient
  std::vector<double> f0;            // Hz, 0 where unvoiced
  std::vector<std::uint8_t> voicing; // 1 where voiced
  std::vector<double> energy;        // linear power-domain frame energies
  std::vector<double> aperiodicity;  // noise mix in [0,1], copied through conversion untouched
  double frame_shift = 0.005;        // seconds
  double sample_rate = 16000.0;
  std::size_t window = 400;          // analysis window, samples
  std::size_t fft_size = 1024;
  double warp = 0.42;
  std::string provenance;            // corpus split the utterance came from ("train", "val", "eval", or empty)

  std::size_t frames() const { return f0.size(); }
  std::size_t envelope_bins() const { return fft_size / 2 + 1; }
  /// Throws contract_violation unless all tracks agree in length and f0 > 0 iff voiced.
  void validate() const;
};

/// Power spectrum averaged over one F0 band (a fixed 100 Hz band where `f0` is
/// empty or zero), then smoothed by cepstral liftering of its logarithm. One
/// row per frame (T x fft/2+1).
Matrix spectral_envelope(const Waveform& w, const AnalysisConfig& cfg, const std::vector<double>& f0 = {});

struct PitchTrack {
  std::vector<double> f0;
  std::vector<std::uint8_t> voicing;
  std::vector<double> periodicity;  // best normalised autocorrelation per frame
};

/// Normalised cross-correlation pitch tracker with parabolic peak refinement.
PitchTrack estimate_f0(const Waveform& w, const AnalysisConfig& cfg);

FeatureSet analyze(const Waveform& w, const AnalysisConfig& cfg = {});

/// Warped cepstrum of a power envelope (T x K) by weighted least squares onto a
/// cosine basis in all-pass-warped frequency. Values below `floor` are raised
/// to it; negative or non-finite entries are contract violations.
Matrix mcc_encode(const Matrix& envelope, std::size_t order, double warp, double floor = 1e-10);
/// Evaluates the warped cosine series and exponentiates: T x K power envelope.
Matrix mcc_decode(const Matrix& mcc, std::size_t bins, double warp);

/// Power-domain bin sum per frame.
std::vector<double> energy_contour(const Matrix& envelope);

// Serialisation: "EMFS" binary with the checkpoint conventions, plus CSV for inspection.
void write_features(std::ostream& os, const FeatureSet& fs);
FeatureSet read_features(std::istream& is);
void save_features(const std::filesystem::path& path, const FeatureSet& fs);
FeatureSet load_features(const std::filesystem::path& path);
/// Header f0,voicing,energy,mcc0..mcc{order-1}; one row per frame.
void write_features_csv(std::ostream& os, const FeatureSet& fs);

}  // namespace emovc::dsp
