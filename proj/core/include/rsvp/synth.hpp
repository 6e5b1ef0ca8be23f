#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rsvp/recording.hpp"

namespace rsvp {

// Synthetic RSVP-EEG generator. Produces a continuous oddball recording
// (rapid image stream with rare targets) whose injected ERP responses are
// known exactly, so every downstream estimator can be checked against ground
// truth without real data.

/// One evoked-response component added at every target onset: a Gaussian
/// temporal bump times a fixed scalp topography. Negative deflections are
/// expressed through the topography sign; amplitude_uv is nonnegative.
struct ErpTemplate {
  double latency_s = 0.4;             // bump center after stimulus onset
  double width_s = 0.08;              // Gaussian sigma
  Eigen::VectorXd topography;         // one weight per EEG channel
  double amplitude_uv = 5.0;
};

struct NoiseConfig {
  double background_std_uv = 8.0;  // per-channel standard deviation
  double pink_exponent = 1.0;      // power spectral slope, 0 = white
};

struct EogConfig {
  double blink_rate_hz = 0.15;
  double amplitude_uv = 40.0;  // 0 disables the EOG channels entirely
};

struct SynthConfig {
  int channels = 32;          // EEG channels (EOG pair appended when enabled)
  double rate = 1000.0;       // Hz
  double stimulus_rate = 6.0; // images per second
  int blocks = 9;
  int images_per_block = 180;
  int targets_per_block = 9;
  int min_target_gap = 2;     // min distance between target positions, 2 = no adjacent
  std::vector<ErpTemplate> erp_templates;  // empty selects the defaults
  NoiseConfig noise;
  EogConfig eog;
  std::uint64_t seed = 0;
};

struct ErpInstance {
  std::int64_t onset = 0;        // sample index of the stimulus
  std::size_t template_index = 0;
};

/// Everything a test oracle needs: which templates were injected where, the
/// noise-free ERP contribution per channel, and the resolved templates
/// (topographies expanded to the full channel count, EOG rows zero).
struct GroundTruth {
  std::vector<ErpInstance> instances;
  Eigen::MatrixXd clean;  // channels x samples, ERP signal only
  std::vector<ErpTemplate> templates;
};

/// Channel names for an EEG montage of n_eeg channels (10-20 names for the
/// first 32, EXT<k> beyond), optionally followed by HEOG and VEOG.
std::vector<std::string> synth_channel_names(int n_eeg, bool with_eog);

/// Default two-component response: a parietal positivity around 400 ms and a
/// smaller fronto-central negativity around 200 ms.
std::vector<ErpTemplate> default_erp_templates(int n_eeg);

std::pair<ContinuousRecording, GroundTruth> synth_rsvp(const SynthConfig& cfg);

}  // namespace rsvp
