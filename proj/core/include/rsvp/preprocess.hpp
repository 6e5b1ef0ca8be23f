#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "rsvp/recording.hpp"

namespace rsvp {

// Continuous-recording conditioning: re-reference, zero-phase bandpass,
// decimation, epoching, EOG-based trial rejection and ERP averaging.
// All transformations are pure and deterministic.

/// Common average reference: subtracts the instantaneous cross-channel mean
/// from every sample column. Needs at least two channels.
ContinuousRecording common_average_reference(const ContinuousRecording& rec);

/// Zero-phase (forward-backward) 4th-order recursive bandpass with
/// reflection-padded edges. Requires 0 < lo < hi < rate/2.
ContinuousRecording bandpass(const ContinuousRecording& rec, double lo_hz, double hi_hz);

/// Integer-factor decimation with an anti-alias lowpass applied first.
/// Event indices are rescaled by target/rate and floored. The target rate
/// must divide the recording rate; upsampling is not supported.
ContinuousRecording resample(const ContinuousRecording& rec, double target_hz);

struct EpochingResult {
  EpochSet epochs;
  std::size_t dropped = 0;  // events whose window fell outside the recording
};

/// Cuts one epoch per event over [start, end) seconds relative to onset.
/// Events whose window does not fit are dropped and counted. Overlapping
/// epochs are fine. Throws DataError when nothing is retained.
EpochingResult epoch(const ContinuousRecording& rec, double window_start_s,
                     double window_end_s);

struct RejectionResult {
  EpochSet kept;
  std::size_t removed_target = 0;
  std::size_t removed_standard = 0;
};

/// Removes epochs whose peak-to-peak amplitude on any named EOG channel
/// exceeds the threshold. Retained epochs are untouched. Throws DataError
/// when a class present in the input is wiped out entirely.
RejectionResult reject_trials(const EpochSet& epochs,
                              const std::vector<std::string>& eog_channels,
                              double threshold_uv);

/// Per-sample mean across all epochs of one class (channels x samples).
Eigen::MatrixXd erp_average(const EpochSet& epochs, EventLabel label);

/// mean(target) - mean(standard); the columns of this matrix are the
/// candidate spatial patterns p(t).
Eigen::MatrixXd difference_erp(const EpochSet& epochs);

}  // namespace rsvp
