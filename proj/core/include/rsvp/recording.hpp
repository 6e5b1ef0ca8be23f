#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace rsvp {

enum class EventLabel : std::uint8_t { Standard = 0, Target = 1 };

inline const char* to_string(EventLabel l) {
  return l == EventLabel::Target ? "target" : "standard";
}

/// Stimulus marker inside a continuous recording.
struct Event {
  std::int64_t sample = 0;  // onset sample index into the recording
  EventLabel label = EventLabel::Standard;
  std::int32_t block_id = 0;
  std::int32_t task_id = 0;
};

/// Multichannel time series in microvolts, channel-major (one row per
/// channel), with stimulus markers.
struct ContinuousRecording {
  double rate = 0.0;                  // Hz
  std::vector<std::string> channels;  // unique, one per data row
  Eigen::MatrixXd data;               // channels x samples
  std::vector<Event> events;

  Eigen::Index channel_count() const { return data.rows(); }
  Eigen::Index sample_count() const { return data.cols(); }

  /// Index of a named channel, or -1 when absent.
  Eigen::Index channel_index(const std::string& name) const {
    for (std::size_t i = 0; i < channels.size(); ++i) {
      if (channels[i] == name) return static_cast<Eigen::Index>(i);
    }
    return -1;
  }
};

/// Origin of an epoch, kept so whole presentation blocks can be held out.
struct Provenance {
  std::int32_t block_id = 0;
  std::int32_t task_id = 0;
};

/// Stack of fixed-length labeled epochs cut around stimulus onsets.
/// Channel names are carried along in memory when known (they live in the
/// recording sidecar on disk, not in the epoch file).
struct EpochSet {
  std::vector<Eigen::MatrixXd> epochs;  // each channels x samples
  std::vector<EventLabel> labels;
  double rate = 0.0;          // Hz
  double window_start = 0.0;  // seconds relative to stimulus onset
  double window_end = 0.0;
  std::vector<Provenance> provenance;  // one entry per epoch
  std::vector<std::string> channels;   // optional, empty when unknown

  std::size_t size() const { return epochs.size(); }
  Eigen::Index channel_count() const { return epochs.empty() ? 0 : epochs.front().rows(); }
  Eigen::Index samples_per_epoch() const { return epochs.empty() ? 0 : epochs.front().cols(); }

  std::size_t count(EventLabel l) const {
    std::size_t n = 0;
    for (auto lab : labels) n += (lab == l) ? 1 : 0;
    return n;
  }
};

}  // namespace rsvp
