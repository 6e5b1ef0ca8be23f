#include "rsvp/preprocess.hpp"

#include <cmath>
#include <string>

#include "iir.hpp"
#include "rsvp/errors.hpp"

namespace rsvp {

ContinuousRecording common_average_reference(const ContinuousRecording& rec) {
  if (rec.channel_count() < 2) {
    throw ParamError("common_average_reference: need at least 2 channels");
  }
  ContinuousRecording out = rec;
  out.data.rowwise() -= rec.data.colwise().mean();
  return out;
}

ContinuousRecording bandpass(const ContinuousRecording& rec, double lo_hz, double hi_hz) {
  if (!(lo_hz > 0.0) || !(hi_hz > lo_hz) || !(hi_hz < rec.rate / 2.0)) {
    throw ParamError("bandpass: need 0 < lo < hi < rate/2, got [" + std::to_string(lo_hz) +
                     ", " + std::to_string(hi_hz) + "] at " + std::to_string(rec.rate) + " Hz");
  }
  const auto sections = iir::butter_bandpass(lo_hz, hi_hz, rec.rate, 4);
  // Pad covers roughly three time constants of the slowest (low-edge) pole.
  const auto pad = static_cast<Eigen::Index>(std::ceil(3.0 * rec.rate / lo_hz));
  ContinuousRecording out = rec;
  iir::filtfilt_rows(sections, out.data, pad);
  return out;
}

ContinuousRecording resample(const ContinuousRecording& rec, double target_hz) {
  if (target_hz > rec.rate) {
    throw ParamError("resample: upsampling not supported (" + std::to_string(rec.rate) +
                     " -> " + std::to_string(target_hz) + " Hz)");
  }
  if (!(target_hz > 0.0)) throw ParamError("resample: target rate must be positive");
  const double ratio = rec.rate / target_hz;
  const auto factor = static_cast<Eigen::Index>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(factor)) > 1e-9) {
    throw ParamError("resample: rate " + std::to_string(rec.rate) +
                     " is not an integer multiple of target " + std::to_string(target_hz));
  }
  if (factor == 1) return rec;

  ContinuousRecording out;
  out.rate = target_hz;
  out.channels = rec.channels;

  // Anti-alias lowpass at 0.4x the target rate, zero phase.
  const double cutoff = 0.4 * target_hz;
  const auto sections = iir::butter_lowpass(cutoff, rec.rate, 8);
  const auto pad = static_cast<Eigen::Index>(std::ceil(3.0 * rec.rate / cutoff)) + 50;
  Eigen::MatrixXd filtered = rec.data;
  iir::filtfilt_rows(sections, filtered, pad);

  const Eigen::Index t_new = (rec.sample_count() + factor - 1) / factor;
  out.data.resize(rec.channel_count(), t_new);
  for (Eigen::Index j = 0; j < t_new; ++j) out.data.col(j) = filtered.col(j * factor);

  out.events = rec.events;
  for (auto& ev : out.events) ev.sample = ev.sample / factor;  // floor rescale
  return out;
}

EpochingResult epoch(const ContinuousRecording& rec, double window_start_s,
                     double window_end_s) {
  const auto n_t = static_cast<Eigen::Index>(
      std::llround((window_end_s - window_start_s) * rec.rate));
  if (n_t < 1) throw ParamError("epoch: window shorter than one sample");
  const auto offset =
      static_cast<std::int64_t>(std::llround(window_start_s * rec.rate));

  EpochingResult result;
  EpochSet& set = result.epochs;
  set.rate = rec.rate;
  set.window_start = window_start_s;
  set.window_end = window_end_s;
  set.channels = rec.channels;

  for (const auto& ev : rec.events) {
    const std::int64_t s0 = ev.sample + offset;
    if (s0 < 0 || s0 + n_t > rec.sample_count()) {
      ++result.dropped;
      continue;
    }
    set.epochs.push_back(rec.data.block(0, s0, rec.channel_count(), n_t));
    set.labels.push_back(ev.label);
    set.provenance.push_back({ev.block_id, ev.task_id});
  }
  if (set.epochs.empty()) throw DataError("epoch: no event window fits the recording");
  return result;
}

RejectionResult reject_trials(const EpochSet& epochs,
                              const std::vector<std::string>& eog_channels,
                              double threshold_uv) {
  std::vector<Eigen::Index> eog_rows;
  for (const auto& name : eog_channels) {
    Eigen::Index idx = -1;
    for (std::size_t i = 0; i < epochs.channels.size(); ++i) {
      if (epochs.channels[i] == name) {
        idx = static_cast<Eigen::Index>(i);
        break;
      }
    }
    if (idx < 0) throw ParamError("reject_trials: unknown channel '" + name + "'");
    eog_rows.push_back(idx);
  }

  const std::size_t had_targets = epochs.count(EventLabel::Target);
  const std::size_t had_standards = epochs.count(EventLabel::Standard);

  RejectionResult result;
  EpochSet& kept = result.kept;
  kept.rate = epochs.rate;
  kept.window_start = epochs.window_start;
  kept.window_end = epochs.window_end;
  kept.channels = epochs.channels;

  for (std::size_t i = 0; i < epochs.size(); ++i) {
    bool reject = false;
    for (const auto row : eog_rows) {
      const auto& e = epochs.epochs[i];
      const double p2p = e.row(row).maxCoeff() - e.row(row).minCoeff();
      if (p2p > threshold_uv) {
        reject = true;
        break;
      }
    }
    if (reject) {
      if (epochs.labels[i] == EventLabel::Target) {
        ++result.removed_target;
      } else {
        ++result.removed_standard;
      }
      continue;
    }
    kept.epochs.push_back(epochs.epochs[i]);
    kept.labels.push_back(epochs.labels[i]);
    kept.provenance.push_back(epochs.provenance[i]);
  }

  if ((had_targets > 0 && kept.count(EventLabel::Target) == 0) ||
      (had_standards > 0 && kept.count(EventLabel::Standard) == 0)) {
    throw DataError("reject_trials: rejection removed every epoch of one class");
  }
  return result;
}

Eigen::MatrixXd erp_average(const EpochSet& epochs, EventLabel label) {
  Eigen::MatrixXd sum;
  std::size_t n = 0;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (epochs.labels[i] != label) continue;
    if (n == 0) {
      sum = epochs.epochs[i];
    } else {
      sum += epochs.epochs[i];
    }
    ++n;
  }
  if (n == 0) {
    throw DataError(std::string("erp_average: no '") + to_string(label) + "' epochs");
  }
  return sum / static_cast<double>(n);
}

Eigen::MatrixXd difference_erp(const EpochSet& epochs) {
  return erp_average(epochs, EventLabel::Target) -
         erp_average(epochs, EventLabel::Standard);
}

}  // namespace rsvp
