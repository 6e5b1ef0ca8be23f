#pragma once

#include <Eigen/Dense>
#include <vector>

namespace rsvp::iir {

// Internal recursive-filter machinery backing bandpass() and resample().
// Filters are realized as cascaded biquad sections (direct form II
// transposed), which stays stable even for the very low normalized corner
// frequencies EEG work needs (0.1 Hz at 250 Hz sampling).

struct Biquad {
  double b0, b1, b2;  // numerator
  double a1, a2;      // denominator, a0 normalized to 1
};

/// Butterworth bandpass with `poles` poles total (poles/2 prototype order).
/// `poles` must be a positive multiple of 4 so sections pair up conjugate.
std::vector<Biquad> butter_bandpass(double lo_hz, double hi_hz, double rate, int poles);

/// Butterworth lowpass of even order `poles`.
std::vector<Biquad> butter_lowpass(double cutoff_hz, double rate, int poles);

/// Zero-phase forward-backward filtering of one series with odd-reflection
/// padding of `pad` samples per edge (clamped to len-1) and steady-state
/// initial conditions per section.
void filtfilt(const std::vector<Biquad>& sections, Eigen::Ref<Eigen::VectorXd> x,
              Eigen::Index pad);

/// filtfilt applied to every row of a channels x samples matrix.
void filtfilt_rows(const std::vector<Biquad>& sections, Eigen::MatrixXd& data,
                   Eigen::Index pad);

}  // namespace rsvp::iir
