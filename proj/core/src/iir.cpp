#include "iir.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "rsvp/errors.hpp"

namespace rsvp::iir {

namespace {

constexpr double kPi = 3.14159265358979323846;

using cd = std::complex<double>;

/// Bilinear transform of an analog pole: z = (K + s) / (K - s), K = 2 * rate.
cd bilinear_pole(cd s, double k) { return (k + s) / (k - s); }

/// Denominator coefficients of the biquad holding pole z and its conjugate.
void pole_pair_to_denominator(cd z, Biquad& q) {
  q.a1 = -2.0 * z.real();
  q.a2 = std::norm(z);
}

/// Cascade magnitude response at digital angular frequency theta [rad/sample].
double cascade_gain(const std::vector<Biquad>& sections, double theta) {
  const cd z = std::polar(1.0, theta);
  const cd z1 = 1.0 / z;
  const cd z2 = z1 * z1;
  cd h = 1.0;
  for (const auto& q : sections) {
    h *= (q.b0 + q.b1 * z1 + q.b2 * z2) / (1.0 + q.a1 * z1 + q.a2 * z2);
  }
  return std::abs(h);
}

}  // namespace

std::vector<Biquad> butter_bandpass(double lo_hz, double hi_hz, double rate, int poles) {
  if (poles <= 0 || poles % 4 != 0) {
    throw ParamError("butter_bandpass: pole count must be a positive multiple of 4");
  }
  const int proto_order = poles / 2;
  const double k = 2.0 * rate;
  const double wl = k * std::tan(kPi * lo_hz / rate);
  const double wh = k * std::tan(kPi * hi_hz / rate);
  const double w0_sq = wl * wh;
  const double bw = wh - wl;

  std::vector<Biquad> sections;
  sections.reserve(static_cast<std::size_t>(poles / 2));

  // Upper-half-plane prototype poles; conjugates are implicit in the biquads.
  for (int m = 0; m < proto_order / 2; ++m) {
    const double phi = kPi / 2.0 + kPi * (2.0 * m + 1.0) / (2.0 * proto_order);
    const cd p = std::polar(1.0, phi);

    // Lowpass-to-bandpass: each prototype pole splits into the two roots of
    // s^2 - bw*p*s + w0^2 = 0.
    const cd disc = std::sqrt(bw * bw * p * p - 4.0 * w0_sq);
    for (const cd s : {0.5 * (bw * p + disc), 0.5 * (bw * p - disc)}) {
      Biquad q{1.0, 0.0, -1.0, 0.0, 0.0};  // zeros at z = +1 and z = -1
      pole_pair_to_denominator(bilinear_pole(s, k), q);
      sections.push_back(q);
    }
  }

  // Normalize to unit gain at the (warped) center frequency.
  const double theta0 = 2.0 * std::atan(std::sqrt(w0_sq) / k);
  const double g = cascade_gain(sections, theta0);
  if (!(g > 0.0)) throw NumericError("butter_bandpass: degenerate design");
  const double per_section = std::pow(1.0 / g, 1.0 / static_cast<double>(sections.size()));
  for (auto& q : sections) {
    q.b0 *= per_section;
    q.b1 *= per_section;
    q.b2 *= per_section;
  }
  return sections;
}

std::vector<Biquad> butter_lowpass(double cutoff_hz, double rate, int poles) {
  if (poles <= 0 || poles % 2 != 0) {
    throw ParamError("butter_lowpass: pole count must be a positive even number");
  }
  const double k = 2.0 * rate;
  const double wc = k * std::tan(kPi * cutoff_hz / rate);

  std::vector<Biquad> sections;
  sections.reserve(static_cast<std::size_t>(poles / 2));
  for (int m = 0; m < poles / 2; ++m) {
    const double phi = kPi / 2.0 + kPi * (2.0 * m + 1.0) / (2.0 * poles);
    const cd p = wc * std::polar(1.0, phi);

    // Denominator (s - p)(s - conj(p)) under the bilinear transform; two
    // zeros at z = -1. Coefficients derived by direct substitution.
    const double a0 = k * k - 2.0 * p.real() * k + std::norm(p);
    Biquad q;
    q.a1 = (-2.0 * k * k + 2.0 * std::norm(p)) / a0;
    q.a2 = (k * k + 2.0 * p.real() * k + std::norm(p)) / a0;
    q.b0 = wc * wc / a0;
    q.b1 = 2.0 * q.b0;
    q.b2 = q.b0;
    sections.push_back(q);
  }
  return sections;
}

namespace {

/// One-direction pass of a single biquad with steady-state initial
/// conditions for the first sample value.
void run_biquad(const Biquad& q, double* x, Eigen::Index n) {
  const double denom = 1.0 + q.a1 + q.a2;
  const double g = (q.b0 + q.b1 + q.b2) / denom;
  double z1 = (q.b1 + q.b2 - (q.a1 + q.a2) * g) * x[0];
  double z2 = (q.b2 - q.a2 * g) * x[0];
  for (Eigen::Index i = 0; i < n; ++i) {
    const double in = x[i];
    const double out = q.b0 * in + z1;
    z1 = q.b1 * in - q.a1 * out + z2;
    z2 = q.b2 * in - q.a2 * out;
    x[i] = out;
  }
}

}  // namespace

void filtfilt(const std::vector<Biquad>& sections, Eigen::Ref<Eigen::VectorXd> x,
              Eigen::Index pad) {
  const Eigen::Index n = x.size();
  if (n < 2) return;
  pad = std::min(pad, n - 1);

  // Odd reflection around both endpoints keeps value and slope continuous.
  Eigen::VectorXd ext(n + 2 * pad);
  for (Eigen::Index i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
  ext.segment(pad, n) = x;
  for (Eigen::Index i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

  const Eigen::Index m = ext.size();
  for (const auto& q : sections) run_biquad(q, ext.data(), m);
  ext.reverseInPlace();
  for (const auto& q : sections) run_biquad(q, ext.data(), m);
  ext.reverseInPlace();

  x = ext.segment(pad, n);
}

void filtfilt_rows(const std::vector<Biquad>& sections, Eigen::MatrixXd& data,
                   Eigen::Index pad) {
  Eigen::VectorXd row(data.cols());
  for (Eigen::Index c = 0; c < data.rows(); ++c) {
    row = data.row(c);
    filtfilt(sections, row, pad);
    data.row(c) = row;
  }
}

}  // namespace rsvp::iir
