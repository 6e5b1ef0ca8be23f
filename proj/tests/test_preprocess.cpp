#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "rsvp/errors.hpp"
#include "rsvp/preprocess.hpp"
#include "rsvp/rng.hpp"

using namespace rsvp;

namespace {

constexpr double kPi = 3.14159265358979323846;

ContinuousRecording make_rec(Eigen::MatrixXd data, double rate) {
  ContinuousRecording rec;
  rec.rate = rate;
  rec.data = std::move(data);
  for (Eigen::Index c = 0; c < rec.data.rows(); ++c) {
    rec.channels.push_back("ch" + std::to_string(c));
  }
  return rec;
}

/// Amplitude of a known tone via single-bin correlation, skipping the edges.
double tone_amplitude(const Eigen::VectorXd& x, double freq, double rate) {
  const Eigen::Index skip = static_cast<Eigen::Index>(x.size()) / 10;
  const Eigen::Index n = x.size() - 2 * skip;
  double re = 0.0, im = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double phase = 2.0 * kPi * freq * static_cast<double>(i + skip) / rate;
    re += x[i + skip] * std::cos(phase);
    im += x[i + skip] * std::sin(phase);
  }
  return 2.0 * std::hypot(re, im) / static_cast<double>(n);
}

}  // namespace

TEST_CASE("CAR subtracts the per-sample channel mean") {
  Eigen::MatrixXd data(3, 1);
  data << 1, 2, 3;
  const auto out = common_average_reference(make_rec(data, 100));
  CHECK(out.data(0, 0) == doctest::Approx(-1.0));
  CHECK(out.data(1, 0) == doctest::Approx(0.0));
  CHECK(out.data(2, 0) == doctest::Approx(1.0));
}

TEST_CASE("CAR is idempotent and zeroes identical channels") {
  Rng rng(5);
  Eigen::MatrixXd data(4, 50);
  for (Eigen::Index c = 0; c < 4; ++c) {
    for (Eigen::Index s = 0; s < 50; ++s) data(c, s) = rng.normal();
  }
  const auto once = common_average_reference(make_rec(data, 100));
  const auto twice = common_average_reference(once);
  CHECK((once.data - twice.data).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(once.data.colwise().mean().cwiseAbs().maxCoeff() < 1e-10);

  const auto flat = common_average_reference(
      make_rec(Eigen::MatrixXd::Ones(3, 20) * 7.5, 100));
  CHECK(flat.data.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("CAR requires two channels") {
  CHECK_THROWS_AS(common_average_reference(make_rec(Eigen::MatrixXd::Zero(1, 10), 100)),
                  ParamError);
}

TEST_CASE("bandpass keeps in-band tones and kills out-of-band tones") {
  const double rate = 250.0;
  const Eigen::Index n = 5000;
  Eigen::MatrixXd data(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    data(0, i) = std::sin(2.0 * kPi * 10.0 * static_cast<double>(i) / rate);
  }
  const auto in_band = bandpass(make_rec(data, rate), 0.1, 30.0);
  const double kept = tone_amplitude(in_band.data.row(0), 10.0, rate);
  CHECK(kept > 0.95);
  CHECK(kept < 1.05);

  for (Eigen::Index i = 0; i < n; ++i) {
    data(0, i) = std::sin(2.0 * kPi * 80.0 * static_cast<double>(i) / rate);
  }
  const auto stopband = bandpass(make_rec(data, rate), 0.1, 30.0);
  CHECK(tone_amplitude(stopband.data.row(0), 80.0, rate) < 0.1);
  // >= 20 dB attenuation at twice the upper edge.
  for (Eigen::Index i = 0; i < n; ++i) {
    data(0, i) = std::sin(2.0 * kPi * 60.0 * static_cast<double>(i) / rate);
  }
  const auto at_60 = bandpass(make_rec(data, rate), 0.1, 30.0);
  CHECK(tone_amplitude(at_60.data.row(0), 60.0, rate) < 0.1);
}

TEST_CASE("bandpass of zero stays zero and validates edges") {
  const auto out = bandpass(make_rec(Eigen::MatrixXd::Zero(2, 600), 250), 0.1, 30.0);
  CHECK(out.data.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK_THROWS_AS(bandpass(make_rec(Eigen::MatrixXd::Zero(1, 100), 250), 30.0, 0.1),
                  ParamError);
  CHECK_THROWS_AS(bandpass(make_rec(Eigen::MatrixXd::Zero(1, 100), 250), 0.1, 200.0),
                  ParamError);
}

TEST_CASE("resample 1000 to 250 scales lengths and event indices") {
  auto rec = make_rec(Eigen::MatrixXd::Zero(2, 4000), 1000);
  rec.events.push_back({1000, EventLabel::Target, 0, 0});
  rec.events.push_back({3999, EventLabel::Standard, 0, 0});
  const auto out = resample(rec, 250);
  CHECK(out.rate == 250.0);
  CHECK(out.sample_count() == 1000);
  CHECK(out.events[0].sample == 250);
  CHECK(out.events[1].sample == 999);
}

TEST_CASE("resample identity and DC behavior") {
  Rng rng(11);
  Eigen::MatrixXd data(2, 800);
  for (Eigen::Index c = 0; c < 2; ++c) {
    for (Eigen::Index s = 0; s < 800; ++s) data(c, s) = rng.normal();
  }
  const auto rec = make_rec(data, 1000);
  const auto same = resample(rec, 1000);
  CHECK((same.data - rec.data).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  const auto dc = resample(make_rec(Eigen::MatrixXd::Ones(2, 1000) * 3.25, 1000), 250);
  CHECK((dc.data.array() - 3.25).abs().maxCoeff() < 1e-9);
}

TEST_CASE("resample rejects upsampling and non-integer ratios") {
  const auto rec = make_rec(Eigen::MatrixXd::Zero(1, 100), 1000);
  CHECK_THROWS_AS(resample(rec, 2000), ParamError);
  CHECK_THROWS_AS(resample(rec, 300), ParamError);
}

TEST_CASE("epoching cuts windows, drops truncated events and reports them") {
  auto rec = make_rec(Eigen::MatrixXd::Zero(2, 1000), 250);
  for (Eigen::Index s = 0; s < 1000; ++s) {
    rec.data(0, s) = static_cast<double>(s);
  }
  rec.events.push_back({500, EventLabel::Target, 3, 1});
  rec.events.push_back({990, EventLabel::Standard, 3, 1});  // window spills over
  const auto result = epoch(rec, 0.0, 1.0);
  CHECK(result.epochs.size() == 1);
  CHECK(result.dropped == 1);
  CHECK(result.epochs.samples_per_epoch() == 250);
  CHECK(result.epochs.epochs[0](0, 0) == doctest::Approx(500.0));
  CHECK(result.epochs.labels[0] == EventLabel::Target);
  CHECK(result.epochs.provenance[0].block_id == 3);
  CHECK(result.epochs.provenance[0].task_id == 1);

  rec.events.clear();
  rec.events.push_back({995, EventLabel::Target, 0, 0});
  CHECK_THROWS_AS(epoch(rec, 0.0, 1.0), DataError);
}

TEST_CASE("overlapping epochs share samples at RSVP rates") {
  auto rec = make_rec(Eigen::MatrixXd::Zero(1, 3000), 1000);
  for (int k = 0; k < 12; ++k) {
    rec.events.push_back({static_cast<std::int64_t>(std::llround(k * 1000.0 / 6.0)),
                          EventLabel::Standard, 0, 0});
  }
  const auto result = epoch(rec, 0.0, 1.0);
  REQUIRE(result.epochs.size() >= 2);
  // Adjacent onsets are ~167 samples apart with 1000-sample windows: >= 80%
  // of samples shared between neighbors.
  const double overlap = 1.0 - 167.0 / 1000.0;
  CHECK(overlap >= 0.8);
}

TEST_CASE("reject_trials removes only above-threshold epochs, keeps contents") {
  EpochSet set;
  set.rate = 250;
  set.window_start = 0;
  set.window_end = 1;
  set.channels = {"ch0", "VEOG"};
  for (int i = 0; i < 4; ++i) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(2, 10);
    e.row(0).setConstant(i);
    if (i == 2) e(1, 5) = 200.0;  // blink on VEOG
    set.epochs.push_back(e);
    set.labels.push_back(i % 2 == 0 ? EventLabel::Target : EventLabel::Standard);
    set.provenance.push_back({0, 0});
  }

  const auto result = reject_trials(set, {"VEOG"}, 100.0);
  CHECK(result.kept.size() == 3);
  CHECK(result.removed_target == 1);
  CHECK(result.removed_standard == 0);
  for (const auto& e : result.kept.epochs) CHECK(e.rows() == 2);
  CHECK(result.kept.epochs[0](0, 0) == doctest::Approx(0.0));
  CHECK(result.kept.epochs[1](0, 0) == doctest::Approx(1.0));
  CHECK(result.kept.epochs[2](0, 0) == doctest::Approx(3.0));

  const auto keep_all = reject_trials(set, {"VEOG"}, 1e300);
  CHECK(keep_all.kept.size() == 4);

  CHECK_THROWS_AS(reject_trials(set, {"nope"}, 100.0), ParamError);
  CHECK_THROWS_AS(reject_trials(set, {"VEOG"}, -1.0), DataError);  // wipes everything
}

TEST_CASE("erp averages and difference") {
  EpochSet set;
  set.rate = 10;
  set.window_start = 0;
  set.window_end = 1;
  Eigen::MatrixXd t = Eigen::MatrixXd::Constant(2, 10, 2.0);
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(2, 10, 0.5);
  set.epochs = {t, t, s};
  set.labels = {EventLabel::Target, EventLabel::Target, EventLabel::Standard};
  set.provenance = {{0, 0}, {0, 0}, {0, 0}};

  CHECK((erp_average(set, EventLabel::Target) - t).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::MatrixXd diff = difference_erp(set);
  CHECK(diff(0, 0) == doctest::Approx(1.5));

  set.labels = {EventLabel::Target, EventLabel::Target, EventLabel::Target};
  CHECK_THROWS_AS(erp_average(set, EventLabel::Standard), DataError);
}

TEST_CASE("epoch counts and labels commute with resampling") {
  Rng rng(21);
  Eigen::MatrixXd data(2, 8000);
  for (Eigen::Index c = 0; c < 2; ++c) {
    for (Eigen::Index s = 0; s < 8000; ++s) data(c, s) = rng.normal();
  }
  auto rec = make_rec(data, 1000);
  for (int k = 0; k < 20; ++k) {
    rec.events.push_back({200 + k * 310, k % 5 == 0 ? EventLabel::Target : EventLabel::Standard,
                          k / 10, 0});
  }
  const auto direct = epoch(resample(rec, 250), 0.0, 1.0);
  const auto original = epoch(rec, 0.0, 1.0);
  CHECK(direct.epochs.size() == original.epochs.size());
  for (std::size_t i = 0; i < direct.epochs.size(); ++i) {
    CHECK(direct.epochs.labels[i] == original.epochs.labels[i]);
  }
}
