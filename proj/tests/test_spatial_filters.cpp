#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "rsvp/errors.hpp"
#include "rsvp/preprocess.hpp"
#include "rsvp/rng.hpp"
#include "rsvp/spatial_filters.hpp"
#include "rsvp/synth.hpp"

using namespace rsvp;

namespace {

double abs_cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

/// Labeled epochs with a known rank-one evoked response on the target class.
EpochSet synthetic_epochs(Rng& rng, Eigen::Index n_ch, Eigen::Index n_t,
                          std::size_t per_class, const Eigen::VectorXd& topo,
                          double amplitude, double noise_std) {
  Eigen::VectorXd bump(n_t);
  for (Eigen::Index t = 0; t < n_t; ++t) {
    const double dt = (static_cast<double>(t) / static_cast<double>(n_t)) - 0.5;
    bump[t] = std::exp(-0.5 * (dt / 0.12) * (dt / 0.12));
  }

  EpochSet set;
  set.rate = static_cast<double>(n_t);
  set.window_start = 0.0;
  set.window_end = 1.0;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    Eigen::MatrixXd e(n_ch, n_t);
    for (Eigen::Index c = 0; c < n_ch; ++c) {
      for (Eigen::Index t = 0; t < n_t; ++t) e(c, t) = rng.normal(0.0, noise_std);
    }
    const bool target = i % 2 == 0;
    if (target) e += amplitude * topo * bump.transpose();
    set.epochs.push_back(std::move(e));
    set.labels.push_back(target ? EventLabel::Target : EventLabel::Standard);
    set.provenance.push_back({0, 0});
  }
  return set;
}

}  // namespace

TEST_CASE("closed-form beamformer on identity covariance") {
  const SymMatrix eye(Eigen::MatrixXd::Identity(3, 3));
  Eigen::VectorXd p = Eigen::VectorXd::Zero(3);
  p[0] = 1.0;
  const Eigen::VectorXd w = lda_beamformer(eye, p);
  CHECK((w - p).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(w.dot(eye.mat() * w) == doctest::Approx(1.0));  // J = 1
}

TEST_CASE("closed-form beamformer, hand-solved 2x2") {
  Eigen::MatrixXd s(2, 2);
  s << 2, 0, 0, 1;
  Eigen::VectorXd p(2);
  p << 1, 1;
  const Eigen::VectorXd w = lda_beamformer(SymMatrix(s), p);
  CHECK(w[0] == doctest::Approx(1.0 / 3.0));
  CHECK(w[1] == doctest::Approx(2.0 / 3.0));
  CHECK(w.dot(p) == doctest::Approx(1.0));
}

TEST_CASE("single-window fit equals the whole-epoch beamformer") {
  Rng rng(71);
  Eigen::VectorXd topo = Eigen::VectorXd::Zero(6);
  topo[2] = 1.0;
  topo[3] = 0.6;
  const EpochSet set = synthetic_epochs(rng, 6, 40, 30, topo, 3.0, 1.0);

  const SpatialFilterBank bank = fit_mtwlb(set, 1);
  REQUIRE(bank.filter_count() == 1);

  // Independent route: standardize the whole-epoch concatenation per channel,
  // shrink its covariance and apply the closed form at every timestamp.
  const Eigen::Index n_ch = set.channel_count();
  const Eigen::Index n_t = set.samples_per_epoch();
  const auto n = static_cast<Eigen::Index>(set.size());
  Eigen::MatrixXd concat(n_ch, n * n_t);
  for (Eigen::Index i = 0; i < n; ++i) {
    concat.middleCols(i * n_t, n_t) = set.epochs[static_cast<std::size_t>(i)];
  }
  for (Eigen::Index c = 0; c < n_ch; ++c) {
    auto row = concat.row(c);
    row.array() -= row.mean();
    row /= std::sqrt(row.squaredNorm() / static_cast<double>(row.size() - 1));
  }
  const auto sigma = shrink_covariance(covariance(concat, true), concat.cols()).matrix;
  const Eigen::MatrixXd diff = difference_erp(set);

  double best_j = 1e300;
  Eigen::VectorXd best_w;
  for (Eigen::Index t = 0; t < n_t; ++t) {
    const Eigen::VectorXd w = lda_beamformer(sigma, diff.col(t));
    const double j = w.dot(sigma.mat() * w);
    if (j < best_j) {
      best_j = j;
      best_w = w;
    }
  }
  CHECK(abs_cosine(bank.filters.col(0), best_w) > 1.0 - 1e-12);
  CHECK(bank.meta[0].score == doctest::Approx(best_j).epsilon(1e-9));
}

TEST_CASE("windowed beamformer satisfies the unit-response constraint") {
  Rng rng(73);
  Eigen::VectorXd topo = Eigen::VectorXd::Zero(5);
  topo[1] = 1.0;
  const EpochSet set = synthetic_epochs(rng, 5, 50, 25, topo, 2.5, 1.0);
  const SpatialFilterBank bank = fit_mtwlb(set, 5);
  REQUIRE(bank.filter_count() == 5);
  for (Eigen::Index j = 0; j < 5; ++j) {
    CHECK(std::abs(bank.filters.col(j).dot(bank.patterns.col(j)) - 1.0) <= 1e-10);
    REQUIRE(bank.meta[static_cast<std::size_t>(j)].window.has_value());
  }
  // Windows tile [0, 1) s in order.
  CHECK(bank.meta[0].window->first == doctest::Approx(0.0));
  CHECK(bank.meta[4].window->second == doctest::Approx(1.0));

  // Patterns are difference-ERP columns from inside each window.
  const Eigen::MatrixXd diff = difference_erp(set);
  for (Eigen::Index j = 0; j < 5; ++j) {
    bool found = false;
    for (Eigen::Index t = 10 * j; t < 10 * (j + 1); ++t) {
      if ((bank.patterns.col(j) - diff.col(t)).cwiseAbs().maxCoeff() < 1e-12 ||
          (bank.patterns.col(j) + diff.col(t)).cwiseAbs().maxCoeff() < 1e-12) {
        found = true;
        break;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("windowed beamformer is optimal among constraint-satisfying filters") {
  Rng rng(79);
  Eigen::VectorXd topo = Eigen::VectorXd::Zero(6);
  topo[0] = 0.8;
  topo[4] = 1.0;
  const EpochSet set = synthetic_epochs(rng, 6, 30, 40, topo, 2.0, 1.0);
  const SpatialFilterBank bank = fit_mtwlb(set, 3);

  // Recover each window's shrunk covariance the same way the fit does.
  for (int wi = 0; wi < 3; ++wi) {
    const Eigen::Index lo = 30 * wi / 3, hi = 30 * (wi + 1) / 3;
    Eigen::MatrixXd concat(6, static_cast<Eigen::Index>(set.size()) * (hi - lo));
    for (std::size_t i = 0; i < set.size(); ++i) {
      concat.middleCols(static_cast<Eigen::Index>(i) * (hi - lo), hi - lo) =
          set.epochs[i].middleCols(lo, hi - lo);
    }
    for (Eigen::Index c = 0; c < 6; ++c) {
      auto row = concat.row(c);
      row.array() -= row.mean();
      row /= std::sqrt(row.squaredNorm() / static_cast<double>(row.size() - 1));
    }
    const auto sigma = shrink_covariance(covariance(concat, true), concat.cols()).matrix;

    const Eigen::VectorXd w = bank.filters.col(wi);
    const Eigen::VectorXd p = bank.patterns.col(wi);
    const double j_fit = w.dot(sigma.mat() * w);
    for (int rep = 0; rep < 100; ++rep) {
      Eigen::VectorXd z(6);
      for (Eigen::Index c = 0; c < 6; ++c) z[c] = rng.normal();
      // Project the perturbation so the constraint w'^T p = 1 still holds.
      const Eigen::VectorXd w2 = w + z - p * (z.dot(p) / p.squaredNorm());
      CHECK(w2.dot(p) == doctest::Approx(1.0));
      CHECK(w2.dot(sigma.mat() * w2) >= j_fit - 1e-10);
    }
  }
}

TEST_CASE("windowed beamformer parameter errors") {
  Rng rng(83);
  Eigen::VectorXd topo = Eigen::VectorXd::Ones(3);
  const EpochSet set = synthetic_epochs(rng, 3, 10, 10, topo, 1.0, 1.0);
  CHECK_THROWS_AS(fit_mtwlb(set, 6), ParamError);   // windows of 1 sample
  CHECK_THROWS_AS(fit_mtwlb(set, 0), ParamError);
  CHECK_THROWS_AS(fit_mtwlb(set, 11), ParamError);  // more windows than samples

  EpochSet one_class = set;
  for (auto& l : one_class.labels) l = EventLabel::Target;
  CHECK_THROWS_AS(fit_mtwlb(one_class, 2), DataError);
}

TEST_CASE("Toeplitz design matches the by-hand construction") {
  const ToeplitzDesign d({0, 2}, 5, 2);
  const Eigen::MatrixXd m = d.dense();
  Eigen::MatrixXd expected(5, 2);
  expected << 1, 0, 0, 1, 1, 0, 0, 1, 0, 0;
  CHECK((m - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Toeplitz gram and cross products agree with the dense matrix") {
  Rng rng(89);
  const ToeplitzDesign d({3, 9, 12, 40, 44}, 60, 7);
  const Eigen::MatrixXd dense = d.dense();
  CHECK((d.gram() - dense.transpose() * dense).cwiseAbs().maxCoeff() == 0.0);

  Eigen::MatrixXd data(4, 60);
  for (Eigen::Index c = 0; c < 4; ++c) {
    for (Eigen::Index s = 0; s < 60; ++s) data(c, s) = rng.normal();
  }
  const Eigen::MatrixXd expected = dense.transpose() * data.transpose();
  CHECK((d.cross(data) - expected).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(ToeplitzDesign({5, 5}, 10, 2), ParamError);
  CHECK_THROWS_AS(ToeplitzDesign({-1}, 10, 2), ParamError);
}

TEST_CASE("evoked-response filter: noiseless model gives unit eigenvalues") {
  Rng rng(97);
  const Eigen::Index n_ch = 4, n_e = 6, total = 3000;
  Eigen::MatrixXd a_true(n_e, n_ch);
  for (Eigen::Index i = 0; i < n_e; ++i) {
    for (Eigen::Index c = 0; c < n_ch; ++c) a_true(i, c) = rng.normal();
  }
  std::vector<std::int64_t> onsets;
  for (std::int64_t o = 10; o + n_e < total; o += 50) onsets.push_back(o);

  ContinuousRecording rec;
  rec.rate = 100;
  rec.data = Eigen::MatrixXd::Zero(n_ch, total);
  for (Eigen::Index c = 0; c < n_ch; ++c) rec.channels.push_back("ch" + std::to_string(c));
  for (const auto o : onsets) {
    for (Eigen::Index j = 0; j < n_e; ++j) rec.data.col(o + j) += a_true.row(j).transpose();
    rec.events.push_back({o, EventLabel::Target, 0, 0});
  }

  const SpatialFilterBank bank = fit_xdawn(rec, n_e, static_cast<int>(n_ch));
  for (const auto& meta : bank.meta) CHECK(std::abs(meta.score - 1.0) < 0.02);
}

TEST_CASE("evoked-response filter concentrates on the response channels") {
  SynthConfig cfg;
  cfg.channels = 12;
  cfg.rate = 250;
  cfg.blocks = 3;
  cfg.images_per_block = 60;
  cfg.targets_per_block = 6;
  cfg.seed = 7;
  cfg.eog.amplitude_uv = 0.0;
  cfg.noise.background_std_uv = 4.0;
  ErpTemplate t;
  t.latency_s = 0.35;
  t.width_s = 0.08;
  t.amplitude_uv = 12.0;
  t.topography = Eigen::VectorXd::Zero(12);
  t.topography[1] = 1.0;
  t.topography[2] = 0.8;
  cfg.erp_templates = {t};

  const auto [rec, truth] = synth_rsvp(cfg);
  const SpatialFilterBank bank = fit_xdawn(rec, 250, 3);
  const Eigen::VectorXd top = bank.filters.col(0);
  const double support = top[1] * top[1] + top[2] * top[2];
  CHECK(support / top.squaredNorm() >= 0.8);
}

TEST_CASE("evoked-response filter directions are scale invariant") {
  Rng rng(101);
  Eigen::VectorXd topo = Eigen::VectorXd::Zero(6);
  topo[3] = 1.0;
  const EpochSet set = synthetic_epochs(rng, 6, 32, 30, topo, 2.0, 1.0);
  EpochSet scaled = set;
  for (auto& e : scaled.epochs) e *= 37.5;

  const SpatialFilterBank a = fit_xdawn(set, 3);
  const SpatialFilterBank b = fit_xdawn(scaled, 3);
  for (Eigen::Index j = 0; j < 3; ++j) {
    CHECK(abs_cosine(a.filters.col(j), b.filters.col(j)) > 1.0 - 1e-8);
  }
}

TEST_CASE("evoked-response filter rejects bad filter counts") {
  Rng rng(103);
  const EpochSet set = synthetic_epochs(rng, 4, 20, 10, Eigen::VectorXd::Ones(4), 1.0, 1.0);
  CHECK_THROWS_AS(fit_xdawn(set, 5), ParamError);
  CHECK_THROWS_AS(fit_xdawn(set, 0), ParamError);
}

TEST_CASE("class-variance filters on a diagonal construction") {
  // Orthonormal temporal rows a, b; target epochs [2a; b], standards [a; b].
  const Eigen::Index n_t = 4;
  Eigen::VectorXd a(n_t), b(n_t);
  a << 0.5, -0.5, 0.5, -0.5;
  b << 0.5, 0.5, -0.5, -0.5;

  EpochSet set;
  set.rate = 4;
  set.window_start = 0;
  set.window_end = 1;
  for (int i = 0; i < 6; ++i) {
    Eigen::MatrixXd e(2, n_t);
    const bool target = i % 2 == 0;
    e.row(0) = (target ? 2.0 : 1.0) * a.transpose();
    e.row(1) = b.transpose();
    set.epochs.push_back(e);
    set.labels.push_back(target ? EventLabel::Target : EventLabel::Standard);
    set.provenance.push_back({0, 0});
  }

  const SpatialFilterBank bank = fit_csp(set, 1);
  REQUIRE(bank.filter_count() == 2);
  // Top filter isolates the boosted channel, bottom filter the other one.
  CHECK(std::abs(bank.filters(0, 0)) / bank.filters.col(0).norm() > 0.999);
  CHECK(std::abs(bank.filters(1, 1)) / bank.filters.col(1).norm() > 0.999);
  CHECK(bank.meta[0].score > bank.meta[1].score);
}

TEST_CASE("class-variance filters: indistinguishable classes sit at one half") {
  // Epochs with exactly isotropic per-epoch covariance in both classes.
  const Eigen::Index n_t = 4;
  Eigen::VectorXd a(n_t), b(n_t);
  a << 0.5, -0.5, 0.5, -0.5;
  b << 0.5, 0.5, -0.5, -0.5;
  EpochSet set;
  set.rate = 4;
  set.window_start = 0;
  set.window_end = 1;
  for (int i = 0; i < 4; ++i) {
    Eigen::MatrixXd e(2, n_t);
    e.row(0) = a.transpose();
    e.row(1) = b.transpose();
    set.epochs.push_back(e);
    set.labels.push_back(i % 2 == 0 ? EventLabel::Target : EventLabel::Standard);
    set.provenance.push_back({0, 0});
  }
  const SpatialFilterBank bank = fit_csp(set, 1);
  CHECK(bank.meta[0].score == doctest::Approx(0.5));
  CHECK(bank.meta[1].score == doctest::Approx(0.5));
}

TEST_CASE("class-variance filters recover a boosted direction") {
  Rng rng(107);
  const Eigen::Index n_ch = 6, n_t = 40;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n_ch);
  v[2] = 0.8;
  v[5] = 0.6;

  EpochSet set;
  set.rate = n_t;
  set.window_start = 0;
  set.window_end = 1;
  for (int i = 0; i < 120; ++i) {
    Eigen::MatrixXd e(n_ch, n_t);
    for (Eigen::Index c = 0; c < n_ch; ++c) {
      for (Eigen::Index t = 0; t < n_t; ++t) e(c, t) = rng.normal();
    }
    const bool target = i % 2 == 0;
    if (target) {
      for (Eigen::Index t = 0; t < n_t; ++t) e.col(t) += v * rng.normal(0.0, 2.0);
    }
    set.epochs.push_back(std::move(e));
    set.labels.push_back(target ? EventLabel::Target : EventLabel::Standard);
    set.provenance.push_back({0, 0});
  }

  const SpatialFilterBank bank = fit_csp(set, 2);
  REQUIRE(bank.filter_count() == 4);
  // The top filter, mapped through the class-1 covariance structure, aligns
  // with the boosted direction: compare pattern to v instead of the filter.
  CHECK(abs_cosine(bank.patterns.col(0), v) > 0.95);

  // Label swap: eigenvalues map to 1 - lambda in reverse order.
  EpochSet swapped = set;
  for (auto& l : swapped.labels) {
    l = l == EventLabel::Target ? EventLabel::Standard : EventLabel::Target;
  }
  const SpatialFilterBank flipped = fit_csp(swapped, 2);
  CHECK(flipped.meta[0].score == doctest::Approx(1.0 - bank.meta[2 * 2 - 1].score));
  CHECK(flipped.meta[2 * 2 - 1].score == doctest::Approx(1.0 - bank.meta[0].score));

  // All eigenvalues live in (0, 1) under this formulation.
  for (const auto& m : bank.meta) {
    CHECK(m.score > 0.0);
    CHECK(m.score < 1.0);
  }

  CHECK_THROWS_AS(fit_csp(set, 4), ParamError);  // 8 filters from 6 channels
}

TEST_CASE("apply_filters selects, zeroes and averages") {
  SpatialFilterBank bank;
  bank.method = FilterMethod::None;
  bank.filters = Eigen::MatrixXd::Zero(4, 2);
  bank.filters(0, 0) = 1.0;  // e1
  bank.filters(2, 1) = 1.0;  // e3
  bank.patterns = bank.filters;

  Eigen::MatrixXd epoch(4, 5);
  for (Eigen::Index c = 0; c < 4; ++c) {
    for (Eigen::Index t = 0; t < 5; ++t) epoch(c, t) = 10.0 * static_cast<double>(c) + static_cast<double>(t);
  }
  const Eigen::MatrixXd psi = apply_filters(bank, epoch);
  CHECK((psi.row(0) - epoch.row(0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((psi.row(1) - epoch.row(2)).cwiseAbs().maxCoeff() == 0.0);

  CHECK(apply_filters(bank, Eigen::MatrixXd::Zero(4, 5)).cwiseAbs().maxCoeff() == 0.0);

  SpatialFilterBank avg;
  avg.filters = Eigen::MatrixXd::Constant(4, 1, 0.25);
  avg.patterns = avg.filters;
  const Eigen::MatrixXd mean_trace = apply_filters(avg, epoch);
  CHECK(mean_trace(0, 0) == doctest::Approx(epoch.col(0).mean()));

  CHECK_THROWS_AS(apply_filters(bank, Eigen::MatrixXd::Zero(3, 5)), ParamError);
}

TEST_CASE("spatial patterns: identity covariance and biorthogonality") {
  SpatialFilterBank bank;
  bank.filters = Eigen::MatrixXd::Identity(3, 2);
  bank.patterns = bank.filters;
  const SymMatrix eye(Eigen::MatrixXd::Identity(3, 3));
  const Eigen::MatrixXd patterns = spatial_patterns(bank, eye);
  CHECK((patterns - bank.filters).cwiseAbs().maxCoeff() < 1e-14);
  // a_j^T w_k = delta_jk for orthonormal filters under identity covariance.
  const Eigen::MatrixXd gram = patterns.transpose() * bank.filters;
  CHECK((gram - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);

  CHECK_THROWS_AS(spatial_patterns(bank, SymMatrix(Eigen::MatrixXd::Zero(3, 3))),
                  NumericError);
}

TEST_CASE("filtered components beat raw channels on template SNR") {
  Rng rng(113);
  Eigen::VectorXd topo = Eigen::VectorXd::Zero(8);
  topo << 0.1, 0.5, 1.0, 0.5, 0.1, 0.0, 0.0, 0.0;
  const EpochSet set = synthetic_epochs(rng, 8, 50, 60, topo, 1.2, 1.0);

  // Template SNR of a weight vector: variance of the projected class-mean
  // difference over the per-epoch residual variance.
  const Eigen::MatrixXd diff = difference_erp(set);
  const Eigen::MatrixXd target_mean = erp_average(set, EventLabel::Target);
  const Eigen::MatrixXd standard_mean = erp_average(set, EventLabel::Standard);
  auto snr_of = [&](const Eigen::VectorXd& w) {
    double signal = (w.transpose() * diff).squaredNorm();
    double noise = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto& mean =
          set.labels[i] == EventLabel::Target ? target_mean : standard_mean;
      noise += (w.transpose() * (set.epochs[i] - mean)).squaredNorm();
    }
    return signal / (noise / static_cast<double>(set.size()));
  };

  double best_channel = 0.0;
  for (Eigen::Index c = 0; c < 8; ++c) {
    best_channel = std::max(best_channel, snr_of(Eigen::VectorXd::Unit(8, c)));
  }
  const double mtwlb_snr = snr_of(fit_mtwlb(set, 1).filters.col(0));
  const double xdawn_snr = snr_of(fit_xdawn(set, 1).filters.col(0));
  CHECK(mtwlb_snr > best_channel);
  CHECK(xdawn_snr > best_channel);
}
