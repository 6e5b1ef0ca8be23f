#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "rsvp/errors.hpp"
#include "rsvp/features.hpp"
#include "rsvp/rng.hpp"

using namespace rsvp;

namespace {

std::vector<Eigen::MatrixXd> random_stack(Rng& rng, std::size_t n, Eigen::Index m,
                                          Eigen::Index n_t) {
  std::vector<Eigen::MatrixXd> stack;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::MatrixXd e(m, n_t);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < n_t; ++c) e(r, c) = rng.normal();
    }
    stack.push_back(std::move(e));
  }
  return stack;
}

}  // namespace

TEST_CASE("rank-one data keeps exactly one component with full ratio") {
  Rng rng(3);
  Eigen::VectorXd waveform(6);
  waveform << 1, 2, 0, -1, 3, 0.5;
  std::vector<Eigen::MatrixXd> stack;
  for (int i = 0; i < 10; ++i) {
    stack.push_back(rng.normal(0.0, 2.0) * waveform.transpose());
  }
  const SeriesPcaModel model = fit_series_pca(stack);
  REQUIRE(model.series.size() == 1);
  CHECK(model.series[0].basis.cols() == 1);
  CHECK(model.series[0].explained[0] == doctest::Approx(1.0));
}

TEST_CASE("isotropic noise keeps every component at roughly equal ratio") {
  Rng rng(5);
  const auto stack = random_stack(rng, 4000, 1, 4);
  const SeriesPcaModel model = fit_series_pca(stack);
  REQUIRE(model.series[0].basis.cols() == 4);
  for (Eigen::Index j = 0; j < 4; ++j) {
    CHECK(model.series[0].explained[j] == doctest::Approx(0.25).epsilon(0.2));
  }
}

TEST_CASE("components below one percent are dropped") {
  Rng rng(7);
  Eigen::VectorXd strong(8), weak(8);
  strong << 1, 1, 1, 1, -1, -1, -1, -1;
  weak << 1, -1, 1, -1, 1, -1, 1, -1;
  strong.normalize();
  weak.normalize();
  std::vector<Eigen::MatrixXd> stack;
  for (int i = 0; i < 3000; ++i) {
    // Variance split roughly 99.5% / 0.5% between two temporal directions.
    const Eigen::VectorXd row =
        rng.normal(0.0, 1.0) * strong + rng.normal(0.0, std::sqrt(0.005)) * weak;
    stack.push_back(row.transpose());
  }
  const SeriesPcaModel model = fit_series_pca(stack);
  CHECK(model.series[0].basis.cols() == 1);
}

TEST_CASE("retention boundary sits at the one-percent ratio") {
  // Two exact temporal directions; the weak one lands just above or just
  // below the threshold. (The boundary itself is kept by the >= rule, but
  // an exactly-representable 1% ratio does not exist in floating point.)
  auto build = [](double weak_variance) {
    std::vector<Eigen::MatrixXd> stack;
    Eigen::MatrixXd a(1, 2), b(1, 2);
    for (const double s : {1.0, -1.0}) {
      a << s * std::sqrt(99.0), 0.0;
      b << 0.0, s * std::sqrt(weak_variance);
      stack.push_back(a);
      stack.push_back(b);
    }
    return stack;
  };
  const SeriesPcaModel above = fit_series_pca(build(1.02));  // ratio ~ 0.0102
  CHECK(above.series[0].basis.cols() == 2);
  const SeriesPcaModel below = fit_series_pca(build(0.98));  // ratio ~ 0.0098
  CHECK(below.series[0].basis.cols() == 1);
}

TEST_CASE("training projections are decorrelated with matching variances") {
  Rng rng(11);
  const auto stack = random_stack(rng, 300, 2, 6);
  const SeriesPcaModel model = fit_series_pca(stack);
  const Eigen::MatrixXd feats = transform_features(model, stack);
  CHECK(feats.cols() == model.feature_count());

  Eigen::Index col = 0;
  for (std::size_t si = 0; si < model.series.size(); ++si) {
    const auto& s = model.series[si];
    const Eigen::Index k = s.basis.cols();
    Eigen::MatrixXd block = feats.middleCols(col, k);
    block.rowwise() -= block.colwise().mean();
    const Eigen::MatrixXd cov =
        block.transpose() * block / static_cast<double>(block.rows() - 1);
    // Off-diagonal correlations vanish.
    for (Eigen::Index i2 = 0; i2 < k; ++i2) {
      for (Eigen::Index j2 = 0; j2 < k; ++j2) {
        if (i2 == j2) continue;
        const double corr = cov(i2, j2) / std::sqrt(cov(i2, i2) * cov(j2, j2));
        CHECK(std::abs(corr) < 1e-6);
      }
    }
    // Column variances equal the eigenvalues behind the explained ratios.
    Eigen::MatrixXd series_rows(stack.size(), 6);
    for (std::size_t r = 0; r < stack.size(); ++r) {
      series_rows.row(static_cast<Eigen::Index>(r)) =
          stack[r].row(static_cast<Eigen::Index>(si));
    }
    series_rows.rowwise() -= series_rows.colwise().mean();
    const double total =
        (series_rows.transpose() * series_rows / static_cast<double>(stack.size() - 1))
            .trace();
    for (Eigen::Index j2 = 0; j2 < k; ++j2) {
      CHECK(cov(j2, j2) == doctest::Approx(s.explained[j2] * total).epsilon(1e-8));
    }
    col += k;
  }
}

TEST_CASE("zero input maps to minus the projected means") {
  Rng rng(13);
  const auto stack = random_stack(rng, 50, 1, 5);
  const SeriesPcaModel model = fit_series_pca(stack);
  std::vector<Eigen::MatrixXd> zero{Eigen::MatrixXd::Zero(1, 5)};
  const Eigen::MatrixXd feats = transform_features(model, zero);
  const Eigen::VectorXd expected =
      -(model.series[0].basis.transpose() * model.series[0].mean);
  CHECK((feats.row(0).transpose() - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("diagonal temporal covariance gives identity-basis features") {
  std::vector<Eigen::MatrixXd> stack;
  Eigen::MatrixXd e(1, 3);
  for (const auto& v : {std::array<double, 3>{2, 0, 0}, std::array<double, 3>{-2, 0, 0},
                        std::array<double, 3>{0, 1, 0}, std::array<double, 3>{0, -1, 0},
                        std::array<double, 3>{0, 0, 0.5},
                        std::array<double, 3>{0, 0, -0.5}}) {
    e << v[0], v[1], v[2];
    stack.push_back(e);
  }
  const SeriesPcaModel model = fit_series_pca(stack);
  REQUIRE(model.series[0].basis.cols() == 3);
  CHECK((model.series[0].basis - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <
        1e-12);
  const Eigen::MatrixXd feats = transform_features(model, stack);
  for (std::size_t i = 0; i < stack.size(); ++i) {
    CHECK((feats.row(static_cast<Eigen::Index>(i)) - stack[i].row(0)).cwiseAbs().maxCoeff() <
          1e-12);
  }
}

TEST_CASE("zero-variance series contribute nothing but are reported") {
  Rng rng(17);
  std::vector<Eigen::MatrixXd> stack;
  for (int i = 0; i < 20; ++i) {
    Eigen::MatrixXd e(2, 4);
    e.row(0).setConstant(3.0);  // flat series
    for (Eigen::Index c = 0; c < 4; ++c) e(1, c) = rng.normal();
    stack.push_back(e);
  }
  const SeriesPcaModel model = fit_series_pca(stack);
  CHECK(model.series[0].basis.cols() == 0);
  REQUIRE(model.zero_variance.size() == 1);
  CHECK(model.zero_variance[0] == 0);
  CHECK(model.feature_count() == model.series[1].basis.cols());
}

TEST_CASE("model parameters depend only on the training inputs") {
  Rng rng(19);
  const auto train_a = random_stack(rng, 40, 1, 5);
  const auto train_b = random_stack(rng, 40, 1, 5);
  const SeriesPcaModel model_a1 = fit_series_pca(train_a);
  const SeriesPcaModel model_b = fit_series_pca(train_b);
  const SeriesPcaModel model_a2 = fit_series_pca(train_a);

  CHECK((model_a1.series[0].mean - model_a2.series[0].mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK((model_a1.series[0].basis - model_a2.series[0].basis).cwiseAbs().maxCoeff() == 0.0);
  CHECK((model_a1.series[0].mean - model_b.series[0].mean).cwiseAbs().maxCoeff() > 0.0);

  // Feature dimension never exceeds series count x series length.
  CHECK(model_a1.feature_count() <= 1 * 5);
}

TEST_CASE("shape mismatches and tiny stacks are rejected") {
  Rng rng(23);
  const auto stack = random_stack(rng, 10, 2, 6);
  const SeriesPcaModel model = fit_series_pca(stack);
  CHECK_THROWS_AS(transform_features(model, random_stack(rng, 3, 2, 7)), ParamError);
  CHECK_THROWS_AS(transform_features(model, random_stack(rng, 3, 3, 6)), ParamError);
  CHECK_THROWS_AS(fit_series_pca(random_stack(rng, 1, 2, 6)), DataError);
}
