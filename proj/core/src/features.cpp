#include "rsvp/features.hpp"

#include <cmath>
#include <string>

#include "rsvp/errors.hpp"
#include "rsvp/linalg.hpp"

namespace rsvp {

SeriesPcaModel fit_series_pca(const std::vector<Eigen::MatrixXd>& train,
                              double min_explained) {
  const auto n = static_cast<Eigen::Index>(train.size());
  if (n < 2) throw DataError("fit_series_pca: need at least 2 training epochs");
  const Eigen::Index m = train.front().rows();
  const Eigen::Index n_t = train.front().cols();
  for (const auto& e : train) {
    if (e.rows() != m || e.cols() != n_t) {
      throw ParamError("fit_series_pca: ragged training stack");
    }
  }

  SeriesPcaModel model;
  model.input_len = n_t;
  model.min_explained = min_explained;
  model.series.resize(static_cast<std::size_t>(m));

  Eigen::MatrixXd samples(n_t, n);  // one series across epochs, time down rows
  for (Eigen::Index si = 0; si < m; ++si) {
    for (Eigen::Index i = 0; i < n; ++i) {
      samples.col(i) = train[static_cast<std::size_t>(i)].row(si).transpose();
    }
    auto& out = model.series[static_cast<std::size_t>(si)];
    out.mean = samples.rowwise().mean();

    const SymMatrix cov = covariance(samples, true);
    const double total = cov.mat().trace();
    if (total <= 0.0) {
      out.basis.resize(n_t, 0);
      out.explained.resize(0);
      model.zero_variance.push_back(static_cast<std::size_t>(si));
      continue;
    }

    const EigenDecomposition dec = sym_eig(cov);
    Eigen::Index keep = 0;
    while (keep < n_t && std::max(dec.eigenvalues[keep], 0.0) / total >= min_explained) {
      ++keep;
    }
    out.basis = dec.eigenvectors.leftCols(keep);
    out.explained.resize(keep);
    for (Eigen::Index j = 0; j < keep; ++j) {
      out.explained[j] = dec.eigenvalues[j] / total;
      // Deterministic component orientation: largest loading positive.
      Eigen::Index at = 0;
      out.basis.col(j).cwiseAbs().maxCoeff(&at);
      if (out.basis(at, j) < 0.0) out.basis.col(j) = -out.basis.col(j);
    }
  }
  return model;
}

Eigen::MatrixXd transform_features(const SeriesPcaModel& model,
                                   const std::vector<Eigen::MatrixXd>& data) {
  const auto m = static_cast<Eigen::Index>(model.series.size());
  for (const auto& e : data) {
    if (e.rows() != m || e.cols() != model.input_len) {
      throw ParamError("transform_features: epoch shape " + std::to_string(e.rows()) + "x" +
                       std::to_string(e.cols()) + " does not match model (" +
                       std::to_string(m) + " series of " + std::to_string(model.input_len) +
                       " samples)");
    }
  }

  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd out(n, model.feature_count());
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index col = 0;
    for (Eigen::Index si = 0; si < m; ++si) {
      const auto& s = model.series[static_cast<std::size_t>(si)];
      const Eigen::Index k = s.basis.cols();
      if (k == 0) continue;
      const Eigen::VectorXd centered =
          data[static_cast<std::size_t>(i)].row(si).transpose() - s.mean;
      out.row(i).segment(col, k) = (s.basis.transpose() * centered).transpose();
      col += k;
    }
  }
  return out;
}

}  // namespace rsvp
