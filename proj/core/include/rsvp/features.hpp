#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace rsvp {

// Temporal-axis PCA applied independently per series (per channel, or per
// spatially-filtered component), keeping only components that explain at
// least a fixed share of the variance. Fitting is done on training epochs
// only; transforms concatenate the retained scores of every series into one
// feature vector per epoch.

struct SeriesPca {
  Eigen::VectorXd mean;       // over time, length = input_len
  Eigen::MatrixXd basis;      // input_len x retained, orthonormal columns
  Eigen::VectorXd explained;  // retained explained-variance ratios
};

struct SeriesPcaModel {
  std::vector<SeriesPca> series;       // one per input row, in row order
  Eigen::Index input_len = 0;          // samples per series (N_t)
  double min_explained = 0.01;         // retention threshold (inclusive)
  std::vector<std::size_t> zero_variance;  // series that contribute no features

  Eigen::Index feature_count() const {
    Eigen::Index n = 0;
    for (const auto& s : series) n += s.basis.cols();
    return n;
  }
};

/// Fits one PCA per series index over the training stack (n matrices, each
/// m x N_t). Components with explained-variance ratio below `min_explained`
/// are dropped; a ratio exactly at the threshold is kept. Zero-variance
/// series contribute zero features and are recorded in the model.
SeriesPcaModel fit_series_pca(const std::vector<Eigen::MatrixXd>& train,
                              double min_explained = 0.01);

/// Projects every epoch onto the retained bases (mean-subtracted) and
/// concatenates scores in series order: one row per epoch.
Eigen::MatrixXd transform_features(const SeriesPcaModel& model,
                                   const std::vector<Eigen::MatrixXd>& data);

}  // namespace rsvp
