#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rsvp/linalg.hpp"
#include "rsvp/recording.hpp"

namespace rsvp {

// Supervised spatial filter estimation. All three methods produce a bank of
// channel-weight columns w; projecting an epoch X as w^T X yields component
// time series that concentrate the evoked response.
//
//  - Windowed beamformer: per time window, the minimum-variance filter
//    subject to unit response on the window's strongest difference-ERP
//    pattern (one filter per window).
//  - Evoked-response filter ("xDAWN"): maximizes the ratio of modeled evoked
//    energy to total signal energy through a Toeplitz least-squares model.
//  - Class-variance filter (CSP): extreme eigenvectors of the two-class
//    variance quotient, returned in max/min pairs.

enum class FilterMethod : std::uint8_t { None = 0, Mtwlb = 1, Xdawn = 2, Csp = 3 };

const char* to_string(FilterMethod m);
std::optional<FilterMethod> filter_method_from_string(const std::string& s);

struct FilterMeta {
  double score = 0.0;  // variance J (beamformer) or generalized eigenvalue
  std::optional<std::pair<double, double>> window;  // seconds, beamformer only
};

struct SpatialFilterBank {
  FilterMethod method = FilterMethod::None;
  Eigen::MatrixXd filters;   // channels x n_filters
  Eigen::MatrixXd patterns;  // channels x n_filters, forward models
  std::vector<FilterMeta> meta;
  std::vector<std::string> warnings;

  Eigen::Index channel_count() const { return filters.rows(); }
  Eigen::Index filter_count() const { return filters.cols(); }
};

/// Zero/one design matrix whose first column marks target onsets and each
/// later column shifts the previous one down one sample. Kept in factored
/// form; dense() materializes it for small problems.
struct ToeplitzDesign {
  std::vector<std::int64_t> onsets;  // strictly increasing, in [0, total_len)
  Eigen::Index total_len = 0;        // rows
  Eigen::Index erp_len = 0;          // columns

  ToeplitzDesign(std::vector<std::int64_t> onset_indices, Eigen::Index rows,
                 Eigen::Index cols);

  Eigen::MatrixXd dense() const;

  /// D^T D without materializing D (erp_len x erp_len).
  Eigen::MatrixXd gram() const;

  /// D^T X for channel-major data (erp_len x channels). X is data^T.
  Eigen::MatrixXd cross(const Eigen::MatrixXd& chan_major_data) const;
};

/// Closed-form minimum-variance beamformer: w = S^-1 p / (p^T S^-1 p), the
/// unique minimizer of w^T S w subject to w^T p = 1. S must be positive
/// definite.
Eigen::VectorXd lda_beamformer(const SymMatrix& sigma, const Eigen::VectorXd& pattern);

/// How the concatenated per-window data is standardized before covariance
/// estimation in the windowed beamformer.
enum class MtwlbNormalization : std::uint8_t { PerChannel = 0, PerSample = 1 };

/// Windowed LDA beamformer: splits the epoch into `num_windows` contiguous
/// equal-length windows; within each, the covariance of the standardized
/// concatenated data is shrunk and the difference-ERP column minimizing the
/// constrained output variance J = w^T S w (subject to w^T p = 1) is
/// retained. One filter per window, ordered by window start. The stored
/// patterns are the retained difference-ERP columns.
SpatialFilterBank fit_mtwlb(const EpochSet& epochs, int num_windows,
                            MtwlbNormalization normalization = MtwlbNormalization::PerChannel);

/// Evoked-response filter on continuous data with explicit target onsets.
SpatialFilterBank fit_xdawn(const ContinuousRecording& rec, Eigen::Index erp_len,
                            int n_filters);

/// Evoked-response filter on an epoch set: the training epochs are
/// re-concatenated in order with target onsets at their epoch starts, which
/// approximates the continuous formulation when only epochs are available.
SpatialFilterBank fit_xdawn(const EpochSet& epochs, int n_filters);

/// Class-variance filters: `pairs` eigenvectors from each end of the
/// spectrum of gen_eig(S_target, shrink(S_target + S_standard)), computed
/// from trace-normalized per-epoch second moments.
SpatialFilterBank fit_csp(const EpochSet& epochs, int pairs);

/// Component projection w^T X of one epoch (n_filters x samples).
Eigen::MatrixXd apply_filters(const SpatialFilterBank& bank, const Eigen::MatrixXd& epoch);

/// apply_filters over a whole epoch set.
std::vector<Eigen::MatrixXd> project_epochs(const SpatialFilterBank& bank,
                                            const EpochSet& epochs);

/// Forward-model pattern a_j = S w_j / (w_j^T S w_j) for every filter.
Eigen::MatrixXd spatial_patterns(const SpatialFilterBank& bank, const SymMatrix& sigma);

}  // namespace rsvp
