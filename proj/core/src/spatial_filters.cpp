#include "rsvp/spatial_filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rsvp/errors.hpp"
#include "rsvp/preprocess.hpp"

namespace rsvp {

const char* to_string(FilterMethod m) {
  switch (m) {
    case FilterMethod::Mtwlb: return "MTWLB";
    case FilterMethod::Xdawn: return "xDAWN";
    case FilterMethod::Csp: return "CSP";
    case FilterMethod::None: return "NONE";
  }
  return "NONE";
}

std::optional<FilterMethod> filter_method_from_string(const std::string& s) {
  std::string up;
  up.reserve(s.size());
  for (char c : s) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up == "MTWLB") return FilterMethod::Mtwlb;
  if (up == "XDAWN") return FilterMethod::Xdawn;
  if (up == "CSP") return FilterMethod::Csp;
  if (up == "NONE") return FilterMethod::None;
  return std::nullopt;
}

namespace {

void require_both_classes(const EpochSet& epochs, const char* who) {
  if (epochs.count(EventLabel::Target) == 0 || epochs.count(EventLabel::Standard) == 0) {
    throw DataError(std::string(who) + ": both classes must be present");
  }
}

/// Flips filter/pattern pairs so the largest-magnitude pattern entry is
/// positive. Removes the sign ambiguity of eigenvector-based filters; for the
/// beamformer the (w, p) pair flips together so w^T p stays 1.
void fix_signs(SpatialFilterBank& bank) {
  for (Eigen::Index j = 0; j < bank.filter_count(); ++j) {
    Eigen::Index at = 0;
    bank.patterns.col(j).cwiseAbs().maxCoeff(&at);
    if (bank.patterns(at, j) < 0.0) {
      bank.patterns.col(j) = -bank.patterns.col(j);
      bank.filters.col(j) = -bank.filters.col(j);
    }
  }
}

SpatialFilterBank fit_xdawn_core(const Eigen::MatrixXd& data,
                                 std::vector<std::int64_t> onsets, Eigen::Index erp_len,
                                 int n_filters) {
  const Eigen::Index n_ch = data.rows();
  const Eigen::Index total = data.cols();
  if (n_filters < 1 || n_filters > n_ch) {
    throw ParamError("fit_xdawn: filter count " + std::to_string(n_filters) +
                     " outside [1, " + std::to_string(n_ch) + "]");
  }
  if (onsets.empty()) throw DataError("fit_xdawn: no target onsets");
  if (erp_len < 1 || erp_len > total) {
    throw ParamError("fit_xdawn: response length must lie in [1, total samples]");
  }

  SpatialFilterBank bank;
  bank.method = FilterMethod::Xdawn;

  const ToeplitzDesign design(std::move(onsets), total, erp_len);
  const Eigen::MatrixXd gram = design.gram();
  const Eigen::MatrixXd cross = design.cross(data);

  // Least-squares evoked response estimate A = (D^T D)^-1 D^T X.
  Eigen::MatrixXd a_hat;
  {
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() == Eigen::Success) {
      a_hat = llt.solve(cross);
    } else {
      const auto shrunk = shrink_covariance(SymMatrix(gram), total);
      bank.warnings.push_back("rank-deficient Toeplitz design, shrinkage applied");
      a_hat = Eigen::LLT<Eigen::MatrixXd>(shrunk.matrix.mat()).solve(cross);
    }
  }

  // Rayleigh quotient of modeled evoked energy against total signal energy.
  Eigen::MatrixXd signal = a_hat.transpose() * gram * a_hat;
  Eigen::MatrixXd whole = data * data.transpose();
  const SymMatrix sig_cov(0.5 * (signal + signal.transpose()));
  const auto denom = shrink_covariance(SymMatrix(0.5 * (whole + whole.transpose())), total);

  const EigenDecomposition dec = gen_eig(sig_cov, denom.matrix);
  bank.filters = dec.eigenvectors.leftCols(n_filters);
  bank.meta.resize(static_cast<std::size_t>(n_filters));
  for (int j = 0; j < n_filters; ++j) bank.meta[static_cast<std::size_t>(j)].score = dec.eigenvalues[j];
  bank.patterns = spatial_patterns(bank, denom.matrix);
  fix_signs(bank);
  return bank;
}

}  // namespace

ToeplitzDesign::ToeplitzDesign(std::vector<std::int64_t> onset_indices, Eigen::Index rows,
                               Eigen::Index cols)
    : onsets(std::move(onset_indices)), total_len(rows), erp_len(cols) {
  for (std::size_t i = 0; i < onsets.size(); ++i) {
    if (onsets[i] < 0 || onsets[i] >= total_len) {
      throw ParamError("ToeplitzDesign: onset " + std::to_string(onsets[i]) +
                       " outside [0, " + std::to_string(total_len) + ")");
    }
    if (i > 0 && onsets[i] <= onsets[i - 1]) {
      throw ParamError("ToeplitzDesign: onsets must be strictly increasing");
    }
  }
}

Eigen::MatrixXd ToeplitzDesign::dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(total_len, erp_len);
  for (const auto o : onsets) {
    for (Eigen::Index j = 0; j < erp_len && o + j < total_len; ++j) d(o + j, j) = 1.0;
  }
  return d;
}

Eigen::MatrixXd ToeplitzDesign::gram() const {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(erp_len, erp_len);
  // (D^T D)(j, k) counts onset pairs hitting the same sample: o1 + j == o2 + k.
  for (const auto o1 : onsets) {
    for (const auto o2 : onsets) {
      const std::int64_t d = o1 - o2;  // k - j
      if (d <= -erp_len || d >= erp_len) continue;
      const Eigen::Index j_lo = std::max<std::int64_t>(0, -d);
      const Eigen::Index j_hi = std::min<std::int64_t>(
          {erp_len - 1, erp_len - 1 - d, total_len - 1 - o1});
      for (Eigen::Index j = j_lo; j <= j_hi; ++j) g(j, j + d) += 1.0;
    }
  }
  return g;
}

Eigen::MatrixXd ToeplitzDesign::cross(const Eigen::MatrixXd& chan_major_data) const {
  if (chan_major_data.cols() != total_len) {
    throw ParamError("ToeplitzDesign::cross: data has " +
                     std::to_string(chan_major_data.cols()) + " samples, expected " +
                     std::to_string(total_len));
  }
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(erp_len, chan_major_data.rows());
  for (const auto o : onsets) {
    const Eigen::Index len = std::min<Eigen::Index>(erp_len, total_len - o);
    c.topRows(len) += chan_major_data.middleCols(o, len).transpose();
  }
  return c;
}

Eigen::VectorXd lda_beamformer(const SymMatrix& sigma, const Eigen::VectorXd& pattern) {
  if (pattern.size() != sigma.dim()) {
    throw ParamError("lda_beamformer: pattern dimension mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sigma.mat());
  if (llt.info() != Eigen::Success) {
    throw NumericError("lda_beamformer: covariance is not positive definite");
  }
  const Eigen::VectorXd solved = llt.solve(pattern);
  const double quad = pattern.dot(solved);
  if (quad <= 0.0) throw NumericError("lda_beamformer: degenerate pattern");
  return solved / quad;
}

SpatialFilterBank fit_mtwlb(const EpochSet& epochs, int num_windows,
                            MtwlbNormalization normalization) {
  require_both_classes(epochs, "fit_mtwlb");
  const Eigen::Index n_t = epochs.samples_per_epoch();
  const Eigen::Index n_ch = epochs.channel_count();
  const auto n = static_cast<Eigen::Index>(epochs.size());
  if (num_windows < 1 || num_windows > n_t) {
    throw ParamError("fit_mtwlb: window count outside [1, samples per epoch]");
  }
  if (n_t / num_windows < 2) {
    throw ParamError("fit_mtwlb: windows shorter than 2 samples");
  }

  const Eigen::MatrixXd diff = difference_erp(epochs);

  SpatialFilterBank bank;
  bank.method = FilterMethod::Mtwlb;
  bank.filters.resize(n_ch, num_windows);
  bank.patterns.resize(n_ch, num_windows);
  bank.meta.resize(static_cast<std::size_t>(num_windows));

  for (int wi = 0; wi < num_windows; ++wi) {
    const Eigen::Index lo = n_t * wi / num_windows;
    const Eigen::Index hi = n_t * (wi + 1) / num_windows;
    const Eigen::Index len = hi - lo;

    // Concatenate this window across all epochs, then standardize.
    Eigen::MatrixXd concat(n_ch, n * len);
    for (Eigen::Index i = 0; i < n; ++i) {
      concat.middleCols(i * len, len) = epochs.epochs[static_cast<std::size_t>(i)].middleCols(lo, len);
    }
    if (normalization == MtwlbNormalization::PerChannel) {
      for (Eigen::Index c = 0; c < n_ch; ++c) {
        auto row = concat.row(c);
        row.array() -= row.mean();
        const double sd = std::sqrt(row.squaredNorm() / static_cast<double>(row.size() - 1));
        if (sd > 0.0) row /= sd;
      }
    } else {
      for (Eigen::Index s = 0; s < concat.cols(); ++s) {
        auto col = concat.col(s);
        col.array() -= col.mean();
        const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(col.size() - 1));
        if (sd > 0.0) col /= sd;
      }
    }

    const auto shrunk = shrink_covariance(covariance(concat, true), concat.cols());
    Eigen::LLT<Eigen::MatrixXd> llt(shrunk.matrix.mat());
    if (llt.info() != Eigen::Success) {
      throw NumericError("fit_mtwlb: covariance singular after shrinkage");
    }

    // For each timestamp's difference-ERP column p the beamformer is
    // w = S^-1 p / (p^T S^-1 p) with objective J = w^T S w = 1/(p^T S^-1 p),
    // so minimizing J picks the column with the largest p^T S^-1 p.
    const Eigen::MatrixXd window_patterns = diff.middleCols(lo, len);
    const Eigen::MatrixXd solved = llt.solve(window_patterns);

    double best_j = std::numeric_limits<double>::infinity();
    Eigen::Index best_t = -1;
    for (Eigen::Index t = 0; t < len; ++t) {
      const double quad = window_patterns.col(t).dot(solved.col(t));
      if (quad <= 0.0) continue;  // vanishing pattern at this timestamp
      const double j = 1.0 / quad;
      if (j < best_j) {
        best_j = j;
        best_t = t;
      }
    }
    if (best_t < 0) {
      throw NumericError("fit_mtwlb: difference ERP vanishes in window " + std::to_string(wi));
    }

    const Eigen::VectorXd p = window_patterns.col(best_t);
    const Eigen::VectorXd w = solved.col(best_t) / window_patterns.col(best_t).dot(solved.col(best_t));
    if (std::abs(w.dot(p) - 1.0) > 1e-10) {
      throw NumericError("fit_mtwlb: unit-response constraint violated");
    }
    bank.filters.col(wi) = w;
    bank.patterns.col(wi) = p;
    auto& meta = bank.meta[static_cast<std::size_t>(wi)];
    meta.score = best_j;
    meta.window = {epochs.window_start + static_cast<double>(lo) / epochs.rate,
                   epochs.window_start + static_cast<double>(hi) / epochs.rate};
  }

  fix_signs(bank);
  return bank;
}

SpatialFilterBank fit_xdawn(const ContinuousRecording& rec, Eigen::Index erp_len,
                            int n_filters) {
  std::vector<std::int64_t> onsets;
  for (const auto& ev : rec.events) {
    if (ev.label == EventLabel::Target) onsets.push_back(ev.sample);
  }
  return fit_xdawn_core(rec.data, std::move(onsets), erp_len, n_filters);
}

SpatialFilterBank fit_xdawn(const EpochSet& epochs, int n_filters) {
  const Eigen::Index n_t = epochs.samples_per_epoch();
  const Eigen::Index n_ch = epochs.channel_count();
  if (epochs.size() == 0) throw DataError("fit_xdawn: empty epoch set");

  Eigen::MatrixXd concat(n_ch, static_cast<Eigen::Index>(epochs.size()) * n_t);
  std::vector<std::int64_t> onsets;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    concat.middleCols(static_cast<Eigen::Index>(i) * n_t, n_t) = epochs.epochs[i];
    if (epochs.labels[i] == EventLabel::Target) {
      onsets.push_back(static_cast<std::int64_t>(i) * n_t);
    }
  }
  return fit_xdawn_core(concat, std::move(onsets), n_t, n_filters);
}

SpatialFilterBank fit_csp(const EpochSet& epochs, int pairs) {
  require_both_classes(epochs, "fit_csp");
  const Eigen::Index n_ch = epochs.channel_count();
  if (pairs < 1 || 2 * pairs > n_ch) {
    throw ParamError("fit_csp: need 1 <= 2*pairs <= channel count");
  }

  Eigen::MatrixXd s1 = Eigen::MatrixXd::Zero(n_ch, n_ch);
  Eigen::MatrixXd s0 = Eigen::MatrixXd::Zero(n_ch, n_ch);
  std::size_t c1 = 0, c0 = 0;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const Eigen::MatrixXd m = epochs.epochs[i] * epochs.epochs[i].transpose();
    const double tr = m.trace();
    if (tr <= 0.0) throw DataError("fit_csp: epoch with zero power");
    if (epochs.labels[i] == EventLabel::Target) {
      s1 += m / tr;
      ++c1;
    } else {
      s0 += m / tr;
      ++c0;
    }
  }
  s1 /= static_cast<double>(c1);
  s0 /= static_cast<double>(c0);

  // Shrink the composite and split the identity target evenly between the
  // classes, so the numerator plus its mirror equals the denominator exactly.
  // This keeps the eigenvalues in (0, 1) and makes a class swap map them to
  // 1 - lambda precisely.
  const auto composite = shrink_covariance(
      SymMatrix(0.5 * (s1 + s0 + (s1 + s0).transpose())),
      static_cast<Eigen::Index>(epochs.size()) * epochs.samples_per_epoch());
  const double rho = composite.intensity;
  const double mu = composite.degenerate ? 1e-12 : (s1 + s0).trace() / static_cast<double>(n_ch);
  Eigen::MatrixXd target = (1.0 - rho) * s1;
  target.diagonal().array() += 0.5 * rho * mu;
  const SymMatrix target_cov(0.5 * (target + target.transpose()));

  const EigenDecomposition dec = gen_eig(target_cov, composite.matrix);

  SpatialFilterBank bank;
  bank.method = FilterMethod::Csp;
  bank.filters.resize(n_ch, 2 * pairs);
  bank.meta.resize(static_cast<std::size_t>(2 * pairs));
  for (int j = 0; j < pairs; ++j) {
    bank.filters.col(j) = dec.eigenvectors.col(j);
    bank.meta[static_cast<std::size_t>(j)].score = dec.eigenvalues[j];
  }
  for (int j = 0; j < pairs; ++j) {
    const Eigen::Index src = n_ch - pairs + j;
    bank.filters.col(pairs + j) = dec.eigenvectors.col(src);
    bank.meta[static_cast<std::size_t>(pairs + j)].score = dec.eigenvalues[src];
  }
  bank.patterns = spatial_patterns(bank, composite.matrix);
  fix_signs(bank);
  return bank;
}

Eigen::MatrixXd apply_filters(const SpatialFilterBank& bank, const Eigen::MatrixXd& epoch) {
  if (epoch.rows() != bank.channel_count()) {
    throw ParamError("apply_filters: epoch has " + std::to_string(epoch.rows()) +
                     " channels, bank expects " + std::to_string(bank.channel_count()));
  }
  return bank.filters.transpose() * epoch;
}

std::vector<Eigen::MatrixXd> project_epochs(const SpatialFilterBank& bank,
                                            const EpochSet& epochs) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(epochs.size());
  for (const auto& e : epochs.epochs) out.push_back(apply_filters(bank, e));
  return out;
}

Eigen::MatrixXd spatial_patterns(const SpatialFilterBank& bank, const SymMatrix& sigma) {
  if (sigma.dim() != bank.channel_count()) {
    throw ParamError("spatial_patterns: covariance dimension mismatch");
  }
  Eigen::MatrixXd patterns(bank.channel_count(), bank.filter_count());
  for (Eigen::Index j = 0; j < bank.filter_count(); ++j) {
    const Eigen::VectorXd sw = sigma.mat() * bank.filters.col(j);
    const double quad = bank.filters.col(j).dot(sw);
    if (quad <= 0.0) {
      throw NumericError("spatial_patterns: filter " + std::to_string(j) +
                         " has nonpositive projected variance");
    }
    patterns.col(j) = sw / quad;
  }
  return patterns;
}

}  // namespace rsvp
