#pragma once

#include <Eigen/Dense>

#include "rsvp/errors.hpp"

namespace rsvp {

// Dense symmetric linear algebra shared by the spatial filter estimators:
// covariance estimation, analytic shrinkage towards a scaled identity, and
// (generalized) symmetric eigendecompositions.

/// Symmetric real matrix. Construction checks symmetry to 1e-12 relative
/// tolerance and finiteness, then stores the exactly symmetrized (S + S^T)/2
/// so accumulated float asymmetry never reaches the solvers.
class SymMatrix {
 public:
  explicit SymMatrix(Eigen::MatrixXd m);

  Eigen::Index dim() const { return mat_.rows(); }
  const Eigen::MatrixXd& mat() const { return mat_; }

  double operator()(Eigen::Index i, Eigen::Index j) const { return mat_(i, j); }

 private:
  Eigen::MatrixXd mat_;
};

/// Spectral decomposition with eigenvalues sorted descending and unit-norm
/// eigenvector columns (column j pairs with eigenvalue j).
struct EigenDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
};

/// Sample covariance (1/(N-1)) * D * D^T of row-major series data
/// (dim x N, one variable per row). Rows are mean-centered first when
/// `center` is set. Requires N >= 2 and finite entries.
SymMatrix covariance(const Eigen::MatrixXd& data, bool center);

struct ShrunkCovariance {
  SymMatrix matrix;
  double intensity = 0.0;  // rho in [0, 1]
  bool degenerate = false; // trace(S) == 0 fallback was taken
};

/// Regularizes a PSD matrix as (1-rho) * S + rho * (trace(S)/dim) * I with the
/// analytic oracle-approximating intensity rho computed from `samples`
/// observation vectors. The result is symmetric positive definite. A zero
/// trace input falls back to 1e-12 * I and sets the degenerate flag.
ShrunkCovariance shrink_covariance(const SymMatrix& s, Eigen::Index samples);

/// Full spectral decomposition of a symmetric matrix, eigenvalues descending.
EigenDecomposition sym_eig(const SymMatrix& s);

/// Generalized symmetric-definite eigenproblem A v = lambda B v, solved by
/// Cholesky whitening of B followed by a standard symmetric eigenproblem.
/// Eigenvalues descending; eigenvectors are B-orthonormal. B must be positive
/// definite (callers shrink first); otherwise a NumericError is thrown.
EigenDecomposition gen_eig(const SymMatrix& a, const SymMatrix& b);

}  // namespace rsvp
