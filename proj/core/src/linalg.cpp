#include "rsvp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rsvp {

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

}  // namespace

SymMatrix::SymMatrix(Eigen::MatrixXd m) {
  if (m.rows() != m.cols()) {
    throw ParamError("SymMatrix: matrix is " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + ", expected square");
  }
  if (m.size() == 0) throw ParamError("SymMatrix: empty matrix");
  if (!all_finite(m)) throw DataError("SymMatrix: non-finite entries");

  const double scale = m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (scale > 0.0 && asym > 1e-12 * scale) {
    throw ParamError("SymMatrix: asymmetry " + std::to_string(asym / scale) +
                     " exceeds 1e-12 relative tolerance");
  }
  mat_ = 0.5 * (m + m.transpose());
}

SymMatrix covariance(const Eigen::MatrixXd& data, bool center) {
  const Eigen::Index n = data.cols();
  if (n < 2) {
    throw DataError("covariance: need at least 2 samples, got " + std::to_string(n));
  }
  if (!all_finite(data)) throw DataError("covariance: non-finite entries");

  Eigen::MatrixXd centered = data;
  if (center) centered.colwise() -= data.rowwise().mean();
  Eigen::MatrixXd s = (centered * centered.transpose()) / static_cast<double>(n - 1);
  return SymMatrix(std::move(s));
}

ShrunkCovariance shrink_covariance(const SymMatrix& s, Eigen::Index samples) {
  const auto p = static_cast<double>(s.dim());
  const double n = static_cast<double>(std::max<Eigen::Index>(samples, 1));
  const double tr = s.mat().trace();

  if (tr <= 0.0) {
    Eigen::MatrixXd eps = 1e-12 * Eigen::MatrixXd::Identity(s.dim(), s.dim());
    return {SymMatrix(std::move(eps)), 1.0, true};
  }

  const double tr_s2 = s.mat().squaredNorm();  // trace(S^2) for symmetric S
  const double num = (1.0 - 2.0 / p) * tr_s2 + tr * tr;
  const double den = (n + 1.0 - 2.0 / p) * (tr_s2 - tr * tr / p);

  double rho = 1.0;
  if (den > 0.0) rho = std::clamp(num / den, 0.0, 1.0);
  // den <= 0 means S is (numerically) a scaled identity; shrinking fully to
  // the identical target is exact.

  const double mu = tr / p;
  Eigen::MatrixXd shrunk =
      (1.0 - rho) * s.mat() + rho * mu * Eigen::MatrixXd::Identity(s.dim(), s.dim());
  return {SymMatrix(std::move(shrunk)), rho, false};
}

EigenDecomposition sym_eig(const SymMatrix& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s.mat());
  if (solver.info() != Eigen::Success) {
    throw NumericError("sym_eig: eigensolver failed to converge");
  }
  // Eigen sorts ascending; flip to descending.
  const Eigen::Index d = s.dim();
  EigenDecomposition out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors.resize(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    out.eigenvectors.col(j) = solver.eigenvectors().col(d - 1 - j);
  }
  return out;
}

EigenDecomposition gen_eig(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) {
    throw ParamError("gen_eig: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                     std::to_string(b.dim()) + ")");
  }

  Eigen::LLT<Eigen::MatrixXd> llt(b.mat());
  if (llt.info() != Eigen::Success) {
    throw NumericError("gen_eig: B is not positive definite");
  }
  const Eigen::MatrixXd l = llt.matrixL();

  // Whiten: C = L^-1 A L^-T, then v = L^-T u for each eigenvector u of C.
  Eigen::MatrixXd c = l.triangularView<Eigen::Lower>().solve(a.mat());
  c = l.triangularView<Eigen::Lower>().solve(c.transpose()).transpose();
  EigenDecomposition dec = sym_eig(SymMatrix(0.5 * (c + c.transpose())));
  dec.eigenvectors =
      l.transpose().triangularView<Eigen::Upper>().solve(dec.eigenvectors);
  return dec;
}

}  // namespace rsvp
