#include "rsvp/classifiers.hpp"

#include <cctype>
#include <cmath>
#include <string>

#include "rsvp/errors.hpp"
#include "rsvp/linalg.hpp"

namespace rsvp {

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Lda: return "LDA";
    case ModelKind::Blr: return "BLR";
    case ModelKind::Lr: return "LR";
  }
  return "LDA";
}

std::optional<ModelKind> model_kind_from_string(const std::string& s) {
  std::string up;
  for (char c : s) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up == "LDA") return ModelKind::Lda;
  if (up == "BLR") return ModelKind::Blr;
  if (up == "LR") return ModelKind::Lr;
  return std::nullopt;
}

namespace {

void check_labels(const Eigen::MatrixXd& x, const std::vector<int>& y, const char* who) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw ParamError(std::string(who) + ": feature rows and label count differ");
  }
  std::size_t pos = 0;
  for (int v : y) {
    if (v != 0 && v != 1) throw ParamError(std::string(who) + ": labels must be 0/1");
    pos += static_cast<std::size_t>(v);
  }
  if (pos == 0 || pos == y.size()) {
    throw DataError(std::string(who) + ": both classes must be present");
  }
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(-z)) without overflow.
double softplus_neg(double z) {
  return z >= 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

}  // namespace

LinearModel fit_lda(const Eigen::MatrixXd& x, const std::vector<int>& y) {
  check_labels(x, y, "fit_lda");
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();

  Eigen::VectorXd mu1 = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(d);
  Eigen::Index n1 = 0, n0 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[static_cast<std::size_t>(i)] == 1) {
      mu1 += x.row(i).transpose();
      ++n1;
    } else {
      mu0 += x.row(i).transpose();
      ++n0;
    }
  }
  mu1 /= static_cast<double>(n1);
  mu0 /= static_cast<double>(n0);

  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd c =
        x.row(i).transpose() - (y[static_cast<std::size_t>(i)] == 1 ? mu1 : mu0);
    scatter.selfadjointView<Eigen::Lower>().rankUpdate(c, 1.0);
  }
  scatter = scatter.selfadjointView<Eigen::Lower>();
  const auto dof = std::max<Eigen::Index>(n - 2, 1);
  scatter /= static_cast<double>(dof);

  const auto within = shrink_covariance(SymMatrix(std::move(scatter)), dof);
  Eigen::LLT<Eigen::MatrixXd> llt(within.matrix.mat());
  if (llt.info() != Eigen::Success) {
    throw NumericError("fit_lda: within-class scatter not invertible after shrinkage");
  }

  LinearModel model;
  model.kind = ModelKind::Lda;
  model.weights = llt.solve(mu1 - mu0);
  model.bias = -model.weights.dot(0.5 * (mu1 + mu0));
  return model;
}

LinearModel fit_blr(const Eigen::MatrixXd& x, const std::vector<int>& y, double alpha,
                    double beta) {
  check_labels(x, y, "fit_blr");
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw ParamError("fit_blr: alpha and beta must be positive");
  }
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();

  double n1 = 0.0;
  for (int v : y) n1 += v;
  const double n0 = static_cast<double>(n) - n1;

  Eigen::VectorXd t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    t[i] = y[static_cast<std::size_t>(i)] == 1 ? static_cast<double>(n) / n1
                                               : -static_cast<double>(n) / n0;
  }

  // Design with intercept column first.
  Eigen::MatrixXd xd(n, d + 1);
  xd.col(0).setOnes();
  xd.rightCols(d) = x;

  Eigen::MatrixXd system = beta * (xd.transpose() * xd);
  system.diagonal().array() += alpha;
  const Eigen::VectorXd rhs = beta * (xd.transpose() * t);

  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) {
    throw NumericError("fit_blr: ridge system not positive definite");
  }
  const Eigen::VectorXd w = llt.solve(rhs);

  LinearModel model;
  model.kind = ModelKind::Blr;
  model.weights = w.tail(d);
  model.bias = w[0];
  model.alpha = alpha;
  model.beta = beta;
  return model;
}

LrObjective lr_cost_gradient(const Eigen::MatrixXd& x, const std::vector<int>& y,
                             const Eigen::VectorXd& w, double b, double lambda) {
  if (x.cols() != w.size()) throw ParamError("lr_cost_gradient: weight dimension mismatch");
  const Eigen::Index n = x.rows();
  const double m = static_cast<double>(n);

  const Eigen::VectorXd z = x * w + Eigen::VectorXd::Constant(n, b);
  LrObjective out;
  out.cost = lambda * w.squaredNorm();
  Eigen::VectorXd residual(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double yi = static_cast<double>(y[static_cast<std::size_t>(i)]);
    // y log p + (1-y) log(1-p) rewritten through softplus for stability.
    out.cost += (yi > 0.5 ? softplus_neg(z[i]) : softplus_neg(-z[i])) / m;
    residual[i] = sigmoid(z[i]) - yi;
  }
  out.grad_w = x.transpose() * residual / m + 2.0 * lambda * w;
  out.grad_b = residual.mean();
  return out;
}

LinearModel fit_lr(const Eigen::MatrixXd& x, const std::vector<int>& y, double lambda,
                   int max_iter, double tol) {
  check_labels(x, y, "fit_lr");
  if (!(lambda > 0.0)) throw ParamError("fit_lr: lambda must be positive");
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const double m = static_cast<double>(n);

  double n1 = 0.0;
  for (int v : y) n1 += v;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = std::log(n1 / (m - n1));  // prior log-odds start

  LrObjective obj = lr_cost_gradient(x, y, w, b, lambda);
  double grad_norm = std::max(obj.grad_w.lpNorm<Eigen::Infinity>(), std::abs(obj.grad_b));

  for (int iter = 0; iter < max_iter; ++iter) {
    if (grad_norm < tol) {
      LinearModel model;
      model.kind = ModelKind::Lr;
      model.weights = std::move(w);
      model.bias = b;
      model.lambda = lambda;
      return model;
    }

    // Newton system on the augmented parameter (w, b).
    Eigen::VectorXd p(n);
    const Eigen::VectorXd z = x * w + Eigen::VectorXd::Constant(n, b);
    for (Eigen::Index i = 0; i < n; ++i) p[i] = sigmoid(z[i]);
    const Eigen::VectorXd r = (p.array() * (1.0 - p.array())).matrix();

    Eigen::MatrixXd h(d + 1, d + 1);
    const Eigen::MatrixXd xr = x.array().colwise() * r.array();
    h.topLeftCorner(d, d) = x.transpose() * xr / m;
    h.topLeftCorner(d, d).diagonal().array() += 2.0 * lambda;
    h.topRightCorner(d, 1) = xr.colwise().sum().transpose() / m;
    h.bottomLeftCorner(1, d) = h.topRightCorner(d, 1).transpose();
    h(d, d) = r.sum() / m;
    h.diagonal().array() += 1e-12;  // guards the saturated-probability limit

    Eigen::VectorXd g(d + 1);
    g.head(d) = obj.grad_w;
    g[d] = obj.grad_b;
    const Eigen::VectorXd step = Eigen::LDLT<Eigen::MatrixXd>(h).solve(-g);

    // Accept any step that does not increase the cost beyond rounding noise;
    // near the optimum the decrease underflows while the full Newton step is
    // still the right move.
    const double plateau = 1e-12 * (1.0 + std::abs(obj.cost));
    bool accepted = false;
    double scale = 1.0;
    for (int halving = 0; halving < 60; ++halving) {
      const Eigen::VectorXd w_try = w + scale * step.head(d);
      const double b_try = b + scale * step[d];
      const LrObjective trial = lr_cost_gradient(x, y, w_try, b_try, lambda);
      if (trial.cost <= obj.cost + plateau) {
        w = w_try;
        b = b_try;
        obj = trial;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    grad_norm = std::max(obj.grad_w.lpNorm<Eigen::Infinity>(), std::abs(obj.grad_b));
    if (!accepted) break;  // fully stalled; the convergence check decides
  }

  if (grad_norm < tol) {
    LinearModel model;
    model.kind = ModelKind::Lr;
    model.weights = std::move(w);
    model.bias = b;
    model.lambda = lambda;
    return model;
  }
  char norm_text[32];
  std::snprintf(norm_text, sizeof(norm_text), "%.3e", grad_norm);
  throw NumericError("fit_lr: no convergence after " + std::to_string(max_iter) +
                     " iterations, gradient norm " + norm_text);
}

double predict_score(const LinearModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.weights.size()) {
    throw ParamError("predict_score: feature dimension " + std::to_string(x.size()) +
                     " does not match model dimension " + std::to_string(model.weights.size()));
  }
  const double affine = model.weights.dot(x) + model.bias;
  return model.kind == ModelKind::Lr ? sigmoid(affine) : affine;
}

Eigen::VectorXd predict_scores(const LinearModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.weights.size()) {
    throw ParamError("predict_scores: feature dimension mismatch");
  }
  Eigen::VectorXd s = x * model.weights + Eigen::VectorXd::Constant(x.rows(), model.bias);
  if (model.kind == ModelKind::Lr) {
    for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = sigmoid(s[i]);
  }
  return s;
}

}  // namespace rsvp
