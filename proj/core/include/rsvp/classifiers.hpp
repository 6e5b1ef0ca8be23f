#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rsvp {

// Linear scorers over feature rows (n x d, one epoch per row; binary labels
// with 1 = target, 0 = standard). Every model reduces to a weight vector and
// bias; scores are monotone in w^T x so they rank identically for AUC.

enum class ModelKind : std::uint8_t { Lda = 0, Blr = 1, Lr = 2 };

const char* to_string(ModelKind k);
std::optional<ModelKind> model_kind_from_string(const std::string& s);

struct LinearModel {
  ModelKind kind = ModelKind::Lda;
  Eigen::VectorXd weights;
  double bias = 0.0;
  std::optional<double> alpha;   // BLR prior precision
  std::optional<double> beta;    // BLR noise precision
  std::optional<double> lambda;  // LR ridge strength
};

/// Fisher discriminant with shrinkage-regularized within-class scatter:
/// w = S_w^-1 (mu_target - mu_standard), bias placing score 0 at the class
/// midpoint.
LinearModel fit_lda(const Eigen::MatrixXd& x, const std::vector<int>& y);

/// Bayesian linear regression on targets +N/N1 (target) and -N/N2
/// (standard): w = beta (beta X^T X + alpha I)^-1 X^T t, with the intercept
/// absorbed through a prepended all-ones column.
LinearModel fit_blr(const Eigen::MatrixXd& x, const std::vector<int>& y, double alpha,
                    double beta);

struct LrObjective {
  double cost = 0.0;
  Eigen::VectorXd grad_w;
  double grad_b = 0.0;
};

/// Mean cross-entropy plus lambda * w^T w (bias unregularized) and its
/// analytic gradient. Exposed so the optimizer can be verified against
/// finite differences.
LrObjective lr_cost_gradient(const Eigen::MatrixXd& x, const std::vector<int>& y,
                             const Eigen::VectorXd& w, double b, double lambda);

/// L2 logistic regression minimized by damped Newton iterations (step
/// halving keeps the objective monotone) until the gradient norm drops below
/// `tol`. Throws NumericError carrying the last gradient norm when the
/// iteration cap is hit.
LinearModel fit_lr(const Eigen::MatrixXd& x, const std::vector<int>& y, double lambda,
                   int max_iter = 100, double tol = 1e-8);

/// Decision score for one feature vector: affine for LDA/BLR, class
/// probability in (0,1) for LR.
double predict_score(const LinearModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// predict_score over rows of a feature matrix.
Eigen::VectorXd predict_scores(const LinearModel& model, const Eigen::MatrixXd& x);

}  // namespace rsvp
