#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "borrowlab/data.hpp"

namespace borrowlab {

inline constexpr double kProbabilityClip = 1e-3;

/// Ridge-penalized linear regression over a feature map. The intercept
/// coordinate is never penalized.
struct RidgeModel {
  Eigen::VectorXd theta;
  double lambda_reg = 0.0;
  FeatureMap fm;

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd predict_rows(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
  /// Squared error (y - prediction)^2; the penalty is not part of the per-sample loss.
  double loss(const Sample& z) const;
};

/// Solves (Phi^T W Phi + lambda I_noint) theta = Phi^T W y. Throws
/// Error(RankDeficient) when lambda_reg = 0 and the system is singular.
RidgeModel fit_ridge(const Eigen::Ref<const Eigen::MatrixXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& y, double lambda_reg,
                     const FeatureMap& fm);
RidgeModel fit_weighted_ridge(const Eigen::Ref<const Eigen::MatrixXd>& x,
                              const Eigen::Ref<const Eigen::VectorXd>& y,
                              const Eigen::Ref<const Eigen::VectorXd>& weights, double lambda_reg,
                              const FeatureMap& fm);

/// Gradient of the squared-error loss with respect to theta at sample z.
Eigen::VectorXd grad_loss(const RidgeModel& model, const Sample& z);

/// Cholesky factor of H = (2/N_C) sum phi_i phi_i^T + damping I.
class HessianFactor {
 public:
  HessianFactor(Eigen::MatrixXd matrix, double damping);

  const Eigen::MatrixXd& matrix() const { return matrix_; }
  double damping() const { return damping_; }
  /// Ratio of largest to smallest eigenvalue of the damped matrix.
  double condition() const { return condition_; }

  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& v) const;

 private:
  Eigen::MatrixXd matrix_;
  double damping_;
  double condition_ = 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Mean-loss Hessian over the control covariates. A zero damping is raised to
/// 1e-6 * trace(H) / d_out when the smallest eigenvalue falls below 1e-10.
HessianFactor hessian(const RidgeModel& model, const Eigen::Ref<const Eigen::MatrixXd>& controls_x,
                      double damping = 0.0);

struct LogisticModel {
  Eigen::VectorXd beta;
  FeatureMap fm;
  bool converged = false;
  int iterations = 0;
  /// Fewer than d_out + 1 samples were available at fit time.
  bool underdetermined = false;

  double logit(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// Newton/IRLS for the ridge-penalized logistic log-likelihood. Stops when the
/// gradient norm is <= 1e-8 or after 100 iterations.
LogisticModel fit_logistic(const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const int> labels,
                           const FeatureMap& fm, double ridge = 1e-6);

/// Probability clipped to [1e-3, 1 - 1e-3].
double predict_prob(const LogisticModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

double clip_probability(double p);

}  // namespace borrowlab
