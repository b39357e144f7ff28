#include "borrowlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "borrowlab/error.hpp"

namespace borrowlab {

namespace {

constexpr int kMaxIrlsIterations = 100;
constexpr double kIrlsTolerance = 1e-8;

Eigen::VectorXd penalty_diagonal(Eigen::Index d_out, double lambda) {
  Eigen::VectorXd diag = Eigen::VectorXd::Constant(d_out, lambda);
  diag[0] = 0.0;
  return diag;
}

RidgeModel solve_normal_equations(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& gram,
                                  const Eigen::VectorXd& rhs, double lambda_reg,
                                  const FeatureMap& fm) {
  Eigen::MatrixXd a = gram;
  a.diagonal() += penalty_diagonal(a.rows(), lambda_reg);

  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
  const double dmax = d.maxCoeff();
  if (ldlt.info() != Eigen::Success || !(dmax > 0.0) || d.minCoeff() <= 1e-12 * dmax) {
    throw Error(ErrorCode::RankDeficient,
                "normal equations are singular; use lambda_reg > 0 for this design",
                "fit_ridge (" + std::to_string(phi.rows()) + " rows, " +
                    std::to_string(phi.cols()) + " features)");
  }
  Eigen::VectorXd theta = ldlt.solve(rhs);
  // One step of iterative refinement keeps the residual at round-off level
  // even for poorly scaled designs.
  theta += ldlt.solve(rhs - a * theta);

  RidgeModel model;
  model.theta = std::move(theta);
  model.lambda_reg = lambda_reg;
  model.fm = fm;
  return model;
}

}  // namespace

double RidgeModel::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return fm.expand(x).dot(theta);
}

Eigen::VectorXd RidgeModel::predict_rows(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  return fm.design(x) * theta;
}

double RidgeModel::loss(const Sample& z) const {
  const double r = z.y - predict(z.x);
  return r * r;
}

RidgeModel fit_ridge(const Eigen::Ref<const Eigen::MatrixXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& y, double lambda_reg,
                     const FeatureMap& fm) {
  if (lambda_reg < 0.0 || !std::isfinite(lambda_reg)) {
    throw Error(ErrorCode::InvalidArgument, "lambda_reg must be finite and >= 0", "fit_ridge");
  }
  if (x.rows() < 2) {
    throw Error(ErrorCode::InvalidArgument, "ridge fit needs at least 2 samples", "fit_ridge");
  }
  if (x.rows() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "covariate rows and outcomes differ", "fit_ridge");
  }
  const Eigen::MatrixXd phi = fm.design(x);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(phi.cols(), phi.cols());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(phi.transpose());
  gram = gram.selfadjointView<Eigen::Lower>();
  return solve_normal_equations(phi, gram, phi.transpose() * y, lambda_reg, fm);
}

RidgeModel fit_weighted_ridge(const Eigen::Ref<const Eigen::MatrixXd>& x,
                              const Eigen::Ref<const Eigen::VectorXd>& y,
                              const Eigen::Ref<const Eigen::VectorXd>& weights, double lambda_reg,
                              const FeatureMap& fm) {
  if (lambda_reg < 0.0 || !std::isfinite(lambda_reg)) {
    throw Error(ErrorCode::InvalidArgument, "lambda_reg must be finite and >= 0",
                "fit_weighted_ridge");
  }
  if (x.rows() != y.size() || x.rows() != weights.size()) {
    throw Error(ErrorCode::DimensionMismatch, "rows, outcomes and weights differ",
                "fit_weighted_ridge");
  }
  if ((weights.array() < 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "weights must be nonnegative", "fit_weighted_ridge");
  }
  const Eigen::MatrixXd phi = fm.design(x);
  const Eigen::MatrixXd weighted = weights.asDiagonal() * phi;
  const Eigen::MatrixXd gram = phi.transpose() * weighted;
  return solve_normal_equations(phi, gram, weighted.transpose() * y, lambda_reg, fm);
}

Eigen::VectorXd grad_loss(const RidgeModel& model, const Sample& z) {
  const Eigen::VectorXd phi = model.fm.expand(z.x);
  return 2.0 * (phi.dot(model.theta) - z.y) * phi;
}

HessianFactor::HessianFactor(Eigen::MatrixXd matrix, double damping)
    : matrix_(std::move(matrix)), damping_(damping) {
  llt_.compute(matrix_);
  if (llt_.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(matrix_, Eigen::EigenvaluesOnly);
    std::ostringstream os;
    os << "Hessian factorization failed (eigenvalue range " << eig.eigenvalues().minCoeff()
       << " .. " << eig.eigenvalues().maxCoeff() << ", damping " << damping_ << ")";
    throw Error(ErrorCode::Numerical, os.str(), "hessian");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(matrix_, Eigen::EigenvaluesOnly);
  condition_ = eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();
}

Eigen::VectorXd HessianFactor::solve(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (v.size() != matrix_.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "solve vector length differs from Hessian size",
                "HessianFactor::solve");
  }
  Eigen::VectorXd out = llt_.solve(v);
  out += llt_.solve(v - matrix_ * out);
  return out;
}

HessianFactor hessian(const RidgeModel& model, const Eigen::Ref<const Eigen::MatrixXd>& controls_x,
                      double damping) {
  if (controls_x.rows() < 1) {
    throw Error(ErrorCode::InvalidArgument, "Hessian needs at least one control sample",
                "hessian");
  }
  if (damping < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "damping must be >= 0", "hessian");
  }
  const Eigen::MatrixXd phi = model.fm.design(controls_x);
  Eigen::MatrixXd h = (2.0 / static_cast<double>(phi.rows())) * (phi.transpose() * phi);
  if (damping == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < 1e-10) {
      damping = 1e-6 * h.trace() / static_cast<double>(h.rows());
      if (!(damping > 0.0)) damping = 1e-10;
    }
  }
  h.diagonal().array() += damping;
  return HessianFactor(std::move(h), damping);
}

double LogisticModel::logit(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return fm.expand(x).dot(beta);
}

double clip_probability(double p) {
  return std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip);
}

double predict_prob(const LogisticModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double eta = model.logit(x);
  const double p = eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
  return clip_probability(p);
}

LogisticModel fit_logistic(const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const int> labels,
                           const FeatureMap& fm, double ridge) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw Error(ErrorCode::DimensionMismatch, "covariate rows and labels differ", "fit_logistic");
  }
  const auto ones = std::count(labels.begin(), labels.end(), 1);
  const auto zeros = std::count(labels.begin(), labels.end(), 0);
  if (ones + zeros != static_cast<long>(labels.size())) {
    throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1", "fit_logistic");
  }
  if (ones == 0 || zeros == 0) {
    throw Error(ErrorCode::DegenerateFit, "all labels identical; logistic fit is degenerate",
                "fit_logistic");
  }
  ridge = std::max(ridge, 1e-6);

  const Eigen::MatrixXd phi = fm.design(x);
  const Eigen::Index n = phi.rows();
  const Eigen::Index p = phi.cols();
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) target[i] = labels[static_cast<std::size_t>(i)];
  const Eigen::VectorXd pen = penalty_diagonal(p, ridge);

  LogisticModel model;
  model.fm = fm;
  model.underdetermined = n < p + 1;
  model.beta = Eigen::VectorXd::Zero(p);
  const double base_rate = static_cast<double>(ones) / static_cast<double>(n);
  model.beta[0] = std::log(base_rate / (1.0 - base_rate));

  auto objective = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = phi * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      // log(1 + exp(eta)) evaluated without overflow
      const double softplus = eta[i] > 0 ? eta[i] + std::log1p(std::exp(-eta[i]))
                                         : std::log1p(std::exp(eta[i]));
      ll += target[i] * eta[i] - softplus;
    }
    return ll - 0.5 * beta.dot(pen.cwiseProduct(beta));
  };

  auto gradient = [&](const Eigen::VectorXd& beta, Eigen::VectorXd* weights) {
    const Eigen::VectorXd eta = phi * beta;
    Eigen::VectorXd mu(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = 1.0 / (1.0 + std::exp(-eta[i]));
      if (weights) (*weights)[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-12);
    }
    return Eigen::VectorXd(phi.transpose() * (target - mu) - pen.cwiseProduct(beta));
  };

  double current = objective(model.beta);
  Eigen::VectorXd w(n);
  for (int iter = 0; iter <= kMaxIrlsIterations; ++iter) {
    const Eigen::VectorXd grad = gradient(model.beta, &w);
    model.iterations = iter;
    if (grad.norm() <= kIrlsTolerance) {
      model.converged = true;
      break;
    }
    if (iter == kMaxIrlsIterations) break;
    Eigen::MatrixXd info = phi.transpose() * w.asDiagonal() * phi;
    info.diagonal() += pen;
    const Eigen::VectorXd step = info.ldlt().solve(grad);

    // Damped Newton: halve until the penalized log-likelihood does not drop
    // beyond round-off.
    const double slack = 1e-12 * (1.0 + std::abs(current));
    double scale = 1.0;
    Eigen::VectorXd candidate = model.beta + step;
    double next = objective(candidate);
    while (!(next >= current - slack) && scale > 1e-10) {
      scale *= 0.5;
      candidate = model.beta + scale * step;
      next = objective(candidate);
    }
    if (!(next >= current - slack) || !candidate.allFinite()) break;
    model.beta = std::move(candidate);
    current = std::max(current, next);
  }
  return model;
}

}  // namespace borrowlab
