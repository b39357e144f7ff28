#include "borrowlab/nuisance.hpp"

#include <algorithm>

#include "borrowlab/error.hpp"

namespace borrowlab {

double ScoreModel::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (const auto* c = std::get_if<double>(&model_)) return *c;
  return predict_prob(std::get<LogisticModel>(model_), x);
}

BaseFits fit_base(const TrialDataset& trial, const ExternalPool& pool, const NuisanceConfig& cfg) {
  if (cfg.cross_fit) {
    throw Error(ErrorCode::InvalidArgument, "cross-fitting is not implemented", "fit_base");
  }
  BaseFits base;
  if (cfg.randomized) {
    base.e1 = ScoreModel(static_cast<double>(trial.n_treated()) /
                         static_cast<double>(trial.size()));
  } else {
    base.e1 = ScoreModel(fit_logistic(trial.x(), trial.a(), cfg.fm, cfg.logistic_ridge));
  }
  base.mu0 = fit_ridge(trial.arm_x(0), trial.arm_y(0), cfg.lambda_reg, cfg.fm);
  base.mu1 = fit_ridge(trial.arm_x(1), trial.arm_y(1), cfg.lambda_reg, cfg.fm);
  if (pool.size() >= 2) {
    base.mu0_ext = fit_ridge(pool.x(), pool.y(), cfg.lambda_reg, cfg.fm);
  }
  return base;
}

NuisanceSet fit_nuisances(const TrialDataset& trial, const ExternalPool& pool,
                          std::span<const std::size_t> borrowed, const NuisanceConfig& cfg) {
  return fit_nuisances(trial, pool, borrowed, fit_base(trial, pool, cfg), cfg);
}

NuisanceSet fit_nuisances(const TrialDataset& trial, const ExternalPool& pool,
                          std::span<const std::size_t> borrowed, const BaseFits& base,
                          const NuisanceConfig& cfg) {
  NuisanceSet ns;
  ns.e1 = base.e1;
  ns.mu0 = base.mu0;
  ns.mu1 = base.mu1;
  ns.mu0_ext = base.mu0_ext;
  ns.n_borrowed = borrowed.size();

  if (borrowed.empty()) {
    ns.pi = ScoreModel(1.0);
    ns.m0 = base.mu0;
    ns.q_hat = 1.0;
    return ns;
  }

  // Sorting makes the fits independent of the order the subset was given in.
  std::vector<std::size_t> sorted(borrowed.begin(), borrowed.end());
  std::sort(sorted.begin(), sorted.end());
  const CombinedDataset combined = combine(trial, pool, sorted);
  ns.q_hat = combined.q_hat;
  ns.pi = ScoreModel(fit_logistic(combined.x, combined.r, cfg.fm, cfg.logistic_ridge));

  std::vector<std::size_t> control_rows;
  for (std::size_t i = 0; i < combined.size(); ++i) {
    if (combined.a[i] == 0) control_rows.push_back(i);
  }
  Eigen::MatrixXd cx(static_cast<Eigen::Index>(control_rows.size()), combined.x.cols());
  Eigen::VectorXd cy(static_cast<Eigen::Index>(control_rows.size()));
  for (std::size_t k = 0; k < control_rows.size(); ++k) {
    cx.row(static_cast<Eigen::Index>(k)) = combined.x.row(static_cast<Eigen::Index>(control_rows[k]));
    cy[static_cast<Eigen::Index>(k)] = combined.y[static_cast<Eigen::Index>(control_rows[k])];
  }
  ns.m0 = fit_ridge(cx, cy, cfg.lambda_reg, cfg.fm);
  return ns;
}

ClippedProbability e_s_checked(const NuisanceSet& ns, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double raw = ns.e1(x) * ns.pi(x);
  const double clipped = clip_probability(raw);
  return {clipped, clipped != raw};
}

double e_s(const NuisanceSet& ns, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return e_s_checked(ns, x).value;
}

}  // namespace borrowlab
