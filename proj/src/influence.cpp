#include "borrowlab/influence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "borrowlab/error.hpp"
#include "borrowlab/parallel.hpp"

namespace borrowlab {

namespace {

void require_control(const Sample& z) {
  if (z.a != 0) {
    throw Error(ErrorCode::InvalidArgument, "influence is defined for untreated samples only",
                "influence");
  }
}

}  // namespace

Eigen::VectorXd influence_params(const RidgeModel& model, const HessianFactor& h, const Sample& z) {
  require_control(z);
  return -h.solve(grad_loss(model, z));
}

double influence_loss_pair(const RidgeModel& model, const HessianFactor& h, const Sample& z,
                           const Sample& zi) {
  require_control(z);
  return -grad_loss(model, zi).dot(h.solve(grad_loss(model, z)));
}

InfluenceScorer::InfluenceScorer(const RidgeModel& model, const HessianFactor& h,
                                 const Eigen::Ref<const Eigen::MatrixXd>& controls_x,
                                 const Eigen::Ref<const Eigen::VectorXd>& controls_y)
    : model_(model), h_(h) {
  if (controls_x.rows() != controls_y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "control rows and outcomes differ",
                "InfluenceScorer");
  }
  const Eigen::MatrixXd phi = model.fm.design(controls_x);
  const Eigen::VectorXd residual = phi * model.theta - controls_y;
  control_grads_ = (2.0 * residual).asDiagonal() * phi;
}

double InfluenceScorer::score(const Sample& z) const {
  require_control(z);
  const Eigen::VectorXd v = h_.solve(grad_loss(model_, z));
  return (control_grads_ * v).cwiseAbs().sum();
}

double influence_score(const RidgeModel& model, const HessianFactor& h,
                       const Eigen::Ref<const Eigen::MatrixXd>& controls_x,
                       const Eigen::Ref<const Eigen::VectorXd>& controls_y, const Sample& z) {
  return InfluenceScorer(model, h, controls_x, controls_y).score(z);
}

double exact_influence(const Eigen::Ref<const Eigen::MatrixXd>& controls_x,
                       const Eigen::Ref<const Eigen::VectorXd>& controls_y, double lambda_reg,
                       const FeatureMap& fm, const Sample& z, double z_weight) {
  const RidgeModel base = fit_ridge(controls_x, controls_y, lambda_reg, fm);

  const Eigen::Index n = controls_x.rows();
  Eigen::MatrixXd x(n + 1, controls_x.cols());
  x.topRows(n) = controls_x;
  x.row(n) = z.x.transpose();
  Eigen::VectorXd y(n + 1);
  y.head(n) = controls_y;
  y[n] = z.y;
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n + 1);
  w[n] = z_weight;
  const RidgeModel refit = fit_weighted_ridge(x, y, w, lambda_reg, fm);

  const Eigen::MatrixXd phi = fm.design(controls_x);
  const Eigen::VectorXd before = (controls_y - phi * base.theta).array().square();
  const Eigen::VectorXd after = (controls_y - phi * refit.theta).array().square();
  return (after - before).cwiseAbs().sum();
}

InfluenceRanking rank_pool(const RidgeModel& model, const HessianFactor& h,
                           const Eigen::Ref<const Eigen::MatrixXd>& controls_x,
                           const Eigen::Ref<const Eigen::VectorXd>& controls_y,
                           const ExternalPool& pool, unsigned threads) {
  const InfluenceScorer scorer(model, h, controls_x, controls_y);
  InfluenceRanking ranking;
  ranking.scores.assign(pool.size(), 0.0);
  parallel_for(pool.size(), threads, [&](std::size_t j) {
    Sample z = pool.sample(j);
    z.a = 0;
    ranking.scores[j] = scorer.score(z);
  });
  for (std::size_t j = 0; j < pool.size(); ++j) {
    if (!std::isfinite(ranking.scores[j])) {
      throw Error(ErrorCode::Numerical, "non-finite influence score", "pool " + std::to_string(j));
    }
  }
  ranking.order.resize(pool.size());
  std::iota(ranking.order.begin(), ranking.order.end(), std::size_t{0});
  std::stable_sort(ranking.order.begin(), ranking.order.end(),
                   [&](std::size_t l, std::size_t r) { return ranking.scores[l] < ranking.scores[r]; });
  return ranking;
}

std::vector<std::size_t> nested_set(const std::vector<std::size_t>& order, std::size_t k) {
  if (k > order.size()) {
    throw Error(ErrorCode::IndexOutOfRange,
                "k = " + std::to_string(k) + " exceeds pool size " + std::to_string(order.size()),
                "nested_set");
  }
  return {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k)};
}

std::vector<std::size_t> nested_set(const InfluenceRanking& ranking, std::size_t k) {
  return nested_set(ranking.order, k);
}

}  // namespace borrowlab
