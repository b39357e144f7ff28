#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "borrowlab/data.hpp"
#include "borrowlab/models.hpp"

namespace borrowlab {

/// Parameter shift from upweighting z by epsilon: -H^{-1} grad L(z).
Eigen::VectorXd influence_params(const RidgeModel& model, const HessianFactor& h, const Sample& z);

/// First-order change of the loss at trial control zi when z is upweighted.
double influence_loss_pair(const RidgeModel& model, const HessianFactor& h, const Sample& z,
                           const Sample& zi);

/// Scores external samples against a fixed set of trial controls. The control
/// gradient stack is built once; each score costs one solve and one
/// matrix-vector product.
class InfluenceScorer {
 public:
  InfluenceScorer(const RidgeModel& model, const HessianFactor& h,
                  const Eigen::Ref<const Eigen::MatrixXd>& controls_x,
                  const Eigen::Ref<const Eigen::VectorXd>& controls_y);

  /// Sum over controls of |grad L(Z_i)^T H^{-1} grad L(z)|.
  double score(const Sample& z) const;

 private:
  RidgeModel model_;
  HessianFactor h_;
  Eigen::MatrixXd control_grads_;
};

double influence_score(const RidgeModel& model, const HessianFactor& h,
                       const Eigen::Ref<const Eigen::MatrixXd>& controls_x,
                       const Eigen::Ref<const Eigen::VectorXd>& controls_y, const Sample& z);

/// Retraining oracle: refits with z added at weight `z_weight` (1 = plain
/// retraining) and returns sum_i |L(Z_i, theta_+z) - L(Z_i, theta)|.
double exact_influence(const Eigen::Ref<const Eigen::MatrixXd>& controls_x,
                       const Eigen::Ref<const Eigen::VectorXd>& controls_y, double lambda_reg,
                       const FeatureMap& fm, const Sample& z, double z_weight = 1.0);

struct InfluenceRanking {
  std::vector<double> scores;      // indexed by pool position
  std::vector<std::size_t> order;  // pool positions, ascending score
  std::string ties_broken_by = "pool-index";

  std::size_t size() const { return order.size(); }
};

/// Scores every pool sample and sorts ascending; equal scores keep pool order.
InfluenceRanking rank_pool(const RidgeModel& model, const HessianFactor& h,
                           const Eigen::Ref<const Eigen::MatrixXd>& controls_x,
                           const Eigen::Ref<const Eigen::VectorXd>& controls_y,
                           const ExternalPool& pool, unsigned threads = 0);

/// First k entries of a ranking order.
std::vector<std::size_t> nested_set(const std::vector<std::size_t>& order, std::size_t k);
std::vector<std::size_t> nested_set(const InfluenceRanking& ranking, std::size_t k);

}  // namespace borrowlab
