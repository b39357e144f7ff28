#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "borrowlab/data.hpp"
#include "borrowlab/models.hpp"

namespace borrowlab {

struct NuisanceConfig {
  FeatureMap fm;
  double lambda_reg = 1e-4;
  /// Trial assignment completely at random: e1 is the treated fraction.
  bool randomized = true;
  double logistic_ridge = 1e-6;
  /// Sample splitting for the nuisance fits. Reserved; only false is supported.
  bool cross_fit = false;
};

/// A probability model that is either a known constant or a fitted logistic
/// regression. Predictions are clipped to [1e-3, 1 - 1e-3] except for the
/// exact constant 1 used by pi when nothing is borrowed.
class ScoreModel {
 public:
  ScoreModel() = default;
  explicit ScoreModel(double constant) : model_(constant) {}
  explicit ScoreModel(LogisticModel fitted) : model_(std::move(fitted)) {}

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  bool is_constant() const { return std::holds_alternative<double>(model_); }
  const LogisticModel* logistic() const { return std::get_if<LogisticModel>(&model_); }

 private:
  std::variant<double, LogisticModel> model_ = 1.0;
};

/// Fits that depend only on the trial and the full pool; shared across every
/// borrowed subset considered for one dataset.
struct BaseFits {
  ScoreModel e1;
  RidgeModel mu0;
  RidgeModel mu1;
  std::optional<RidgeModel> mu0_ext;
};

BaseFits fit_base(const TrialDataset& trial, const ExternalPool& pool, const NuisanceConfig& cfg);

struct NuisanceSet {
  ScoreModel e1;
  ScoreModel pi;
  RidgeModel mu0;
  RidgeModel mu1;
  RidgeModel m0;
  std::optional<RidgeModel> mu0_ext;
  double q_hat = 1.0;
  std::size_t n_borrowed = 0;

  /// m1 coincides with mu1 by definition.
  const RidgeModel& m1() const { return mu1; }
};

struct ClippedProbability {
  double value;
  bool clipped;
};

/// e_S(x) = e1(x) * pi(x), clipped to [1e-3, 1 - 1e-3].
double e_s(const NuisanceSet& ns, const Eigen::Ref<const Eigen::VectorXd>& x);
ClippedProbability e_s_checked(const NuisanceSet& ns, const Eigen::Ref<const Eigen::VectorXd>& x);

NuisanceSet fit_nuisances(const TrialDataset& trial, const ExternalPool& pool,
                          std::span<const std::size_t> borrowed, const NuisanceConfig& cfg);
NuisanceSet fit_nuisances(const TrialDataset& trial, const ExternalPool& pool,
                          std::span<const std::size_t> borrowed, const BaseFits& base,
                          const NuisanceConfig& cfg);

}  // namespace borrowlab
