#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <random>

#include <Eigen/Dense>

#include "borrowlab/data.hpp"

namespace borrowlab {

enum class Mechanism { Linear, Nonlinear, OneD };

const char* to_string(Mechanism m);
Mechanism parse_mechanism(const std::string& name);

/// User-facing knobs of a synthetic scenario. defaults() returns the
/// published settings for each mechanism.
struct ScenarioParams {
  Mechanism mechanism = Mechanism::Linear;
  std::size_t d = 8;
  std::size_t n_trial = 400;
  std::size_t n_treated = 300;
  std::size_t n_pool = 800;
  double mu1 = 0.0;
  double sigma1 = 1.0;
  double mu2 = 0.1;
  double sigma2 = 2.0;
  /// Concurrency level multiplying T in pool outcomes.
  double delta = 0.1;
  /// Noise standard deviations for trial and pool outcomes.
  double noise_trial = 1.0;
  double noise_pool = 1.5;
  /// Amplitude of the exponential outcome model.
  double amplitude = 1.0;
  /// Constant added to every pool outcome.
  double pool_shift = 0.0;
  /// Force the structural multipliers to 1 (no outcome-model shift).
  bool exchangeable_structure = false;
  /// Constant treatment effect for the one-dimensional example.
  double oned_effect = 1.0;
  std::size_t oned_outliers = 5;
  std::uint64_t seed = 20250101;

  static ScenarioParams defaults(Mechanism m);
  std::size_t n_control() const { return n_trial - n_treated; }
};

/// Scenario with its coefficient draws frozen at construction.
struct ScenarioConfig {
  ScenarioParams params;
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha;  // length d + 1, (intercept, slopes)
  Eigen::VectorXd delta_beta;

  static ScenarioConfig build(const ScenarioParams& params);
  std::string digest() const;
};

struct SimData {
  TrialDataset trial;
  ExternalPool pool;
  /// Pool positions of injected outliers (one-dimensional example only).
  std::vector<std::size_t> outliers;
};

SimData gen_linear(const ScenarioConfig& cfg, std::uint64_t data_seed);
SimData gen_nonlinear(const ScenarioConfig& cfg, std::uint64_t data_seed);
SimData gen_oned(const ScenarioConfig& cfg, std::uint64_t data_seed);
SimData generate(const ScenarioConfig& cfg, std::uint64_t data_seed);

struct TrueTau {
  double value = 0.0;
  double se = 0.0;  // Monte Carlo standard error; 0 for closed forms
};

TrueTau true_tau(const ScenarioConfig& cfg);

/// Draw from N(mu, sigma) restricted to [lo, hi].
double sample_truncated_normal(std::mt19937_64& rng, double mu, double sigma, double lo, double hi);

}  // namespace borrowlab
