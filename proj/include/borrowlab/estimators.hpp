#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "borrowlab/data.hpp"
#include "borrowlab/nuisance.hpp"

namespace borrowlab {

enum class Method { Aipw, Fused, Full, Lasso, Influence };

const char* to_string(Method m);
Method parse_method(const std::string& name);

struct EstimateDiagnostics {
  std::size_t clipped_weights = 0;
};

struct EstimateReport {
  double tau_hat = 0.0;
  double se_hat = 0.0;
  std::size_t n_used = 0;
  /// Centered efficient-influence-function values, one per sample used.
  std::vector<double> eif_values;
  Method method = Method::Aipw;
  std::size_t k_borrowed = 0;
  EstimateDiagnostics diagnostics;
};

/// Sample variance (divisor n - 1).
double sample_variance(std::span<const double> values);

EstimateReport tau_aipw(const TrialDataset& trial, const NuisanceSet& ns);

/// Fused estimator over the trial plus the borrowed pool rows. The result does
/// not depend on the order of `borrowed`; an empty set reproduces tau_aipw.
EstimateReport tau_fused(const TrialDataset& trial, const ExternalPool& pool,
                         std::span<const std::size_t> borrowed, const NuisanceSet& ns);

/// Fused estimator with the entire pool borrowed; `ns` must be fitted on it.
EstimateReport tau_full(const TrialDataset& trial, const ExternalPool& pool, const NuisanceSet& ns);

/// Per-sample bias parameters of the adaptive-lasso borrowing baseline, with a
/// diagonal variance proxy.
struct BiasVector {
  Eigen::VectorXd b_hat;
  Eigen::VectorXd sigma2_hat;
  Eigen::VectorXd b_tilde;
};

BiasVector estimate_bias_vector(const TrialDataset& trial, const ExternalPool& pool,
                                const NuisanceSet& ns);

/// Separable adaptive-lasso solution
///   b~_j = sign(b^_j) max(0, |b^_j| - lambda sigma2_j / (2 |b^_j|^nu)).
BiasVector adaptive_lasso_threshold(BiasVector bv, double lambda_pen, double nu = 1.0);

/// Pool indices with b~_j == 0, ascending.
std::vector<std::size_t> lasso_borrow_set(const BiasVector& bv);

/// Pool indices by ascending |b^_j|; ties keep index order.
std::vector<std::size_t> lasso_rank(const BiasVector& bv);

}  // namespace borrowlab
