#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "borrowlab/data.hpp"
#include "borrowlab/estimators.hpp"
#include "borrowlab/influence.hpp"
#include "borrowlab/nuisance.hpp"

namespace borrowlab {

enum class RankingSource { Influence, LassoBias };

const char* to_string(RankingSource s);

struct SelectionConfig {
  NuisanceConfig nuisance;
  /// Evaluate every k in 0..N_O instead of the default spaced grid.
  bool dense = false;
  /// Overrides the default grid when nonempty.
  std::vector<std::size_t> k_grid;
  double hessian_damping = 0.0;
  unsigned threads = 1;
};

struct MseRow {
  std::size_t k = 0;
  double tau_hat = 0.0;
  double bias_hat = 0.0;
  double var_hat = 0.0;
  double mse_hat = 0.0;
  bool failed = false;
  std::string error;
};

struct MseProfile {
  std::vector<MseRow> rows;
  std::vector<std::size_t> k_grid;
  std::size_t k_star = 0;
  RankingSource ranking_source = RankingSource::Influence;
  /// Ordering the nested sets were taken from.
  std::vector<std::size_t> order;
};

/// {0, 1, s, 2s, ..., N} with s = ceil(N / 50); every k when dense.
std::vector<std::size_t> default_k_grid(std::size_t pool_size, bool dense = false);

/// Refits nuisances on trial + nested_set(order, k) for each k and records the
/// estimated bias (tau_k - tau_aipw), variance (EIF sample variance / (N_E + k))
/// and their MSE. Rows that fail are kept, flagged, and excluded from k_star.
MseProfile mse_profile(const TrialDataset& trial, const ExternalPool& pool,
                       std::span<const std::size_t> order, RankingSource source,
                       std::span<const std::size_t> k_grid, const SelectionConfig& cfg,
                       const BaseFits* base = nullptr);

struct Selection {
  std::size_t k_star = 0;
  std::vector<std::size_t> indices;
};

/// Argmin of mse_hat over succeeded rows; ties go to the smaller k.
Selection select_optimal(const MseProfile& profile);

/// Estimate with the first k entries of `order` borrowed.
EstimateReport estimate_at_k(const TrialDataset& trial, const ExternalPool& pool,
                             std::span<const std::size_t> order, std::size_t k,
                             const BaseFits& base, const NuisanceConfig& cfg);

/// Influence ranking of the pool against the trial-control outcome model.
InfluenceRanking influence_ranking(const TrialDataset& trial, const ExternalPool& pool,
                                   const BaseFits& base, const SelectionConfig& cfg);

struct PipelineResult {
  EstimateReport report;
  MseProfile profile;
  InfluenceRanking ranking;
  std::vector<std::size_t> selected;
};

PipelineResult estimate_full_pipeline(const TrialDataset& trial, const ExternalPool& pool,
                                      const SelectionConfig& cfg);
PipelineResult estimate_full_pipeline(const TrialDataset& trial, const ExternalPool& pool,
                                      const BaseFits& base, const SelectionConfig& cfg);

struct LassoSelection {
  double lambda = 0.0;
  double nu = 1.0;
  std::vector<std::size_t> borrowed;
  EstimateReport report;
  double mse_hat = 0.0;
  BiasVector bias;
};

/// Adaptive-lasso baseline: lambda picked from a log grid by the same
/// estimated-MSE criterion used for the Top-K sweep.
LassoSelection select_lasso(const TrialDataset& trial, const ExternalPool& pool,
                            const BaseFits& base, const SelectionConfig& cfg,
                            std::size_t grid_size = 20, double nu = 1.0);

}  // namespace borrowlab
