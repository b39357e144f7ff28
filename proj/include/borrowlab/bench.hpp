#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "borrowlab/estimators.hpp"
#include "borrowlab/selection.hpp"
#include "borrowlab/simgen.hpp"

namespace borrowlab {

enum class BiasMode {
  AbsMean,  // |mean(tau^) - tau|
  MeanAbs,  // mean |tau^ - tau|
};

const char* to_string(BiasMode m);
BiasMode parse_bias_mode(const std::string& name);

struct BenchConfig {
  std::vector<Method> methods{Method::Aipw, Method::Full, Method::Lasso, Method::Influence};
  /// Fixed Top-K values evaluated for the ranking methods.
  std::vector<std::size_t> k_list;
  /// Also report the MSE-selected k (influence) and the tuned adaptive lasso.
  bool include_selected = true;
  std::size_t reps = 200;
  std::uint64_t base_seed = 1;
  BiasMode bias_mode = BiasMode::AbsMean;
  SelectionConfig selection;
  /// Subsample the trial control arm to this size in every replication.
  std::optional<std::size_t> control_n;
  unsigned threads = 0;
};

struct MetricsRow {
  Method method = Method::Aipw;
  std::optional<std::size_t> k;  // nullopt: selected k
  double mc_bias = 0.0;
  double mc_std = 0.0;
  double mc_mse = 0.0;
  double mc_se_of_bias = 0.0;
  double mean_se_hat = 0.0;
  double mean_k = 0.0;
  std::size_t n_reps = 0;
  std::size_t n_failed = 0;
  bool aborted = false;
  /// Per-replication estimates in replication order (NaN where failed).
  std::vector<double> estimates;
};

struct MetricsTable {
  std::string scenario;
  double tau_true = 0.0;
  BiasMode bias_mode = BiasMode::AbsMean;
  std::vector<MetricsRow> rows;

  const MetricsRow& find(Method method, std::optional<std::size_t> k) const;
};

/// Replication r draws data with seed base_seed + r; results are identical
/// for any thread count.
MetricsTable run_monte_carlo(const ScenarioConfig& scenario, const BenchConfig& cfg);

std::vector<MetricsTable> sweep_shift(const ScenarioParams& params, const std::vector<double>& mu2_list,
                                      const BenchConfig& cfg);
std::vector<MetricsTable> sweep_control_n(const ScenarioParams& params,
                                          const std::vector<std::size_t>& nc_list,
                                          const BenchConfig& cfg);

/// Real data: pseudo-truth is tau_aipw on the full trial; each replication
/// subsamples the control arm to `control_n` (fresh draw per replication).
MetricsTable run_real_data(const TrialDataset& trial, const ExternalPool& pool,
                           std::size_t control_n, const BenchConfig& cfg);

/// Keeps every treated row and a uniformly drawn subset of `control_n`
/// control rows; returns the trial unchanged when control_n equals the arm size.
TrialDataset subsample_controls(const TrialDataset& trial, std::size_t control_n, std::uint64_t seed);

}  // namespace borrowlab
