#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "borrowlab/bench.hpp"
#include "borrowlab/data.hpp"
#include "borrowlab/estimators.hpp"
#include "borrowlab/influence.hpp"
#include "borrowlab/selection.hpp"

namespace borrowlab {

/// Numeric CSV with a header row. Rectangular, no missing cells.
struct TabularFile {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::optional<std::size_t> column(const std::string& name) const;
};

TabularFile parse_table(std::istream& in, const std::string& source = "<stream>");
TabularFile read_table(const std::filesystem::path& path);

struct LoadedTrial {
  TrialDataset data;
  std::vector<std::string> covariates;
};

struct LoadedPool {
  ExternalPool data;
  std::vector<std::string> covariates;
};

/// Every column other than the outcome and treatment becomes a covariate, in
/// header order.
LoadedTrial load_trial_csv(const std::filesystem::path& path, const std::string& outcome_col,
                           const std::string& treat_col);
/// The treatment column is optional; when present every value must be 0.
LoadedPool load_pool_csv(const std::filesystem::path& path, const std::string& outcome_col,
                         const std::string& treat_col = "treat");

/// Throws Error(Parse) listing both headers when covariate names or order differ.
void check_schema(const std::vector<std::string>& trial_covariates,
                  const std::vector<std::string>& pool_covariates);

/// Center and scale covariates with trial statistics; divide outcomes by a
/// constant. Applied to trial and pool alike.
struct Preprocessing {
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
  double outcome_scale = 1.0;

  static Preprocessing fit(const TrialDataset& trial, bool standardize, double outcome_scale);
  TrialDataset apply(const TrialDataset& trial) const;
  ExternalPool apply(const ExternalPool& pool) const;
};

/// Writes treat, x1..xd, y with 17 significant digits.
void write_trial_csv(const std::filesystem::path& path, const TrialDataset& trial);
void write_pool_csv(const std::filesystem::path& path, const ExternalPool& pool);

nlohmann::json to_json(const EstimateReport& report, bool include_eif = false);
nlohmann::json to_json(const InfluenceRanking& ranking);
nlohmann::json to_json(const MetricsTable& table);

void write_profile_csv(std::ostream& out, const MseProfile& profile);
void write_metrics_csv(std::ostream& out, const MetricsTable& table);
/// Per-k MSE curves for the ranking methods (method, k, mse).
void write_curve_csv(std::ostream& out, const MetricsTable& table);

}  // namespace borrowlab
