#include "borrowlab/data.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "borrowlab/error.hpp"

namespace borrowlab {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::IndexOutOfRange: return "index_out_of_range";
    case ErrorCode::DuplicateIndex: return "duplicate_index";
    case ErrorCode::RankDeficient: return "rank_deficient";
    case ErrorCode::Numerical: return "numerical";
    case ErrorCode::DegenerateFit: return "degenerate_fit";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Io: return "io";
    case ErrorCode::Selection: return "selection";
  }
  return "unknown";
}

namespace {

Eigen::MatrixXd stack_covariates(std::span<const Sample> samples) {
  const auto d = samples.empty() ? Eigen::Index{0} : samples.front().x.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(samples.size()), d);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].x.size() != d) {
      throw Error(ErrorCode::DimensionMismatch, "sample covariate dimension differs",
                  "sample " + std::to_string(i));
    }
    x.row(static_cast<Eigen::Index>(i)) = samples[i].x.transpose();
  }
  return x;
}

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

}  // namespace

TrialDataset::TrialDataset(Eigen::MatrixXd x, std::vector<int> a, Eigen::VectorXd y)
    : x_(std::move(x)), a_(std::move(a)), y_(std::move(y)) {
  if (static_cast<std::size_t>(x_.rows()) != a_.size() || x_.rows() != y_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "trial rows, treatments and outcomes differ in length",
                "TrialDataset");
  }
  n_treated_ = static_cast<std::size_t>(std::count(a_.begin(), a_.end(), 1));
}

TrialDataset TrialDataset::from_samples(std::span<const Sample> samples) {
  Eigen::MatrixXd x = stack_covariates(samples);
  std::vector<int> a(samples.size());
  Eigen::VectorXd y(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    a[i] = samples[i].a;
    y[static_cast<Eigen::Index>(i)] = samples[i].y;
  }
  return TrialDataset(std::move(x), std::move(a), std::move(y));
}

Sample TrialDataset::sample(std::size_t i) const {
  const auto row = static_cast<Eigen::Index>(i);
  return Sample{x_.row(row).transpose(), a_[i], y_[row], 1};
}

std::vector<std::size_t> TrialDataset::arm(int treatment) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < a_.size(); ++i) {
    if (a_[i] == treatment) rows.push_back(i);
  }
  return rows;
}

Eigen::MatrixXd TrialDataset::arm_x(int treatment) const {
  const auto rows = arm(treatment);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x_.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) = x_.row(static_cast<Eigen::Index>(rows[k]));
  }
  return out;
}

Eigen::VectorXd TrialDataset::arm_y(int treatment) const {
  const auto rows = arm(treatment);
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out[static_cast<Eigen::Index>(k)] = y_[static_cast<Eigen::Index>(rows[k])];
  }
  return out;
}

TrialDataset TrialDataset::subset(std::span<const std::size_t> rows) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), x_.cols());
  std::vector<int> a(rows.size());
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= size()) {
      throw Error(ErrorCode::IndexOutOfRange, "trial row out of range", std::to_string(rows[k]));
    }
    const auto src = static_cast<Eigen::Index>(rows[k]);
    x.row(static_cast<Eigen::Index>(k)) = x_.row(src);
    a[k] = a_[rows[k]];
    y[static_cast<Eigen::Index>(k)] = y_[src];
  }
  return TrialDataset(std::move(x), std::move(a), std::move(y));
}

ExternalPool::ExternalPool(Eigen::MatrixXd x, Eigen::VectorXd y)
    : x_(std::move(x)), y_(std::move(y)), a_(static_cast<std::size_t>(x_.rows()), 0) {
  if (x_.rows() != y_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "pool rows and outcomes differ in length",
                "ExternalPool");
  }
}

ExternalPool::ExternalPool(Eigen::MatrixXd x, Eigen::VectorXd y, std::vector<int> a)
    : x_(std::move(x)), y_(std::move(y)), a_(std::move(a)) {
  if (x_.rows() != y_.size() || a_.size() != static_cast<std::size_t>(x_.rows())) {
    throw Error(ErrorCode::DimensionMismatch, "pool rows, treatments and outcomes differ in length",
                "ExternalPool");
  }
}

ExternalPool ExternalPool::from_samples(std::span<const Sample> samples) {
  Eigen::MatrixXd x = stack_covariates(samples);
  Eigen::VectorXd y(static_cast<Eigen::Index>(samples.size()));
  std::vector<int> a(samples.size());
  for (std::size_t j = 0; j < samples.size(); ++j) {
    y[static_cast<Eigen::Index>(j)] = samples[j].y;
    a[j] = samples[j].a;
  }
  return ExternalPool(std::move(x), std::move(y), std::move(a));
}

Sample ExternalPool::sample(std::size_t j) const {
  const auto row = static_cast<Eigen::Index>(j);
  return Sample{x_.row(row).transpose(), a_[j], y_[row], 0};
}

ExternalPool ExternalPool::subset(std::span<const std::size_t> rows) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), x_.cols());
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  std::vector<int> a(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= size()) {
      throw Error(ErrorCode::IndexOutOfRange, "pool index out of range", std::to_string(rows[k]));
    }
    x.row(static_cast<Eigen::Index>(k)) = x_.row(static_cast<Eigen::Index>(rows[k]));
    y[static_cast<Eigen::Index>(k)] = y_[static_cast<Eigen::Index>(rows[k])];
    a[k] = a_[rows[k]];
  }
  return ExternalPool(std::move(x), std::move(y), std::move(a));
}

ValidationReport validate(const TrialDataset& trial) {
  ValidationReport report;
  if (trial.size() == 0) report.violations.emplace_back("empty trial");
  if (trial.n_treated() == 0) report.violations.emplace_back("empty treated arm");
  if (trial.n_control() == 0) report.violations.emplace_back("empty control arm");
  for (std::size_t i = 0; i < trial.size(); ++i) {
    if (trial.a()[i] != 0 && trial.a()[i] != 1) {
      report.violations.push_back("non-binary treatment at trial row " + std::to_string(i));
    }
  }
  if (!all_finite(trial.x()) || !trial.y().allFinite()) {
    report.violations.emplace_back("non-finite value in trial");
  }
  return report;
}

ValidationReport validate(const TrialDataset& trial, const ExternalPool& pool) {
  ValidationReport report = validate(trial);
  if (pool.dim() != trial.dim() && !pool.empty()) {
    std::ostringstream os;
    os << "dimension mismatch: trial d=" << trial.dim() << ", pool d=" << pool.dim();
    report.violations.push_back(os.str());
  }
  for (std::size_t j = 0; j < pool.size(); ++j) {
    if (pool.a()[j] != 0) {
      report.violations.push_back("treated external sample at pool row " + std::to_string(j));
    }
  }
  if (!all_finite(pool.x()) || !pool.y().allFinite()) {
    report.violations.emplace_back("non-finite value in pool");
  }
  return report;
}

CombinedDataset combine(const TrialDataset& trial, const ExternalPool& pool,
                        std::span<const std::size_t> indices) {
  std::vector<bool> seen(pool.size(), false);
  for (const auto j : indices) {
    if (j >= pool.size()) {
      throw Error(ErrorCode::IndexOutOfRange, "borrowed index out of range", std::to_string(j));
    }
    if (seen[j]) {
      throw Error(ErrorCode::DuplicateIndex, "borrowed index repeated", std::to_string(j));
    }
    seen[j] = true;
  }
  if (!indices.empty() && pool.dim() != trial.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "pool and trial dimensions differ", "combine");
  }

  const auto n_e = static_cast<Eigen::Index>(trial.size());
  const auto n_s = static_cast<Eigen::Index>(indices.size());
  CombinedDataset out;
  out.x.resize(n_e + n_s, trial.x().cols());
  out.y.resize(n_e + n_s);
  out.x.topRows(n_e) = trial.x();
  out.y.head(n_e) = trial.y();
  out.a = trial.a();
  out.r.assign(trial.size(), 1);
  for (Eigen::Index k = 0; k < n_s; ++k) {
    const auto src = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(k)]);
    out.x.row(n_e + k) = pool.x().row(src);
    out.y[n_e + k] = pool.y()[src];
    out.a.push_back(0);
    out.r.push_back(0);
  }
  out.borrowed.assign(indices.begin(), indices.end());
  out.n_trial = trial.size();
  out.q_hat = static_cast<double>(n_e) / static_cast<double>(n_e + n_s);
  return out;
}

FeatureMap FeatureMap::linear(std::size_t d_in) {
  FeatureMap fm;
  fm.kind_ = FeatureKind::Linear;
  fm.degree_ = 1;
  fm.d_in_ = d_in;
  return fm;
}

FeatureMap FeatureMap::polynomial(std::size_t d_in, int degree) {
  if (degree < 1) {
    throw Error(ErrorCode::InvalidArgument, "polynomial degree must be >= 1", "FeatureMap");
  }
  FeatureMap fm;
  fm.kind_ = FeatureKind::Polynomial;
  fm.degree_ = degree;
  fm.d_in_ = d_in;
  return fm;
}

Eigen::VectorXd FeatureMap::expand(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (static_cast<std::size_t>(x.size()) != d_in_) {
    throw Error(ErrorCode::DimensionMismatch,
                "feature map expects " + std::to_string(d_in_) + " inputs, got " +
                    std::to_string(x.size()),
                "FeatureMap::expand");
  }
  const auto d = static_cast<Eigen::Index>(d_in_);
  Eigen::VectorXd out(static_cast<Eigen::Index>(d_out()));
  out[0] = 1.0;
  out.segment(1, d) = x;
  Eigen::VectorXd power = x;
  for (int p = 2; p <= degree_; ++p) {
    power = power.cwiseProduct(x);
    out.segment(1 + (p - 1) * d, d) = power;
  }
  return out;
}

Eigen::MatrixXd FeatureMap::design(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  if (static_cast<std::size_t>(x.cols()) != d_in_) {
    throw Error(ErrorCode::DimensionMismatch,
                "feature map expects " + std::to_string(d_in_) + " columns, got " +
                    std::to_string(x.cols()),
                "FeatureMap::design");
  }
  const auto d = static_cast<Eigen::Index>(d_in_);
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(d_out()));
  out.col(0).setOnes();
  out.middleCols(1, d) = x;
  Eigen::MatrixXd power = x;
  for (int p = 2; p <= degree_; ++p) {
    power = power.cwiseProduct(x);
    out.middleCols(1 + (p - 1) * d, d) = power;
  }
  return out;
}

std::string FeatureMap::describe() const {
  if (kind_ == FeatureKind::Linear) return "linear";
  return "polynomial(" + std::to_string(degree_) + ")";
}

}  // namespace borrowlab
