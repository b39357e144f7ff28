#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace borrowlab {

/// One observation: covariates x, treatment a, outcome y, source r (1 = trial).
struct Sample {
  Eigen::VectorXd x;
  int a = 0;
  double y = 0.0;
  int r = 1;
};

/// Randomized-trial samples stored densely, one row per sample.
class TrialDataset {
 public:
  TrialDataset() = default;
  TrialDataset(Eigen::MatrixXd x, std::vector<int> a, Eigen::VectorXd y);

  static TrialDataset from_samples(std::span<const Sample> samples);

  std::size_t size() const { return static_cast<std::size_t>(x_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(x_.cols()); }
  std::size_t n_treated() const { return n_treated_; }
  std::size_t n_control() const { return size() - n_treated_; }

  const Eigen::MatrixXd& x() const { return x_; }
  const Eigen::VectorXd& y() const { return y_; }
  const std::vector<int>& a() const { return a_; }

  Sample sample(std::size_t i) const;

  /// Row indices of the control (a = 0) or treated (a = 1) arm, ascending.
  std::vector<std::size_t> arm(int treatment) const;
  Eigen::MatrixXd arm_x(int treatment) const;
  Eigen::VectorXd arm_y(int treatment) const;

  /// Same trial restricted to the given rows, in the given order.
  TrialDataset subset(std::span<const std::size_t> rows) const;

 private:
  Eigen::MatrixXd x_;
  std::vector<int> a_;
  Eigen::VectorXd y_;
  std::size_t n_treated_ = 0;
};

/// External controls. Treatment is 0 for every sample by construction; the
/// treatment column read from a file is kept so validate() can flag breaches.
class ExternalPool {
 public:
  ExternalPool() = default;
  ExternalPool(Eigen::MatrixXd x, Eigen::VectorXd y);
  ExternalPool(Eigen::MatrixXd x, Eigen::VectorXd y, std::vector<int> a);

  static ExternalPool from_samples(std::span<const Sample> samples);

  std::size_t size() const { return static_cast<std::size_t>(x_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(x_.cols()); }
  bool empty() const { return size() == 0; }

  const Eigen::MatrixXd& x() const { return x_; }
  const Eigen::VectorXd& y() const { return y_; }
  const std::vector<int>& a() const { return a_; }

  Sample sample(std::size_t j) const;
  ExternalPool subset(std::span<const std::size_t> rows) const;

 private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  std::vector<int> a_;
};

/// Trial rows first, then the borrowed pool rows in the order given.
struct CombinedDataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<int> a;
  std::vector<int> r;
  std::vector<std::size_t> borrowed;
  std::size_t n_trial = 0;
  double q_hat = 1.0;

  std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate(const TrialDataset& trial, const ExternalPool& pool);
ValidationReport validate(const TrialDataset& trial);

/// Throws Error(IndexOutOfRange | DuplicateIndex) naming the offending index.
CombinedDataset combine(const TrialDataset& trial, const ExternalPool& pool,
                        std::span<const std::size_t> indices);

enum class FeatureKind { Linear, Polynomial };

/// Basis expansion for the parametric nuisance models. Column 0 is the
/// intercept; polynomial maps append x_j^p for p = 2..degree after the linear
/// block, without cross terms.
class FeatureMap {
 public:
  FeatureMap() = default;
  static FeatureMap linear(std::size_t d_in);
  static FeatureMap polynomial(std::size_t d_in, int degree);

  FeatureKind kind() const { return kind_; }
  int degree() const { return degree_; }
  std::size_t d_in() const { return d_in_; }
  std::size_t d_out() const { return 1 + d_in_ * static_cast<std::size_t>(degree_); }

  Eigen::VectorXd expand(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// Row-wise expansion of a sample matrix.
  Eigen::MatrixXd design(const Eigen::Ref<const Eigen::MatrixXd>& x) const;

  std::string describe() const;

 private:
  FeatureKind kind_ = FeatureKind::Linear;
  int degree_ = 1;
  std::size_t d_in_ = 0;
};

}  // namespace borrowlab
