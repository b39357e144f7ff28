#include "borrowlab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "borrowlab/error.hpp"

namespace borrowlab {

const char* to_string(Method m) {
  switch (m) {
    case Method::Aipw: return "aipw";
    case Method::Fused: return "fused";
    case Method::Full: return "full";
    case Method::Lasso: return "lasso";
    case Method::Influence: return "if";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "aipw") return Method::Aipw;
  if (name == "fused") return Method::Fused;
  if (name == "full") return Method::Full;
  if (name == "lasso") return Method::Lasso;
  if (name == "if") return Method::Influence;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + name + "'", "method");
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size() - 1);
}

namespace {

// tau is the plain average of the summands; centering each summand's R/q block
// at tau makes the EIF values average to zero up to round-off.
void finish_report(EstimateReport& report, const std::vector<double>& summands,
                   const std::vector<double>& r_over_q) {
  const double n = static_cast<double>(summands.size());
  report.tau_hat = std::accumulate(summands.begin(), summands.end(), 0.0) / n;
  report.eif_values.resize(summands.size());
  for (std::size_t i = 0; i < summands.size(); ++i) {
    report.eif_values[i] = summands[i] - r_over_q[i] * report.tau_hat;
  }
  report.n_used = summands.size();
  report.se_hat = std::sqrt(sample_variance(report.eif_values) / n);
}

}  // namespace

EstimateReport tau_aipw(const TrialDataset& trial, const NuisanceSet& ns) {
  if (trial.n_treated() == 0 || trial.n_control() == 0) {
    throw Error(ErrorCode::InvalidArgument, "AIPW needs both trial arms populated", "tau_aipw");
  }
  const auto n = trial.size();
  std::vector<double> summands(n);
  const std::vector<double> ones(n, 1.0);
  EstimateReport report;
  report.method = Method::Aipw;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const Eigen::VectorXd x = trial.x().row(row).transpose();
    const double raw_e = ns.e1(x);
    const double e = clip_probability(raw_e);
    if (e != raw_e) ++report.diagnostics.clipped_weights;
    const double mu1 = ns.mu1.predict(x);
    const double mu0 = ns.mu0.predict(x);
    const double y = trial.y()[row];
    const int a = trial.a()[i];
    summands[i] = a * (y - mu1) / e - (1 - a) * (y - mu0) / (1.0 - e) + (mu1 - mu0);
  }
  finish_report(report, summands, ones);
  return report;
}

EstimateReport tau_fused(const TrialDataset& trial, const ExternalPool& pool,
                         std::span<const std::size_t> borrowed, const NuisanceSet& ns) {
  if (borrowed.empty()) {
    EstimateReport report = tau_aipw(trial, ns);
    report.method = Method::Fused;
    return report;
  }
  if (ns.n_borrowed != borrowed.size()) {
    throw Error(ErrorCode::InvalidArgument, "nuisances were fitted on a different borrowed set",
                "tau_fused");
  }
  std::vector<std::size_t> sorted(borrowed.begin(), borrowed.end());
  std::sort(sorted.begin(), sorted.end());
  const CombinedDataset data = combine(trial, pool, sorted);
  const double q = data.q_hat;

  const auto n = data.size();
  std::vector<double> summands(n);
  std::vector<double> r_over_q(n);
  EstimateReport report;
  report.method = Method::Fused;
  report.k_borrowed = borrowed.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const Eigen::VectorXd x = data.x.row(row).transpose();
    const double pi = ns.pi(x);
    const auto es = e_s_checked(ns, x);
    if (es.clipped) ++report.diagnostics.clipped_weights;
    const double m1 = ns.m1().predict(x);
    const double m0 = ns.m0.predict(x);
    const double y = data.y[row];
    const int a = data.a[i];
    const int r = data.r[i];
    const double weighted = (pi / q) * (r * a * (y - m1) / es.value - (1 - a) * (y - m0) / (1.0 - es.value));
    r_over_q[i] = r / q;
    summands[i] = weighted + r_over_q[i] * (m1 - m0);
  }
  finish_report(report, summands, r_over_q);
  return report;
}

EstimateReport tau_full(const TrialDataset& trial, const ExternalPool& pool, const NuisanceSet& ns) {
  std::vector<std::size_t> all(pool.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  EstimateReport report = tau_fused(trial, pool, all, ns);
  report.method = Method::Full;
  return report;
}

namespace {

double residual_variance(const RidgeModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::VectorXd resid = y - model.predict_rows(x);
  const auto n = static_cast<double>(x.rows());
  const auto p = static_cast<double>(model.theta.size());
  const double dof = n > p ? n - p : n;
  return resid.squaredNorm() / dof;
}

// phi_j^T (Phi^T Phi + lambda I_noint)^{-1} phi_j for every row of `at`.
Eigen::VectorXd leverage(const FeatureMap& fm, double lambda, const Eigen::MatrixXd& fit_x,
                         const Eigen::MatrixXd& at) {
  const Eigen::MatrixXd phi = fm.design(fit_x);
  Eigen::MatrixXd gram = phi.transpose() * phi;
  gram.diagonal().tail(gram.rows() - 1).array() += lambda;
  // Tiny jitter keeps the quadratic form strictly positive.
  gram.diagonal().array() += 1e-12 * (1.0 + gram.diagonal().maxCoeff());
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  const Eigen::MatrixXd phi_at = fm.design(at);
  const Eigen::MatrixXd solved = llt.solve(phi_at.transpose());
  return (phi_at.transpose().cwiseProduct(solved)).colwise().sum().transpose();
}

}  // namespace

BiasVector estimate_bias_vector(const TrialDataset& trial, const ExternalPool& pool,
                                const NuisanceSet& ns) {
  if (!ns.mu0_ext) {
    throw Error(ErrorCode::InvalidArgument, "external outcome model not fitted (pool too small)",
                "estimate_bias_vector");
  }
  const RidgeModel& ext = *ns.mu0_ext;
  const Eigen::MatrixXd cx = trial.arm_x(0);
  const Eigen::VectorXd cy = trial.arm_y(0);

  BiasVector bv;
  bv.b_hat = ext.predict_rows(pool.x()) - ns.mu0.predict_rows(pool.x());
  const double s2_ext = residual_variance(ext, pool.x(), pool.y());
  const double s2_ctl = residual_variance(ns.mu0, cx, cy);
  bv.sigma2_hat = s2_ext * leverage(ext.fm, ext.lambda_reg, pool.x(), pool.x()) +
                  s2_ctl * leverage(ns.mu0.fm, ns.mu0.lambda_reg, cx, pool.x());
  bv.sigma2_hat = bv.sigma2_hat.cwiseMax(std::numeric_limits<double>::min());
  bv.b_tilde = bv.b_hat;
  return bv;
}

BiasVector adaptive_lasso_threshold(BiasVector bv, double lambda_pen, double nu) {
  if (lambda_pen < 0.0 || !(nu > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "need lambda_pen >= 0 and nu > 0",
                "adaptive_lasso_threshold");
  }
  bv.b_tilde.resize(bv.b_hat.size());
  for (Eigen::Index j = 0; j < bv.b_hat.size(); ++j) {
    const double b = bv.b_hat[j];
    if (b == 0.0) {
      bv.b_tilde[j] = 0.0;
      continue;
    }
    if (lambda_pen == 0.0) {
      bv.b_tilde[j] = b;
      continue;
    }
    const double shrink = lambda_pen * bv.sigma2_hat[j] / (2.0 * std::pow(std::abs(b), nu));
    bv.b_tilde[j] = std::copysign(std::max(0.0, std::abs(b) - shrink), b);
  }
  return bv;
}

std::vector<std::size_t> lasso_borrow_set(const BiasVector& bv) {
  std::vector<std::size_t> out;
  for (Eigen::Index j = 0; j < bv.b_tilde.size(); ++j) {
    if (bv.b_tilde[j] == 0.0) out.push_back(static_cast<std::size_t>(j));
  }
  return out;
}

std::vector<std::size_t> lasso_rank(const BiasVector& bv) {
  std::vector<std::size_t> order(static_cast<std::size_t>(bv.b_hat.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return std::abs(bv.b_hat[static_cast<Eigen::Index>(l)]) <
           std::abs(bv.b_hat[static_cast<Eigen::Index>(r)]);
  });
  return order;
}

}  // namespace borrowlab
