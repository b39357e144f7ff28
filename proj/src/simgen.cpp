#include "borrowlab/simgen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "borrowlab/error.hpp"

namespace borrowlab {

namespace {

constexpr double kTrialBound = 2.0;
constexpr double kPoolBound = 4.0;
constexpr int kMaxRejections = 10000;
constexpr std::size_t kOracleDraws = 1000000;
constexpr std::size_t kOracleMaxDraws = 64000000;

Eigen::VectorXd uniform_vector(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

Eigen::MatrixXd normal_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double mu,
                              double sigma) {
  std::normal_distribution<double> nd(mu, sigma);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = nd(rng);
  return m;
}

Eigen::MatrixXd truncated_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double mu,
                                 double sigma, double bound) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = sample_truncated_normal(rng, mu, sigma, -bound, bound);
  return m;
}

// Exactly n_treated of n_trial receive treatment, positions uniformly random.
std::vector<int> complete_randomization(std::mt19937_64& rng, std::size_t n_trial,
                                        std::size_t n_treated) {
  std::vector<int> a(n_trial, 0);
  std::fill(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n_treated), 1);
  std::shuffle(a.begin(), a.end(), rng);
  return a;
}

Eigen::VectorXd concurrency_times(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> t(0, 2);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = t(rng);
  return v;
}

void check_counts(const ScenarioParams& p) {
  if (p.n_trial == 0 || p.n_treated == 0 || p.n_treated >= p.n_trial || p.n_pool == 0 || p.d == 0) {
    throw Error(ErrorCode::InvalidArgument,
                "scenario counts must be positive with 0 < n_treated < n_trial", "ScenarioConfig");
  }
  if (!(p.sigma1 > 0.0) || !(p.sigma2 > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sigma1 and sigma2 must be positive", "ScenarioConfig");
  }
}

Eigen::VectorXd with_intercept(const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::VectorXd out(x.size() + 1);
  out[0] = 1.0;
  out.tail(x.size()) = x;
  return out;
}

}  // namespace

const char* to_string(Mechanism m) {
  switch (m) {
    case Mechanism::Linear: return "linear";
    case Mechanism::Nonlinear: return "nonlinear";
    case Mechanism::OneD: return "oneD";
  }
  return "unknown";
}

Mechanism parse_mechanism(const std::string& name) {
  if (name == "linear") return Mechanism::Linear;
  if (name == "nonlinear") return Mechanism::Nonlinear;
  if (name == "oneD" || name == "oned" || name == "1d") return Mechanism::OneD;
  throw Error(ErrorCode::InvalidArgument, "unknown scenario '" + name + "'", "scenario");
}

ScenarioParams ScenarioParams::defaults(Mechanism m) {
  ScenarioParams p;
  p.mechanism = m;
  switch (m) {
    case Mechanism::Linear:
      break;
    case Mechanism::Nonlinear:
      p.delta = 1.0;
      p.noise_trial = 1.0;
      p.noise_pool = 2.0;
      break;
    case Mechanism::OneD:
      p.d = 1;
      p.n_trial = 200;
      p.n_treated = 100;
      p.n_pool = 800;
      p.noise_trial = 0.2;
      p.noise_pool = 0.5;
      p.delta = 0.0;
      break;
  }
  return p;
}

ScenarioConfig ScenarioConfig::build(const ScenarioParams& params) {
  check_counts(params);
  ScenarioConfig cfg;
  cfg.params = params;
  std::mt19937_64 rng(params.seed);
  const auto d = static_cast<Eigen::Index>(params.d);
  cfg.beta = uniform_vector(rng, d, -1.0, 1.0);
  cfg.delta_beta = uniform_vector(rng, d, 0.8, 1.2);
  const double alpha_range = params.mechanism == Mechanism::Nonlinear ? 0.5 : 1.0;
  cfg.alpha = uniform_vector(rng, d + 1, -alpha_range, alpha_range);
  if (params.exchangeable_structure) cfg.delta_beta.setOnes();
  if (params.mechanism == Mechanism::OneD) {
    cfg.beta = Eigen::VectorXd::Constant(1, 2.0);
    cfg.delta_beta = Eigen::VectorXd::Constant(1, 1.25);
    cfg.alpha = Eigen::Vector2d(params.oned_effect, 0.0);
  }
  return cfg;
}

std::string ScenarioConfig::digest() const {
  // Shortest round-trip form: 0.3 prints as 0.3 yet still identifies the double.
  auto num = [](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  std::ostringstream os;
  os << to_string(params.mechanism) << ";d=" << params.d << ";n_trial=" << params.n_trial
     << ";n_treated=" << params.n_treated << ";n_pool=" << params.n_pool << ";mu1=" << num(params.mu1)
     << ";sigma1=" << num(params.sigma1) << ";mu2=" << num(params.mu2) << ";sigma2=" << num(params.sigma2)
     << ";delta=" << num(params.delta) << ";shift=" << num(params.pool_shift)
     << ";exchangeable=" << params.exchangeable_structure << ";seed=" << params.seed;
  return os.str();
}

double sample_truncated_normal(std::mt19937_64& rng, double mu, double sigma, double lo, double hi) {
  std::normal_distribution<double> nd(mu, sigma);
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    const double v = nd(rng);
    if (v >= lo && v <= hi) return v;
  }
  const boost::math::normal_distribution<double> law(mu, sigma);
  // Work in the tail nearer the interval so probabilities keep their precision.
  if (lo > mu) {
    const double qlo = boost::math::cdf(boost::math::complement(law, lo));
    const double qhi = boost::math::cdf(boost::math::complement(law, hi));
    std::uniform_real_distribution<double> u(qhi, qlo);
    return std::clamp(boost::math::quantile(boost::math::complement(law, u(rng))), lo, hi);
  }
  const double plo = boost::math::cdf(law, lo);
  const double phi = boost::math::cdf(law, hi);
  std::uniform_real_distribution<double> u(plo, phi);
  return std::clamp(boost::math::quantile(law, u(rng)), lo, hi);
}

SimData gen_linear(const ScenarioConfig& cfg, std::uint64_t data_seed) {
  const auto& p = cfg.params;
  if (p.mechanism != Mechanism::Linear) {
    throw Error(ErrorCode::InvalidArgument, "gen_linear needs the linear mechanism", "gen_linear");
  }
  std::mt19937_64 rng(data_seed);
  Eigen::MatrixXd xt = normal_matrix(rng, p.n_trial, p.d, p.mu1, p.sigma1);
  std::vector<int> a = complete_randomization(rng, p.n_trial, p.n_treated);
  std::normal_distribution<double> eps_t(0.0, p.noise_trial);
  Eigen::VectorXd yt(xt.rows());
  for (Eigen::Index i = 0; i < xt.rows(); ++i) {
    const Eigen::VectorXd x = xt.row(i).transpose();
    yt[i] = cfg.beta.dot(x) + a[static_cast<std::size_t>(i)] * cfg.alpha.dot(with_intercept(x)) + eps_t(rng);
  }

  Eigen::MatrixXd xe = normal_matrix(rng, p.n_pool, p.d, p.mu2, p.sigma2);
  const Eigen::VectorXd t = concurrency_times(rng, p.n_pool);
  std::normal_distribution<double> eps_e(0.0, p.noise_pool);
  const Eigen::VectorXd beta_ext = cfg.beta.cwiseProduct(cfg.delta_beta);
  Eigen::VectorXd ye = xe * beta_ext + p.delta * t;
  for (Eigen::Index j = 0; j < ye.size(); ++j) ye[j] += eps_e(rng) + p.pool_shift;

  return SimData{TrialDataset(std::move(xt), std::move(a), std::move(yt)),
                 ExternalPool(std::move(xe), std::move(ye)), {}};
}

SimData gen_nonlinear(const ScenarioConfig& cfg, std::uint64_t data_seed) {
  const auto& p = cfg.params;
  if (p.mechanism != Mechanism::Nonlinear) {
    throw Error(ErrorCode::InvalidArgument, "gen_nonlinear needs the nonlinear mechanism",
                "gen_nonlinear");
  }
  std::mt19937_64 rng(data_seed);
  Eigen::MatrixXd xt = truncated_matrix(rng, p.n_trial, p.d, p.mu1, p.sigma1, kTrialBound);
  std::vector<int> a = complete_randomization(rng, p.n_trial, p.n_treated);
  std::normal_distribution<double> eps_t(0.0, p.noise_trial);
  Eigen::VectorXd yt(xt.rows());
  for (Eigen::Index i = 0; i < xt.rows(); ++i) {
    const Eigen::VectorXd x = xt.row(i).transpose();
    const double index = cfg.beta.dot(x) + a[static_cast<std::size_t>(i)] * cfg.alpha.dot(with_intercept(x));
    yt[i] = p.amplitude * std::exp(index) + eps_t(rng);
  }

  Eigen::MatrixXd xe = truncated_matrix(rng, p.n_pool, p.d, p.mu2, p.sigma2, kPoolBound);
  const Eigen::VectorXd t = concurrency_times(rng, p.n_pool);
  std::normal_distribution<double> eps_e(0.0, p.noise_pool);
  const Eigen::VectorXd beta_ext = cfg.beta.cwiseProduct(cfg.delta_beta);
  Eigen::VectorXd ye(xe.rows());
  for (Eigen::Index j = 0; j < xe.rows(); ++j) {
    ye[j] = p.amplitude * std::exp(xe.row(j).dot(beta_ext)) + p.delta * t[j] + eps_e(rng) + p.pool_shift;
  }

  return SimData{TrialDataset(std::move(xt), std::move(a), std::move(yt)),
                 ExternalPool(std::move(xe), std::move(ye)), {}};
}

SimData gen_oned(const ScenarioConfig& cfg, std::uint64_t data_seed) {
  const auto& p = cfg.params;
  if (p.mechanism != Mechanism::OneD) {
    throw Error(ErrorCode::InvalidArgument, "gen_oned needs the oneD mechanism", "gen_oned");
  }
  if (p.oned_outliers > p.n_pool) {
    throw Error(ErrorCode::InvalidArgument, "more outliers than pool samples", "gen_oned");
  }
  std::mt19937_64 rng(data_seed);
  std::uniform_real_distribution<double> ux(0.0, 2.0);
  std::normal_distribution<double> eps_t(0.0, p.noise_trial);
  std::normal_distribution<double> eps_e(0.0, p.noise_pool);

  Eigen::MatrixXd xt(static_cast<Eigen::Index>(p.n_trial), 1);
  std::vector<int> a = complete_randomization(rng, p.n_trial, p.n_treated);
  Eigen::VectorXd yt(xt.rows());
  for (Eigen::Index i = 0; i < xt.rows(); ++i) {
    xt(i, 0) = ux(rng);
    yt[i] = 2.0 * xt(i, 0) + a[static_cast<std::size_t>(i)] * p.oned_effect + eps_t(rng);
  }

  const std::size_t regular = p.n_pool - p.oned_outliers;
  Eigen::MatrixXd xe(static_cast<Eigen::Index>(p.n_pool), 1);
  Eigen::VectorXd ye(xe.rows());
  std::vector<std::size_t> outliers;
  for (Eigen::Index j = 0; j < xe.rows(); ++j) {
    xe(j, 0) = ux(rng);
    const double e = eps_e(rng);
    ye[j] = -1.0 + 2.5 * xe(j, 0) + e + p.pool_shift;
    if (static_cast<std::size_t>(j) >= regular) {
      ye[j] += 6.0 * (e >= 0.0 ? 1.0 : -1.0);
      outliers.push_back(static_cast<std::size_t>(j));
    }
  }
  return SimData{TrialDataset(std::move(xt), std::move(a), std::move(yt)),
                 ExternalPool(std::move(xe), std::move(ye)), std::move(outliers)};
}

SimData generate(const ScenarioConfig& cfg, std::uint64_t data_seed) {
  switch (cfg.params.mechanism) {
    case Mechanism::Linear: return gen_linear(cfg, data_seed);
    case Mechanism::Nonlinear: return gen_nonlinear(cfg, data_seed);
    case Mechanism::OneD: return gen_oned(cfg, data_seed);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown mechanism", "generate");
}

TrueTau true_tau(const ScenarioConfig& cfg) {
  const auto& p = cfg.params;
  switch (p.mechanism) {
    case Mechanism::Linear: {
      const Eigen::VectorXd mean_x = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(p.d), p.mu1);
      return {cfg.alpha.dot(with_intercept(mean_x)), 0.0};
    }
    case Mechanism::OneD:
      return {p.oned_effect, 0.0};
    case Mechanism::Nonlinear:
      break;
  }
  // a * E[exp(beta'X + alpha'(1, X)) - exp(beta'X)] over the truncated trial law.
  std::mt19937_64 rng(p.seed ^ 0x9e3779b97f4a7c15ULL);
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t draws = 0;
  std::size_t target = kOracleDraws;
  Eigen::VectorXd x(static_cast<Eigen::Index>(p.d));
  while (true) {
    for (; draws < target; ++draws) {
      for (Eigen::Index k = 0; k < x.size(); ++k) {
        x[k] = sample_truncated_normal(rng, p.mu1, p.sigma1, -kTrialBound, kTrialBound);
      }
      const double base = cfg.beta.dot(x);
      const double v = p.amplitude * (std::exp(base + cfg.alpha.dot(with_intercept(x))) - std::exp(base));
      sum += v;
      sum_sq += v * v;
    }
    const double n = static_cast<double>(draws);
    const double mean = sum / n;
    const double se = std::sqrt(std::max(0.0, sum_sq / n - mean * mean) / (n - 1.0));
    if (se < 1e-3 * (std::abs(mean) + 1.0)) return {mean, se};
    if (target >= kOracleMaxDraws) {
      throw Error(ErrorCode::Numerical,
                  "true-tau oracle standard error " + std::to_string(se) + " too large after " +
                      std::to_string(draws) + " draws",
                  "true_tau");
    }
    target *= 2;
  }
}

}  // namespace borrowlab
