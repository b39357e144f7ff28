#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "borrowlab/error.hpp"
#include "borrowlab/estimators.hpp"
#include "borrowlab/simgen.hpp"
#include "support/oracles.hpp"

using namespace borrowlab;

namespace {

NuisanceConfig cfg_for(std::size_t d) {
  NuisanceConfig cfg;
  cfg.fm = FeatureMap::linear(d);
  return cfg;
}

SimData linear_data(std::uint64_t seed) {
  return generate(ScenarioConfig::build(ScenarioParams::defaults(Mechanism::Linear)), seed);
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("method names round trip") {
  for (auto m : {Method::Aipw, Method::Fused, Method::Full, Method::Lasso, Method::Influence}) {
    CHECK(parse_method(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_method("bogus"), Error);
}

TEST_CASE("sample variance uses the n - 1 divisor") {
  std::vector<double> v{1, 2, 3, 4};
  CHECK(sample_variance(v) == doctest::Approx(5.0 / 3.0));
  CHECK(sample_variance(std::vector<double>{2.0}) == 0.0);
}

TEST_CASE("AIPW on a constant outcome is zero") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(40, 2);
  std::vector<int> a(40);
  for (int i = 0; i < 40; ++i) {
    x(i, 0) = nd(rng);
    x(i, 1) = nd(rng);
    a[i] = i % 2;
  }
  TrialDataset trial(x, a, Eigen::VectorXd::Constant(40, 3.0));
  auto ns = fit_nuisances(trial, ExternalPool(), {}, cfg_for(2));
  CHECK(std::abs(tau_aipw(trial, ns).tau_hat) < 1e-10);
}

TEST_CASE("AIPW without covariates is the difference in means") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  const int n = 50;
  std::vector<int> a(n);
  Eigen::VectorXd y(n);
  double s1 = 0, s0 = 0;
  int n1 = 0;
  for (int i = 0; i < n; ++i) {
    a[i] = i < 20 ? 1 : 0;
    y[i] = nd(rng) + a[i];
    (a[i] ? s1 : s0) += y[i];
    n1 += a[i];
  }
  TrialDataset trial(Eigen::MatrixXd::Zero(n, 0), a, y);
  auto r = tau_aipw(trial, fit_nuisances(trial, ExternalPool(), {}, cfg_for(0)));
  CHECK(r.tau_hat == doctest::Approx(s1 / n1 - s0 / (n - n1)).epsilon(1e-12));
}

TEST_CASE("EIF values are centered and se follows from them") {
  auto sim = linear_data(3);
  auto cfg = cfg_for(8);
  auto ns0 = fit_nuisances(sim.trial, sim.pool, {}, cfg);
  auto aipw = tau_aipw(sim.trial, ns0);
  CHECK(std::abs(mean_of(aipw.eif_values)) < 1e-10);
  CHECK(aipw.n_used == 400);
  CHECK(aipw.se_hat == doctest::Approx(std::sqrt(sample_variance(aipw.eif_values) / 400.0)));

  std::vector<std::size_t> s{0, 10, 20, 30, 40, 55, 60};
  auto ns = fit_nuisances(sim.trial, sim.pool, s, cfg);
  auto fused = tau_fused(sim.trial, sim.pool, s, ns);
  CHECK(std::abs(mean_of(fused.eif_values)) < 1e-10);
  CHECK(fused.n_used == 407);
  CHECK(fused.k_borrowed == 7);
  CHECK(fused.method == Method::Fused);
}

TEST_CASE("fused estimator with nothing borrowed equals AIPW bitwise") {
  auto sim = linear_data(4);
  auto ns = fit_nuisances(sim.trial, sim.pool, {}, cfg_for(8));
  auto a = tau_aipw(sim.trial, ns);
  auto f = tau_fused(sim.trial, sim.pool, {}, ns);
  CHECK(a.tau_hat == f.tau_hat);
  CHECK(a.se_hat == f.se_hat);
  CHECK(a.eif_values == f.eif_values);
}

TEST_CASE("fused estimator rejects nuisances fitted on another set") {
  auto sim = linear_data(5);
  std::vector<std::size_t> s{1, 2, 3};
  auto ns = fit_nuisances(sim.trial, sim.pool, s, cfg_for(8));
  std::vector<std::size_t> other{1, 2};
  CHECK_THROWS_AS(tau_fused(sim.trial, sim.pool, other, ns), Error);
}

TEST_CASE("full borrowing on an empty pool equals AIPW") {
  auto sim = linear_data(6);
  ExternalPool empty(Eigen::MatrixXd::Zero(0, 8), Eigen::VectorXd::Zero(0));
  auto ns = fit_nuisances(sim.trial, empty, {}, cfg_for(8));
  auto full = tau_full(sim.trial, empty, ns);
  CHECK(full.tau_hat == tau_aipw(sim.trial, ns).tau_hat);
  CHECK(full.method == Method::Full);
}

TEST_CASE("bias vector is centered under a null shift") {
  auto p = ScenarioParams::defaults(Mechanism::Linear);
  p.delta = 0.0;
  p.mu2 = p.mu1;
  p.sigma2 = p.sigma1;
  p.noise_pool = p.noise_trial;
  p.exchangeable_structure = true;
  auto sc = ScenarioConfig::build(p);
  std::vector<double> means;
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    auto sim = generate(sc, seed);
    auto ns = fit_nuisances(sim.trial, sim.pool, {}, cfg_for(8));
    auto bv = estimate_bias_vector(sim.trial, sim.pool, ns);
    CHECK((bv.sigma2_hat.array() > 0.0).all());
    means.push_back(bv.b_hat.mean());
  }
  CHECK(std::abs(oracle::mean(means)) <= 3.0 * oracle::sd(means) / std::sqrt(double(means.size())));
}

TEST_CASE("bias vector follows the one-dimensional contrast") {
  auto sc = ScenarioConfig::build(ScenarioParams::defaults(Mechanism::OneD));
  auto sim = generate(sc, 7);
  auto ns = fit_nuisances(sim.trial, sim.pool, {}, cfg_for(1));
  auto bv = estimate_bias_vector(sim.trial, sim.pool, ns);
  // b(x) = (-1 + 2.5x) - 2x: regress b_hat on x.
  auto line = fit_ridge(sim.pool.x(), bv.b_hat, 0.0, FeatureMap::linear(1));
  CHECK(line.theta[0] == doctest::Approx(-1.0).epsilon(0.1));
  CHECK(line.theta[1] == doctest::Approx(0.5).epsilon(0.1));
  // Points near x = 2 have the smallest |b| and rank first.
  auto order = lasso_rank(bv);
  double mean_x = 0.0;
  for (std::size_t k = 0; k < 40; ++k) mean_x += sim.pool.x()(static_cast<Eigen::Index>(order[k]), 0);
  CHECK(mean_x / 40.0 > 1.8);
}

TEST_CASE("adaptive lasso limits") {
  BiasVector bv;
  bv.b_hat = Eigen::Vector4d(0.5, -1.0, 0.0, 2.0);
  bv.sigma2_hat = Eigen::Vector4d(1.0, 0.3, 1.0, 2.0);
  auto none = adaptive_lasso_threshold(bv, 0.0);
  CHECK(none.b_tilde == bv.b_hat);
  auto all = adaptive_lasso_threshold(bv, 1e300);
  CHECK(all.b_tilde == Eigen::Vector4d::Zero());
  CHECK(lasso_borrow_set(all) == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(lasso_borrow_set(none) == std::vector<std::size_t>{2});
  CHECK_THROWS_AS(adaptive_lasso_threshold(bv, -1.0), Error);
}

TEST_CASE("soft threshold matches one-dimensional minimization") {
  BiasVector bv;
  bv.b_hat = Eigen::VectorXd::Constant(1, 0.5);
  bv.sigma2_hat = Eigen::VectorXd::Constant(1, 1.0);
  CHECK(adaptive_lasso_threshold(bv, 0.3).b_tilde[0] == doctest::Approx(0.2).epsilon(1e-14));

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2.0, 2.0), pos(0.1, 2.0);
  for (int rep = 0; rep < 50; ++rep) {
    const double b = u(rng), s2 = pos(rng), lambda = pos(rng), nu = pos(rng);
    bv.b_hat[0] = b;
    bv.sigma2_hat[0] = s2;
    const double closed = adaptive_lasso_threshold(bv, lambda, nu).b_tilde[0];
    auto objective = [&](double t) {
      return (t - b) * (t - b) / s2 + lambda * std::abs(t) / std::pow(std::abs(b), nu);
    };
    const double numeric = oracle::golden_min(objective, -3.0, 3.0, 1e-12);
    CHECK(std::abs(closed - numeric) < 1e-6);
  }
}

TEST_CASE("lasso borrow set and rank") {
  BiasVector bv;
  bv.b_hat = Eigen::Vector4d(0.3, 0.3, 0.3, 0.3);
  bv.sigma2_hat = Eigen::Vector4d::Ones();
  bv.b_tilde = Eigen::Vector4d(0.0, 0.1, 0.0, -0.2);
  CHECK(lasso_borrow_set(bv) == std::vector<std::size_t>{0, 2});
  bv.b_tilde = Eigen::Vector4d::Ones();
  CHECK(lasso_borrow_set(bv).empty());
  CHECK(lasso_rank(bv) == std::vector<std::size_t>{0, 1, 2, 3});
  bv.b_hat[2] = 0.0;
  CHECK(lasso_rank(bv).front() == 2);
}
