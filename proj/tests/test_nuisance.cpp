#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "borrowlab/error.hpp"
#include "borrowlab/nuisance.hpp"
#include "borrowlab/simgen.hpp"

using namespace borrowlab;

namespace {

SimData linear_data(std::uint64_t seed, bool exchangeable = false) {
  auto p = ScenarioParams::defaults(Mechanism::Linear);
  if (exchangeable) {
    p.delta = 0.0;
    p.mu2 = p.mu1;
    p.sigma2 = p.sigma1;
    p.noise_pool = p.noise_trial;
    p.exchangeable_structure = true;
  }
  return generate(ScenarioConfig::build(p), seed);
}

NuisanceConfig linear_cfg() {
  NuisanceConfig cfg;
  cfg.fm = FeatureMap::linear(8);
  return cfg;
}

}  // namespace

TEST_CASE("empty borrowed set collapses to the trial fits") {
  auto sim = linear_data(1);
  auto ns = fit_nuisances(sim.trial, sim.pool, {}, linear_cfg());
  CHECK(ns.pi.is_constant());
  CHECK(ns.q_hat == 1.0);
  CHECK(ns.n_borrowed == 0);
  CHECK(ns.m0.theta == ns.mu0.theta);
  for (Eigen::Index i = 0; i < 10; ++i) {
    const Eigen::VectorXd x = sim.trial.x().row(i).transpose();
    CHECK(ns.pi(x) == 1.0);
    CHECK(e_s(ns, x) == ns.e1(x));
  }
}

TEST_CASE("randomized trial propensity is the treated fraction") {
  auto sim = linear_data(2);
  auto ns = fit_nuisances(sim.trial, sim.pool, {}, linear_cfg());
  CHECK(ns.e1.is_constant());
  CHECK(ns.e1(Eigen::VectorXd::Zero(8)) == 0.75);
  CHECK(e_s(ns, Eigen::VectorXd::Zero(8)) == 0.75);
  CHECK(&ns.m1() == &ns.mu1);
}

TEST_CASE("fitted propensity when assignment is not declared randomized") {
  auto sim = linear_data(3);
  auto cfg = linear_cfg();
  cfg.randomized = false;
  auto ns = fit_nuisances(sim.trial, sim.pool, {}, cfg);
  REQUIRE(ns.e1.logistic() != nullptr);
  double mean = 0.0;
  for (Eigen::Index i = 0; i < sim.trial.x().rows(); ++i) mean += ns.e1(sim.trial.x().row(i).transpose());
  CHECK(mean / 400.0 == doctest::Approx(0.75).epsilon(0.01));
}

TEST_CASE("sampling score averages near q_hat under exchangeable covariates") {
  std::vector<double> gaps;
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    auto sim = linear_data(seed, true);
    std::vector<std::size_t> all(sim.pool.size());
    std::iota(all.begin(), all.end(), 0);
    auto ns = fit_nuisances(sim.trial, sim.pool, all, linear_cfg());
    auto combined = combine(sim.trial, sim.pool, all);
    double mean = 0.0;
    for (Eigen::Index i = 0; i < combined.x.rows(); ++i) mean += ns.pi(combined.x.row(i).transpose());
    gaps.push_back(mean / static_cast<double>(combined.size()) - ns.q_hat);
  }
  const double m = std::accumulate(gaps.begin(), gaps.end(), 0.0) / gaps.size();
  double ss = 0.0;
  for (double g : gaps) ss += (g - m) * (g - m);
  const double se = std::sqrt(ss / (gaps.size() - 1) / gaps.size());
  CHECK(std::abs(m) <= 3.0 * se + 1e-6);
}

TEST_CASE("borrowed order does not matter") {
  auto sim = linear_data(4);
  std::vector<std::size_t> a{5, 1, 90, 33}, b{1, 5, 33, 90};
  auto na = fit_nuisances(sim.trial, sim.pool, a, linear_cfg());
  auto nb = fit_nuisances(sim.trial, sim.pool, b, linear_cfg());
  CHECK(na.m0.theta == nb.m0.theta);
  CHECK(na.pi.logistic()->beta == nb.pi.logistic()->beta);
  CHECK(na.q_hat == doctest::Approx(400.0 / 404.0));
}

TEST_CASE("e_s products and clipping") {
  NuisanceSet ns;
  ns.e1 = ScoreModel(0.5);
  ns.pi = ScoreModel(0.5);
  CHECK(e_s(ns, Eigen::VectorXd::Zero(1)) == 0.25);
  ns.pi = ScoreModel(1e-6);
  auto c = e_s_checked(ns, Eigen::VectorXd::Zero(1));
  CHECK(c.clipped);
  CHECK(c.value == kProbabilityClip);
  ns.e1 = ScoreModel(0.75);
  ns.pi = ScoreModel(1.0);
  CHECK_FALSE(e_s_checked(ns, Eigen::VectorXd::Zero(1)).clipped);
}

TEST_CASE("fit_base shares fits with fit_nuisances") {
  auto sim = linear_data(5);
  auto cfg = linear_cfg();
  auto base = fit_base(sim.trial, sim.pool, cfg);
  REQUIRE(base.mu0_ext.has_value());
  std::vector<std::size_t> s{3, 4};
  auto a = fit_nuisances(sim.trial, sim.pool, s, base, cfg);
  auto b = fit_nuisances(sim.trial, sim.pool, s, cfg);
  CHECK(a.m0.theta == b.m0.theta);
  CHECK(a.mu1.theta == b.mu1.theta);
}

TEST_CASE("cross-fitting is off by default and rejected when requested") {
  auto sim = linear_data(6);
  auto cfg = linear_cfg();
  CHECK_FALSE(cfg.cross_fit);
  cfg.cross_fit = true;
  CHECK_THROWS_AS(fit_base(sim.trial, sim.pool, cfg), Error);
}
