#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "borrowlab/error.hpp"
#include "borrowlab/models.hpp"
#include "support/oracles.hpp"

using namespace borrowlab;

namespace {

Eigen::MatrixXd normal_matrix(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = nd(rng);
  return m;
}

// Mean squared-error loss over a sample set as a function of theta.
double mean_loss(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y, const Eigen::VectorXd& theta) {
  return (phi * theta - y).squaredNorm() / static_cast<double>(phi.rows());
}

}  // namespace

TEST_CASE("fit_ridge recovers an exact line") {
  Eigen::MatrixXd x(3, 1);
  x << 0, 1, 2;
  auto m = fit_ridge(x, Eigen::Vector3d(0, 2, 4), 0.0, FeatureMap::linear(1));
  CHECK(m.theta[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(m.theta[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.predict(Eigen::VectorXd::Constant(1, 3.0)) == doctest::Approx(6.0));
}

TEST_CASE("fit_ridge on a constant outcome") {
  std::mt19937_64 rng(3);
  Eigen::MatrixXd x = normal_matrix(rng, 40, 4);
  auto m = fit_ridge(x, Eigen::VectorXd::Constant(40, 2.5), 0.0, FeatureMap::linear(4));
  CHECK(m.theta[0] == doctest::Approx(2.5).epsilon(1e-10));
  CHECK(m.theta.tail(4).norm() < 1e-10);
}

TEST_CASE("fit_ridge normal-equation residual is tiny") {
  std::mt19937_64 rng(4);
  Eigen::MatrixXd x = normal_matrix(rng, 60, 5);
  Eigen::VectorXd y = normal_matrix(rng, 60, 1).col(0);
  const double lambda = 0.3;
  auto fm = FeatureMap::linear(5);
  auto m = fit_ridge(x, y, lambda, fm);
  Eigen::MatrixXd phi = fm.design(x);
  Eigen::MatrixXd a = phi.transpose() * phi;
  a.diagonal().tail(5).array() += lambda;
  const Eigen::VectorXd rhs = phi.transpose() * y;
  CHECK((a * m.theta - rhs).norm() <= 1e-8 * (1.0 + rhs.norm()));
}

TEST_CASE("fit_ridge slope on the one-dimensional mechanism") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(0.0, 2.0);
  std::normal_distribution<double> eps(0.0, 0.2);
  Eigen::MatrixXd x(200, 1);
  Eigen::VectorXd y(200);
  for (int i = 0; i < 200; ++i) {
    x(i, 0) = ux(rng);
    y[i] = 2.0 * x(i, 0) + eps(rng);
  }
  auto m = fit_ridge(x, y, 1e-4, FeatureMap::linear(1));
  // slope SE = sigma / (sqrt(n) * sd(x)), sd(U(0,2)) = 1/sqrt(3)
  const double se = 0.2 / (std::sqrt(200.0) / std::sqrt(3.0));
  CHECK(std::abs(m.theta[1] - 2.0) < 3.0 * se);
}

TEST_CASE("fit_ridge rejects a singular unpenalized system") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 2, 2, 4, 3, 6;
  CHECK_THROWS_AS(fit_ridge(x, Eigen::Vector3d(1, 2, 3), 0.0, FeatureMap::linear(2)), Error);
  CHECK_NOTHROW(fit_ridge(x, Eigen::Vector3d(1, 2, 3), 1e-3, FeatureMap::linear(2)));
}

TEST_CASE("weighted ridge with unit weights equals ridge") {
  std::mt19937_64 rng(5);
  Eigen::MatrixXd x = normal_matrix(rng, 30, 3);
  Eigen::VectorXd y = normal_matrix(rng, 30, 1).col(0);
  auto fm = FeatureMap::linear(3);
  auto a = fit_ridge(x, y, 0.1, fm);
  auto b = fit_weighted_ridge(x, y, Eigen::VectorXd::Ones(30), 0.1, fm);
  CHECK((a.theta - b.theta).norm() < 1e-12);
}

TEST_CASE("grad_loss hand cases") {
  RidgeModel m{Eigen::Vector2d::Zero(), 0.0, FeatureMap::linear(1)};
  Sample z{Eigen::VectorXd::Constant(1, 1.0), 0, 1.0, 0};
  CHECK(grad_loss(m, z) == Eigen::Vector2d(-2, -2));
  m.theta = Eigen::Vector2d(0.5, 1.5);
  z.y = 2.0;
  CHECK(grad_loss(m, z).norm() == 0.0);
}

TEST_CASE("grad_loss matches finite differences") {
  std::mt19937_64 rng(6);
  auto fm = FeatureMap::polynomial(3, 2);
  for (int rep = 0; rep < 5; ++rep) {
    RidgeModel m{normal_matrix(rng, 7, 1).col(0), 0.0, fm};
    Sample z{normal_matrix(rng, 3, 1).col(0), 0, normal_matrix(rng, 1, 1)(0, 0), 0};
    auto f = [&](const Eigen::VectorXd& th) {
      RidgeModel mm = m;
      mm.theta = th;
      return mm.loss(z);
    };
    CHECK(oracle::rel_err(grad_loss(m, z), oracle::fd_gradient(f, m.theta)) < 1e-6);
  }
}

TEST_CASE("hessian hand case with damping") {
  RidgeModel m{Eigen::Vector2d::Zero(), 0.0, FeatureMap::linear(1)};
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 1);
  auto h = hessian(m, x, 0.01);
  Eigen::Matrix2d expect;
  expect << 2.01, 0, 0, 0.01;
  CHECK((h.matrix() - expect).norm() < 1e-15);
}

TEST_CASE("hessian solve inverts") {
  std::mt19937_64 rng(7);
  Eigen::MatrixXd x = normal_matrix(rng, 50, 8);
  RidgeModel m{Eigen::VectorXd::Zero(9), 0.0, FeatureMap::linear(8)};
  auto h = hessian(m, x);
  CHECK(h.damping() == 0.0);
  Eigen::VectorXd v = normal_matrix(rng, 9, 1).col(0);
  CHECK((h.solve(h.matrix() * v) - v).norm() < 1e-8);
  CHECK(h.condition() >= 1.0);
}

TEST_CASE("hessian matches the finite-difference Hessian of the mean loss") {
  std::mt19937_64 rng(8);
  Eigen::MatrixXd x = normal_matrix(rng, 40, 8);
  Eigen::VectorXd y = normal_matrix(rng, 40, 1).col(0);
  auto fm = FeatureMap::linear(8);
  auto m = fit_ridge(x, y, 1e-4, fm);
  const Eigen::MatrixXd phi = fm.design(x);
  auto grad = [&](const Eigen::VectorXd& th) {
    return oracle::fd_gradient([&](const Eigen::VectorXd& t) { return mean_loss(phi, y, t); }, th);
  };
  // The loss is quadratic, so differencing the analytic mean gradient is exact up to round-off.
  auto analytic_grad = [&](const Eigen::VectorXd& th) {
    return Eigen::VectorXd((2.0 / 40.0) * phi.transpose() * (phi * th - y));
  };
  CHECK(oracle::rel_err(analytic_grad(m.theta), grad(m.theta)) < 1e-6);
  const Eigen::MatrixXd fd = oracle::fd_jacobian(analytic_grad, m.theta);
  const auto h = hessian(m, x);
  CHECK(oracle::rel_err(h.matrix(), fd) < 1e-6);
}

TEST_CASE("hessian auto-damps a singular matrix") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(5, 2);
  RidgeModel m{Eigen::VectorXd::Zero(3), 0.0, FeatureMap::linear(2)};
  auto h = hessian(m, x);
  CHECK(h.damping() > 0.0);
}

TEST_CASE("logistic on uninformative labels") {
  std::mt19937_64 rng(9);
  Eigen::MatrixXd x = normal_matrix(rng, 1000, 2);
  std::vector<int> labels(1000);
  for (int i = 0; i < 1000; ++i) labels[i] = i % 2;
  std::shuffle(labels.begin(), labels.end(), rng);
  auto m = fit_logistic(x, labels, FeatureMap::linear(2));
  CHECK(m.converged);
  const double p0 = predict_prob(m, Eigen::Vector2d::Zero());
  CHECK(std::abs(p0 - 0.5) < 3.0 * 0.5 / std::sqrt(1000.0));
  CHECK(m.beta.tail(2).cwiseAbs().maxCoeff() < 0.15);
}

TEST_CASE("logistic on separable data stays finite and clipped") {
  Eigen::MatrixXd x(10, 1);
  std::vector<int> labels(10);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = i - 4.5;
    labels[i] = i >= 5 ? 1 : 0;
  }
  auto m = fit_logistic(x, labels, FeatureMap::linear(1));
  CHECK(m.beta.allFinite());
  const double p = predict_prob(m, Eigen::VectorXd::Constant(1, 100.0));
  CHECK(p <= 1.0 - kProbabilityClip);
  CHECK(p > 0.0);
  CHECK(predict_prob(m, Eigen::VectorXd::Constant(1, -100.0)) >= kProbabilityClip);
}

TEST_CASE("logistic recovers generative coefficients") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u;
  const int n = 5000;
  Eigen::MatrixXd x(n, 1);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = nd(rng);
    labels[i] = u(rng) < 1.0 / (1.0 + std::exp(-(1.0 + 2.0 * x(i, 0)))) ? 1 : 0;
  }
  auto fm = FeatureMap::linear(1);
  auto m = fit_logistic(x, labels, fm);
  REQUIRE(m.converged);
  // Standard errors from the inverse Fisher information at the estimate.
  const Eigen::MatrixXd phi = fm.design(x);
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(2, 2);
  for (int i = 0; i < n; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-phi.row(i).dot(m.beta)));
    info += p * (1 - p) * phi.row(i).transpose() * phi.row(i);
  }
  const Eigen::Vector2d se = info.inverse().diagonal().cwiseSqrt();
  CHECK(std::abs(m.beta[0] - 1.0) < 3.0 * se[0]);
  CHECK(std::abs(m.beta[1] - 2.0) < 3.0 * se[1]);
}

TEST_CASE("logistic rejects degenerate labels") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 1);
  std::vector<int> same(4, 1);
  CHECK_THROWS_AS(fit_logistic(x, same, FeatureMap::linear(1)), Error);
}

TEST_CASE("predict_prob hand cases") {
  LogisticModel m;
  m.fm = FeatureMap::linear(1);
  m.beta = Eigen::Vector2d::Zero();
  CHECK(predict_prob(m, Eigen::VectorXd::Constant(1, 3.0)) == 0.5);
  m.beta = Eigen::Vector2d(0, 1);
  CHECK(predict_prob(m, Eigen::VectorXd::Zero(1)) == 0.5);
  m.beta = Eigen::Vector2d(1e3, 0);
  CHECK(predict_prob(m, Eigen::VectorXd::Zero(1)) == 1.0 - kProbabilityClip);
}
