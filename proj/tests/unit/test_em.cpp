#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "loadmix/em.hpp"
#include "loadmix/errors.hpp"
#include "loadmix/synth.hpp"
#include "test_support.hpp"

#include <cmath>
#include <numbers>

using namespace loadmix;
using namespace loadmix::em;
using mixture::Support;

namespace {

RegressionDataset linear_data(int n, const Matrix& beta, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto d = testsupport::random_dataset(n, static_cast<int>(beta.cols()), static_cast<int>(beta.rows()), rng);
  d.y = d.x * beta.transpose() + noise * d.y;
  return d;
}

Matrix ols(const RegressionDataset& d) {
  return d.x.colPivHouseholderQr().solve(d.y).transpose();
}

EmOptions quick(int starts = 3) {
  EmOptions o;
  o.n_starts = starts;
  o.max_iter = 500;
  o.tol = 1e-10;
  return o;
}

RegressionDataset two_regime(int n, std::uint64_t seed) {
  synth::GeneratorSpec spec;
  spec.k = 2;
  spec.pi = {0.4, 0.6};
  Matrix b1 = Matrix::Zero(2, 3), b2 = Matrix::Zero(2, 3);
  b1(0, 0) = 3.0;
  b1(1, 2) = -2.0;
  b2(0, 1) = -3.0;
  b2(1, 0) = 2.5;
  spec.beta = {b1, b2};
  spec.sigma_diag = {Vector::Constant(2, 0.1), Vector::Constant(2, 0.2)};
  spec.n = n;
  spec.seed = seed;
  return synth::generate(spec).data;
}

} // namespace

TEST_CASE("lambda = 0 with one cluster is ordinary least squares") {
  Matrix beta(2, 3);
  beta << 1.0, -2.0, 0.5, 0.0, 3.0, -1.0;
  const auto d = linear_data(60, beta, 0.3, 11);
  const auto fit = lasso_em_fit(d, 1, 0.0, quick(1));
  const Matrix b = ols(d);
  CHECK((fit.params.beta[0] - b).cwiseAbs().maxCoeff() < 1e-6);
  const Matrix r = d.y - d.x * b.transpose();
  for (Eigen::Index l = 0; l < 2; ++l)
    CHECK(fit.params.sigma_diag[0](l) == doctest::Approx(r.col(l).squaredNorm() / 60.0).epsilon(1e-6));
  CHECK(fit.support == Support::full(2, 3));
}

TEST_CASE("at or above lambda_max the support is empty") {
  const auto d = two_regime(120, 3);
  for (int k : {1, 2, 3}) {
    const double lm = lambda_max(d, k);
    const Matrix uniform = Matrix::Constant(d.n(), k, 1.0 / k);
    for (double factor : {1.0, 1.01, 5.0}) {
      // The bound is stated for the uniform start; with one cluster that is
      // the only start there is.
      const auto fit = k == 1 ? lasso_em_fit(d, k, factor * lm, quick(1))
                              : lasso_em_from(d, uniform, factor * lm, quick(1));
      CHECK(fit.support.empty());
      for (const auto& b : fit.params.beta) CHECK(b.isZero(0.0));
    }
    const auto inside = k == 1 ? lasso_em_fit(d, k, 0.5 * lm, quick(1))
                               : lasso_em_from(d, uniform, 0.5 * lm, quick(1));
    CHECK_FALSE(inside.support.empty());
  }
}

TEST_CASE("lambda_max: zero responses, homogeneity, invariance to x scale") {
  auto d = two_regime(80, 4);
  RegressionDataset zero = d;
  zero.y.setZero();
  CHECK(lambda_max(zero, 2) == 0.0);

  const double base = lambda_max(d, 2);
  RegressionDataset ys = d;
  ys.y *= 4.0;
  CHECK(lambda_max(ys, 2) == doctest::Approx(base / 4.0).epsilon(1e-12));
  RegressionDataset xs = d;
  xs.x *= 7.0;
  CHECK(lambda_max(xs, 2) == doctest::Approx(base).epsilon(1e-12));
  CHECK(lambda_max(d, 2, PenaltyWeighting::weighted) == doctest::Approx(2.0 * base).epsilon(1e-12));
}

TEST_CASE("one cluster, one response, two regressors: matches a brute-force grid") {
  Matrix beta(1, 2);
  beta << 1.5, -0.4;
  auto d = linear_data(40, beta, 0.8, 21);
  d.x.col(1) = 0.6 * d.x.col(0) + 0.8 * d.x.col(1);  // correlated columns
  const Vector scale = column_scale(d.x);
  const double lm = lambda_max(d, 1);

  // Profile out sigma^2: the objective in beta alone is
  // -0.5 log(2 pi RSS / n) - 0.5 - lambda sum |beta_j| s_j.
  auto profiled = [&](double b0, double b1, double lambda) {
    Vector b(2);
    b << b0, b1;
    const double rss = (d.y.col(0) - d.x * b).squaredNorm();
    return -0.5 * std::log(2.0 * std::numbers::pi * rss / 40.0) - 0.5 -
           lambda * (std::abs(b0) * scale(0) + std::abs(b1) * scale(1));
  };

  for (double frac : {0.0, 0.05, 0.2, 0.5, 0.9}) {
    const double lambda = frac * lm;
    double best = -1e300, c0 = 0.0, c1 = 0.0;
    double width = 4.0;
    for (int round = 0; round < 6; ++round) {
      const double lo0 = c0 - width, lo1 = c1 - width;
      const double step = 2.0 * width / 200.0;
      double nb0 = c0, nb1 = c1;
      for (int a = 0; a <= 200; ++a)
        for (int b = 0; b <= 200; ++b) {
          const double v = profiled(lo0 + a * step, lo1 + b * step, lambda);
          if (v > best) {
            best = v;
            nb0 = lo0 + a * step;
            nb1 = lo1 + b * step;
          }
        }
      // Keep exact zeros on the grid: the lasso optimum often sits there.
      for (double z0 : {0.0, nb0})
        for (double z1 : {0.0, nb1}) {
          const double v = profiled(z0, z1, lambda);
          if (v > best) {
            best = v;
            nb0 = z0;
            nb1 = z1;
          }
        }
      c0 = nb0;
      c1 = nb1;
      width = step * 4.0;
    }
    const auto fit = lasso_em_fit(d, 1, lambda, quick(1));
    const double got = profiled(fit.params.beta[0](0, 0), fit.params.beta[0](0, 1), lambda);
    CAPTURE(frac);
    CHECK(got >= best - 1e-4);
    CHECK(std::abs(got - best) <= 1e-4);
    CHECK(fit.objective() == doctest::Approx(got).epsilon(1e-7));
  }
}

TEST_CASE("penalised objective trace is non-decreasing and KKT holds at convergence") {
  const auto d = two_regime(150, 5);
  const double lm = lambda_max(d, 2);
  for (double frac : {0.01, 0.1, 0.3}) {
    const auto fit = lasso_em_fit(d, 2, frac * lm, quick(3));
    for (std::size_t t = 1; t < fit.objective_trace.size(); ++t)
      CHECK(fit.objective_trace[t] >= fit.objective_trace[t - 1] - 1e-8);
    CHECK(fit.converged);
    CHECK(lasso_kkt_residual(d, fit.mstep_tau, fit.params, frac * lm) <= 1e-6);
    CHECK(fit.support == Support::from_nonzero(fit.params.beta));
    const Vector scale = column_scale(d.x);
    CHECK(penalized_objective(fit.params, d, frac * lm, scale) == doctest::Approx(fit.objective()).epsilon(1e-9));
  }
}

TEST_CASE("the best penalised objective does not increase with lambda") {
  const auto d = two_regime(120, 6);
  const double lm = lambda_max(d, 2);
  double prev = 1e300;
  for (double frac : {0.0, 0.02, 0.1, 0.4, 1.0}) {
    const double obj = lasso_em_fit(d, 2, frac * lm, quick(5)).objective();
    CHECK(obj <= prev + 1e-6);
    prev = obj;
  }
}

TEST_CASE("relabelled starts give relabelled fits") {
  const auto d = two_regime(100, 7);
  const auto opts = quick(1);
  const auto starts = initial_responsibilities(d, 3, quick(2));
  const Matrix& tau = starts[1];
  Matrix swapped(tau.rows(), 3);
  swapped.col(0) = tau.col(2);
  swapped.col(1) = tau.col(0);
  swapped.col(2) = tau.col(1);
  const double lambda = 0.05 * lambda_max(d, 3);
  const auto a = lasso_em_from(d, tau, lambda, opts);
  const auto b = lasso_em_from(d, swapped, lambda, opts);
  CHECK(a.objective() == doctest::Approx(b.objective()).epsilon(1e-10));
  REQUIRE(a.params.k() == b.params.k());
  if (a.params.k() == 3) {
    CHECK(a.params.pi[2] == doctest::Approx(b.params.pi[0]).epsilon(1e-8));
    CHECK((a.params.beta[0] - b.params.beta[1]).cwiseAbs().maxCoeff() < 1e-8);
  }

  const Support full = Support::full(2, 3);
  const auto ra = refit_em_from(d, tau, full, opts);
  const auto rb = refit_em_from(d, swapped, full, opts);
  CHECK(ra.loglik == doctest::Approx(rb.loglik).epsilon(1e-10));
}

TEST_CASE("refit on the full support with one cluster is OLS") {
  Matrix beta(3, 2);
  beta << 1.0, 0.0, -1.0, 2.0, 0.5, 0.5;
  const auto d = linear_data(50, beta, 0.5, 31);
  const auto r = refit_mle(d, 1, Support::full(3, 2), quick(1));
  const Matrix b = ols(d);
  CHECK((r.params.beta[0] - b).cwiseAbs().maxCoeff() < 1e-9);
  const Matrix res = d.y - d.x * b.transpose();
  for (Eigen::Index l = 0; l < 3; ++l)
    CHECK(r.params.sigma_diag[0](l) == doctest::Approx(res.col(l).squaredNorm() / 50.0).epsilon(1e-9));
  CHECK(r.loglik == doctest::Approx(mixture::log_likelihood(r.params, d)).epsilon(1e-12));
}

TEST_CASE("refit on the empty support keeps raw second moments") {
  Matrix beta(2, 2);
  beta << 1.0, 0.0, 0.0, 1.0;
  const auto d = linear_data(30, beta, 1.0, 41);
  const auto r = refit_mle(d, 1, Support{}, quick(1));
  CHECK(r.params.beta[0].isZero(0.0));
  for (Eigen::Index l = 0; l < 2; ++l)
    CHECK(r.params.sigma_diag[0](l) == doctest::Approx(d.y.col(l).squaredNorm() / 30.0).epsilon(1e-12));
}

TEST_CASE("refit pins entries outside the support and removes shrinkage") {
  const auto d = two_regime(200, 8);
  const double lambda = 0.2 * lambda_max(d, 2);
  const auto fit = lasso_em_fit(d, 2, lambda, quick(5));
  const auto r = refit_mle(d, 2, fit.support, quick(3), &fit.params);
  for (const auto& b : r.params.beta)
    for (Eigen::Index l = 0; l < b.rows(); ++l)
      for (Eigen::Index j = 0; j < b.cols(); ++j)
        if (!fit.support.contains(static_cast<int>(l), static_cast<int>(j))) CHECK(b(l, j) == 0.0);
  CHECK(r.loglik >= mixture::log_likelihood(fit.params, d) - 1e-12);
  for (std::size_t t = 1; t < r.trace.size(); ++t) CHECK(r.trace[t] >= r.trace[t - 1] - 1e-8);
}

TEST_CASE("recovers a well separated two-regime mixture") {
  const auto d = two_regime(300, 9);
  const auto r = refit_mle(d, 2, Support::full(2, 3), quick(5));
  REQUIRE(r.params.k() == 2);
  const int big = r.params.pi[0] > r.params.pi[1] ? 0 : 1;
  CHECK(r.params.pi[static_cast<std::size_t>(big)] == doctest::Approx(0.6).epsilon(0.1));
  CHECK(r.params.beta[static_cast<std::size_t>(big)](0, 1) == doctest::Approx(-3.0).epsilon(0.05));
}

TEST_CASE("errors and option validation") {
  const auto d = two_regime(5, 10);
  CHECK_THROWS_AS(lasso_em_fit(d, 6, 0.0, quick(1)), DataError);
  CHECK_THROWS_AS(refit_mle(d, 6, Support{}, quick(1)), DataError);
  CHECK_THROWS_AS(lasso_em_fit(d, 1, -1.0, quick(1)), ConfigError);
  EmOptions bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = EmOptions{};
  bad.n_starts = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("fits are deterministic in the seed") {
  const auto d = two_regime(100, 12);
  const auto a = lasso_em_fit(d, 3, 0.05 * lambda_max(d, 3), quick(3));
  const auto b = lasso_em_fit(d, 3, 0.05 * lambda_max(d, 3), quick(3));
  CHECK(a.objective_trace == b.objective_trace);
  CHECK(a.support == b.support);
}
