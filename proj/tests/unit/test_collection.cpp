#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "loadmix/collection.hpp"
#include "loadmix/errors.hpp"
#include "loadmix/synth.hpp"
#include "test_support.hpp"

#include <cmath>
#include <set>

using namespace loadmix;
using namespace loadmix::collection;
using mixture::Support;

namespace {

RegressionDataset fixture_data(int n, std::uint64_t seed) {
  synth::GeneratorSpec spec;
  spec.k = 2;
  spec.pi = {0.5, 0.5};
  Matrix b1 = Matrix::Zero(2, 4), b2 = Matrix::Zero(2, 4);
  b1(0, 0) = 2.0;
  b1(1, 1) = 1.0;
  b2(0, 2) = -2.0;
  b2(1, 0) = 1.5;
  spec.beta = {b1, b2};
  spec.sigma_diag = {Vector::Constant(2, 0.2), Vector::Constant(2, 0.3)};
  spec.n = n;
  spec.seed = seed;
  return synth::generate(spec).data;
}

CollectionOptions small_opts() {
  CollectionOptions o;
  o.k_set = {1, 2, 3};
  o.grid_size = 6;
  o.em.n_starts = 2;
  return o;
}

} // namespace

TEST_CASE("lambda grid: endpoints, constant log ratio, zero responses") {
  const auto d = fixture_data(60, 1);
  for (int k : {1, 3}) {
    const double lm = em::lambda_max(d, k);
    const auto two = lambda_grid(d, k, 2);
    REQUIRE(two.size() == 2);
    CHECK(two[0] == doctest::Approx(lm).epsilon(1e-14));
    CHECK(two[1] == doctest::Approx(lm * 1e-3).epsilon(1e-12));

    const auto g = lambda_grid(d, k, 20);
    REQUIRE(g.size() == 20);
    const double r = std::log(g[1] / g[0]);
    for (std::size_t i = 1; i < g.size(); ++i) {
      CHECK(g[i] < g[i - 1]);
      CHECK(std::log(g[i] / g[i - 1]) == doctest::Approx(r).epsilon(1e-10));
    }
  }
  auto zero = d;
  zero.y.setZero();
  std::vector<std::string> warnings;
  const auto g = lambda_grid(zero, 2, 10, 1e-3, em::PenaltyWeighting::plain, &warnings);
  CHECK(g == std::vector<double>{0.0});
  CHECK(warnings.size() == 1);
  CHECK_THROWS_AS(lambda_grid(d, 2, 1), ConfigError);
}

TEST_CASE("grid ends: empty support at the top, no smaller support at the bottom") {
  const auto d = fixture_data(80, 2);
  em::EmOptions eo;
  eo.n_starts = 1;
  const auto g = lambda_grid(d, 1, 5);
  const auto top = em::lasso_em_fit(d, 1, g.front(), eo);
  const auto bottom = em::lasso_em_fit(d, 1, g.back(), eo);
  CHECK(top.support.empty());
  CHECK(bottom.support.size() >= top.support.size());
  CHECK(bottom.support == Support::full(2, 4));
}

TEST_CASE("single zero lambda with one cluster gives the OLS model") {
  const auto d = fixture_data(50, 3);
  CollectionOptions o;
  o.k_set = {1};
  o.lambdas = std::vector<double>{0.0};
  o.em.n_starts = 1;
  const auto c = build_collection(d, o);
  REQUIRE(c.entries.size() == 1);
  const auto& e = c.entries[0];
  const Matrix b = d.x.colPivHouseholderQr().solve(d.y).transpose();
  CHECK((e.params.beta[0] - b).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(e.support == Support::full(2, 4));
  CHECK(e.dimension == 0 + 8 + 2);
}

TEST_CASE("collection invariants") {
  const auto d = fixture_data(90, 4);
  const auto opts = small_opts();
  const auto c = build_collection(d, opts);

  CHECK(c.entries.size() <= 3u * 6u);
  CHECK(c.k_set == opts.k_set);
  CHECK(c.n == 90);
  CHECK(c.q == 2);
  CHECK_FALSE(c.dataset_fingerprint.empty());

  std::set<std::pair<int, Support>> seen;
  for (std::size_t i = 0; i < c.entries.size(); ++i) {
    const auto& e = c.entries[i];
    CHECK(e.id == static_cast<int>(i));
    CHECK(seen.insert({e.k, e.support}).second);
    CHECK(e.dimension == mixture::model_dimension(e.k, e.support.size(), 2));
    CHECK(std::isfinite(e.loglik));
    CHECK(e.params.k() == e.k);
    CHECK(e.loglik == doctest::Approx(mixture::log_likelihood(e.params, d)).epsilon(1e-10));
    if (i > 0) {
      const auto& p = c.entries[i - 1];
      CHECK(std::tie(p.k, p.dimension) <= std::tie(e.k, e.dimension));
    }
  }

  // Distinct supports per K never exceed the grid points that produced them.
  for (int k : opts.k_set) {
    long count = 0;
    for (const auto& e : c.entries) count += e.requested_k == k;
    CHECK(count <= opts.grid_size);
  }

  for (const auto& a : c.entries)
    for (const auto& b : c.entries)
      if (a.k == b.k && a.support != b.support && a.support.is_subset_of(b.support))
        CHECK(b.loglik >= a.loglik - 1e-8);
}

TEST_CASE("rebuilding is deterministic and independent of the worker count") {
  const auto d = fixture_data(70, 5);
  auto opts = small_opts();
  const auto a = build_collection(d, opts);
  opts.jobs = 3;
  const auto b = build_collection(d, opts);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].k == b.entries[i].k);
    CHECK(a.entries[i].support == b.entries[i].support);
    CHECK(a.entries[i].loglik == b.entries[i].loglik);
    CHECK(a.entries[i].lambda_origin == b.entries[i].lambda_origin);
  }
  CHECK(a.warnings == b.warnings);
}

TEST_CASE("canonical order and renumbering") {
  ModelCollection c;
  auto entry = [](int k, std::vector<Support::Entry> s) {
    ModelEntry e;
    e.k = k;
    e.support = Support(std::move(s));
    e.dimension = mixture::model_dimension(k, e.support.size(), 2);
    e.id = 99;
    return e;
  };
  c.entries = {entry(2, {{0, 0}}), entry(1, {{1, 1}, {0, 1}}), entry(1, {{1, 0}}), entry(1, {{0, 1}})};
  canonicalise(c);
  CHECK(c.entries[0].support == Support({{0, 1}}));
  CHECK(c.entries[1].support == Support({{1, 0}}));
  CHECK(c.entries[2].support.size() == 2);
  CHECK(c.entries[3].k == 2);
  for (int i = 0; i < 4; ++i) CHECK(c.entries[static_cast<std::size_t>(i)].id == i);
  CHECK(c.by_id(2).support.size() == 2);
  CHECK_THROWS(c.by_id(7));
}

TEST_CASE("too few observations for the largest K") {
  const auto d = fixture_data(6, 6);
  CollectionOptions o;
  o.k_set = {1, 8};
  o.grid_size = 2;
  CHECK_THROWS_AS(build_collection(d, o), DataError);
  o.k_set = {};
  CHECK_THROWS_AS(build_collection(d, o), ConfigError);
}
