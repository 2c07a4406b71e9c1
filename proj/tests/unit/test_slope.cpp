#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "loadmix/errors.hpp"
#include "loadmix/slope.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace loadmix;
using namespace loadmix::slope;

namespace {

// Plain enumeration: scan every model, keep the strictly better one under
// (criterion, dimension, K, index).
std::size_t brute_argmin(const std::vector<Candidate>& m, double kappa, long n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < m.size(); ++i) {
    const double ci = -m[i].loglik + 2.0 * kappa * static_cast<double>(m[i].dimension) / static_cast<double>(n);
    const double cb = -m[best].loglik + 2.0 * kappa * static_cast<double>(m[best].dimension) / static_cast<double>(n);
    if (ci < cb || (ci == cb && (m[i].dimension < m[best].dimension ||
                                 (m[i].dimension == m[best].dimension && m[i].k < m[best].k))))
      best = i;
  }
  return best;
}

// A concave-ish likelihood curve in D with noise, like a real collection.
std::vector<Candidate> random_collection(std::mt19937_64& rng, int size) {
  std::uniform_int_distribution<long> dim(5, 400);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<Candidate> out;
  for (int i = 0; i < size; ++i) {
    Candidate c;
    c.dimension = dim(rng);
    c.k = 1 + static_cast<int>(c.dimension % 8);
    c.loglik = -5.0 + 2.0 * std::log(static_cast<double>(c.dimension)) / 6.0 + noise(rng);
    out.push_back(c);
  }
  return out;
}

} // namespace

TEST_CASE("two models: the jump sits at the analytic crossover") {
  const long n = 500;
  const std::vector<Candidate> m{{-3.0, 10, 1}, {-2.2, 100, 2}};
  const double kstar = n * (m[1].loglik - m[0].loglik) / (2.0 * (100 - 10));
  const auto dj = dimension_jump(m, n, 1000);
  REQUIRE(dj.table.size() == 1000);
  CHECK(dj.jump == 90.0);
  // kappa_hat is the first grid point at or past the crossover.
  std::size_t i = 0;
  while (dj.table[i].kappa != dj.kappa_hat) ++i;
  REQUIRE(i > 0);
  CHECK(dj.kappa_hat >= kstar);
  CHECK(dj.table[i - 1].kappa < kstar);
  CHECK(dj.kappa_hat / kstar < dj.table[i].kappa / dj.table[i - 1].kappa + 1e-12);

  const auto breaks = envelope_breakpoints(m, n);
  REQUIRE(breaks.size() == 1);
  CHECK(breaks[0] == doctest::Approx(kstar).epsilon(1e-12));
}

TEST_CASE("zero and huge penalties") {
  std::mt19937_64 rng(1);
  const auto m = random_collection(rng, 30);
  const std::size_t at_zero = argmin_criterion(m, 0.0, 200);
  for (const auto& c : m) CHECK(m[at_zero].loglik >= c.loglik);
  const std::size_t at_inf = argmin_criterion(m, 1e12, 200);
  for (const auto& c : m) CHECK(m[at_inf].dimension <= c.dimension);
}

TEST_CASE("grid scan equals exhaustive enumeration and D(kappa) never increases") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = random_collection(rng, 2 + trial % 49);
    const long n = 100 + 37 * trial;
    DimensionJump dj;
    try {
      dj = dimension_jump(m, n, 2000);
    } catch (const DataError&) {
      continue;  // every model tied in dimension
    }
    long biggest = 0;
    double at = 0.0;
    for (std::size_t g = 0; g < dj.table.size(); ++g) {
      const auto& pt = dj.table[g];
      CHECK(pt.model == brute_argmin(m, pt.kappa, n));
      CHECK(pt.dimension == m[pt.model].dimension);
      if (g > 0) {
        CHECK(pt.kappa > dj.table[g - 1].kappa);
        CHECK(pt.dimension <= dj.table[g - 1].dimension);
        if (dj.table[g - 1].dimension - pt.dimension > biggest) {
          biggest = dj.table[g - 1].dimension - pt.dimension;
          at = pt.kappa;
        }
      }
    }
    CHECK(dj.kappa_hat == at);
    CHECK(dj.jump == static_cast<double>(biggest));
    // The grid covers both extremes of the step function.
    CHECK(dj.table.front().model == brute_argmin(m, 1e-300, n));
    CHECK(dj.table.back().model == brute_argmin(m, 1e300, n));
  }
}

TEST_CASE("equal jumps: the smallest kappa wins") {
  // D = 300, 200, 100 with equally spaced breakpoints give two drops of 100.
  const long n = 100;
  const std::vector<Candidate> m{{0.0, 300, 3}, {-1.0, 200, 2}, {-3.0, 100, 1}};
  const auto dj = dimension_jump(m, n, 1000);
  CHECK(dj.jump == 100.0);
  const auto breaks = envelope_breakpoints(m, n);
  REQUIRE(breaks.size() == 2);
  CHECK(dj.kappa_hat >= breaks[0]);
  CHECK(dj.kappa_hat < breaks[1]);
}

TEST_CASE("selection criterion, shortlist and ties") {
  const long n = 50;
  const std::vector<Candidate> m{{-1.0, 10, 1}, {-0.5, 20, 2}, {-0.5, 20, 1}, {-0.9, 12, 1}, {-2.0, 4, 1}};
  const auto one = select_models(m, n, 0.3, 1);
  REQUIRE(one.shortlist.size() == 1);
  CHECK(one.shortlist[0].model == one.selected);

  const auto all = select_models(m, n, 0.3, 10);
  REQUIRE(all.shortlist.size() == m.size());
  for (std::size_t i = 1; i < all.shortlist.size(); ++i)
    CHECK(all.shortlist[i].criterion >= all.shortlist[i - 1].criterion);
  for (const auto& item : all.shortlist)
    CHECK(item.criterion == doctest::Approx(criterion(m[item.model], 0.3, n)).epsilon(1e-15));
  // Entries 1 and 2 tie in criterion and D; the smaller K is ranked first.
  const auto pos = [&](std::size_t idx) {
    return std::find_if(all.shortlist.begin(), all.shortlist.end(),
                        [&](const ShortlistItem& s) { return s.model == idx; }) -
           all.shortlist.begin();
  };
  CHECK(pos(2) < pos(1));

  // Scaling the whole criterion leaves the ranking alone.
  std::vector<Candidate> doubled = m;
  for (auto& c : doubled) c.loglik *= 2.0;
  const auto scaled = select_models(doubled, n, 0.6, 10);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(scaled.shortlist[i].model == all.shortlist[i].model);

  CHECK_THROWS_AS(select_models(m, n, 0.3, 0), ConfigError);
}

TEST_CASE("the heuristic selects at twice the jump abscissa") {
  std::mt19937_64 rng(3);
  const auto m = random_collection(rng, 40);
  const auto r = slope_heuristic(m, 300, 1000, 5);
  const auto dj = dimension_jump(m, 300, 1000);
  CHECK(r.kappa_hat == dj.kappa_hat);
  CHECK(r.penalty_kappa == 2.0 * dj.kappa_hat);
  CHECK(r.selected == brute_argmin(m, 2.0 * dj.kappa_hat, 300));
  CHECK(r.shortlist.front().model == r.selected);
  CHECK(r.jump_table.size() == 1000);
}

TEST_CASE("degenerate collections") {
  const std::vector<Candidate> single{{-1.0, 10, 1}};
  const auto r = slope_heuristic(single, 100);
  CHECK(r.selected == 0);
  CHECK_FALSE(r.warnings.empty());

  const std::vector<Candidate> flat{{-1.0, 10, 1}, {-0.5, 10, 2}};
  CHECK_THROWS_AS(dimension_jump(flat, 100), DataError);
  try {
    dimension_jump(flat, 100);
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("add more models") != std::string::npos);
  }
  CHECK_THROWS_AS(dimension_jump(std::vector<Candidate>{}, 100), DataError);
}
