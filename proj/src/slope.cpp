#include "loadmix/slope.hpp"

#include "loadmix/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace loadmix::slope {

namespace {

bool better(const Candidate& a, std::size_t ia, double ca, const Candidate& b, std::size_t ib,
            double cb) {
  if (ca != cb) return ca < cb;
  if (a.dimension != b.dimension) return a.dimension < b.dimension;
  if (a.k != b.k) return a.k < b.k;
  return ia < ib;
}

void check(const std::vector<Candidate>& models, long n) {
  if (models.empty()) throw DataError("empty model collection");
  if (n <= 0) throw DataError("sample size must be positive");
  for (const auto& m : models)
    if (!std::isfinite(m.loglik)) throw NumericalError("non-finite log-likelihood in collection");
}

} // namespace

std::vector<Candidate> candidates(const collection::ModelCollection& c) {
  std::vector<Candidate> out;
  out.reserve(c.entries.size());
  for (const auto& e : c.entries) out.push_back({e.loglik, e.dimension, e.k});
  return out;
}

double criterion(const Candidate& m, double kappa, long n) {
  return -m.loglik + 2.0 * kappa * static_cast<double>(m.dimension) / static_cast<double>(n);
}

std::size_t argmin_criterion(const std::vector<Candidate>& models, double kappa, long n) {
  check(models, n);
  std::size_t best = 0;
  double best_c = criterion(models[0], kappa, n);
  for (std::size_t i = 1; i < models.size(); ++i) {
    const double c = criterion(models[i], kappa, n);
    if (better(models[i], i, c, models[best], best, best_c)) {
      best = i;
      best_c = c;
    }
  }
  return best;
}

std::vector<double> envelope_breakpoints(const std::vector<Candidate>& models, long n) {
  check(models, n);
  // Minimiser as kappa -> 0+: highest likelihood, then the usual ties.
  std::size_t cur = 0;
  for (std::size_t i = 1; i < models.size(); ++i) {
    const auto& a = models[i];
    const auto& b = models[cur];
    if (a.loglik > b.loglik || (a.loglik == b.loglik && better(a, i, 0.0, b, cur, 0.0))) cur = i;
  }
  std::vector<double> out;
  for (;;) {
    const auto& c = models[cur];
    std::size_t next = models.size();
    double next_kappa = 0.0;
    for (std::size_t i = 0; i < models.size(); ++i) {
      const auto& m = models[i];
      if (m.dimension >= c.dimension) continue;
      const double kappa = static_cast<double>(n) * (c.loglik - m.loglik) /
                           (2.0 * static_cast<double>(c.dimension - m.dimension));
      if (next == models.size() || kappa < next_kappa ||
          (kappa == next_kappa && better(m, i, 0.0, models[next], next, 0.0))) {
        next = i;
        next_kappa = kappa;
      }
    }
    if (next == models.size()) break;
    out.push_back(std::max(next_kappa, 0.0));
    cur = next;
  }
  return out;
}

DimensionJump dimension_jump(const std::vector<Candidate>& models, long n, int grid_size) {
  if (grid_size < 2) throw ConfigError("kappa grid needs at least 2 points");
  const auto breaks = envelope_breakpoints(models, n);
  std::vector<double> positive;
  for (double b : breaks)
    if (b > 0.0) positive.push_back(b);
  if (positive.empty())
    throw DataError(
        "no dimension jump: every model in the collection has the same dimension or the "
        "collection is too sparse; add more models (wider K set or denser lambda grid)");

  const double lo = std::log(positive.front() / 2.0);
  const double hi = std::log(positive.back() * 2.0);
  DimensionJump out;
  out.table.reserve(static_cast<std::size_t>(grid_size));
  for (int g = 0; g < grid_size; ++g) {
    const double kappa =
        std::exp(lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid_size - 1));
    const std::size_t m = argmin_criterion(models, kappa, n);
    out.table.push_back({kappa, models[m].dimension, m});
  }
  long best_drop = 0;
  for (std::size_t i = 0; i + 1 < out.table.size(); ++i) {
    const long drop = out.table[i].dimension - out.table[i + 1].dimension;
    if (drop > best_drop) {
      best_drop = drop;
      out.kappa_hat = out.table[i + 1].kappa;
    }
  }
  if (best_drop <= 0)
    throw DataError("no dimension jump on the kappa grid; add more models to the collection");
  out.jump = static_cast<double>(best_drop);
  return out;
}

SelectionResult select_models(const std::vector<Candidate>& models, long n, double kappa,
                              int shortlist_size) {
  check(models, n);
  if (shortlist_size < 1) throw ConfigError("shortlist size must be >= 1");
  std::vector<double> crit(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) crit[i] = criterion(models[i], kappa, n);
  std::vector<std::size_t> order(models.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return better(models[a], a, crit[a], models[b], b, crit[b]);
  });
  SelectionResult out;
  out.penalty_kappa = kappa;
  out.selected = order.front();
  const std::size_t m = std::min(order.size(), static_cast<std::size_t>(shortlist_size));
  for (std::size_t i = 0; i < m; ++i) out.shortlist.push_back({order[i], crit[order[i]]});
  return out;
}

SelectionResult slope_heuristic(const std::vector<Candidate>& models, long n, int grid_size,
                                int shortlist_size) {
  check(models, n);
  if (models.size() == 1) {
    SelectionResult out = select_models(models, n, 0.0, shortlist_size);
    out.warnings.push_back("collection has a single model; selected without a slope estimate");
    return out;
  }
  const DimensionJump dj = dimension_jump(models, n, grid_size);
  SelectionResult out = select_models(models, n, 2.0 * dj.kappa_hat, shortlist_size);
  out.kappa_hat = dj.kappa_hat;
  out.jump_table = dj.table;
  return out;
}

SelectionResult slope_heuristic(const collection::ModelCollection& c, int grid_size,
                                int shortlist_size) {
  return slope_heuristic(candidates(c), c.n, grid_size, shortlist_size);
}

} // namespace loadmix::slope
