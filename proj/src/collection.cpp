#include "loadmix/collection.hpp"

#include "loadmix/errors.hpp"
#include "loadmix/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

namespace loadmix::collection {

namespace {

struct Task {
  int k;
  std::size_t lambda_index;
  double lambda;
};

struct TaskResult {
  std::optional<ModelEntry> entry;
  std::vector<std::string> warnings;
  std::string error;
};

ModelEntry fit_one(const RegressionDataset& data, const Task& task, const CollectionOptions& opts,
                   std::vector<std::string>& warnings) {
  em::EmOptions eo = opts.em;
  // Every lambda of one K shares the same starts.
  eo.seed = derive_seed(opts.em.seed, {static_cast<std::uint64_t>(task.k)});
  const em::PenalizedFit pen = em::lasso_em_fit(data, task.k, task.lambda, eo);
  for (const auto& w : pen.warnings) warnings.push_back("K=" + std::to_string(task.k) + ": " + w);

  em::EmOptions ro = eo;
  ro.n_starts = opts.refit_starts;
  const em::RefitResult refit = em::refit_mle(data, pen.params.k(), pen.support, ro, &pen.params);
  for (const auto& w : refit.warnings)
    warnings.push_back("K=" + std::to_string(task.k) + " refit: " + w);

  ModelEntry e;
  e.k = refit.params.k();
  e.requested_k = task.k;
  e.support = pen.support;
  e.params = refit.params;
  e.loglik = refit.loglik;
  e.dimension = mixture::model_dimension(e.k, e.support.size(), data.q());
  e.lambda_origin = task.lambda;
  e.degenerate = pen.degenerate || refit.degenerate;
  return e;
}

void run_tasks(const RegressionDataset& data, const std::vector<Task>& tasks,
               const CollectionOptions& opts, std::vector<TaskResult>& results) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      TaskResult& r = results[t];
      try {
        r.entry = fit_one(data, tasks[t], opts, r.warnings);
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
  };
  unsigned jobs = opts.jobs > 0 ? static_cast<unsigned>(opts.jobs)
                                : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(tasks.size()));
  if (jobs <= 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
}

// Restricted MLEs are EM local optima; when J is nested in J' but J fits
// better, rerun J' from J's parameters (feasible for J') so that the
// likelihood is monotone along nested supports.
void repair_nested(const RegressionDataset& data, std::vector<ModelEntry>& group,
                   const CollectionOptions& opts) {
  std::sort(group.begin(), group.end(), [](const ModelEntry& a, const ModelEntry& b) {
    return a.support.size() < b.support.size();
  });
  em::EmOptions ro = opts.em;
  ro.n_starts = 1;
  for (int pass = 0; pass < 3; ++pass) {
    bool changed = false;
    for (std::size_t i = 0; i < group.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (group[j].support.size() >= group[i].support.size()) continue;
        if (!group[j].support.is_subset_of(group[i].support)) continue;
        if (group[j].loglik <= group[i].loglik) continue;
        const em::RefitResult r =
            em::refit_mle(data, group[j].k, group[i].support, ro, &group[j].params);
        if (r.params.k() == group[i].k && r.loglik > group[i].loglik) {
          group[i].params = r.params;
          group[i].loglik = r.loglik;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
}

} // namespace

void CollectionOptions::validate() const {
  if (k_set.empty()) throw ConfigError("empty K set");
  for (int k : k_set)
    if (k < 1) throw ConfigError("cluster counts must be >= 1");
  if (!lambdas && grid_size < 2) throw ConfigError("grid_size must be >= 2");
  if (lambdas && lambdas->empty()) throw ConfigError("explicit lambda grid is empty");
  if (!(grid_ratio > 0.0 && grid_ratio < 1.0)) throw ConfigError("grid ratio must lie in (0, 1)");
  if (refit_starts < 1) throw ConfigError("refit_starts must be >= 1");
  em.validate();
}

const ModelEntry& ModelCollection::by_id(int id) const {
  for (const auto& e : entries)
    if (e.id == id) return e;
  throw DataError("no model with id " + std::to_string(id) + " in the collection");
}

std::vector<double> lambda_grid(const RegressionDataset& data, int k, int grid_size, double ratio,
                                em::PenaltyWeighting weighting, std::vector<std::string>* warnings) {
  if (grid_size < 2) throw ConfigError("grid_size must be >= 2");
  const double top = em::lambda_max(data, k, weighting);
  if (!(top > 0.0)) {
    if (warnings) warnings->push_back("lambda_max is zero (degenerate responses); grid is {0}");
    return {0.0};
  }
  std::vector<double> grid(static_cast<std::size_t>(grid_size));
  const double log_ratio = std::log(ratio);
  for (int i = 0; i < grid_size; ++i)
    grid[static_cast<std::size_t>(i)] =
        top * std::exp(log_ratio * static_cast<double>(i) / static_cast<double>(grid_size - 1));
  grid.front() = top;
  grid.back() = top * ratio;
  return grid;
}

void canonicalise(ModelCollection& c) {
  std::sort(c.entries.begin(), c.entries.end(), [](const ModelEntry& a, const ModelEntry& b) {
    if (a.k != b.k) return a.k < b.k;
    if (a.dimension != b.dimension) return a.dimension < b.dimension;
    return a.support < b.support;
  });
  for (std::size_t i = 0; i < c.entries.size(); ++i) c.entries[i].id = static_cast<int>(i);
}

ModelCollection build_collection(const RegressionDataset& data, const CollectionOptions& opts) {
  opts.validate();
  data.validate();
  const int kmax = *std::max_element(opts.k_set.begin(), opts.k_set.end());
  if (data.n() < kmax)
    throw DataError("n = " + std::to_string(data.n()) + " is smaller than the largest K = " +
                    std::to_string(kmax));

  ModelCollection out;
  out.dataset_fingerprint = fingerprint(data);
  out.k_set = opts.k_set;
  std::sort(out.k_set.begin(), out.k_set.end());
  out.k_set.erase(std::unique(out.k_set.begin(), out.k_set.end()), out.k_set.end());
  out.grid_size = opts.lambdas ? static_cast<int>(opts.lambdas->size()) : opts.grid_size;
  out.n = data.n();
  out.p = data.p();
  out.q = data.q();
  out.seed = opts.em.seed;

  std::vector<Task> tasks;
  for (int k : out.k_set) {
    const auto grid = opts.lambdas ? *opts.lambdas
                                   : lambda_grid(data, k, opts.grid_size, opts.grid_ratio,
                                                 opts.em.penalty, &out.warnings);
    for (std::size_t i = 0; i < grid.size(); ++i) tasks.push_back({k, i, grid[i]});
  }
  std::vector<TaskResult> results(tasks.size());
  run_tasks(data, tasks, opts, results);

  // Deduplicate on (effective K, support): keep the higher refit likelihood,
  // earlier task on ties.
  std::map<std::pair<int, Support>, ModelEntry> unique;
  std::map<int, int> ok_per_k;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    auto& r = results[t];
    out.warnings.insert(out.warnings.end(), r.warnings.begin(), r.warnings.end());
    if (!r.entry) {
      out.warnings.push_back("K=" + std::to_string(tasks[t].k) + " lambda=" +
                             std::to_string(tasks[t].lambda) + " failed: " + r.error);
      continue;
    }
    ++ok_per_k[tasks[t].k];
    // A fit that lost clusters can land outside the requested K set (K = 1
    // under forced K); such models are not part of the collection.
    if (!std::binary_search(out.k_set.begin(), out.k_set.end(), r.entry->k)) {
      out.warnings.push_back("K=" + std::to_string(tasks[t].k) + " fit reduced to K=" +
                             std::to_string(r.entry->k) + ", outside the K set; dropped");
      continue;
    }
    const auto key = std::make_pair(r.entry->k, r.entry->support);
    auto it = unique.find(key);
    if (it == unique.end())
      unique.emplace(key, std::move(*r.entry));
    else if (r.entry->loglik > it->second.loglik)
      it->second = std::move(*r.entry);
  }
  for (int k : out.k_set)
    if (ok_per_k[k] == 0) out.warnings.push_back("every fit failed for K=" + std::to_string(k));
  if (unique.empty()) throw NumericalError("every fit of the collection failed");

  std::map<int, std::vector<ModelEntry>> by_k;
  for (auto& [key, e] : unique) by_k[key.first].push_back(std::move(e));
  for (auto& [k, group] : by_k) {
    repair_nested(data, group, opts);
    for (auto& e : group) out.entries.push_back(std::move(e));
  }
  canonicalise(out);
  std::sort(out.warnings.begin(), out.warnings.end());
  out.warnings.erase(std::unique(out.warnings.begin(), out.warnings.end()), out.warnings.end());
  return out;
}

} // namespace loadmix::collection
