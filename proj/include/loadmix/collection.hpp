#pragma once

#include "loadmix/dataset.hpp"
#include "loadmix/em.hpp"
#include "loadmix/mixture.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace loadmix::collection {

using mixture::MixtureParams;
using mixture::Support;

/// One refitted model s^(K, J) of the collection.
struct ModelEntry {
  int id = 0;
  int k = 0;            // clusters actually present after the fit
  int requested_k = 0;  // K of the sweep that produced it
  Support support;
  MixtureParams params;
  double loglik = 0.0;  // mean per-observation log-likelihood of the refit
  long dimension = 0;
  double lambda_origin = 0.0;
  bool degenerate = false;  // a cluster was dropped during fitting
};

struct CollectionOptions {
  std::vector<int> k_set{1, 2, 3, 4, 5, 6, 7, 8};
  int grid_size = 20;
  double grid_ratio = 1e-3;  // smallest lambda = ratio * lambda_max
  em::EmOptions em;
  int refit_starts = 1;  // refit runs: the lasso warm start plus refit_starts - 1 fresh starts
  int jobs = 1;          // worker threads; 0 = hardware concurrency
  std::optional<std::vector<double>> lambdas;  // overrides the data-driven grid

  void validate() const;
};

struct ModelCollection {
  std::vector<ModelEntry> entries;  // sorted by (k, dimension, support); no duplicate (k, support)
  std::string dataset_fingerprint;
  std::vector<int> k_set;
  int grid_size = 0;
  long n = 0;
  long p = 0;
  long q = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  const ModelEntry& by_id(int id) const;
};

/// Descending log-spaced grid from lambda_max(data, k) to ratio * lambda_max.
/// A zero lambda_max (all-zero responses) yields the single-point grid {0}.
std::vector<double> lambda_grid(const RegressionDataset& data, int k, int grid_size,
                                double ratio = 1e-3,
                                em::PenaltyWeighting weighting = em::PenaltyWeighting::plain,
                                std::vector<std::string>* warnings = nullptr);

/// Sweeps K over opts.k_set and lambda over each K's grid: penalised fit,
/// support extraction, restricted MLE refit, deduplication on (K, support).
ModelCollection build_collection(const RegressionDataset& data, const CollectionOptions& opts);

/// Orders entries by (k, dimension, support) and renumbers ids 0..N-1.
void canonicalise(ModelCollection& collection);

} // namespace loadmix::collection
