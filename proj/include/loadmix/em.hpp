#pragma once

#include "loadmix/dataset.hpp"
#include "loadmix/mixture.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace loadmix::em {

using mixture::MixtureParams;
using mixture::ResponsibilityMatrix;
using mixture::Support;

/// plain: lambda * sum |beta|. weighted: lambda * sum_k pi_k |beta_k|.
enum class PenaltyWeighting { plain, weighted };

struct EmOptions {
  int max_iter = 200;
  double tol = 1e-6;  // relative change of the objective between iterations
  int n_starts = 5;
  std::uint64_t seed = 1;
  double variance_floor_factor = 1e-8;  // times the response column variance
  PenaltyWeighting penalty = PenaltyWeighting::plain;

  void validate() const;
};

/// Result of the l1-penalised EM stage.
struct PenalizedFit {
  MixtureParams params;  // beta in original (unstandardised) units
  Support support;
  double lambda = 0.0;
  std::vector<double> objective_trace;  // penalised objective after each iteration
  ResponsibilityMatrix mstep_tau;       // responsibilities used by the final M-step
  int requested_k = 0;
  bool degenerate = false;  // at least one cluster was dropped
  bool converged = false;
  int best_start = 0;
  std::vector<std::string> warnings;

  double objective() const { return objective_trace.back(); }
};

/// Result of the unpenalised EM restricted to a support.
struct RefitResult {
  MixtureParams params;
  double loglik = 0.0;       // mean per-observation log-likelihood
  std::vector<double> trace;  // log-likelihood after each iteration (warm start first)
  int requested_k = 0;
  bool degenerate = false;
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Sample standard deviation of each x column (1 for constant columns).
Vector column_scale(const Matrix& x);

/// Penalised objective (1/n) sum log s(y|x) - lambda * penalty, where the
/// penalty is measured on standardised coefficients beta_lj * scale_j.
double penalized_objective(const MixtureParams& params, const RegressionDataset& data,
                           double lambda, const Vector& scale,
                           PenaltyWeighting weighting = PenaltyWeighting::plain);

/// Smallest lambda at which beta = 0 is stationary for the uniform-responsibility
/// start (tau = 1/K, sigma^2 = mean y^2, standardised x).
double lambda_max(const RegressionDataset& data, int k,
                  PenaltyWeighting weighting = PenaltyWeighting::plain);

/// The starting responsibilities of lasso_em_fit / refit_mle: a k-means++
/// hard clustering of the standardised (x, y) rows, then n_starts - 1 random
/// soft (Dirichlet) matrices. Deterministic in opts.seed.
std::vector<ResponsibilityMatrix> initial_responsibilities(const RegressionDataset& data, int k,
                                                           const EmOptions& opts);

/// One penalised EM run from the given starting responsibilities.
PenalizedFit lasso_em_from(const RegressionDataset& data, const ResponsibilityMatrix& tau0,
                           double lambda, const EmOptions& opts);

/// Best of opts.n_starts penalised EM runs (by final objective, preferring
/// runs that kept all K clusters).
PenalizedFit lasso_em_fit(const RegressionDataset& data, int k, double lambda,
                          const EmOptions& opts);

/// One unpenalised restricted EM run from starting responsibilities.
RefitResult refit_em_from(const RegressionDataset& data, const ResponsibilityMatrix& tau0,
                          const Support& support, const EmOptions& opts);

/// One unpenalised restricted EM run from starting parameters (E-step first).
/// Coefficients outside `support` are zeroed before the first E-step.
RefitResult refit_em_from(const RegressionDataset& data, const MixtureParams& start,
                          const Support& support, const EmOptions& opts);

/// Maximum likelihood restricted to `support`: best of opts.n_starts runs.
/// When `warm` is given it is the first start and fresh starts fill the rest.
RefitResult refit_mle(const RegressionDataset& data, int k, const Support& support,
                      const EmOptions& opts, const MixtureParams* warm = nullptr);

/// Largest violation of the lasso M-step optimality conditions for `params`
/// given responsibilities `tau`, in standardised units.
double lasso_kkt_residual(const RegressionDataset& data, const ResponsibilityMatrix& tau,
                          const MixtureParams& params, double lambda,
                          PenaltyWeighting weighting = PenaltyWeighting::plain);

} // namespace loadmix::em
