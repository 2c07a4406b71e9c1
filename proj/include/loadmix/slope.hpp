#pragma once

#include "loadmix/collection.hpp"

#include <vector>

namespace loadmix::slope {

/// What the slope heuristic needs from a model.
struct Candidate {
  double loglik = 0.0;  // mean per-observation log-likelihood
  long dimension = 0;
  int k = 0;
};

std::vector<Candidate> candidates(const collection::ModelCollection& c);

/// crit(m) = -loglik + 2 * kappa * D / n.
double criterion(const Candidate& m, double kappa, long n);

/// Index minimising crit(kappa); ties go to the smaller D, then the smaller K,
/// then the lower index.
std::size_t argmin_criterion(const std::vector<Candidate>& models, double kappa, long n);

/// Values of kappa > 0 at which the minimiser of crit changes (increasing).
std::vector<double> envelope_breakpoints(const std::vector<Candidate>& models, long n);

struct JumpPoint {
  double kappa = 0.0;
  long dimension = 0;
  std::size_t model = 0;
};

struct DimensionJump {
  double kappa_hat = 0.0;
  double jump = 0.0;  // largest drop of the selected dimension
  std::vector<JumpPoint> table;
};

/// Scans a log-spaced kappa grid spanning the envelope breakpoints and
/// returns the kappa just after the largest drop of the selected dimension.
/// Throws DataError when the selected dimension never changes.
DimensionJump dimension_jump(const std::vector<Candidate>& models, long n, int grid_size = 1000);

struct ShortlistItem {
  std::size_t model = 0;  // index into the candidate list / collection entries
  double criterion = 0.0;
};

struct SelectionResult {
  double kappa_hat = 0.0;      // estimated minimal penalty constant
  double penalty_kappa = 0.0;  // kappa used for selection (2 * kappa_hat)
  std::size_t selected = 0;
  std::vector<ShortlistItem> shortlist;  // ascending criterion; shortlist[0] is selected
  std::vector<JumpPoint> jump_table;
  std::vector<std::string> warnings;
};

/// Ranks all models by crit(kappa).
SelectionResult select_models(const std::vector<Candidate>& models, long n, double kappa,
                              int shortlist_size = 5);

/// dimension_jump, then select_models with 2 * kappa_hat. A collection with a
/// single model selects it with a warning.
SelectionResult slope_heuristic(const std::vector<Candidate>& models, long n, int grid_size = 1000,
                                int shortlist_size = 5);

SelectionResult slope_heuristic(const collection::ModelCollection& c, int grid_size = 1000,
                                int shortlist_size = 5);

} // namespace loadmix::slope
