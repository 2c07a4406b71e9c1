#pragma once

#include "loadmix/dataset.hpp"

#include <utility>
#include <vector>

namespace loadmix::mixture {

/// Positions (response l, regressor j), 0-based, that may carry a non-zero
/// regression coefficient. Shared by every cluster of a model. Entries are
/// kept sorted row-major and unique.
class Support {
public:
  using Entry = std::pair<int, int>;

  Support() = default;
  explicit Support(std::vector<Entry> entries);

  static Support full(int q, int p);
  /// Positions where any cluster's coefficient is non-zero.
  static Support from_nonzero(const std::vector<Matrix>& beta);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(int l, int j) const;
  /// Regressor indices allowed for response row l.
  std::vector<int> row(int l) const;
  bool is_subset_of(const Support& other) const;

  bool operator==(const Support&) const = default;
  auto operator<=>(const Support&) const = default;

private:
  std::vector<Entry> entries_;
};

/// Mixture of K Gaussian regressions y | x ~ sum_k pi_k N(beta_k x, diag(sigma2_k)).
struct MixtureParams {
  std::vector<double> pi;
  std::vector<Matrix> beta;        // K matrices, q x p
  std::vector<Vector> sigma_diag;  // K vectors of q variances

  int k() const { return static_cast<int>(pi.size()); }
  Eigen::Index p() const { return beta.empty() ? 0 : beta.front().cols(); }
  Eigen::Index q() const { return beta.empty() ? 0 : beta.front().rows(); }

  /// Throws on broken invariants (pi off the simplex, non-positive variances,
  /// non-finite coefficients, inconsistent shapes).
  void validate() const;
};

using ResponsibilityMatrix = Matrix;  // n x K, rows on the simplex

/// Per-coordinate floor 1e-8 * sample variance of that response column.
Vector variance_floor(const Matrix& y);

/// n x K matrix of log(pi_k) + log phi_k(y_i | x_i).
Matrix log_weighted_densities(const MixtureParams& params, const Matrix& x, const Matrix& y);

double log_conditional_density(const MixtureParams& params, const Vector& x, const Vector& y);

/// Mean per-observation log-likelihood (1/n) sum_i log s(y_i | x_i).
double log_likelihood(const MixtureParams& params, const RegressionDataset& data);

ResponsibilityMatrix responsibilities(const MixtureParams& params, const RegressionDataset& data);

/// Row-wise log-sum-exp of a log-weight matrix.
Vector log_sum_exp_rows(const Matrix& logw);

/// Normalises log weights row-wise into responsibilities.
ResponsibilityMatrix normalise_rows(const Matrix& logw);
/// Same, also returning the row log-sum-exp.
ResponsibilityMatrix normalise_rows(const Matrix& logw, Vector& lse);

/// Index of the largest responsibility in each row; ties go to the lowest index.
std::vector<int> map_assign(const ResponsibilityMatrix& tau);

/// D = (K - 1) + K |J| + K q.
long model_dimension(int k, std::size_t support_size, Eigen::Index q);

} // namespace loadmix::mixture
