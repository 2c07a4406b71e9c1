#include "loadmix/mixture.hpp"

#include "loadmix/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace loadmix::mixture {

Support::Support(std::vector<Entry> entries) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end());
  entries_.erase(std::unique(entries_.begin(), entries_.end()), entries_.end());
  for (const auto& [l, j] : entries_)
    if (l < 0 || j < 0) throw DataError("support index must be non-negative");
}

Support Support::full(int q, int p) {
  std::vector<Entry> e;
  e.reserve(static_cast<std::size_t>(q * p));
  for (int l = 0; l < q; ++l)
    for (int j = 0; j < p; ++j) e.emplace_back(l, j);
  return Support(std::move(e));
}

Support Support::from_nonzero(const std::vector<Matrix>& beta) {
  std::vector<Entry> e;
  if (beta.empty()) return {};
  for (Eigen::Index l = 0; l < beta.front().rows(); ++l)
    for (Eigen::Index j = 0; j < beta.front().cols(); ++j)
      for (const auto& b : beta)
        if (b(l, j) != 0.0) {
          e.emplace_back(static_cast<int>(l), static_cast<int>(j));
          break;
        }
  return Support(std::move(e));
}

bool Support::contains(int l, int j) const {
  return std::binary_search(entries_.begin(), entries_.end(), Entry{l, j});
}

std::vector<int> Support::row(int l) const {
  std::vector<int> out;
  auto it = std::lower_bound(entries_.begin(), entries_.end(), Entry{l, 0});
  for (; it != entries_.end() && it->first == l; ++it) out.push_back(it->second);
  return out;
}

bool Support::is_subset_of(const Support& other) const {
  return std::includes(other.entries_.begin(), other.entries_.end(), entries_.begin(),
                       entries_.end());
}

void MixtureParams::validate() const {
  const auto kk = pi.size();
  if (kk == 0) throw DataError("mixture has no components");
  if (beta.size() != kk || sigma_diag.size() != kk)
    throw DimensionError("mixture parameter lists disagree on K");
  double sum = 0.0;
  for (double w : pi) {
    if (!(w > 0.0)) throw DataError("mixing proportion must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw DataError("mixing proportions do not sum to 1");
  for (std::size_t k = 0; k < kk; ++k) {
    if (beta[k].rows() != q() || beta[k].cols() != p())
      throw DimensionError("regression matrices differ in shape");
    if (sigma_diag[k].size() != q()) throw DimensionError("variance vector length differs from q");
    if (!beta[k].allFinite()) throw DataError("non-finite regression coefficient");
    if (!(sigma_diag[k].array() > 0.0).all() || !sigma_diag[k].allFinite())
      throw DataError("variances must be positive and finite");
  }
}

Vector variance_floor(const Matrix& y) {
  Vector out(y.cols());
  const double n = static_cast<double>(y.rows());
  for (Eigen::Index l = 0; l < y.cols(); ++l) {
    double var = 0.0;
    if (y.rows() > 1) {
      const double mean = y.col(l).mean();
      var = (y.col(l).array() - mean).square().sum() / (n - 1.0);
    }
    out(l) = var > 0.0 ? 1e-8 * var : 1e-8;
  }
  return out;
}

Matrix log_weighted_densities(const MixtureParams& params, const Matrix& x, const Matrix& y) {
  if (x.cols() != params.p() || y.cols() != params.q() || x.rows() != y.rows())
    throw DimensionError("data dimensions (p=" + std::to_string(x.cols()) +
                         ", q=" + std::to_string(y.cols()) + ") do not match the model (p=" +
                         std::to_string(params.p()) + ", q=" + std::to_string(params.q()) + ")");
  const Eigen::Index n = x.rows();
  const int kk = params.k();
  const double log2pi = std::log(2.0 * std::numbers::pi);
  Matrix out(n, kk);
  for (int k = 0; k < kk; ++k) {
    const auto& s2 = params.sigma_diag[static_cast<std::size_t>(k)];
    const double log_norm = -0.5 * (static_cast<double>(params.q()) * log2pi + s2.array().log().sum());
    const Eigen::RowVectorXd inv = s2.cwiseInverse().transpose();
    const Matrix resid = y - x * params.beta[static_cast<std::size_t>(k)].transpose();
    const double log_pi = std::log(params.pi[static_cast<std::size_t>(k)]);
    out.col(k) = (log_pi + log_norm) -
                 0.5 * (resid.array().square().rowwise() * inv.array()).rowwise().sum();
  }
  return out;
}

Vector log_sum_exp_rows(const Matrix& logw) {
  Vector lse;
  normalise_rows(logw, lse);
  return lse;
}

ResponsibilityMatrix normalise_rows(const Matrix& logw) {
  Vector lse;
  return normalise_rows(logw, lse);
}

ResponsibilityMatrix normalise_rows(const Matrix& logw, Vector& lse) {
  const Vector m = logw.rowwise().maxCoeff();
  ResponsibilityMatrix tau = (logw.colwise() - m).array().exp().matrix();
  const Vector s = tau.rowwise().sum();
  tau.array().colwise() /= s.array();
  lse = m.array() + s.array().log();
  for (Eigen::Index i = 0; i < m.size(); ++i)
    if (!std::isfinite(m(i))) lse(i) = m(i);
  return tau;
}

double log_conditional_density(const MixtureParams& params, const Vector& x, const Vector& y) {
  if (x.size() != params.p() || y.size() != params.q())
    throw DimensionError("observation dimensions do not match the model");
  const Matrix lw = log_weighted_densities(params, x.transpose(), y.transpose());
  return log_sum_exp_rows(lw)(0);
}

double log_likelihood(const MixtureParams& params, const RegressionDataset& data) {
  if (data.n() == 0) throw DataError("log-likelihood of an empty dataset");
  return log_sum_exp_rows(log_weighted_densities(params, data.x, data.y)).mean();
}

ResponsibilityMatrix responsibilities(const MixtureParams& params, const RegressionDataset& data) {
  return normalise_rows(log_weighted_densities(params, data.x, data.y));
}

std::vector<int> map_assign(const ResponsibilityMatrix& tau) {
  std::vector<int> labels(static_cast<std::size_t>(tau.rows()));
  for (Eigen::Index i = 0; i < tau.rows(); ++i) {
    int best = 0;
    for (Eigen::Index k = 1; k < tau.cols(); ++k)
      if (tau(i, k) > tau(i, best)) best = static_cast<int>(k);
    labels[static_cast<std::size_t>(i)] = best;
  }
  return labels;
}

long model_dimension(int k, std::size_t support_size, Eigen::Index q) {
  return static_cast<long>(k - 1) + static_cast<long>(k) * static_cast<long>(support_size) +
         static_cast<long>(k) * static_cast<long>(q);
}

} // namespace loadmix::mixture
