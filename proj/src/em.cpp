#include "loadmix/em.hpp"

#include "loadmix/errors.hpp"
#include "loadmix/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace loadmix::em {

namespace {

constexpr int kMaxSweeps = 5000;

// Dataset-level quantities shared by every EM iteration.
struct Workspace {
  const RegressionDataset& data;
  Vector scale;
  Matrix xs;  // x with columns divided by scale
  Vector floor;
  double n;

  Workspace(const RegressionDataset& d, const EmOptions& opts)
      : data(d), scale(column_scale(d.x)), n(static_cast<double>(d.n())) {
    xs = d.x.array().rowwise() / scale.transpose().array();
    floor = mixture::variance_floor(d.y) * (opts.variance_floor_factor / 1e-8);
  }
};

// Weighted sufficient statistics of one cluster, standardised x.
struct ClusterStats {
  double nk = 0.0;
  Matrix gram;   // p x p
  Matrix cross;  // p x q
  Vector yy;     // q, weighted sums of squared responses
};

ClusterStats cluster_stats(const Workspace& ws, const Eigen::Ref<const Vector>& w) {
  ClusterStats s;
  s.nk = w.sum();
  const Vector sw = w.cwiseMax(0.0).cwiseSqrt();
  const Matrix sx = ws.xs.array().colwise() * sw.array();
  const Matrix sy = ws.data.y.array().colwise() * sw.array();
  s.gram = Matrix::Zero(sx.cols(), sx.cols());
  s.gram.selfadjointView<Eigen::Lower>().rankUpdate(sx.transpose());
  s.gram.triangularView<Eigen::StrictlyUpper>() = s.gram.transpose();
  s.cross = sx.transpose() * sy;
  s.yy = sy.colwise().squaredNorm().transpose();
  return s;
}

// residual_variance through the sufficient statistics.
Vector stats_variance(const Workspace& ws, const ClusterStats& st, const Matrix& beta_std) {
  const Matrix bg = beta_std * st.gram;
  const Vector quad = (bg.array() * beta_std.array()).rowwise().sum();
  const Vector lin = (beta_std.array() * st.cross.transpose().array()).rowwise().sum();
  const Vector s2 = (st.yy - 2.0 * lin + quad) / st.nk;
  return s2.cwiseMax(ws.floor);
}

// Weighted mean squared residual of cluster k, floored.
Vector residual_variance(const Workspace& ws, const Eigen::Ref<const Vector>& w, double nk,
                         const Matrix& beta_std) {
  const Matrix resid = ws.data.y - ws.xs * beta_std.transpose();
  Vector s2 = (resid.array().square().colwise() * w.array()).colwise().sum().transpose() / nk;
  return s2.cwiseMax(ws.floor);
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// Minimise 0.5 b'Gb - c'b + t |b|_1 by cyclic coordinate descent, warm-started at b.
void lasso_cd(const Matrix& gram, const Eigen::Ref<const Vector>& c, double t,
              Eigen::Ref<Vector> b) {
  const Eigen::Index p = gram.rows();
  const double tiny = 1e-12 * std::max(1.0, gram.diagonal().maxCoeff());
  Vector gb = gram * b;
  const double stop = 1e-12 * (c.cwiseAbs().maxCoeff() + t + 1e-300);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double gjj = gram(j, j);
      double nb = 0.0;
      if (gjj > tiny) {
        const double rho = c(j) - (gb(j) - gjj * b(j));
        nb = soft_threshold(rho, t) / gjj;
      }
      const double d = nb - b(j);
      if (d != 0.0) {
        gb += gram.col(j) * d;
        b(j) = nb;
        max_change = std::max(max_change, std::abs(d) * gjj);
      }
    }
    if (max_change <= stop) break;
  }
}

// Maximise sum a_k log pi_k - sum c_k pi_k on the simplex (a_k > 0, c_k >= 0).
std::vector<double> weighted_pi(const Vector& a, const Vector& c) {
  const double cmin = c.minCoeff();
  double lo = -cmin, hi = 1.0 - cmin;
  auto g = [&](double mu) { return (a.array() / (c.array() + mu)).sum(); };
  for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  Vector pi = a.array() / (c.array() + hi);
  pi /= pi.sum();
  return {pi.data(), pi.data() + pi.size()};
}

double l1_penalty(const std::vector<Matrix>& beta_std, const std::vector<double>& pi,
                  PenaltyWeighting weighting) {
  double pen = 0.0;
  for (std::size_t k = 0; k < beta_std.size(); ++k) {
    const double w = weighting == PenaltyWeighting::weighted ? pi[k] : 1.0;
    pen += w * beta_std[k].cwiseAbs().sum();
  }
  return pen;
}

bool converged(double prev, double cur, double tol) {
  return std::abs(cur - prev) <= tol * std::max(1.0, std::abs(prev));
}

// A cluster is degenerate when pi_k < 1/(10n), or when its responsibility
// mass does not exceed its widest active coefficient row plus one: such a
// cluster can interpolate its points and drive a variance onto the floor.
std::vector<int> degenerate_clusters(const Vector& nk, double n, const std::vector<int>& row_width) {
  std::vector<int> out;
  for (Eigen::Index k = 0; k < nk.size(); ++k) {
    const double width = static_cast<double>(row_width[static_cast<std::size_t>(k)]);
    if (nk(k) / n < 1.0 / (10.0 * n) || nk(k) <= width + 1.0) out.push_back(static_cast<int>(k));
  }
  return out;
}

int widest_row(const Matrix& beta) {
  int w = 0;
  for (Eigen::Index l = 0; l < beta.rows(); ++l)
    w = std::max(w, static_cast<int>((beta.row(l).array() != 0.0).count()));
  return w;
}

void drop_clusters(const std::vector<int>& drop, ResponsibilityMatrix& tau, MixtureParams& params) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < tau.cols(); ++k)
    if (std::find(drop.begin(), drop.end(), static_cast<int>(k)) == drop.end()) keep.push_back(k);
  ResponsibilityMatrix t(tau.rows(), static_cast<Eigen::Index>(keep.size()));
  MixtureParams p;
  for (std::size_t c = 0; c < keep.size(); ++c) {
    t.col(static_cast<Eigen::Index>(c)) = tau.col(keep[c]);
    if (!params.beta.empty()) {
      p.beta.push_back(params.beta[static_cast<std::size_t>(keep[c])]);
      p.sigma_diag.push_back(params.sigma_diag[static_cast<std::size_t>(keep[c])]);
      p.pi.push_back(params.pi[static_cast<std::size_t>(keep[c])]);
    }
  }
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    const double s = t.row(i).sum();
    if (s > 0.0)
      t.row(i) /= s;
    else
      t.row(i).setConstant(1.0 / static_cast<double>(t.cols()));
  }
  tau = std::move(t);
  params = std::move(p);
}

MixtureParams to_original_units(const MixtureParams& std_params, const Vector& scale) {
  MixtureParams out = std_params;
  for (auto& b : out.beta) b = b.array().rowwise() / scale.transpose().array();
  return out;
}

MixtureParams to_standard_units(const MixtureParams& params, const Vector& scale) {
  MixtureParams out = params;
  for (auto& b : out.beta) b = b.array().rowwise() * scale.transpose().array();
  return out;
}

void check_tau(const RegressionDataset& data, const ResponsibilityMatrix& tau) {
  if (tau.rows() != data.n() || tau.cols() < 1)
    throw DimensionError("starting responsibilities do not match the dataset");
  if (data.n() < tau.cols())
    throw DataError("infeasible fit: n = " + std::to_string(data.n()) + " < K = " +
                    std::to_string(tau.cols()));
}

// Weighted residual sum of squares of one response row, from statistics.
double weighted_rss_delta(const ClusterStats& s, Eigen::Index l, const Vector& b) {
  // RSS(b) - sum w y^2
  return -2.0 * s.cross.col(l).dot(b) + b.dot(s.gram * b);
}

// Restricted weighted least squares for one response row: columns `cols`.
Vector restricted_wls(const ClusterStats& s, Eigen::Index l, const std::vector<int>& cols,
                      Eigen::Index p, std::vector<std::string>& warnings) {
  Vector b = Vector::Zero(p);
  if (cols.empty()) return b;
  const auto m = static_cast<Eigen::Index>(cols.size());
  Matrix g(m, m);
  Vector c(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    c(a) = s.cross(cols[static_cast<std::size_t>(a)], l);
    for (Eigen::Index d = 0; d < m; ++d)
      g(a, d) = s.gram(cols[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(d)]);
  }
  Eigen::LDLT<Matrix> ldlt(g);
  Vector sol;
  const bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-12;
  if (ok) {
    sol = ldlt.solve(c);
  } else {
    const double ridge = 1e-8 * std::max(g.trace(), 1e-300) / static_cast<double>(m);
    g.diagonal().array() += ridge;
    sol = g.ldlt().solve(c);
    char buf[96];
    std::snprintf(buf, sizeof buf, "singular restricted design; ridge %.3g added", ridge);
    warnings.emplace_back(buf);
  }
  for (Eigen::Index a = 0; a < m; ++a) b(cols[static_cast<std::size_t>(a)]) = sol(a);
  if (!b.allFinite()) b.setZero();
  return b;
}

// Shared E-step: returns the mean log-likelihood and refreshes tau.
double e_step(const Workspace& ws, const MixtureParams& std_params, ResponsibilityMatrix& tau) {
  const Matrix logw = mixture::log_weighted_densities(std_params, ws.xs, ws.data.y);
  Vector lse;
  tau = mixture::normalise_rows(logw, lse);
  return lse.mean();
}

PenalizedFit run_lasso(const Workspace& ws, ResponsibilityMatrix tau, double lambda,
                       const EmOptions& opts) {
  const auto q = ws.data.q();
  const auto p = ws.data.p();
  PenalizedFit fit;
  fit.lambda = lambda;
  fit.requested_k = static_cast<int>(tau.cols());

  MixtureParams cur;  // standardised units
  for (Eigen::Index k = 0; k < tau.cols(); ++k) {
    cur.beta.push_back(Matrix::Zero(q, p));
    cur.sigma_diag.push_back(Vector::Ones(q));
    cur.pi.push_back(1.0 / static_cast<double>(tau.cols()));
  }
  double prev = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    Vector nk = tau.colwise().sum().transpose();
    if (tau.cols() > 1) {
      std::vector<int> widths;
      for (const auto& b : cur.beta) widths.push_back(widest_row(b));
      const auto drop = degenerate_clusters(nk, ws.n, widths);
      if (!drop.empty()) {
        drop_clusters(drop, tau, cur);
        fit.degenerate = true;
        fit.objective_trace.clear();
        prev = -std::numeric_limits<double>::infinity();
        fit.warnings.push_back("dropped " + std::to_string(drop.size()) +
                               " degenerate cluster(s); continuing with K = " +
                               std::to_string(tau.cols()));
        nk = tau.colwise().sum().transpose();
      }
    }
    const auto kk = tau.cols();
    // pi
    if (opts.penalty == PenaltyWeighting::weighted && lambda > 0.0) {
      Vector c(kk);
      for (Eigen::Index k = 0; k < kk; ++k)
        c(k) = lambda * cur.beta[static_cast<std::size_t>(k)].cwiseAbs().sum();
      cur.pi = weighted_pi(nk / ws.n, c);
    } else {
      for (Eigen::Index k = 0; k < kk; ++k) cur.pi[static_cast<std::size_t>(k)] = nk(k) / ws.n;
    }
    // sigma^2 given the previous beta, then beta given the new sigma^2
    for (Eigen::Index k = 0; k < kk; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      const ClusterStats st = cluster_stats(ws, tau.col(k));
      cur.sigma_diag[ks] = stats_variance(ws, st, cur.beta[ks]);
      const double w = opts.penalty == PenaltyWeighting::weighted ? cur.pi[ks] : 1.0;
      for (Eigen::Index l = 0; l < q; ++l) {
        Vector b = cur.beta[ks].row(l).transpose();
        lasso_cd(st.gram, st.cross.col(l), ws.n * cur.sigma_diag[ks](l) * lambda * w, b);
        cur.beta[ks].row(l) = b.transpose();
      }
    }
    fit.mstep_tau = tau;
    const double ll = e_step(ws, cur, tau);
    const double obj = ll - lambda * l1_penalty(cur.beta, cur.pi, opts.penalty);
    fit.objective_trace.push_back(obj);
    if (!std::isfinite(obj)) throw NumericalError("penalised EM objective became non-finite");
    if (iter > 0 && converged(prev, obj, opts.tol)) {
      fit.converged = true;
      break;
    }
    prev = obj;
  }
  fit.params = to_original_units(cur, ws.scale);
  fit.support = Support::from_nonzero(fit.params.beta);
  return fit;
}

RefitResult run_refit(const Workspace& ws, ResponsibilityMatrix tau, MixtureParams cur,
                      const Support& support, const EmOptions& opts, double start_ll) {
  const auto q = ws.data.q();
  const auto p = ws.data.p();
  RefitResult res;
  res.requested_k = static_cast<int>(tau.cols());
  std::vector<std::vector<int>> rows(static_cast<std::size_t>(q));
  int support_width = 0;
  for (Eigen::Index l = 0; l < q; ++l) {
    rows[static_cast<std::size_t>(l)] = support.row(static_cast<int>(l));
    support_width = std::max(support_width, static_cast<int>(rows[static_cast<std::size_t>(l)].size()));
  }

  const bool have_prev = !cur.beta.empty();
  double prev = start_ll;
  if (std::isfinite(start_ll)) res.trace.push_back(start_ll);
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    Vector nk = tau.colwise().sum().transpose();
    if (tau.cols() > 1) {
      const auto drop = degenerate_clusters(
          nk, ws.n, std::vector<int>(static_cast<std::size_t>(tau.cols()), support_width));
      if (!drop.empty()) {
        drop_clusters(drop, tau, cur);
        res.degenerate = true;
        res.trace.clear();
        prev = -std::numeric_limits<double>::infinity();
        res.warnings.push_back("dropped " + std::to_string(drop.size()) +
                               " degenerate cluster(s); continuing with K = " +
                               std::to_string(tau.cols()));
        nk = tau.colwise().sum().transpose();
      }
    }
    const auto kk = tau.cols();
    if (cur.beta.size() != static_cast<std::size_t>(kk)) {
      cur = MixtureParams{};
      for (Eigen::Index k = 0; k < kk; ++k) {
        cur.beta.push_back(Matrix::Zero(q, p));
        cur.sigma_diag.push_back(Vector::Ones(q));
        cur.pi.push_back(1.0 / static_cast<double>(kk));
      }
    }
    const bool guard = have_prev || iter > 0;
    for (Eigen::Index k = 0; k < kk; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      cur.pi[ks] = nk(k) / ws.n;
      const ClusterStats st = cluster_stats(ws, tau.col(k));
      for (Eigen::Index l = 0; l < q; ++l) {
        Vector b = restricted_wls(st, l, rows[static_cast<std::size_t>(l)], p, res.warnings);
        if (guard) {
          const Vector old = cur.beta[ks].row(l).transpose();
          if (weighted_rss_delta(st, l, b) > weighted_rss_delta(st, l, old)) b = old;
        }
        cur.beta[ks].row(l) = b.transpose();
      }
      cur.sigma_diag[ks] = residual_variance(ws, tau.col(k), nk(k), cur.beta[ks]);
    }
    const double ll = e_step(ws, cur, tau);
    if (!std::isfinite(ll)) throw NumericalError("EM log-likelihood became non-finite");
    res.trace.push_back(ll);
    if (std::isfinite(prev) && converged(prev, ll, opts.tol)) {
      res.converged = true;
      break;
    }
    prev = ll;
  }
  res.params = to_original_units(cur, ws.scale);
  res.loglik = res.trace.back();
  // Warnings repeat every iteration; keep distinct ones.
  std::sort(res.warnings.begin(), res.warnings.end());
  res.warnings.erase(std::unique(res.warnings.begin(), res.warnings.end()), res.warnings.end());
  return res;
}

Matrix kmeanspp_responsibilities(const RegressionDataset& data, int k, Rng& rng) {
  const Eigen::Index n = data.n();
  Matrix z(n, data.p() + data.q());
  z << data.x, data.y;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double mean = z.col(j).mean();
    z.col(j).array() -= mean;
    const double sd = std::sqrt(z.col(j).squaredNorm() / std::max<double>(1.0, static_cast<double>(n - 1)));
    if (sd > 0.0) z.col(j) /= sd;
  }
  Matrix centres(k, z.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centres.row(0) = z.row(pick(rng));
  Vector d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2(i) = (z.row(i) - centres.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    Eigen::Index chosen = 0;
    const double total = d2.sum();
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      for (chosen = 0; chosen < n - 1; ++chosen) {
        r -= d2(chosen);
        if (r <= 0.0) break;
      }
    } else {
      chosen = pick(rng);
    }
    centres.row(c) = z.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i)
      d2(i) = std::min(d2(i), (z.row(i) - centres.row(c)).squaredNorm());
  }
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 50; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (z.row(i) - centres.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (label[static_cast<std::size_t>(i)] != best) changed = true;
      label[static_cast<std::size_t>(i)] = best;
    }
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    centres.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      centres.row(label[static_cast<std::size_t>(i)]) += z.row(i);
      ++count[static_cast<std::size_t>(label[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (count[static_cast<std::size_t>(c)] > 0) {
        centres.row(c) /= count[static_cast<std::size_t>(c)];
        continue;
      }
      // Empty cluster: move the point farthest from its centre.
      Eigen::Index far = 0;
      double fd = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto li = label[static_cast<std::size_t>(i)];
        if (count[static_cast<std::size_t>(li)] <= 1) continue;
        const double d = (z.row(i) - centres.row(li) / std::max(1, count[static_cast<std::size_t>(li)])).squaredNorm();
        if (d > fd) {
          fd = d;
          far = i;
        }
      }
      --count[static_cast<std::size_t>(label[static_cast<std::size_t>(far)])];
      label[static_cast<std::size_t>(far)] = c;
      count[static_cast<std::size_t>(c)] = 1;
      centres.row(c) = z.row(far);
      changed = true;
    }
    if (!changed && iter > 0) break;
  }
  Matrix tau = Matrix::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) tau(i, label[static_cast<std::size_t>(i)]) = 1.0;
  return tau;
}

Matrix dirichlet_responsibilities(Eigen::Index n, int k, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  Matrix tau(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) tau(i, c) = e(rng);
    tau.row(i) /= tau.row(i).sum();
  }
  return tau;
}

template <class Fit>
std::size_t pick_best(const std::vector<Fit>& fits, auto score) {
  std::size_t best = 0;
  for (std::size_t s = 1; s < fits.size(); ++s) {
    const bool full_best = !fits[best].degenerate;
    const bool full_s = !fits[s].degenerate;
    if (full_s != full_best) {
      if (full_s) best = s;
      continue;
    }
    if (score(fits[s]) > score(fits[best])) best = s;
  }
  return best;
}

} // namespace

void EmOptions::validate() const {
  if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("tol must be > 0");
  if (n_starts < 1) throw ConfigError("n_starts must be >= 1");
  if (!(variance_floor_factor > 0.0)) throw ConfigError("variance floor factor must be > 0");
}

Vector column_scale(const Matrix& x) {
  Vector s(x.cols());
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double sd = 0.0;
    if (x.rows() > 1) {
      const double mean = x.col(j).mean();
      sd = std::sqrt((x.col(j).array() - mean).square().sum() / (n - 1.0));
    }
    s(j) = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

double penalized_objective(const MixtureParams& params, const RegressionDataset& data,
                           double lambda, const Vector& scale, PenaltyWeighting weighting) {
  double pen = 0.0;
  for (int k = 0; k < params.k(); ++k) {
    const double w = weighting == PenaltyWeighting::weighted ? params.pi[static_cast<std::size_t>(k)] : 1.0;
    pen += w * (params.beta[static_cast<std::size_t>(k)].array().abs().rowwise() *
                scale.transpose().array())
                   .sum();
  }
  return mixture::log_likelihood(params, data) - lambda * pen;
}

double lambda_max(const RegressionDataset& data, int k, PenaltyWeighting weighting) {
  data.validate();
  if (k < 1) throw ConfigError("K must be >= 1");
  EmOptions opts;
  const Workspace ws(data, opts);
  const Vector w = Vector::Constant(data.n(), 1.0 / k);
  const ClusterStats st = cluster_stats(ws, w);
  double best = 0.0;
  for (Eigen::Index l = 0; l < data.q(); ++l) {
    const double s2 = (w.array() * data.y.col(l).array().square()).sum() / st.nk;
    const double denom = ws.n * std::max(s2, ws.floor(l));
    double ratio = st.cross.col(l).cwiseAbs().maxCoeff() / denom;
    if (weighting == PenaltyWeighting::weighted) ratio *= k;
    best = std::max(best, ratio);
  }
  return best * (1.0 + 1e-10);
}

std::vector<ResponsibilityMatrix> initial_responsibilities(const RegressionDataset& data, int k,
                                                           const EmOptions& opts) {
  opts.validate();
  if (k < 1) throw ConfigError("K must be >= 1");
  if (data.n() < k)
    throw DataError("infeasible fit: n = " + std::to_string(data.n()) + " < K = " + std::to_string(k));
  if (k == 1) return {Matrix::Ones(data.n(), 1)};
  std::vector<ResponsibilityMatrix> out;
  Rng rng0(derive_seed(opts.seed, {static_cast<std::uint64_t>(k), 0}));
  out.push_back(kmeanspp_responsibilities(data, k, rng0));
  for (int s = 1; s < opts.n_starts; ++s) {
    Rng rng(derive_seed(opts.seed, {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(s)}));
    out.push_back(dirichlet_responsibilities(data.n(), k, rng));
  }
  return out;
}

PenalizedFit lasso_em_from(const RegressionDataset& data, const ResponsibilityMatrix& tau0,
                           double lambda, const EmOptions& opts) {
  opts.validate();
  data.validate();
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  check_tau(data, tau0);
  const Workspace ws(data, opts);
  return run_lasso(ws, tau0, lambda, opts);
}

PenalizedFit lasso_em_fit(const RegressionDataset& data, int k, double lambda,
                          const EmOptions& opts) {
  opts.validate();
  data.validate();
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  const auto starts = initial_responsibilities(data, k, opts);
  const Workspace ws(data, opts);
  std::vector<PenalizedFit> fits;
  for (const auto& tau0 : starts) fits.push_back(run_lasso(ws, tau0, lambda, opts));
  const auto best = pick_best(fits, [](const PenalizedFit& f) { return f.objective(); });
  PenalizedFit out = std::move(fits[best]);
  out.best_start = static_cast<int>(best);
  out.requested_k = k;
  return out;
}

RefitResult refit_em_from(const RegressionDataset& data, const ResponsibilityMatrix& tau0,
                          const Support& support, const EmOptions& opts) {
  opts.validate();
  data.validate();
  check_tau(data, tau0);
  const Workspace ws(data, opts);
  return run_refit(ws, tau0, MixtureParams{}, support, opts,
                   -std::numeric_limits<double>::infinity());
}

RefitResult refit_em_from(const RegressionDataset& data, const MixtureParams& start,
                          const Support& support, const EmOptions& opts) {
  opts.validate();
  data.validate();
  start.validate();
  if (start.p() != data.p() || start.q() != data.q())
    throw DimensionError("warm start does not match the dataset dimensions");
  const Workspace ws(data, opts);
  MixtureParams cur = to_standard_units(start, ws.scale);
  for (auto& b : cur.beta)
    for (Eigen::Index l = 0; l < b.rows(); ++l)
      for (Eigen::Index j = 0; j < b.cols(); ++j)
        if (!support.contains(static_cast<int>(l), static_cast<int>(j))) b(l, j) = 0.0;
  for (auto& s2 : cur.sigma_diag) s2 = s2.cwiseMax(ws.floor);
  ResponsibilityMatrix tau;
  const double ll0 = e_step(ws, cur, tau);
  check_tau(data, tau);
  return run_refit(ws, tau, cur, support, opts, ll0);
}

RefitResult refit_mle(const RegressionDataset& data, int k, const Support& support,
                      const EmOptions& opts, const MixtureParams* warm) {
  opts.validate();
  data.validate();
  for (const auto& [l, j] : support.entries())
    if (l >= data.q() || j >= data.p()) throw DimensionError("support entry outside the q x p grid");
  std::vector<RefitResult> fits;
  if (warm) {
    if (warm->k() != k) throw DimensionError("warm start has a different number of clusters");
    fits.push_back(refit_em_from(data, *warm, support, opts));
  }
  const int fresh = warm ? opts.n_starts - 1 : opts.n_starts;
  if (fresh > 0) {
    EmOptions o = opts;
    o.n_starts = fresh;
    const Workspace ws(data, opts);
    for (const auto& tau0 : initial_responsibilities(data, k, o))
      fits.push_back(run_refit(ws, tau0, MixtureParams{}, support, opts,
                               -std::numeric_limits<double>::infinity()));
  }
  const auto best = pick_best(fits, [](const RefitResult& r) { return r.loglik; });
  RefitResult out = std::move(fits[best]);
  out.requested_k = k;
  return out;
}

double lasso_kkt_residual(const RegressionDataset& data, const ResponsibilityMatrix& tau,
                          const MixtureParams& params, double lambda, PenaltyWeighting weighting) {
  EmOptions opts;
  const Workspace ws(data, opts);
  if (tau.cols() != params.k() || tau.rows() != data.n())
    throw DimensionError("responsibilities do not match params/data");
  const MixtureParams sp = to_standard_units(params, ws.scale);
  double worst = 0.0;
  for (int k = 0; k < params.k(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const ClusterStats st = cluster_stats(ws, tau.col(k));
    const double w = weighting == PenaltyWeighting::weighted ? params.pi[ks] : 1.0;
    for (Eigen::Index l = 0; l < data.q(); ++l) {
      const Vector b = sp.beta[ks].row(l).transpose();
      const Vector grad = (st.cross.col(l) - st.gram * b) / (ws.n * params.sigma_diag[ks](l));
      for (Eigen::Index j = 0; j < data.p(); ++j) {
        double v;
        if (b(j) != 0.0)
          v = std::abs(grad(j) - lambda * w * (b(j) > 0.0 ? 1.0 : -1.0));
        else
          v = std::max(0.0, std::abs(grad(j)) - lambda * w);
        worst = std::max(worst, v);
      }
    }
  }
  return worst;
}

} // namespace loadmix::em
