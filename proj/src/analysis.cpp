#include "loadmix/analysis.hpp"

#include "loadmix/csv.hpp"
#include "loadmix/errors.hpp"
#include "loadmix/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

namespace loadmix::analysis {

namespace {

double quantile7(const std::vector<double>& sorted, double prob) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void check_model(const MixtureParams& params, const RegressionDataset& data) {
  params.validate();
  data.validate();
  if (params.p() != data.p() || params.q() != data.q())
    throw DimensionError("model is " + std::to_string(params.q()) + "x" +
                         std::to_string(params.p()) + " but data has q=" +
                         std::to_string(data.q()) + ", p=" + std::to_string(data.p()));
}

std::array<double, kSlotsPerDay> predicted_curve(const Vector& yhat, const DayCurve& eve, int mode) {
  const wavelet::PreprocessSpec spec{mode};
  const auto a4 = wavelet::haar_dwt(eve).a4;
  const double level =
      std::accumulate(eve.values.begin(), eve.values.end(), 0.0) / kSlotsPerDay;
  return wavelet::reconstruct_features(yhat, spec, a4, level);
}

Matrix ols(const RegressionDataset& data, const em::EmOptions& opts,
           std::vector<std::string>& warnings, const std::string& what) {
  em::EmOptions o = opts;
  o.n_starts = 1;
  const auto r = em::refit_mle(data, 1, mixture::Support::full(static_cast<int>(data.q()),
                                                               static_cast<int>(data.p())),
                               o);
  for (const auto& w : r.warnings) {
    const std::string msg = what + ": " + w;
    if (std::find(warnings.begin(), warnings.end(), msg) == warnings.end()) warnings.push_back(msg);
  }
  return r.params.beta.front();
}

} // namespace

FiveNumber five_number(std::vector<double> v) {
  if (v.empty()) throw DataError("five-number summary of an empty set");
  std::sort(v.begin(), v.end());
  return {v.front(), quantile7(v, 0.25), quantile7(v, 0.5), quantile7(v, 0.75), v.back()};
}

ClusterReport cluster_report(const MixtureParams& params, const RegressionDataset& data) {
  check_model(params, data);
  const int k = params.k();
  const auto tau = mixture::responsibilities(params, data);
  ClusterReport r;
  r.labels = mixture::map_assign(tau);
  r.model_pi = params.pi;
  r.counts.assign(static_cast<std::size_t>(k), 0);
  std::vector<std::vector<double>> maxes(static_cast<std::size_t>(k));
  std::vector<std::array<double, 2 * kSlotsPerDay>> sums(static_cast<std::size_t>(k));
  for (auto& s : sums) s.fill(0.0);
  const bool raw = !data.raw.empty();
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const auto c = static_cast<std::size_t>(r.labels[static_cast<std::size_t>(i)]);
    const double m = tau.row(i).maxCoeff();
    r.max_responsibility.push_back(m);
    ++r.counts[c];
    maxes[c].push_back(m);
    if (raw) {
      const CurvePair& cp = data.raw[static_cast<std::size_t>(i)];
      for (int t = 0; t < kSlotsPerDay; ++t) {
        sums[c][static_cast<std::size_t>(t)] += cp.eve.values[static_cast<std::size_t>(t)];
        sums[c][static_cast<std::size_t>(t + kSlotsPerDay)] +=
            cp.day.values[static_cast<std::size_t>(t)];
      }
    }
  }
  for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
    r.empirical_share.push_back(static_cast<double>(r.counts[c]) / static_cast<double>(data.n()));
    if (r.counts[c] == 0) {
      r.posterior_summary.emplace_back();
      r.mean_curves.emplace_back();
      continue;
    }
    r.posterior_summary.emplace_back(five_number(maxes[c]));
    if (raw) {
      auto mean = sums[c];
      for (double& v : mean) v /= r.counts[c];
      r.mean_curves.emplace_back(mean);
    } else {
      r.mean_curves.emplace_back();
    }
  }
  return r;
}

CrosstabTable crosstab_daytype(std::span<const int> labels, std::span<const Weekday> weekdays,
                               int k) {
  if (labels.size() != weekdays.size()) throw DataError("labels and weekdays differ in length");
  if (k < 1) throw ConfigError("crosstab needs k >= 1");
  CrosstabTable t;
  t.k = k;
  t.cells = Matrix::Zero(k, 7);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k) throw DataError("label out of range in crosstab");
    const int w = static_cast<int>(weekdays[i]);
    t.cells(labels[i], w) += 1.0;
    ++t.column_counts[static_cast<std::size_t>(w)];
  }
  for (int w = 0; w < 7; ++w)
    if (t.column_counts[static_cast<std::size_t>(w)] > 0)
      t.cells.col(w) /= static_cast<double>(t.column_counts[static_cast<std::size_t>(w)]);
  return t;
}

std::vector<Weekday> response_weekdays(const RegressionDataset& data) {
  std::vector<Weekday> out;
  out.reserve(data.meta.size());
  for (const auto& m : data.meta) out.push_back(m.day_weekday);
  return out;
}

std::vector<std::string> feature_labels(int mode, Eigen::Index dim) {
  if (mode == 1 || mode == 2) {
    const wavelet::PreprocessSpec spec{mode};
    if (spec.feature_dim() == dim) return spec.feature_labels();
  }
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < dim; ++i) out.push_back("f" + std::to_string(i + 1));
  return out;
}

LabeledMatrix beta_table(const MixtureParams& params, int c, int mode) {
  if (c < 0 || c >= params.k()) throw DataError("cluster index out of range");
  LabeledMatrix m;
  for (const auto& s : feature_labels(mode, params.p())) m.row_labels.push_back("x:" + s);
  for (const auto& s : feature_labels(mode, params.q())) m.col_labels.push_back("y:" + s);
  m.values = params.beta[static_cast<std::size_t>(c)].transpose();
  return m;
}

LabeledMatrix beta_difference(const MixtureParams& params, int a, int b, int mode) {
  LabeledMatrix m = beta_table(params, a, mode);
  m.values -= beta_table(params, b, mode).values;
  return m;
}

LabeledMatrix sigma_table(const MixtureParams& params, int mode) {
  LabeledMatrix m;
  for (int c = 0; c < params.k(); ++c) m.row_labels.push_back("cluster_" + std::to_string(c + 1));
  for (const auto& s : feature_labels(mode, params.q())) m.col_labels.push_back("y:" + s);
  m.values.resize(params.k(), params.q());
  for (int c = 0; c < params.k(); ++c)
    m.values.row(c) = params.sigma_diag[static_cast<std::size_t>(c)].transpose();
  return m;
}

Matrix import_beta(const LabeledMatrix& table) { return table.values.transpose(); }

void write_labeled_matrix(std::ostream& out, const LabeledMatrix& m,
                          const io::Provenance& header) {
  io::write_provenance(out, header);
  out << "label";
  for (const auto& c : m.col_labels) out << ',' << csv::escape(c);
  out << '\n';
  for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
    out << csv::escape(m.row_labels[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < m.values.cols(); ++c)
      out << ',' << csv::format_double(m.values(r, c));
    out << '\n';
  }
}

LabeledMatrix read_labeled_matrix(std::istream& in) {
  std::string line;
  const auto header = io::read_provenance(in, line);
  std::size_t lineno = header.size() + 1;
  auto cols = csv::split(line);
  if (cols.empty() || cols[0] != "label") throw ParseError(lineno, "expected a 'label' column");
  LabeledMatrix m;
  m.col_labels.assign(cols.begin() + 1, cols.end());
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != cols.size()) throw ParseError(lineno, "wrong field count");
    m.row_labels.push_back(f[0]);
    std::vector<double> row;
    for (std::size_t c = 1; c < f.size(); ++c) {
      double v = 0.0;
      if (!csv::parse_double(f[c], v)) throw ParseError(lineno, "malformed number");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  m.values.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(m.col_labels.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

void write_clusters(std::ostream& out, const ClusterReport& r, const RegressionDataset& data,
                    const io::Provenance& header) {
  io::write_provenance(out, header);
  out << "row,consumer,day_date,day_weekday,label,max_responsibility\n";
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    const RowMeta& m = data.meta[i];
    out << i + 1 << ',' << csv::escape(m.consumer) << ',' << (m.day_date ? m.day_date->iso() : "")
        << ',' << weekday_name(m.day_weekday) << ',' << r.labels[i] + 1 << ','
        << csv::format_double(r.max_responsibility[i]) << '\n';
  }
}

void write_crosstab(std::ostream& out, const CrosstabTable& t, const io::Provenance& header) {
  io::write_provenance(out, header);
  out << "cluster";
  for (int w = 0; w < 7; ++w) out << ',' << weekday_name(static_cast<Weekday>(w));
  out << '\n';
  for (int c = 0; c < t.k; ++c) {
    out << c + 1;
    for (int w = 0; w < 7; ++w) out << ',' << csv::format_double(t.cells(c, w));
    out << '\n';
  }
  out << "count";
  for (int n : t.column_counts) out << ',' << n;
  out << '\n';
}

void write_cluster_profiles(std::ostream& out, const ClusterReport& r,
                            const io::Provenance& header) {
  io::write_provenance(out, header);
  out << "cluster,count,share,pi,tau_min,tau_q1,tau_median,tau_q3,tau_max";
  for (int t = 0; t < kSlotsPerDay; ++t) out << ",eve_h" << (t < 10 ? "0" : "") << t;
  for (int t = 0; t < kSlotsPerDay; ++t) out << ",day_h" << (t < 10 ? "0" : "") << t;
  out << '\n';
  for (std::size_t c = 0; c < r.counts.size(); ++c) {
    out << c + 1 << ',' << r.counts[c] << ',' << csv::format_double(r.empirical_share[c]) << ','
        << csv::format_double(r.model_pi[c]);
    if (const auto& s = r.posterior_summary[c]) {
      for (double v : {s->min, s->q1, s->median, s->q3, s->max}) out << ',' << csv::format_double(v);
    } else {
      out << ",,,,,";
    }
    if (const auto& m = r.mean_curves[c]) {
      for (double v : *m) out << ',' << csv::format_double(v);
    } else {
      for (int t = 0; t < 2 * kSlotsPerDay; ++t) out << ',';
    }
    out << '\n';
  }
}

double rmse(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size() || predicted.empty())
    throw DimensionError("rmse needs two equal-length non-empty curves");
  double s = 0.0;
  for (std::size_t t = 0; t < predicted.size(); ++t) {
    const double e = predicted[t] - actual[t];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(predicted.size()));
}

ForecastResult forecast_compare(const RegressionDataset& train, const RegressionDataset& test,
                                const MixtureParams& model, const em::EmOptions& opts) {
  check_model(model, train);
  test.validate();
  if (test.p() != train.p() || test.q() != train.q())
    throw DimensionError("train and test features differ in dimension");
  const int mode = train.preprocessing;
  if (mode != 1 && mode != 2) throw DataError("forecasting needs wavelet features (prep 1 or 2)");
  if (test.preprocessing != mode) throw DataError("train and test use different preprocessing");
  if (train.raw.empty() || test.raw.empty())
    throw DataError("forecasting needs raw curves in both train and test features");

  ForecastResult out;
  const int k = model.k();
  out.labels = mixture::map_assign(mixture::responsibilities(model, train));

  // Carried label per consumer: its most frequent train label, lowest on ties.
  std::map<std::string, std::vector<int>> votes;
  for (std::size_t i = 0; i < train.meta.size(); ++i) {
    auto& v = votes[train.meta[i].consumer];
    if (v.empty()) v.assign(static_cast<std::size_t>(k), 0);
    ++v[static_cast<std::size_t>(out.labels[i])];
  }
  std::map<std::string, int> carried;
  for (const auto& [id, v] : votes)
    carried[id] = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());

  const Matrix pooled = ols(train, opts, out.warnings, "pooled OLS");
  std::vector<Matrix> per_cluster;
  for (int c = 0; c < k; ++c) {
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < out.labels.size(); ++i)
      if (out.labels[i] == c) idx.push_back(static_cast<Eigen::Index>(i));
    if (idx.empty()) {
      out.warnings.push_back("cluster " + std::to_string(c + 1) +
                             " has no train rows; its consumers use the pooled model");
      per_cluster.push_back(pooled);
    } else {
      per_cluster.push_back(
          ols(train.subset(idx), opts, out.warnings, "cluster " + std::to_string(c + 1) + " OLS"));
    }
  }

  auto score = [&](const RegressionDataset& d, Eigen::Index i, int label, bool is_test) {
    const CurvePair& cp = d.raw[static_cast<std::size_t>(i)];
    const Vector x = d.x.row(i).transpose();
    ForecastRow row;
    row.consumer = d.meta[static_cast<std::size_t>(i)].consumer;
    row.test = is_test;
    const auto& actual = cp.day.values;
    row.rmse_pooled = rmse(predicted_curve(pooled * x, cp.eve, mode), actual);
    row.rmse_mixture =
        rmse(predicted_curve(model.beta[static_cast<std::size_t>(label)] * x, cp.eve, mode), actual);
    row.rmse_cluster_ols =
        rmse(predicted_curve(per_cluster[static_cast<std::size_t>(label)] * x, cp.eve, mode), actual);
    out.rows.push_back(std::move(row));
  };

  for (Eigen::Index i = 0; i < train.n(); ++i)
    score(train, i, out.labels[static_cast<std::size_t>(i)], false);
  std::map<std::string, bool> seen_in_test;
  for (Eigen::Index i = 0; i < test.n(); ++i) {
    const std::string& id = test.meta[static_cast<std::size_t>(i)].consumer;
    seen_in_test[id] = true;
    const auto it = carried.find(id);
    if (it == carried.end()) {
      out.warnings.push_back("consumer " + id + " has no train pair; excluded from test scoring");
      continue;
    }
    score(test, i, it->second, true);
  }
  for (const auto& [id, label] : carried)
    if (!seen_in_test.count(id))
      out.warnings.push_back("consumer " + id + " absent from test; excluded");
  return out;
}

void write_rmse(std::ostream& out, const ForecastResult& r, const io::Provenance& header) {
  io::write_provenance(out, header);
  out << "consumer,rmse_pooled,rmse_mixture,rmse_cluster_ols,split\n";
  for (const auto& row : r.rows)
    out << csv::escape(row.consumer) << ',' << csv::format_double(row.rmse_pooled) << ','
        << csv::format_double(row.rmse_mixture) << ',' << csv::format_double(row.rmse_cluster_ols)
        << ',' << (row.test ? "test" : "train") << '\n';
}

} // namespace loadmix::analysis
