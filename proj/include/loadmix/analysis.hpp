#pragma once

#include "loadmix/dataset.hpp"
#include "loadmix/em.hpp"
#include "loadmix/io.hpp"
#include "loadmix/mixture.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace loadmix::analysis {

using mixture::MixtureParams;

struct FiveNumber {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Linear-interpolation quantiles (type 7). Throws on empty input.
FiveNumber five_number(std::vector<double> values);

struct ClusterReport {
  std::vector<int> labels;  // 0-based MAP assignment per row
  std::vector<double> max_responsibility;
  std::vector<int> counts;
  std::vector<double> empirical_share;  // counts / n
  std::vector<double> model_pi;
  std::vector<std::optional<FiveNumber>> posterior_summary;  // empty cluster -> nullopt
  // Mean of the concatenated (eve, day) raw curves; nullopt for empty
  // clusters or when the dataset carries no raw curves.
  std::vector<std::optional<std::array<double, 2 * kSlotsPerDay>>> mean_curves;
};

ClusterReport cluster_report(const MixtureParams& params, const RegressionDataset& data);

/// Column-normalised share of each response-day weekday falling in each
/// cluster. Weekdays with no rows give an all-zero column.
struct CrosstabTable {
  int k = 0;
  Matrix cells;                  // k x 7, columns Mon..Sun
  std::array<int, 7> column_counts{};
};

CrosstabTable crosstab_daytype(std::span<const int> labels, std::span<const Weekday> weekdays,
                               int k);
std::vector<Weekday> response_weekdays(const RegressionDataset& data);

struct LabeledMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Matrix values;
};

/// Band labels ("D4_1", ...) when `mode` is 1 or 2 and the dimension fits,
/// "f1".."f<dim>" otherwise.
std::vector<std::string> feature_labels(int mode, Eigen::Index dim);

/// Cluster `c` of `params` as a p x q table: rows are regressor
/// coefficients, columns response coefficients.
LabeledMatrix beta_table(const MixtureParams& params, int c, int mode);
LabeledMatrix beta_difference(const MixtureParams& params, int a, int b, int mode);
/// K x q table of diagonal variances.
LabeledMatrix sigma_table(const MixtureParams& params, int mode);

/// q x p coefficient matrix back from a beta_table export.
Matrix import_beta(const LabeledMatrix& table);

void write_labeled_matrix(std::ostream& out, const LabeledMatrix& m, const io::Provenance& header);
LabeledMatrix read_labeled_matrix(std::istream& in);

void write_clusters(std::ostream& out, const ClusterReport& r, const RegressionDataset& data,
                    const io::Provenance& header);
void write_crosstab(std::ostream& out, const CrosstabTable& t, const io::Provenance& header);
/// One row per cluster: share, pi, posterior five-number summary, 96 mean-curve values.
void write_cluster_profiles(std::ostream& out, const ClusterReport& r,
                            const io::Provenance& header);

double rmse(std::span<const double> predicted, std::span<const double> actual);

struct ForecastRow {
  std::string consumer;
  double rmse_pooled = 0.0;
  double rmse_mixture = 0.0;
  double rmse_cluster_ols = 0.0;
  bool test = false;
};

struct ForecastResult {
  std::vector<ForecastRow> rows;  // train rows first, then test rows
  std::vector<int> labels;        // carried label per train row
  std::vector<std::string> warnings;
};

/// Compares three day-ahead predictors on train (eve -> day) and test pairs:
/// pooled OLS, the mixture with each consumer's train MAP label, and OLS
/// refitted within each cluster. Predictions are turned back into 48-slot
/// curves (level or A4 carried over from the regressor day) and scored by
/// RMSE against the raw response day. Both datasets need raw curves.
ForecastResult forecast_compare(const RegressionDataset& train, const RegressionDataset& test,
                                const MixtureParams& model, const em::EmOptions& opts);

void write_rmse(std::ostream& out, const ForecastResult& r, const io::Provenance& header);

} // namespace loadmix::analysis
