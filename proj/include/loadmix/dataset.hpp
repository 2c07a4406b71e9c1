#pragma once

#include "loadmix/date.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace loadmix {

inline constexpr int kSlotsPerDay = 48;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One day of half-hourly load (kWh per half hour).
struct DayCurve {
  std::array<double, kSlotsPerDay> values{};
  std::optional<Date> date;
  Weekday weekday = Weekday::mon;
};

/// The (eve, day) curves behind one regression row.
struct CurvePair {
  DayCurve eve;
  DayCurve day;
};

struct RowMeta {
  std::string consumer = "aggregate";
  std::optional<Date> eve_date;
  std::optional<Date> day_date;
  Weekday eve_weekday = Weekday::mon;
  Weekday day_weekday = Weekday::mon;
};

/// n observation pairs (x_i in R^p, y_i in R^q). Rows are aligned across
/// x, y, meta and (when present) the raw curves.
struct RegressionDataset {
  Matrix x;
  Matrix y;
  std::vector<RowMeta> meta;
  std::vector<CurvePair> raw;  // empty for feature-space (synthetic) data
  int preprocessing = 0;       // 1 or 2; 0 when features are not wavelet-derived

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }
  Eigen::Index q() const { return y.cols(); }

  /// Throws DataError when the dataset breaks its invariants.
  void validate() const;

  /// Rows `idx` in order.
  RegressionDataset subset(const std::vector<Eigen::Index>& idx) const;

  /// Appends rows of `other`; dimensions must match.
  void append(const RegressionDataset& other);
};

/// FNV-1a over shape and raw bytes of x and y, rendered as 16 hex digits.
std::string fingerprint(const RegressionDataset& data);

} // namespace loadmix
