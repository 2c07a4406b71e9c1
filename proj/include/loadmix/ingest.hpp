#pragma once

#include "loadmix/dataset.hpp"
#include "loadmix/wavelet.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace loadmix::ingest {

enum class Layout { wide, long_format };
enum class MissingPolicy { strict, impute_linear };

/// Half-hourly readings for a set of consumers over a common set of days.
/// readings[c][d] is consumer c on days[d].
struct MeterPanel {
  std::vector<std::string> consumer_ids;
  std::vector<Date> days;
  std::vector<std::vector<std::array<double, kSlotsPerDay>>> readings;
  std::vector<std::string> warnings;

  std::size_t consumer_count() const { return consumer_ids.size(); }
  std::size_t day_count() const { return days.size(); }

  /// Throws DataError naming the offending consumer/date.
  void validate() const;

  /// That consumer's days as curves, in date order.
  std::vector<DayCurve> curves(std::size_t consumer) const;
};

MeterPanel parse_meter_csv(const std::filesystem::path& path, Layout layout,
                           MissingPolicy policy = MissingPolicy::strict);
MeterPanel parse_meter_csv(std::istream& in, Layout layout,
                           MissingPolicy policy = MissingPolicy::strict);

/// Slot-wise sum over consumers, one curve per day.
std::vector<DayCurve> aggregate_synchronous(const MeterPanel& panel);

/// Decides whether an adjacent (eve, day) pair of curves becomes a row.
using DayPairSelector = std::function<bool(const DayCurve& eve, const DayCurve& day)>;

/// Every pair of calendar-consecutive days.
DayPairSelector all_pairs();
/// Only the pair (eve, eve + 1).
DayPairSelector single_pair(Date eve);
/// Consecutive pairs whose eve falls on `eve_weekday`.
DayPairSelector weekday_pair(Weekday eve_weekday);

/// Rows x = preprocess(eve), y = preprocess(day) for each adjacent pair of
/// `curves` accepted by `selector`. Throws DataError if no pair is selected.
RegressionDataset build_day_pairs(std::span<const DayCurve> curves, const DayPairSelector& selector,
                                  const wavelet::PreprocessSpec& prep,
                                  const std::string& consumer = "aggregate");

/// build_day_pairs applied to each consumer of the panel, rows concatenated
/// in consumer order.
RegressionDataset build_panel_pairs(const MeterPanel& panel, const DayPairSelector& selector,
                                    const wavelet::PreprocessSpec& prep);

struct MeanWeekdayCurves {
  std::vector<std::string> consumer_ids;
  std::vector<std::map<Weekday, DayCurve>> means;  // aligned with consumer_ids
};

/// Slot-wise mean of each consumer's occurrences of every requested weekday.
MeanWeekdayCurves mean_weekday_curves(const MeterPanel& panel,
                                      std::span<const Weekday> requested = {});

/// One row per consumer: (mean `eve` weekday, mean following weekday).
RegressionDataset build_mean_day_pairs(const MeanWeekdayCurves& means, Weekday eve,
                                       const wavelet::PreprocessSpec& prep);

} // namespace loadmix::ingest
