#include "loadmix/ingest.hpp"

#include "loadmix/csv.hpp"
#include "loadmix/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace loadmix::ingest {

namespace {

// Raw readings for one (consumer, day) as parsed, before the missing-data
// policy is applied. `count[t]` > 1 marks a duplicated slot.
struct RawDay {
  std::array<double, kSlotsPerDay> value{};
  std::array<int, kSlotsPerDay> count{};
};

struct RawPanel {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::map<Date, RawDay>> cells;
  std::vector<std::string> warnings;

  RawDay& cell(const std::string& consumer, Date date) {
    auto [it, inserted] = cells.try_emplace(consumer);
    if (inserted) order.push_back(consumer);
    return it->second[date];
  }
};

double parse_reading(std::string_view field, std::size_t line) {
  double v = 0.0;
  if (!csv::parse_double(field, v))
    throw ParseError(line, "malformed reading '" + std::string(field) + "'");
  if (!std::isfinite(v)) throw ParseError(line, "non-finite reading");
  if (v < 0.0) throw ParseError(line, "negative reading " + std::string(field));
  return v;
}

std::string slot_name(int t) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "h%02d", t);
  return buf;
}

void parse_wide(std::istream& in, RawPanel& raw) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!csv::trim(line).empty()) {
      header = csv::split(line);
      break;
    }
  }
  if (header.empty()) throw ParseError(lineno, "missing header");
  if (header.size() < 2 || header[0] != "consumer" || header[1] != "date")
    throw ParseError(lineno, "wide header must start with 'consumer,date'");
  const bool has_weekday = header.size() > 2 && header[2] == "weekday";
  const std::size_t first_slot = has_weekday ? 3 : 2;
  if (header.size() != first_slot + kSlotsPerDay)
    throw ParseError(lineno, "wide header needs 48 slot columns h00..h47, found " +
                                 std::to_string(header.size() - first_slot));
  for (int t = 0; t < kSlotsPerDay; ++t)
    if (header[first_slot + static_cast<std::size_t>(t)] != slot_name(t))
      throw ParseError(lineno, "expected column " + slot_name(t) + ", found '" +
                                   header[first_slot + static_cast<std::size_t>(t)] + "'");

  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != header.size())
      throw ParseError(lineno, "expected " + std::to_string(header.size()) + " fields, found " +
                                   std::to_string(fields.size()));
    if (fields[0].empty()) throw ParseError(lineno, "empty consumer id");
    Date date;
    try {
      date = Date::parse(fields[1]);
    } catch (const DataError& e) {
      throw ParseError(lineno, e.what());
    }
    if (has_weekday && !fields[2].empty()) {
      Weekday stated{};
      try {
        stated = parse_weekday(fields[2]);
      } catch (const ConfigError&) {
        throw ParseError(lineno, "unknown weekday '" + fields[2] + "'");
      }
      if (stated != date.weekday())
        raw.warnings.push_back("line " + std::to_string(lineno) + ": weekday '" + fields[2] +
                               "' does not match " + date.iso() + " (" +
                               std::string(weekday_name(date.weekday())) + "); using calendar");
    }
    RawDay& day = raw.cell(fields[0], date);
    if (std::any_of(day.count.begin(), day.count.end(), [](int c) { return c > 0; }))
      throw ParseError(lineno, "duplicate row for consumer " + fields[0] + " on " + date.iso());
    for (int t = 0; t < kSlotsPerDay; ++t) {
      const auto& f = fields[first_slot + static_cast<std::size_t>(t)];
      if (f.empty()) continue;
      day.value[t] = parse_reading(f, lineno);
      day.count[t] = 1;
    }
  }
}

// ISO-8601 local timestamp: date, 'T' or ' ', HH:MM[:SS[.fff]], optional
// trailing Z or +-HH:MM which is ignored (wall clock taken as written).
std::pair<Date, int> parse_timestamp(std::string_view ts, std::size_t lineno) {
  ts = csv::trim(ts);
  if (ts.size() < 16 || (ts[10] != 'T' && ts[10] != ' ') || ts[13] != ':')
    throw ParseError(lineno, "malformed timestamp '" + std::string(ts) + "'");
  Date date;
  try {
    date = Date::parse(ts.substr(0, 10));
  } catch (const DataError&) {
    throw ParseError(lineno, "malformed timestamp '" + std::string(ts) + "'");
  }
  auto two = [&](std::size_t pos) {
    const char a = ts[pos], b = ts[pos + 1];
    if (a < '0' || a > '9' || b < '0' || b > '9')
      throw ParseError(lineno, "malformed timestamp '" + std::string(ts) + "'");
    return (a - '0') * 10 + (b - '0');
  };
  const int hour = two(11);
  const int minute = two(14);
  if (hour > 23 || minute > 59)
    throw ParseError(lineno, "time out of range in '" + std::string(ts) + "'");
  return {date, hour * 2 + minute / 30};
}

void parse_long(std::istream& in, RawPanel& raw) {
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    if (!have_header) {
      if (fields.size() != 3 || fields[0] != "consumer" || fields[1] != "timestamp" ||
          fields[2] != "value")
        throw ParseError(lineno, "long header must be 'consumer,timestamp,value'");
      have_header = true;
      continue;
    }
    if (fields.size() != 3)
      throw ParseError(lineno, "expected 3 fields, found " + std::to_string(fields.size()));
    if (fields[0].empty()) throw ParseError(lineno, "empty consumer id");
    const auto [date, slot] = parse_timestamp(fields[1], lineno);
    const double v = parse_reading(fields[2], lineno);
    RawDay& day = raw.cell(fields[0], date);
    day.value[slot] = v;
    day.count[slot] += 1;
  }
  if (!have_header) throw ParseError(lineno, "missing header");
}

std::array<double, kSlotsPerDay> resolve_day(const RawDay& day, const std::string& consumer,
                                             Date date, MissingPolicy policy) {
  int missing = 0;
  for (int t = 0; t < kSlotsPerDay; ++t) {
    if (day.count[t] > 1)
      throw DataError("consumer " + consumer + " on " + date.iso() + ": slot " +
                      std::to_string(t) + " read " + std::to_string(day.count[t]) +
                      " times (DST-anomalous day?)");
    if (day.count[t] == 0) ++missing;
  }
  std::array<double, kSlotsPerDay> out = day.value;
  if (missing == 0) return out;
  if (policy == MissingPolicy::strict)
    throw DataError("consumer " + consumer + " on " + date.iso() + ": " +
                    std::to_string(kSlotsPerDay - missing) + " of 48 half-hours present");
  for (int t = 0; t < kSlotsPerDay; ++t) {
    if (day.count[t] != 0) continue;
    const bool left = t > 0 && day.count[t - 1] == 1;
    const bool right = t + 1 < kSlotsPerDay && day.count[t + 1] == 1;
    const bool left_exists = t > 0;
    const bool right_exists = t + 1 < kSlotsPerDay;
    if ((left_exists && !left) || (right_exists && !right))
      throw DataError("consumer " + consumer + " on " + date.iso() + ": missing run at slot " +
                      std::to_string(t) + " is not an isolated half-hour");
    if (left && right)
      out[t] = 0.5 * (day.value[t - 1] + day.value[t + 1]);
    else
      out[t] = left ? day.value[t - 1] : day.value[t + 1];
  }
  return out;
}

MeterPanel finalise(RawPanel raw, MissingPolicy policy) {
  if (raw.order.empty()) throw DataError("meter file contains no readings");
  std::vector<Date> days;
  for (const auto& id : raw.order)
    for (const auto& [date, _] : raw.cells.at(id)) days.push_back(date);
  std::sort(days.begin(), days.end());
  days.erase(std::unique(days.begin(), days.end()), days.end());

  MeterPanel panel;
  panel.consumer_ids = raw.order;
  panel.days = days;
  panel.warnings = std::move(raw.warnings);
  for (const auto& id : raw.order) {
    const auto& cells = raw.cells.at(id);
    std::vector<std::array<double, kSlotsPerDay>> rows;
    rows.reserve(days.size());
    for (Date d : days) {
      const auto it = cells.find(d);
      if (it == cells.end())
        throw DataError("consumer " + id + " has no readings on " + d.iso());
      rows.push_back(resolve_day(it->second, id, d, policy));
    }
    panel.readings.push_back(std::move(rows));
  }
  panel.validate();
  return panel;
}

} // namespace

void MeterPanel::validate() const {
  if (readings.size() != consumer_ids.size())
    throw DataError("panel readings are not aligned with consumer ids");
  for (std::size_t d = 1; d < days.size(); ++d)
    if (!(days[d - 1] < days[d])) throw DataError("panel days are not strictly increasing");
  std::vector<std::string> ids = consumer_ids;
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw DataError("duplicate consumer id in panel");
  for (std::size_t c = 0; c < consumer_ids.size(); ++c) {
    if (readings[c].size() != days.size())
      throw DataError("consumer " + consumer_ids[c] + " does not cover every panel day");
    for (std::size_t d = 0; d < days.size(); ++d)
      for (double v : readings[c][d])
        if (!std::isfinite(v) || v < 0.0)
          throw DataError("consumer " + consumer_ids[c] + " on " + days[d].iso() +
                          ": reading is negative or non-finite");
  }
}

std::vector<DayCurve> MeterPanel::curves(std::size_t consumer) const {
  std::vector<DayCurve> out;
  out.reserve(days.size());
  for (std::size_t d = 0; d < days.size(); ++d) {
    DayCurve c;
    c.values = readings.at(consumer)[d];
    c.date = days[d];
    c.weekday = days[d].weekday();
    out.push_back(c);
  }
  return out;
}

MeterPanel parse_meter_csv(std::istream& in, Layout layout, MissingPolicy policy) {
  RawPanel raw;
  if (layout == Layout::wide)
    parse_wide(in, raw);
  else
    parse_long(in, raw);
  return finalise(std::move(raw), policy);
}

MeterPanel parse_meter_csv(const std::filesystem::path& path, Layout layout,
                           MissingPolicy policy) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open meter file " + path.string());
  return parse_meter_csv(in, layout, policy);
}

std::vector<DayCurve> aggregate_synchronous(const MeterPanel& panel) {
  if (panel.consumer_ids.empty() || panel.days.empty()) throw DataError("empty meter panel");
  std::vector<DayCurve> out;
  out.reserve(panel.days.size());
  for (std::size_t d = 0; d < panel.days.size(); ++d) {
    DayCurve c;
    c.date = panel.days[d];
    c.weekday = panel.days[d].weekday();
    for (std::size_t i = 0; i < panel.consumer_ids.size(); ++i)
      for (int t = 0; t < kSlotsPerDay; ++t) c.values[t] += panel.readings[i][d][t];
    out.push_back(c);
  }
  return out;
}

DayPairSelector all_pairs() {
  return [](const DayCurve& eve, const DayCurve& day) {
    return eve.date && day.date && eve.date->next() == *day.date;
  };
}

DayPairSelector single_pair(Date eve_date) {
  return [eve_date](const DayCurve& eve, const DayCurve& day) {
    return eve.date && day.date && *eve.date == eve_date && *day.date == eve_date.next();
  };
}

DayPairSelector weekday_pair(Weekday eve_weekday) {
  return [eve_weekday](const DayCurve& eve, const DayCurve& day) {
    return eve.date && day.date && eve.date->next() == *day.date && eve.weekday == eve_weekday;
  };
}

RegressionDataset build_day_pairs(std::span<const DayCurve> curves, const DayPairSelector& selector,
                                  const wavelet::PreprocessSpec& prep,
                                  const std::string& consumer) {
  prep.validate();
  for (std::size_t i = 1; i < curves.size(); ++i)
    if (curves[i - 1].date && curves[i].date && !(*curves[i - 1].date < *curves[i].date))
      throw DataError("curves are not in chronological order");
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i + 1 < curves.size(); ++i)
    if (selector(curves[i], curves[i + 1])) picked.push_back(i);
  if (picked.empty()) throw DataError("no day pair selected for " + consumer);

  const Eigen::Index dim = prep.feature_dim();
  RegressionDataset out;
  out.preprocessing = prep.mode;
  out.x.resize(static_cast<Eigen::Index>(picked.size()), dim);
  out.y.resize(static_cast<Eigen::Index>(picked.size()), dim);
  for (std::size_t r = 0; r < picked.size(); ++r) {
    const DayCurve& eve = curves[picked[r]];
    const DayCurve& day = curves[picked[r] + 1];
    out.x.row(static_cast<Eigen::Index>(r)) = wavelet::preprocess(eve, prep).transpose();
    out.y.row(static_cast<Eigen::Index>(r)) = wavelet::preprocess(day, prep).transpose();
    out.meta.push_back(RowMeta{consumer, eve.date, day.date, eve.weekday, day.weekday});
    out.raw.push_back(CurvePair{eve, day});
  }
  return out;
}

RegressionDataset build_panel_pairs(const MeterPanel& panel, const DayPairSelector& selector,
                                    const wavelet::PreprocessSpec& prep) {
  RegressionDataset out;
  for (std::size_t c = 0; c < panel.consumer_count(); ++c) {
    const auto curves = panel.curves(c);
    bool any = false;
    for (std::size_t i = 0; i + 1 < curves.size() && !any; ++i)
      any = selector(curves[i], curves[i + 1]);
    if (!any) continue;
    out.append(build_day_pairs(curves, selector, prep, panel.consumer_ids[c]));
  }
  if (out.n() == 0) throw DataError("no day pair selected for any consumer");
  out.preprocessing = prep.mode;
  return out;
}

MeanWeekdayCurves mean_weekday_curves(const MeterPanel& panel, std::span<const Weekday> requested) {
  std::vector<Weekday> wanted(requested.begin(), requested.end());
  if (wanted.empty())
    for (int w = 0; w < 7; ++w) wanted.push_back(static_cast<Weekday>(w));

  MeanWeekdayCurves out;
  out.consumer_ids = panel.consumer_ids;
  for (std::size_t c = 0; c < panel.consumer_count(); ++c) {
    std::map<Weekday, DayCurve> means;
    for (Weekday w : wanted) {
      DayCurve acc;
      acc.weekday = w;
      int count = 0;
      for (std::size_t d = 0; d < panel.day_count(); ++d) {
        if (panel.days[d].weekday() != w) continue;
        for (int t = 0; t < kSlotsPerDay; ++t) acc.values[t] += panel.readings[c][d][t];
        ++count;
      }
      if (count == 0)
        throw DataError("consumer " + panel.consumer_ids[c] + " has no " +
                        std::string(weekday_name(w)) + " in the panel");
      for (double& v : acc.values) v /= count;
      means.emplace(w, acc);
    }
    out.means.push_back(std::move(means));
  }
  return out;
}

RegressionDataset build_mean_day_pairs(const MeanWeekdayCurves& means, Weekday eve,
                                       const wavelet::PreprocessSpec& prep) {
  const Weekday day = static_cast<Weekday>((static_cast<int>(eve) + 1) % 7);
  RegressionDataset out;
  out.preprocessing = prep.mode;
  const auto n = static_cast<Eigen::Index>(means.consumer_ids.size());
  if (n == 0) throw DataError("no consumers");
  out.x.resize(n, prep.feature_dim());
  out.y.resize(n, prep.feature_dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& m = means.means[static_cast<std::size_t>(i)];
    const auto& id = means.consumer_ids[static_cast<std::size_t>(i)];
    const auto e = m.find(eve);
    const auto d = m.find(day);
    if (e == m.end() || d == m.end())
      throw DataError("consumer " + id + " lacks a mean " +
                      std::string(weekday_name(e == m.end() ? eve : day)));
    out.x.row(i) = wavelet::preprocess(e->second, prep).transpose();
    out.y.row(i) = wavelet::preprocess(d->second, prep).transpose();
    out.meta.push_back(RowMeta{id, std::nullopt, std::nullopt, eve, day});
    out.raw.push_back(CurvePair{e->second, d->second});
  }
  return out;
}

} // namespace loadmix::ingest
