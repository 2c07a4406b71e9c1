#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "loadmix/csv.hpp"
#include "loadmix/errors.hpp"
#include "loadmix/ingest.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

using namespace loadmix;
using namespace loadmix::ingest;

namespace {

std::string wide_header() {
  std::string h = "consumer,date";
  for (int t = 0; t < 48; ++t) h += (t < 10 ? ",h0" : ",h") + std::to_string(t);
  return h + "\n";
}

std::string wide_row(const std::string& id, Date d, const std::array<double, 48>& v) {
  std::string r = id + "," + d.iso();
  for (double x : v) r += "," + csv::format_double(x);
  return r + "\n";
}

std::string long_day(const std::string& id, Date d, const std::array<double, 48>& v, int skip = -1,
                     int repeat = -1) {
  std::string out;
  for (int t = 0; t < 48; ++t) {
    if (t == skip) continue;
    char ts[32];
    std::snprintf(ts, sizeof ts, "%sT%02d:%02d:00", d.iso().c_str(), t / 2, 30 * (t % 2));
    const std::string line = id + "," + ts + "," + csv::format_double(v[static_cast<std::size_t>(t)]) + "\n";
    out += line;
    if (t == repeat) out += line;
  }
  return out;
}

MeterPanel synthetic_panel(int consumers, int days, std::uint64_t seed, Date start = Date(2010, 1, 1)) {
  std::mt19937_64 rng(seed);
  MeterPanel p;
  for (int c = 0; c < consumers; ++c) p.consumer_ids.push_back("c" + std::to_string(c));
  Date d = start;
  for (int i = 0; i < days; ++i, d = d.next()) p.days.push_back(d);
  for (int c = 0; c < consumers; ++c) {
    p.readings.emplace_back();
    for (int i = 0; i < days; ++i) p.readings.back().push_back(testsupport::random_curve(rng, 0.0, 3.0));
  }
  return p;
}

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string line;
  std::vector<std::vector<std::string>> out;
  std::getline(in, line);
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(csv::split(line));
  return out;
}

} // namespace

TEST_CASE("3 consumers x 7 days fixture and its hand-summed aggregate") {
  const auto panel = parse_meter_csv(testsupport::fixture("panel_3x7_wide.csv"), Layout::wide);
  CHECK(panel.consumer_count() == 3);
  CHECK(panel.day_count() == 7);
  CHECK(panel.readings.size() * panel.readings[0].size() == 21);
  CHECK(panel.warnings.empty());

  const auto agg = aggregate_synchronous(panel);
  const auto expected = read_rows(testsupport::fixture("panel_3x7_aggregate.csv"));
  REQUIRE(agg.size() == expected.size());
  for (std::size_t d = 0; d < agg.size(); ++d) {
    CHECK(agg[d].date->iso() == expected[d][0]);
    for (std::size_t t = 0; t < 48; ++t) {
      double v = 0.0;
      REQUIRE(csv::parse_double(expected[d][t + 1], v));
      CHECK(agg[d].values[t] == doctest::Approx(v).epsilon(1e-12));
    }
  }
}

TEST_CASE("long layout matches the same readings in wide layout") {
  const auto wide = parse_meter_csv(testsupport::fixture("panel_3x7_wide.csv"), Layout::wide);
  const auto lng = parse_meter_csv(testsupport::fixture("panel_long.csv"), Layout::long_format);
  REQUIRE(lng.consumer_count() == 1);
  REQUIRE(lng.day_count() == 2);
  for (std::size_t d = 0; d < 2; ++d) CHECK(lng.readings[0][d] == wide.readings[0][d]);
}

TEST_CASE("1 consumer x 2 days gives 2 curves and one pair") {
  std::mt19937_64 rng(1);
  const Date d0(2011, 3, 7);
  std::stringstream s;
  s << wide_header() << wide_row("A", d0, testsupport::random_curve(rng, 0, 1))
    << wide_row("A", d0.next(), testsupport::random_curve(rng, 0, 1));
  const auto panel = parse_meter_csv(s, Layout::wide);
  const auto curves = panel.curves(0);
  REQUIRE(curves.size() == 2);
  CHECK(curves[0].weekday == Weekday::mon);
  const auto data = build_day_pairs(curves, all_pairs(), wavelet::PreprocessSpec{2}, "A");
  CHECK(data.n() == 1);
  CHECK(data.p() == 9);
  CHECK(data.q() == 9);
  CHECK(data.meta[0].day_weekday == Weekday::tue);
  REQUIRE(data.raw.size() == 1);
  CHECK(data.raw[0].day.values == curves[1].values);
}

TEST_CASE("missing half-hour: strict rejects, impute fills isolated gaps") {
  std::mt19937_64 rng(2);
  const auto v = testsupport::random_curve(rng, 0, 2);
  const Date d(2010, 2, 3);
  const std::string text = "consumer,timestamp,value\n" + long_day("h7", d, v, 17);
  {
    std::stringstream s(text);
    try {
      parse_meter_csv(s, Layout::long_format);
      FAIL("expected a data error");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("h7") != std::string::npos);
      CHECK(msg.find("2010-02-03") != std::string::npos);
    }
  }
  std::stringstream s(text);
  const auto panel = parse_meter_csv(s, Layout::long_format, MissingPolicy::impute_linear);
  CHECK(panel.readings[0][0][17] == doctest::Approx(0.5 * (v[16] + v[18])));
  CHECK(panel.readings[0][0][16] == v[16]);
}

TEST_CASE("duplicate slot (DST fall-back) is rejected") {
  std::mt19937_64 rng(3);
  std::stringstream s("consumer,timestamp,value\n" +
                      long_day("z", Date(2010, 10, 31), testsupport::random_curve(rng, 0, 1), -1, 4));
  CHECK_THROWS_AS(parse_meter_csv(s, Layout::long_format), DataError);
}

TEST_CASE("malformed rows carry their line number") {
  std::stringstream s(wide_header() + "A,2010-01-01,1,2,3\n");
  try {
    parse_meter_csv(s, Layout::wide);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::stringstream bad_date(wide_header() + "A,2010-13-01" + std::string(48 * 2, ',').substr(0, 0));
  CHECK_THROWS_AS(parse_meter_csv(bad_date, Layout::wide), DataError);
}

TEST_CASE("weekday column mismatch is a warning; calendar wins") {
  std::string h = "consumer,date,weekday";
  for (int t = 0; t < 48; ++t) h += (t < 10 ? ",h0" : ",h") + std::to_string(t);
  std::string row = "A,2010-01-04,Sun";  // a Monday
  for (int t = 0; t < 48; ++t) row += ",1";
  std::stringstream s(h + "\n" + row + "\n");
  const auto panel = parse_meter_csv(s, Layout::wide);
  CHECK(panel.warnings.size() == 1);
  CHECK(panel.curves(0)[0].weekday == Weekday::mon);
}

TEST_CASE("aggregation: single consumer, cancellation, linearity") {
  const auto one = synthetic_panel(1, 4, 5);
  const auto agg1 = aggregate_synchronous(one);
  for (std::size_t d = 0; d < 4; ++d) CHECK(agg1[d].values == one.readings[0][d]);

  MeterPanel two = synthetic_panel(1, 3, 6);
  two.consumer_ids.push_back("mirror");
  two.readings.push_back(two.readings[0]);
  for (auto& day : two.readings[1])
    for (auto& v : day) v = 10.0 - v;
  for (auto& day : two.readings[0])
    for (auto& v : day) v = std::min(v, 10.0);
  for (const auto& c : aggregate_synchronous(two))
    for (double v : c.values) CHECK(v == doctest::Approx(10.0));

  auto p = synthetic_panel(4, 3, 7);
  const auto base = aggregate_synchronous(p);
  for (auto& c : p.readings)
    for (auto& day : c)
      for (auto& v : day) v *= 2.5;
  const auto scaled = aggregate_synchronous(p);
  for (std::size_t d = 0; d < base.size(); ++d)
    for (std::size_t t = 0; t < 48; ++t)
      CHECK(scaled[d].values[t] == doctest::Approx(2.5 * base[d].values[t]).epsilon(1e-13));
}

TEST_CASE("row counts: 339 aggregate days give 338 pairs; 487 consumers give 487 rows") {
  const auto year = synthetic_panel(1, 339, 8);
  const auto agg = aggregate_synchronous(year);
  CHECK(build_day_pairs(agg, all_pairs(), wavelet::PreprocessSpec{2}).n() == 338);

  const auto many = synthetic_panel(487, 3, 9, Date(2010, 1, 4));
  const auto rows = build_panel_pairs(many, single_pair(Date(2010, 1, 5)), wavelet::PreprocessSpec{1});
  CHECK(rows.n() == 487);
  CHECK(rows.p() == 12);
  CHECK(rows.meta[0].eve_date->iso() == "2010-01-05");
  CHECK(rows.meta[486].consumer == "c486");
}

TEST_CASE("all-pairs skips calendar gaps; selectors count exactly") {
  auto p = synthetic_panel(1, 10, 10, Date(2010, 1, 4));  // Mon 4 .. Wed 13
  auto curves = p.curves(0);
  curves.erase(curves.begin() + 5);  // drop Sat 9: pairs (8,9) and (9,10) vanish
  CHECK(build_day_pairs(curves, all_pairs(), wavelet::PreprocessSpec{2}).n() == 7);
  CHECK(build_day_pairs(curves, weekday_pair(Weekday::mon), wavelet::PreprocessSpec{2}).n() == 2);
  CHECK_THROWS_AS(build_day_pairs(curves, single_pair(Date(2010, 1, 9)), wavelet::PreprocessSpec{2}),
                  DataError);
}

TEST_CASE("mean weekday curves: one Monday, two Mondays, 52-week oracle, order invariance") {
  {
    const auto p = synthetic_panel(1, 7, 11, Date(2010, 1, 4));
    const Weekday mon[] = {Weekday::mon};
    const auto m = mean_weekday_curves(p, mon);
    CHECK(m.means[0].at(Weekday::mon).values == p.readings[0][0]);
  }
  {
    const auto p = synthetic_panel(1, 8, 12, Date(2010, 1, 4));
    const Weekday mon[] = {Weekday::mon};
    const auto m = mean_weekday_curves(p, mon);
    for (std::size_t t = 0; t < 48; ++t)
      CHECK(m.means[0].at(Weekday::mon).values[t] ==
            doctest::Approx(0.5 * (p.readings[0][0][t] + p.readings[0][7][t])));
  }
  // 52 weeks through the CSV reader, rows shuffled in the file.
  const auto p = synthetic_panel(2, 364, 13, Date(2009, 1, 5));
  std::vector<std::string> rows;
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t d = 0; d < p.days.size(); ++d) rows.push_back(wide_row(p.consumer_ids[c], p.days[d], p.readings[c][d]));
  std::mt19937_64 rng(14);
  std::shuffle(rows.begin(), rows.end(), rng);
  std::stringstream s;
  s << wide_header();
  for (const auto& r : rows) s << r;
  const auto parsed = parse_meter_csv(s, Layout::wide);
  const auto means = mean_weekday_curves(parsed);
  const auto direct = mean_weekday_curves(p);
  for (std::size_t c = 0; c < 2; ++c) {
    for (int w = 0; w < 7; ++w) {
      std::array<double, 48> oracle{};
      int count = 0;
      for (std::size_t d = 0; d < p.days.size(); ++d) {
        if (static_cast<int>(p.days[d].weekday()) != w) continue;
        ++count;
        for (std::size_t t = 0; t < 48; ++t) oracle[t] += p.readings[c][d][t];
      }
      CHECK(count == 52);
      const auto pc = static_cast<std::size_t>(
          std::find(means.consumer_ids.begin(), means.consumer_ids.end(), p.consumer_ids[c]) -
          means.consumer_ids.begin());
      REQUIRE(pc < 2);
      const auto& got = means.means[pc].at(static_cast<Weekday>(w)).values;
      const auto& got_direct = direct.means[c].at(static_cast<Weekday>(w)).values;
      for (std::size_t t = 0; t < 48; ++t) {
        CHECK(got[t] == doctest::Approx(oracle[t] / count).epsilon(1e-12));
        CHECK(got_direct[t] == doctest::Approx(oracle[t] / count).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("consumer lacking a requested weekday is named in the error") {
  const auto p = synthetic_panel(2, 3, 15, Date(2010, 1, 4));  // Mon..Wed
  const Weekday fri[] = {Weekday::fri};
  try {
    mean_weekday_curves(p, fri);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("c0") != std::string::npos);
    CHECK(msg.find("Fri") != std::string::npos);
  }
}

TEST_CASE("mean-day pairs: one row per consumer") {
  const auto p = synthetic_panel(5, 14, 16, Date(2010, 1, 4));
  const Weekday tw[] = {Weekday::tue, Weekday::wed};
  const auto data = build_mean_day_pairs(mean_weekday_curves(p, tw), Weekday::tue, wavelet::PreprocessSpec{2});
  CHECK(data.n() == 5);
  CHECK(data.meta[2].consumer == "c2");
  CHECK(data.meta[2].eve_weekday == Weekday::tue);
  CHECK(data.meta[2].day_weekday == Weekday::wed);
}
