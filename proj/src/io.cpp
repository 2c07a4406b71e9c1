#include "loadmix/io.hpp"

#include "loadmix/csv.hpp"
#include "loadmix/errors.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

namespace loadmix::io {

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::string two_digit(int h) {
  return (h < 10 ? "0" : "") + std::to_string(h);
}

std::string optional_date(const std::optional<Date>& d) { return d ? d->iso() : std::string(); }

std::optional<Date> parse_optional_date(const std::string& s, std::size_t line) {
  if (s.empty()) return std::nullopt;
  try {
    return Date::parse(s);
  } catch (const Error& e) {
    throw ParseError(line, e.what());
  }
}

double field_double(const std::string& s, std::size_t line, const std::string& column) {
  double v = 0.0;
  if (!csv::parse_double(s, v)) throw ParseError(line, "malformed number in column " + column);
  return v;
}

Json matrix_rows(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_rows(const Json& j) {
  if (!j.is_array() || j.empty()) throw DataError("expected a non-empty matrix");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw DataError("ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw DataError("expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

template <typename F>
auto json_guard(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed JSON: ") + e.what());
  }
}

} // namespace

void write_provenance(std::ostream& out, const Provenance& header) {
  for (const auto& [k, v] : header) out << "# " << k << '=' << v << '\n';
}

Provenance read_provenance(std::istream& in, std::string& first_line) {
  Provenance out;
  first_line.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] != '#') {
      first_line = line;
      break;
    }
    std::string_view body = csv::trim(std::string_view(line).substr(1));
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      out.emplace_back(std::string(body), "");
    else
      out.emplace_back(std::string(csv::trim(body.substr(0, eq))),
                       std::string(csv::trim(body.substr(eq + 1))));
  }
  return out;
}

std::string provenance_value(const Provenance& header, const std::string& key) {
  for (const auto& [k, v] : header)
    if (k == key) return v;
  return {};
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("write failed: " + path.string());
}

void write_features(std::ostream& out, const RegressionDataset& data, const Provenance& header) {
  data.validate();
  write_provenance(out, header);
  out << "row,consumer,eve_date,day_date,eve_weekday,day_weekday";
  for (Eigen::Index j = 0; j < data.p(); ++j) out << ",x_" << j + 1;
  for (Eigen::Index l = 0; l < data.q(); ++l) out << ",y_" << l + 1;
  const bool raw = !data.raw.empty();
  if (raw) {
    for (int h = 0; h < kSlotsPerDay; ++h) out << ",eve_h" << two_digit(h);
    for (int h = 0; h < kSlotsPerDay; ++h) out << ",day_h" << two_digit(h);
  }
  out << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const RowMeta& m = data.meta[static_cast<std::size_t>(i)];
    out << i + 1 << ',' << csv::escape(m.consumer) << ',' << optional_date(m.eve_date) << ','
        << optional_date(m.day_date) << ',' << weekday_name(m.eve_weekday) << ','
        << weekday_name(m.day_weekday);
    for (Eigen::Index j = 0; j < data.p(); ++j) out << ',' << csv::format_double(data.x(i, j));
    for (Eigen::Index l = 0; l < data.q(); ++l) out << ',' << csv::format_double(data.y(i, l));
    if (raw) {
      const CurvePair& c = data.raw[static_cast<std::size_t>(i)];
      for (double v : c.eve.values) out << ',' << csv::format_double(v);
      for (double v : c.day.values) out << ',' << csv::format_double(v);
    }
    out << '\n';
  }
}

void write_features(const fs::path& path, const RegressionDataset& data, const Provenance& header) {
  std::ostringstream s;
  write_features(s, data, header);
  write_text_file(path, s.str());
}

RegressionDataset read_features(std::istream& in, Provenance* header) {
  std::string line;
  Provenance prov = read_provenance(in, line);
  std::size_t lineno = prov.size() + 1;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto cols = csv::split(line);
  const std::vector<std::string> fixed{"row", "consumer", "eve_date", "day_date", "eve_weekday",
                                       "day_weekday"};
  if (cols.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), cols.begin()))
    throw ParseError(lineno, "not a features file (expected header row,consumer,eve_date,...)");
  Eigen::Index p = 0;
  Eigen::Index q = 0;
  std::size_t c = fixed.size();
  while (c < cols.size() && cols[c] == "x_" + std::to_string(p + 1)) ++p, ++c;
  while (c < cols.size() && cols[c] == "y_" + std::to_string(q + 1)) ++q, ++c;
  const bool raw = c < cols.size();
  if (raw) {
    if (cols.size() - c != 2 * kSlotsPerDay || cols[c] != "eve_h00")
      throw ParseError(lineno, "unexpected columns after y_" + std::to_string(q));
  }
  if (p == 0 || q == 0) throw ParseError(lineno, "features file has no x_ or y_ columns");

  std::vector<std::vector<double>> xs;
  std::vector<std::vector<double>> ys;
  RegressionDataset d;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != cols.size())
      throw ParseError(lineno, "expected " + std::to_string(cols.size()) + " fields, got " +
                                   std::to_string(f.size()));
    RowMeta m;
    m.consumer = f[1];
    m.eve_date = parse_optional_date(f[2], lineno);
    m.day_date = parse_optional_date(f[3], lineno);
    try {
      m.eve_weekday = parse_weekday(f[4]);
      m.day_weekday = parse_weekday(f[5]);
    } catch (const Error& e) {
      throw ParseError(lineno, e.what());
    }
    d.meta.push_back(m);
    std::vector<double> xr;
    std::vector<double> yr;
    std::size_t k = fixed.size();
    for (Eigen::Index j = 0; j < p; ++j, ++k) xr.push_back(field_double(f[k], lineno, cols[k]));
    for (Eigen::Index l = 0; l < q; ++l, ++k) yr.push_back(field_double(f[k], lineno, cols[k]));
    xs.push_back(std::move(xr));
    ys.push_back(std::move(yr));
    if (raw) {
      CurvePair cp;
      for (double& v : cp.eve.values) v = field_double(f[k], lineno, cols[k]), ++k;
      for (double& v : cp.day.values) v = field_double(f[k], lineno, cols[k]), ++k;
      cp.eve.date = m.eve_date;
      cp.eve.weekday = m.eve_weekday;
      cp.day.date = m.day_date;
      cp.day.weekday = m.day_weekday;
      d.raw.push_back(cp);
    }
  }
  if (xs.empty()) throw DataError("features file has no data rows");
  const auto n = static_cast<Eigen::Index>(xs.size());
  d.x.resize(n, p);
  d.y.resize(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) d.x(i, j) = xs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    for (Eigen::Index l = 0; l < q; ++l) d.y(i, l) = ys[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)];
  }
  const std::string prep = provenance_value(prov, "prep");
  d.preprocessing = prep == "1" ? 1 : prep == "2" ? 2 : 0;
  d.validate();
  if (header) *header = std::move(prov);
  return d;
}

RegressionDataset read_features(const fs::path& path, Provenance* header) {
  auto in = open_in(path);
  return read_features(in, header);
}

Json params_to_json(const mixture::MixtureParams& params) {
  Json j;
  j["pi"] = params.pi;
  Json beta = Json::array();
  for (const auto& b : params.beta) beta.push_back(matrix_rows(b));
  j["beta"] = std::move(beta);
  Json sig = Json::array();
  for (const auto& s : params.sigma_diag) sig.push_back(vector_json(s));
  j["sigma_diag"] = std::move(sig);
  return j;
}

mixture::MixtureParams params_from_json(const Json& j) {
  return json_guard([&] {
    mixture::MixtureParams p;
    p.pi = j.at("pi").get<std::vector<double>>();
    for (const auto& b : j.at("beta")) p.beta.push_back(matrix_from_rows(b));
    for (const auto& s : j.at("sigma_diag")) p.sigma_diag.push_back(vector_from_json(s));
    p.validate();
    return p;
  });
}

Json support_to_json(const mixture::Support& support) {
  Json a = Json::array();
  for (const auto& [l, jj] : support.entries()) a.push_back(Json::array({l + 1, jj + 1}));
  return a;
}

mixture::Support support_from_json(const Json& j) {
  return json_guard([&] {
    std::vector<mixture::Support::Entry> e;
    for (const auto& pair : j) {
      const int l = pair.at(0).get<int>();
      const int c = pair.at(1).get<int>();
      if (l < 1 || c < 1) throw DataError("support indices are 1-based");
      e.emplace_back(l - 1, c - 1);
    }
    return mixture::Support(std::move(e));
  });
}

Json entry_to_json(const collection::ModelEntry& e) {
  Json j;
  j["id"] = e.id;
  j["k"] = e.k;
  j["requested_k"] = e.requested_k;
  j["dimension"] = e.dimension;
  j["loglik"] = e.loglik;
  j["lambda_origin"] = e.lambda_origin;
  j["degenerate"] = e.degenerate;
  j["support"] = support_to_json(e.support);
  const Json params = params_to_json(e.params);
  for (const auto& [key, value] : params.items()) j[key] = value;
  return j;
}

collection::ModelEntry entry_from_json(const Json& j) {
  return json_guard([&] {
    collection::ModelEntry e;
    e.id = j.at("id").get<int>();
    e.k = j.at("k").get<int>();
    e.requested_k = j.at("requested_k").get<int>();
    e.dimension = j.at("dimension").get<long>();
    e.loglik = j.at("loglik").get<double>();
    e.lambda_origin = j.at("lambda_origin").get<double>();
    e.degenerate = j.at("degenerate").get<bool>();
    e.support = support_from_json(j.at("support"));
    e.params = params_from_json(j);
    if (e.params.k() != e.k) throw DataError("entry " + std::to_string(e.id) + ": k mismatch");
    return e;
  });
}

void write_collection(const fs::path& dir, const collection::ModelCollection& c,
                      const Provenance& header) {
  std::string lines;
  for (const auto& e : c.entries) lines += entry_to_json(e).dump() + '\n';
  write_text_file(dir / "collection.jsonl", lines);

  Json meta;
  for (const auto& [k, v] : header) meta[k] = v;
  meta["fingerprint"] = c.dataset_fingerprint;
  meta["n"] = c.n;
  meta["p"] = c.p;
  meta["q"] = c.q;
  meta["k_set"] = c.k_set;
  meta["grid_size"] = c.grid_size;
  meta["seed"] = c.seed;
  meta["entries"] = c.entries.size();
  meta["warnings"] = c.warnings;
  write_text_file(dir / "collection-meta.json", meta.dump(2) + '\n');

  std::ostringstream s;
  write_provenance(s, header);
  s << "# fingerprint=" << c.dataset_fingerprint << '\n';
  s << "id,k,support_size,dimension,loglik,lambda_origin\n";
  for (const auto& e : c.entries)
    s << e.id << ',' << e.k << ',' << e.support.size() << ',' << e.dimension << ','
      << csv::format_double(e.loglik) << ',' << csv::format_double(e.lambda_origin) << '\n';
  write_text_file(dir / "collection-summary.csv", s.str());
}

collection::ModelCollection read_collection(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / "collection.jsonl" : path;
  const fs::path meta_path = file.parent_path() / "collection-meta.json";
  collection::ModelCollection c;
  auto in = open_in(file);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    try {
      c.entries.push_back(entry_from_json(Json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, e.what());
    } catch (const DataError& e) {
      throw ParseError(lineno, e.what());
    }
  }
  if (c.entries.empty()) throw DataError("collection " + file.string() + " is empty");
  const Json meta = read_json(meta_path);
  json_guard([&] {
    c.dataset_fingerprint = meta.at("fingerprint").get<std::string>();
    c.n = meta.at("n").get<long>();
    c.p = meta.at("p").get<long>();
    c.q = meta.at("q").get<long>();
    c.k_set = meta.at("k_set").get<std::vector<int>>();
    c.grid_size = meta.at("grid_size").get<int>();
    c.seed = meta.at("seed").get<std::uint64_t>();
    return 0;
  });
  return c;
}

Json selection_to_json(const slope::SelectionResult& r, const collection::ModelCollection& c,
                       const Provenance& header) {
  Json j;
  for (const auto& [k, v] : header) j[k] = v;
  j["fingerprint"] = c.dataset_fingerprint;
  j["kappa_hat"] = r.kappa_hat;
  j["penalty_kappa"] = r.penalty_kappa;
  const auto& sel = c.entries.at(r.selected);
  j["selected"] = sel.id;
  j["selected_k"] = sel.k;
  j["selected_dimension"] = sel.dimension;
  Json shortlist = Json::array();
  for (const auto& s : r.shortlist) {
    const auto& e = c.entries.at(s.model);
    Json item;
    item["id"] = e.id;
    item["k"] = e.k;
    item["dimension"] = e.dimension;
    item["criterion"] = s.criterion;
    shortlist.push_back(std::move(item));
  }
  j["shortlist"] = std::move(shortlist);
  Json table = Json::array();
  for (const auto& pt : r.jump_table) table.push_back(Json::array({pt.kappa, pt.dimension}));
  j["jump_table"] = std::move(table);
  j["warnings"] = r.warnings;
  return j;
}

synth::GeneratorSpec generator_from_json(const Json& j) {
  return json_guard([&] {
    synth::GeneratorSpec s;
    s.k = j.at("k").get<int>();
    s.pi = j.at("pi").get<std::vector<double>>();
    for (const auto& b : j.at("beta")) s.beta.push_back(matrix_from_rows(b));
    for (const auto& v : j.at("sigma_diag")) s.sigma_diag.push_back(vector_from_json(v));
    s.n = j.at("n").get<int>();
    const std::string law = j.value("x_law", std::string("standard_normal"));
    if (law == "standard_normal")
      s.x_law = synth::XLaw::standard_normal;
    else if (law == "resample")
      s.x_law = synth::XLaw::resample;
    else
      throw DataError("unknown x_law '" + law + "'");
    s.seed = j.value("seed", std::uint64_t{1});
    return s;
  });
}

Json generator_to_json(const synth::GeneratorSpec& s) {
  Json j;
  j["k"] = s.k;
  j["pi"] = s.pi;
  Json beta = Json::array();
  for (const auto& b : s.beta) beta.push_back(matrix_rows(b));
  j["beta"] = std::move(beta);
  Json sig = Json::array();
  for (const auto& v : s.sigma_diag) sig.push_back(vector_json(v));
  j["sigma_diag"] = std::move(sig);
  j["n"] = s.n;
  j["x_law"] = s.x_law == synth::XLaw::resample ? "resample" : "standard_normal";
  j["seed"] = s.seed;
  return j;
}

Json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

} // namespace loadmix::io
