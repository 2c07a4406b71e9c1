// loadmix: ingest meter data, fit Lasso-MLE mixture collections, select a
// model by the slope heuristic, report clusters and compare forecasts.

#include "loadmix/analysis.hpp"
#include "loadmix/collection.hpp"
#include "loadmix/errors.hpp"
#include "loadmix/ingest.hpp"
#include "loadmix/io.hpp"
#include "loadmix/slope.hpp"
#include "loadmix/synth.hpp"
#include "loadmix/wavelet.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace loadmix;

namespace {

struct Common {
  std::uint64_t seed = 1;
  int prep = 2;
  std::string out = ".";
  int jobs = 0;
  bool reproducible = false;
};

io::Provenance provenance(const Common& c, const std::string& command) {
  io::Provenance h{{"tool", "loadmix"}, {"command", command}, {"seed", std::to_string(c.seed)}};
  if (!c.reproducible) h.emplace_back("generated", io::utc_timestamp());
  return h;
}

void warn(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

std::string render(const auto& writer) {
  std::ostringstream s;
  writer(s);
  return s.str();
}

std::vector<int> parse_k_set(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string part;
  try {
    while (std::getline(ss, part, ',')) {
      const auto dash = part.find('-');
      if (dash == std::string::npos) {
        out.push_back(std::stoi(part));
      } else {
        const int lo = std::stoi(part.substr(0, dash));
        const int hi = std::stoi(part.substr(dash + 1));
        if (hi < lo) throw ConfigError("bad K range '" + part + "'");
        for (int k = lo; k <= hi; ++k) out.push_back(k);
      }
    }
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse K set '" + text + "'");
  }
  if (out.empty()) throw ConfigError("empty K set");
  return out;
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::string input;
  std::string layout = "wide";
  std::string missing = "strict";
  std::string pairs = "all";
  bool aggregate = false;
  bool no_raw = false;
};

RegressionDataset build_features(const IngestArgs& a, const wavelet::PreprocessSpec& prep,
                                 std::vector<std::string>& warnings) {
  const auto layout = a.layout == "long" ? ingest::Layout::long_format : ingest::Layout::wide;
  const auto policy = a.missing == "impute" ? ingest::MissingPolicy::impute_linear
                                            : ingest::MissingPolicy::strict;
  const auto panel = ingest::parse_meter_csv(a.input, layout, policy);
  warnings = panel.warnings;

  const auto colon = a.pairs.find(':');
  const std::string kind = a.pairs.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : a.pairs.substr(colon + 1);
  if (kind == "mean") {
    if (a.aggregate) throw ConfigError("--aggregate cannot be combined with --pairs mean:");
    const Weekday eve = parse_weekday(arg);
    const Weekday both[] = {eve, static_cast<Weekday>((static_cast<int>(eve) + 1) % 7)};
    return ingest::build_mean_day_pairs(ingest::mean_weekday_curves(panel, both), eve, prep);
  }
  ingest::DayPairSelector sel;
  if (kind == "all")
    sel = ingest::all_pairs();
  else if (kind == "weekday")
    sel = ingest::weekday_pair(parse_weekday(arg));
  else if (kind == "single")
    sel = ingest::single_pair(Date::parse(arg));
  else
    throw ConfigError("unknown --pairs '" + a.pairs + "' (all, weekday:DAY, single:DATE, mean:DAY)");
  if (a.aggregate) {
    const auto curves = ingest::aggregate_synchronous(panel);
    return ingest::build_day_pairs(curves, sel, prep, "aggregate");
  }
  return ingest::build_panel_pairs(panel, sel, prep);
}

int cmd_ingest(const Common& c, const IngestArgs& a) {
  const wavelet::PreprocessSpec prep{c.prep};
  prep.validate();
  std::vector<std::string> warnings;
  RegressionDataset d = build_features(a, prep, warnings);
  warn(warnings);
  if (a.no_raw) d.raw.clear();
  auto h = provenance(c, "ingest");
  h.emplace_back("prep", std::to_string(c.prep));
  h.emplace_back("source", fs::path(a.input).filename().string());
  h.emplace_back("pairs", a.pairs + (a.aggregate ? " (aggregate)" : ""));
  h.emplace_back("fingerprint", fingerprint(d));
  const fs::path out = fs::path(c.out) / "features.csv";
  io::write_features(out, d, h);
  std::cout << "wrote " << out.string() << " (" << d.n() << " rows, p=" << d.p() << ", q=" << d.q()
            << ")\n";
  return 0;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string features;
  std::string k_set = "1-8";
  bool force_k = false;
  int grid_size = 20;
  double grid_ratio = 1e-3;
  std::vector<double> lambdas;
  int starts = 5;
  int refit_starts = 1;
  int max_iter = 200;
  double tol = 1e-6;
  std::string penalty = "plain";
};

int cmd_fit(const Common& c, const FitArgs& a) {
  io::Provenance in_header;
  const RegressionDataset d = io::read_features(a.features, &in_header);
  collection::CollectionOptions o;
  o.k_set = parse_k_set(a.k_set);
  if (a.force_k) std::erase(o.k_set, 1);
  o.grid_size = a.grid_size;
  o.grid_ratio = a.grid_ratio;
  if (!a.lambdas.empty()) o.lambdas = a.lambdas;
  o.refit_starts = a.refit_starts;
  o.jobs = c.jobs;
  o.em.n_starts = a.starts;
  o.em.max_iter = a.max_iter;
  o.em.tol = a.tol;
  o.em.seed = c.seed;
  if (a.penalty == "weighted")
    o.em.penalty = em::PenaltyWeighting::weighted;
  else if (a.penalty != "plain")
    throw ConfigError("--penalty must be plain or weighted");

  const auto col = collection::build_collection(d, o);
  warn(col.warnings);
  auto h = provenance(c, "fit");
  h.emplace_back("source", fs::path(a.features).filename().string());
  h.emplace_back("prep", std::to_string(d.preprocessing));
  io::write_collection(c.out, col, h);
  std::cout << "wrote " << col.entries.size() << " models to "
            << (fs::path(c.out) / "collection.jsonl").string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- select

struct SelectArgs {
  std::string collection;
  int shortlist = 5;
  int kappa_grid = 1000;
};

int cmd_select(const Common& c, const SelectArgs& a) {
  const auto col = io::read_collection(a.collection);
  const auto r = slope::slope_heuristic(col, a.kappa_grid, a.shortlist);
  warn(r.warnings);
  const auto j = io::selection_to_json(r, col, provenance(c, "select"));
  io::write_text_file(fs::path(c.out) / "selection.json", j.dump(2) + '\n');
  const auto& e = col.entries.at(r.selected);
  std::cout << "selected model " << e.id << " (K=" << e.k << ", D=" << e.dimension
            << ", kappa_hat=" << r.kappa_hat << ")\n";
  return 0;
}

// ---------------------------------------------------------------- cluster

struct ModelArgs {
  std::string collection;
  int model = -1;  // -1: the selected id from selection.json next to the collection
  std::string selection;
};

const collection::ModelEntry& pick_model(const collection::ModelCollection& col, const ModelArgs& a) {
  if (a.model >= 0) return col.by_id(a.model);
  fs::path sel = a.selection;
  if (sel.empty()) {
    const fs::path base = fs::is_directory(a.collection) ? fs::path(a.collection)
                                                          : fs::path(a.collection).parent_path();
    sel = base / "selection.json";
  }
  if (!fs::exists(sel)) throw DataError("no --model given and no " + sel.string());
  const auto j = io::read_json(sel);
  if (!j.contains("selected")) throw DataError(sel.string() + " has no selected model");
  return col.by_id(j["selected"].get<int>());
}

void check_fingerprint(const RegressionDataset& d, const collection::ModelCollection& col,
                       const std::string& what) {
  if (fingerprint(d) != col.dataset_fingerprint)
    throw DataError(what + " does not match the collection's dataset (fingerprint " +
                    fingerprint(d) + " vs " + col.dataset_fingerprint + ")");
}

int cmd_cluster(const Common& c, const ModelArgs& m, const std::string& features) {
  const auto col = io::read_collection(m.collection);
  const auto& e = pick_model(col, m);
  const RegressionDataset d = io::read_features(features);
  check_fingerprint(d, col, features);
  const int mode = d.preprocessing;

  auto h = provenance(c, "cluster");
  h.emplace_back("fingerprint", col.dataset_fingerprint);
  h.emplace_back("model", std::to_string(e.id));
  h.emplace_back("k", std::to_string(e.k));
  const fs::path out = c.out;

  const auto report = analysis::cluster_report(e.params, d);
  io::write_text_file(out / "clusters.csv",
                      render([&](std::ostream& s) { analysis::write_clusters(s, report, d, h); }));
  io::write_text_file(out / "profiles.csv", render([&](std::ostream& s) {
                        analysis::write_cluster_profiles(s, report, h);
                      }));
  const auto weekdays = analysis::response_weekdays(d);
  const auto table = analysis::crosstab_daytype(report.labels, weekdays, e.k);
  io::write_text_file(out / "crosstab.csv",
                      render([&](std::ostream& s) { analysis::write_crosstab(s, table, h); }));
  const std::string stem = "beta_k" + std::to_string(e.k);
  for (int a = 0; a < e.k; ++a) {
    const auto t = analysis::beta_table(e.params, a, mode);
    io::write_text_file(out / (stem + "_c" + std::to_string(a + 1) + ".csv"),
                        render([&](std::ostream& s) { analysis::write_labeled_matrix(s, t, h); }));
    for (int b = a + 1; b < e.k; ++b) {
      const auto diff = analysis::beta_difference(e.params, a, b, mode);
      io::write_text_file(
          out / (stem + "_diff_c" + std::to_string(a + 1) + "_c" + std::to_string(b + 1) + ".csv"),
          render([&](std::ostream& s) { analysis::write_labeled_matrix(s, diff, h); }));
    }
  }
  const auto sig = analysis::sigma_table(e.params, mode);
  io::write_text_file(out / "sigma.csv",
                      render([&](std::ostream& s) { analysis::write_labeled_matrix(s, sig, h); }));

  std::cout << "model " << e.id << ": K=" << e.k;
  for (int k = 0; k < e.k; ++k)
    std::cout << (k ? ", " : " shares ") << report.counts[static_cast<std::size_t>(k)];
  std::cout << '\n';
  return 0;
}

// ---------------------------------------------------------------- forecast

int cmd_forecast(const Common& c, const ModelArgs& m, const std::string& train_path,
                 const std::string& test_path) {
  const auto col = io::read_collection(m.collection);
  const auto& e = pick_model(col, m);
  const RegressionDataset train = io::read_features(train_path);
  const RegressionDataset test = io::read_features(test_path);
  check_fingerprint(train, col, train_path);
  em::EmOptions o;
  o.seed = c.seed;
  const auto r = analysis::forecast_compare(train, test, e.params, o);
  warn(r.warnings);
  auto h = provenance(c, "forecast");
  h.emplace_back("fingerprint", col.dataset_fingerprint);
  h.emplace_back("test_fingerprint", fingerprint(test));
  h.emplace_back("model", std::to_string(e.id));
  io::write_text_file(fs::path(c.out) / "rmse.csv",
                      render([&](std::ostream& s) { analysis::write_rmse(s, r, h); }));
  std::cout << "wrote " << r.rows.size() << " RMSE rows\n";
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string spec;
  std::string fixture;
  int k = 2;
  int n = 500;
  int p = 9;
  int q = 9;
  double snr = 5.0;
};

int cmd_synth(const Common& c, const SynthArgs& a, bool seed_given) {
  synth::GeneratorSpec spec;
  if (!a.spec.empty()) {
    const auto j = io::read_json(a.spec);
    spec = io::generator_from_json(j);
    if (seed_given) spec.seed = c.seed;
    if (spec.x_law == synth::XLaw::resample) {
      const std::string fixture =
          !a.fixture.empty() ? a.fixture : j.value("fixture", std::string());
      if (fixture.empty()) throw ConfigError("x_law resample needs --fixture or a \"fixture\" key");
      spec.fixture_x = io::read_features(fixture).x;
    }
  } else {
    spec = synth::separated_regime(a.k, a.p, a.q, a.n, a.snr, c.seed);
  }
  const auto g = synth::generate(spec);
  auto h = provenance(c, "synth");
  h.emplace_back("spec", io::generator_to_json(spec).dump());
  h.emplace_back("fingerprint", fingerprint(g.data));
  const fs::path out = c.out;
  io::write_features(out / "features.csv", g.data, h);
  std::ostringstream labels;
  io::write_provenance(labels, h);
  labels << "row,label\n";
  for (std::size_t i = 0; i < g.labels.size(); ++i) labels << i + 1 << ',' << g.labels[i] + 1 << '\n';
  io::write_text_file(out / "truth.csv", labels.str());
  io::write_text_file(out / "truth-params.json", io::params_to_json(g.truth).dump(2) + '\n');
  std::cout << "wrote " << g.data.n() << " synthetic rows (K=" << spec.k << ")\n";
  return 0;
}

int exit_code(ErrorKind k) { return static_cast<int>(k); }

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustering of electricity consumers with Lasso-MLE mixtures of regressions"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value configuration file; flags override it");

  Common common;
  app.add_option("--seed", common.seed, "root seed for every random stream");
  app.add_option("--prep", common.prep, "wavelet preprocessing (1 or 2)")->check(CLI::IsMember({1, 2}));
  app.add_option("--out", common.out, "output directory");
  app.add_option("--jobs", common.jobs, "worker threads for fit (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--reproducible", common.reproducible, "omit timestamps from output headers");

  IngestArgs ing;
  auto* ingest_cmd = app.add_subcommand("ingest", "meter CSV -> features.csv");
  ingest_cmd->add_option("--input,-i", ing.input, "meter readings CSV")->required();
  ingest_cmd->add_option("--layout", ing.layout, "wide or long")->check(CLI::IsMember({"wide", "long"}));
  ingest_cmd->add_option("--missing", ing.missing, "strict or impute")
      ->check(CLI::IsMember({"strict", "impute"}));
  ingest_cmd->add_option("--pairs", ing.pairs, "all | weekday:DAY | single:YYYY-MM-DD | mean:DAY");
  ingest_cmd->add_flag("--aggregate", ing.aggregate, "pair the synchronous (summed) curve");
  ingest_cmd->add_flag("--no-raw", ing.no_raw, "omit raw 48-slot curves from the output");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "features.csv -> model collection");
  fit_cmd->add_option("--features,-f", fit.features, "features CSV")->required();
  fit_cmd->add_option("--k", fit.k_set, "cluster counts, e.g. 1-8 or 2,3,5");
  fit_cmd->add_flag("--force-k", fit.force_k, "exclude K = 1");
  fit_cmd->add_option("--grid-size", fit.grid_size, "lambda values per K");
  fit_cmd->add_option("--grid-ratio", fit.grid_ratio, "smallest lambda / lambda_max");
  fit_cmd->add_option("--lambda", fit.lambdas, "explicit lambda values (overrides the grid)");
  fit_cmd->add_option("--starts", fit.starts, "EM starts per fit");
  fit_cmd->add_option("--refit-starts", fit.refit_starts, "refit starts (first is warm)");
  fit_cmd->add_option("--max-iter", fit.max_iter, "EM iteration cap");
  fit_cmd->add_option("--tol", fit.tol, "relative objective tolerance");
  fit_cmd->add_option("--penalty", fit.penalty, "plain or weighted");

  SelectArgs sel;
  auto* select_cmd = app.add_subcommand("select", "collection -> selection.json");
  select_cmd->add_option("--collection,-c", sel.collection, "collection.jsonl or its directory")
      ->required();
  select_cmd->add_option("--shortlist", sel.shortlist, "models kept in the shortlist");
  select_cmd->add_option("--kappa-grid", sel.kappa_grid, "points on the kappa grid");

  ModelArgs cl;
  std::string cl_features;
  auto* cluster_cmd = app.add_subcommand("cluster", "clusters, crosstab, beta and sigma exports");
  cluster_cmd->add_option("--collection,-c", cl.collection, "collection.jsonl or its directory")
      ->required();
  cluster_cmd->add_option("--features,-f", cl_features, "features CSV the collection was fitted on")
      ->required();
  cluster_cmd->add_option("--model", cl.model, "model id (default: the selected one)");
  cluster_cmd->add_option("--selection", cl.selection, "selection.json");

  ModelArgs fc;
  std::string train_path;
  std::string test_path;
  auto* forecast_cmd = app.add_subcommand("forecast", "RMSE of pooled, mixture and per-cluster OLS");
  forecast_cmd->add_option("--collection,-c", fc.collection, "collection.jsonl or its directory")
      ->required();
  forecast_cmd->add_option("--train", train_path, "features the collection was fitted on")->required();
  forecast_cmd->add_option("--test", test_path, "next-day features, same consumers")->required();
  forecast_cmd->add_option("--model", fc.model, "model id (default: the selected one)");
  forecast_cmd->add_option("--selection", fc.selection, "selection.json");

  SynthArgs sy;
  auto* synth_cmd = app.add_subcommand("synth", "synthetic mixture data with ground truth");
  synth_cmd->add_option("--spec", sy.spec, "generator spec JSON");
  synth_cmd->add_option("--fixture", sy.fixture, "features CSV bootstrapped when x_law is resample");
  synth_cmd->add_option("--k", sy.k, "clusters (without --spec)");
  synth_cmd->add_option("--n", sy.n, "rows (without --spec)");
  synth_cmd->add_option("--p", sy.p, "regressors (without --spec)");
  synth_cmd->add_option("--q", sy.q, "responses (without --spec)");
  synth_cmd->add_option("--snr", sy.snr, "signal-to-noise ratio (without --spec)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(ErrorKind::usage);
  }

  try {
    if (*ingest_cmd) return cmd_ingest(common, ing);
    if (*fit_cmd) return cmd_fit(common, fit);
    if (*select_cmd) return cmd_select(common, sel);
    if (*cluster_cmd) return cmd_cluster(common, cl, cl_features);
    if (*forecast_cmd) return cmd_forecast(common, fc, train_path, test_path);
    if (*synth_cmd) return cmd_synth(common, sy, app.count("--seed") > 0);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(ErrorKind::data);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(ErrorKind::numerical);
  }
  return exit_code(ErrorKind::usage);
}
