// Command-line front end wiring the pipeline: simulate, ingest, fit,
// predict, evaluate, plus the end-to-end synthetic reproduction run.
// Exit codes: 0 success, 1 data error, 2 usage error. Diagnostics go to
// stderr; data goes to files or stdout.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "traveltime/baselines.hpp"
#include "traveltime/evaluation.hpp"
#include "traveltime/format.hpp"
#include "traveltime/ingest.hpp"
#include "traveltime/network.hpp"
#include "traveltime/parallel.hpp"
#include "traveltime/population.hpp"
#include "traveltime/scenario.hpp"
#include "traveltime/simulator.hpp"
#include "traveltime/tripspec.hpp"

namespace tt = traveltime;
namespace fs = std::filesystem;

namespace {

const CLI::Validator OpenUnitInterval(
    [](std::string& s) {
      double v = 0;
      try {
        v = std::stod(s);
      } catch (...) {
        return std::string("expected a number");
      }
      if (!(v > 0.0 && v < 1.0)) return std::string("must lie strictly between 0 and 1");
      return std::string();
    },
    "FLOAT in (0,1)");

std::vector<std::string> load_route_csv(const std::string& path) {
  tt::CsvFile csv = tt::read_csv(path);
  tt::require_header(csv, {"edge_id"}, path);
  std::vector<std::string> edges;
  edges.reserve(csv.rows.size());
  for (const auto& row : csv.rows) edges.push_back(row[0]);
  if (edges.empty()) tt::fail(tt::Errc::EmptyInput, path + ": route has no edges");
  return edges;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  tt::write_file(path, j.dump(2) + "\n");
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) tt::fail(tt::Errc::BadFormat, "cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

std::vector<tt::Trip> filter_by_bin(std::vector<tt::Trip> trips, const std::string& bin,
                                    double tz) {
  if (bin == "any") return trips;
  tt::TrafficBin want = tt::bin_from_name(bin);
  std::vector<tt::Trip> out;
  for (auto& t : trips)
    if (tt::bin_of_trip(t, tz) == want) out.push_back(std::move(t));
  return out;
}

struct SimulateArgs {
  std::string scenario_path, out_path;
  std::size_t trips = 0;
  std::size_t first_index = 0;
  std::optional<std::uint64_t> seed;
  unsigned threads = tt::default_threads();
};

int run_simulate(const SimulateArgs& a) {
  tt::Scenario scn = tt::load_scenario(a.scenario_path);
  if (a.seed) scn.seed = *a.seed;
  tt::TransportNetwork net = tt::load_network_csv(scn.network_path);
  tt::SpeedProcessSpec spec = tt::make_speed_spec(scn, net);
  tt::StationaryDistribution pi = tt::stationary_distribution(net);
  std::vector<tt::Trip> trips =
      tt::generate_trips(scn, net, spec, pi, a.trips, a.first_index, a.threads);
  tt::write_file(a.out_path, tt::trips_to_csv(trips));
  std::cerr << "simulated " << trips.size() << " trips -> " << a.out_path << "\n";
  return 0;
}

struct IngestArgs {
  std::string points_path, network_path, out_path, report_path;
  double tz_offset = 0;
};

int run_ingest(const IngestArgs& a) {
  tt::TransportNetwork net = tt::load_network_csv(a.network_path);
  std::vector<tt::MatchedPoint> points = tt::matched_points_from_csv(a.points_path);
  tt::IngestConfig cfg;
  cfg.tz_offset_s = a.tz_offset;
  tt::IngestReport report;
  std::vector<tt::Trip> trips = tt::ingest_points(net, std::move(points), cfg, report);
  tt::write_file(a.out_path, tt::trips_to_csv(trips));
  std::cerr << "ingested " << report.raw_trips << " raw streams -> " << report.trips_out
            << " trips (" << report.empty_segments << " empty segments, "
            << report.dropped_median_speed + report.dropped_max_speed + report.dropped_distance
            << " non-motorized)\n";
  if (!a.report_path.empty()) {
    write_json(a.report_path,
               nlohmann::json{{"raw_trips", report.raw_trips},
                              {"segments", report.segments},
                              {"empty_segments", report.empty_segments},
                              {"dropped_median_speed", report.dropped_median_speed},
                              {"dropped_max_speed", report.dropped_max_speed},
                              {"dropped_distance", report.dropped_distance},
                              {"trips_out", report.trips_out}});
  }
  return 0;
}

struct FitPopulationArgs {
  std::string trips_path, out_path;
  std::string unit = "edge";
  std::string bin = "any";
  std::size_t min_edges = 1;
  double tz_offset = 0;
};

int run_fit_population(const FitPopulationArgs& a) {
  std::vector<tt::Trip> trips =
      filter_by_bin(tt::trips_from_csv(a.trips_path), a.bin, a.tz_offset);
  tt::PopulationFitOptions opt;
  opt.unit = tt::unit_from_name(a.unit);
  opt.min_edges = a.min_edges;
  tt::PopulationParams params = tt::estimate_population(trips, opt);
  write_json(a.out_path, tt::population_to_json(params));
  std::cerr << "fit population params on " << params.m << " trips -> " << a.out_path << "\n";
  return 0;
}

struct FitTripspecArgs {
  std::string trips_path, out_table, out_params;
  std::string bin = "any";
  std::uint32_t min_count = 10;
  int order = 1;
  double tz_offset = 0;
};

int run_fit_tripspec(const FitTripspecArgs& a) {
  std::vector<tt::Trip> all_trips = tt::trips_from_csv(a.trips_path);
  std::vector<tt::Trip> trips = filter_by_bin(all_trips, a.bin, a.tz_offset);
  tt::EdgeMomentTable table = tt::fit_edge_moments(trips, a.min_count, a.tz_offset);
  tt::TripSpecificParams params = tt::fit_trip_specific(trips, table, a.order, a.tz_offset);
  tt::write_file(a.out_table, tt::moment_table_to_csv(table));
  write_json(a.out_params, tt::tripspec_params_to_json(params));
  std::cerr << "fit trip-specific table (" << trips.size() << " trips) -> " << a.out_table
            << ", params -> " << a.out_params << "\n";
  return 0;
}

struct FitBaselineArgs {
  std::string model, trips_path, out_path;
  std::uint32_t min_count = 10;
  double tz_offset = 0;
};

int run_fit_baseline(const FitBaselineArgs& a) {
  std::vector<tt::Trip> trips = tt::trips_from_csv(a.trips_path);
  if (a.model == "lognormal") {
    tt::LogNormalEdgeModel model = tt::fit_lognormal(trips, a.min_count, a.tz_offset);
    write_json(a.out_path, tt::lognormal_to_json(model));
  } else {
    tt::LogLinearModel model = tt::fit_loglinear(trips, a.tz_offset);
    write_json(a.out_path, tt::loglinear_to_json(model));
  }
  std::cerr << "fit " << a.model << " baseline on " << trips.size() << " trips -> "
            << a.out_path << "\n";
  return 0;
}

struct PredictArgs {
  std::string model = "tripspec";
  std::string route_path, out_path;
  std::string table_path, params_path, population_path, baseline_path, network_path;
  double start_time = 0;
  double level = 0.95;
  double tz_offset = 0;
  std::string unit = "edge";
  std::size_t samples = 1000;
  std::uint64_t seed = 1;
  unsigned threads = tt::default_threads();
};

int run_predict(const PredictArgs& a) {
  std::vector<std::string> route = load_route_csv(a.route_path);
  double beta = 1.0 - a.level;
  std::string out;
  if (a.model == "tripspec") {
    if (a.table_path.empty() || a.params_path.empty())
      tt::fail(tt::Errc::BadConfig, "tripspec prediction needs --table and --params");
    tt::EdgeMomentTable table = tt::moment_table_from_csv(a.table_path);
    tt::TripSpecificParams params = tt::tripspec_params_from_json(load_json(a.params_path));
    tt::IntervalSequence seq = tt::trip_prediction_sequence(
        route, a.start_time, table, params, beta, params.order, a.tz_offset);
    out = tt::sequences_to_csv({"route"}, {seq});
  } else if (a.model == "population") {
    if (a.population_path.empty())
      tt::fail(tt::Errc::BadConfig, "population prediction needs --population");
    tt::PopulationParams params = tt::population_from_json(load_json(a.population_path));
    double n = static_cast<double>(route.size());
    if (params.unit == tt::LengthUnit::Per100m) {
      if (a.network_path.empty())
        tt::fail(tt::Errc::BadConfig, "per-100m population prediction needs --network");
      tt::TransportNetwork net = tt::load_network_csv(a.network_path);
      double dist = 0;
      for (const auto& id : route) dist += net.length(net.edge_index(id));
      n = std::ceil(dist / 100.0);
    }
    tt::Interval iv = tt::population_prediction_interval(params, n, beta);
    out = tt::predictions_to_csv({{"route", iv.point, iv.lower, iv.upper}});
  } else if (a.model == "lognormal") {
    if (a.baseline_path.empty())
      tt::fail(tt::Errc::BadConfig, "lognormal prediction needs --baseline");
    tt::LogNormalEdgeModel model = tt::lognormal_from_json(load_json(a.baseline_path));
    tt::Interval iv = tt::predict_lognormal(model, route, a.start_time, beta, a.samples,
                                            a.seed, a.tz_offset, a.threads);
    out = tt::predictions_to_csv({{"route", iv.point, iv.lower, iv.upper}});
  } else {  // loglinear
    if (a.baseline_path.empty() || a.network_path.empty())
      tt::fail(tt::Errc::BadConfig, "loglinear prediction needs --baseline and --network");
    tt::LogLinearModel model = tt::loglinear_from_json(load_json(a.baseline_path));
    tt::TransportNetwork net = tt::load_network_csv(a.network_path);
    double dist = 0;
    for (const auto& id : route) dist += net.length(net.edge_index(id));
    tt::TrafficBin bin = tt::assign_traffic_bin(a.start_time + a.tz_offset);
    tt::Interval iv = tt::predict_loglinear(model, dist, bin, beta);
    out = tt::predictions_to_csv({{"route", iv.point, iv.lower, iv.upper}});
  }
  if (a.out_path.empty())
    std::cout << out;
  else
    tt::write_file(a.out_path, out);
  return 0;
}

struct EvaluateArgs {
  std::string predictions_path, sequences_path, actuals_path;
  std::string out_path, tidy_path, curves_path;
  std::string cutpoints = "40,80,120";
  std::size_t min_curve_trips = 30;
};

int run_evaluate(const EvaluateArgs& a) {
  std::vector<tt::Trip> actuals = tt::trips_from_csv(a.actuals_path);
  std::vector<std::size_t> cuts;
  for (auto part : tt::split(a.cutpoints, ','))
    if (!part.empty())
      cuts.push_back(static_cast<std::size_t>(tt::parse_int(part, "--cutpoints")));

  std::vector<tt::Prediction> preds;
  std::vector<std::string> seq_ids;
  std::vector<tt::IntervalSequence> seqs;
  if (!a.sequences_path.empty()) {
    seqs = tt::sequences_from_csv(a.sequences_path, seq_ids);
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      const auto& last = seqs[i].steps.back();
      preds.push_back({seq_ids[i], last.point, last.lower, last.upper});
    }
  } else {
    preds = tt::predictions_from_csv(a.predictions_path);
  }

  tt::MetricsReport overall = tt::score(preds, actuals);
  std::vector<tt::StratumReport> strata = tt::length_stratified_report(preds, actuals, cuts);
  nlohmann::json j{{"overall", tt::metrics_to_json(overall)}};
  for (const auto& s : strata) j["strata"][s.label] = tt::metrics_to_json(s.metrics);
  write_json(a.out_path, j);
  if (!a.tidy_path.empty()) {
    std::vector<tt::StratumReport> tidy{{"all", overall}};
    tidy.insert(tidy.end(), strata.begin(), strata.end());
    tt::write_file(a.tidy_path, tt::metrics_to_tidy_csv(tidy));
  }
  if (!a.curves_path.empty()) {
    if (seqs.empty())
      tt::fail(tt::Errc::BadConfig, "--curves requires --sequences input");
    auto curve = tt::coverage_by_length(seq_ids, seqs, actuals, a.min_curve_trips);
    tt::write_file(a.curves_path, tt::coverage_curve_to_csv(curve));
  }
  std::cerr << "scored " << preds.size() << " predictions -> " << a.out_path << "\n";
  return 0;
}

struct ReproduceArgs {
  std::string out_dir;
  std::uint64_t seed = 7;
  unsigned threads = tt::default_threads();
};

int run_reproduce(const ReproduceArgs& a);  // defined in reproduce section below

}  // namespace

// --- reproduce-synthetic -----------------------------------------------

namespace {

/// The canonical 6-edge study network: a ring with skip links, so every
/// edge has two successors and the stationary distribution is uniform.
std::vector<tt::EdgeRecord> study_network() {
  std::vector<tt::EdgeRecord> records;
  const char* ids[] = {"e0", "e1", "e2", "e3", "e4", "e5"};
  const double lengths[] = {100, 150, 250, 120, 200, 80};
  for (int i = 0; i < 6; ++i) {
    tt::EdgeRecord r;
    r.edge_id = ids[i];
    r.length_m = lengths[i];
    r.successor_ids = {ids[(i + 1) % 6], ids[(i + 2) % 6]};
    records.push_back(std::move(r));
  }
  return records;
}

tt::Scenario study_scenario(const std::string& network_path, double phi, std::uint64_t seed) {
  tt::Scenario scn;
  scn.network_path = network_path;
  scn.period_s = 604800;
  scn.mixing_phi = phi;
  scn.seed = seed;
  scn.n_min = 20;
  scn.n_max = 200;
  scn.t0_min = 0;
  scn.t0_max = 604800;
  const char* ids[] = {"e0", "e1", "e2", "e3", "e4", "e5"};
  const double lengths[] = {100, 150, 250, 120, 200, 80};
  const double mean_tt[] = {6, 30, 8, 32, 10, 34};
  for (int i = 0; i < 6; ++i) {
    double a = mean_tt[i] / lengths[i];
    double b = 0.002 * a;
    double lower = 0.3 * a;
    double upper = 2.5 * a;
    double cap = std::min(a - b - lower, upper - (a + b)) / 4.0;
    scn.overrides[ids[i]]["a"] = a;
    scn.overrides[ids[i]]["b"] = b;
    scn.overrides[ids[i]]["phase"] = static_cast<double>(i);
    scn.overrides[ids[i]]["s"] = std::min(0.95 * cap, 1.0 / lengths[i]);
    scn.overrides[ids[i]]["delta"] = lower;
    scn.overrides[ids[i]]["M"] = upper;
  }
  return scn;
}

int run_reproduce(const ReproduceArgs& a) {
  fs::create_directories(a.out_dir);
  auto path = [&](const std::string& name) { return (fs::path(a.out_dir) / name).string(); };

  tt::write_file(path("network.csv"), tt::network_to_csv(study_network()));
  tt::TransportNetwork net = tt::load_network_csv(path("network.csv"));
  tt::StationaryDistribution pi = tt::stationary_distribution(net);

  tt::Scenario scn = study_scenario(path("network.csv"), 0.65, a.seed);
  tt::write_file(path("scenario.cfg"), tt::scenario_to_text(scn));
  tt::SpeedProcessSpec spec = tt::make_speed_spec(scn, net);

  const std::size_t n_pop = 1000, n_ts = 4000, n_test = 2000;
  std::cerr << "simulating " << n_pop + n_ts + n_test << " trips...\n";
  std::vector<tt::Trip> fit_pop =
      tt::generate_trips(scn, net, spec, pi, n_pop, 0, a.threads);
  std::vector<tt::Trip> fit_ts =
      tt::generate_trips(scn, net, spec, pi, n_ts, n_pop, a.threads);
  std::vector<tt::Trip> test =
      tt::generate_trips(scn, net, spec, pi, n_test, n_pop + n_ts, a.threads);
  tt::write_file(path("trips_fit_population.csv"), tt::trips_to_csv(fit_pop));
  tt::write_file(path("trips_fit_tripspec.csv"), tt::trips_to_csv(fit_ts));
  tt::write_file(path("trips_test.csv"), tt::trips_to_csv(test));

  // population fit + intervals
  tt::PopulationParams pop = tt::estimate_population(fit_pop);
  write_json(path("population_params.json"), tt::population_to_json(pop));
  tt::Interval mean_ci = tt::mean_confidence_interval(pop, 0.05);
  std::vector<tt::Prediction> pop_preds;
  pop_preds.reserve(test.size());
  for (const auto& t : test) {
    tt::Interval iv = tt::population_prediction_interval(
        pop, static_cast<double>(t.edge_count()), 0.05);
    pop_preds.push_back({t.trip_id, iv.point, iv.lower, iv.upper});
  }
  tt::write_file(path("population_intervals.csv"), tt::predictions_to_csv(pop_preds));

  // trip-specific fit + sequences (order 1 and 2)
  std::cerr << "fitting trip-specific model...\n";
  tt::EdgeMomentTable table = tt::fit_edge_moments(fit_ts, 10, 0);
  tt::write_file(path("tripspec_table.csv"), tt::moment_table_to_csv(table));
  tt::TripSpecificParams ts1 = tt::fit_trip_specific(fit_ts, table, 1);
  tt::TripSpecificParams ts2 = tt::fit_trip_specific(fit_ts, table, 2);
  write_json(path("tripspec_params_order1.json"), tt::tripspec_params_to_json(ts1));
  write_json(path("tripspec_params_order2.json"), tt::tripspec_params_to_json(ts2));

  std::vector<std::string> test_ids;
  std::vector<std::vector<std::string>> test_routes;
  test_ids.reserve(test.size());
  for (const auto& t : test) {
    test_ids.push_back(t.trip_id);
    std::vector<std::string> edges;
    edges.reserve(t.records.size());
    for (const auto& r : t.records) edges.push_back(r.edge_id);
    test_routes.push_back(std::move(edges));
  }
  std::vector<tt::IntervalSequence> seqs(test.size());
  tt::parallel_for(test.size(), a.threads, [&](std::size_t i) {
    seqs[i] = tt::trip_prediction_sequence(test_routes[i], test[i].start_time(), table, ts1,
                                           0.05, 1);
  });
  tt::write_file(path("tripspec_sequences.csv"), tt::sequences_to_csv(test_ids, seqs));
  std::vector<tt::Prediction> ts_preds;
  ts_preds.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& last = seqs[i].steps.back();
    ts_preds.push_back({test_ids[i], last.point, last.lower, last.upper});
  }
  tt::write_file(path("tripspec_intervals.csv"), tt::predictions_to_csv(ts_preds));

  // baselines
  std::cerr << "fitting baselines...\n";
  tt::LogNormalEdgeModel lognormal = tt::fit_lognormal(fit_ts, 10, 0);
  write_json(path("lognormal_model.json"), tt::lognormal_to_json(lognormal));
  tt::LogLinearModel loglinear = tt::fit_loglinear(fit_ts, 0);
  write_json(path("loglinear_model.json"), tt::loglinear_to_json(loglinear));

  std::cerr << "sampling no-dependence intervals...\n";
  std::vector<tt::Prediction> ln_preds(test.size());
  tt::parallel_for(test.size(), a.threads, [&](std::size_t i) {
    tt::Interval iv =
        tt::predict_lognormal(lognormal, test_routes[i], test[i].start_time(), 0.05, 1000,
                              tt::derive_stream_seed(a.seed ^ 0xba5e11fe, i), 0, 1);
    ln_preds[i] = {test_ids[i], iv.point, iv.lower, iv.upper};
  });
  tt::write_file(path("lognormal_intervals.csv"), tt::predictions_to_csv(ln_preds));

  std::vector<tt::Prediction> ll_preds;
  ll_preds.reserve(test.size());
  for (const auto& t : test) {
    tt::Interval iv = tt::predict_loglinear(
        loglinear, t.total_distance(), tt::assign_traffic_bin(t.start_time()), 0.05);
    ll_preds.push_back({t.trip_id, iv.point, iv.lower, iv.upper});
  }
  tt::write_file(path("loglinear_intervals.csv"), tt::predictions_to_csv(ll_preds));

  // evaluation
  std::cerr << "scoring...\n";
  nlohmann::json summary;
  summary["seed"] = a.seed;
  summary["mu_analytic"] = tt::analytic_mu(net, spec, pi);
  summary["mean_ci"] = {{"point", mean_ci.point}, {"lower", mean_ci.lower},
                        {"upper", mean_ci.upper}};
  auto add_report = [&](const std::string& name, const std::vector<tt::Prediction>& preds) {
    tt::MetricsReport rep = tt::score(preds, test);
    summary["models"][name] = tt::metrics_to_json(rep);
    auto strata = tt::length_stratified_report(preds, test);
    std::vector<tt::StratumReport> tidy{{"all", rep}};
    tidy.insert(tidy.end(), strata.begin(), strata.end());
    tt::write_file(path("metrics_" + name + ".csv"), tt::metrics_to_tidy_csv(tidy));
    return rep;
  };
  add_report("population", pop_preds);
  add_report("tripspec", ts_preds);
  add_report("lognormal", ln_preds);
  add_report("loglinear", ll_preds);

  auto curve = tt::coverage_by_length(test_ids, seqs, test, 30);
  tt::write_file(path("coverage_by_length.csv"), tt::coverage_curve_to_csv(curve));

  tt::ErgodicityReport erg = tt::ergodicity_check(fit_pop, 10);
  tt::write_file(path("ergodicity.csv"), tt::ergodicity_to_csv(erg));

  write_json(path("summary.json"), summary);
  std::cerr << "reproduction artifacts in " << a.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"travel-time prediction intervals: simulate, fit, predict, evaluate"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "generate synthetic trips from a scenario");
  c_sim->add_option("--scenario", sim.scenario_path, "scenario config file")
      ->required()
      ->check(CLI::ExistingFile);
  c_sim->add_option("--trips", sim.trips, "number of trips")->required();
  c_sim->add_option("--out", sim.out_path, "output trip CSV")->required();
  c_sim->add_option("--seed", sim.seed, "override the scenario seed");
  c_sim->add_option("--first-index", sim.first_index, "index of the first trip stream");
  c_sim->add_option("--threads", sim.threads, "worker thread cap");

  IngestArgs ing;
  auto* c_ing = app.add_subcommand("ingest", "clean matched GPS points into trips");
  c_ing->add_option("--points", ing.points_path, "matched point CSV")
      ->required()
      ->check(CLI::ExistingFile);
  c_ing->add_option("--network", ing.network_path, "edge CSV")
      ->required()
      ->check(CLI::ExistingFile);
  c_ing->add_option("--out", ing.out_path, "output trip CSV")->required();
  c_ing->add_option("--tz-offset", ing.tz_offset, "local time offset in seconds");
  c_ing->add_option("--report", ing.report_path, "optional JSON drop report");

  FitPopulationArgs fpop;
  auto* c_fpop = app.add_subcommand("fit-population", "fit population parameters");
  c_fpop->add_option("--trips", fpop.trips_path, "trip CSV")
      ->required()
      ->check(CLI::ExistingFile);
  c_fpop->add_option("--out", fpop.out_path, "output params JSON")->required();
  c_fpop->add_option("--unit", fpop.unit, "route length unit")
      ->check(CLI::IsMember({"edge", "per-100m"}));
  c_fpop->add_option("--min-edges", fpop.min_edges, "minimum edges per fitted trip");
  c_fpop->add_option("--bin", fpop.bin, "restrict to one traffic bin")
      ->check(CLI::IsMember({"any", "am", "pm", "non"}));
  c_fpop->add_option("--tz-offset", fpop.tz_offset, "local time offset in seconds");

  FitTripspecArgs fts;
  auto* c_fts = app.add_subcommand("fit-tripspec", "fit edge moments and trip-specific params");
  c_fts->add_option("--trips", fts.trips_path, "trip CSV")
      ->required()
      ->check(CLI::ExistingFile);
  c_fts->add_option("--out-table", fts.out_table, "output moment table CSV")->required();
  c_fts->add_option("--out-params", fts.out_params, "output params JSON")->required();
  c_fts->add_option("--min-count", fts.min_count, "observations needed per stored entry");
  c_fts->add_option("--order", fts.order, "autocorrelation order")
      ->check(CLI::IsMember({1, 2}));
  c_fts->add_option("--bin", fts.bin, "restrict to one traffic bin")
      ->check(CLI::IsMember({"any", "am", "pm", "non"}));
  c_fts->add_option("--tz-offset", fts.tz_offset, "local time offset in seconds");

  FitBaselineArgs fb;
  auto* c_fb = app.add_subcommand("fit-baseline", "fit a comparison model");
  c_fb->add_option("--model", fb.model, "baseline family")
      ->required()
      ->check(CLI::IsMember({"lognormal", "loglinear"}));
  c_fb->add_option("--trips", fb.trips_path, "trip CSV")->required()->check(CLI::ExistingFile);
  c_fb->add_option("--out", fb.out_path, "output model JSON")->required();
  c_fb->add_option("--min-count", fb.min_count, "observations needed per stored entry");
  c_fb->add_option("--tz-offset", fb.tz_offset, "local time offset in seconds");

  PredictArgs pr;
  auto* c_pr = app.add_subcommand("predict", "predict travel time for a route");
  c_pr->add_option("--model", pr.model, "which fitted model to use")
      ->check(CLI::IsMember({"tripspec", "population", "lognormal", "loglinear"}));
  c_pr->add_option("--route", pr.route_path, "route CSV (edge_id column)")
      ->required()
      ->check(CLI::ExistingFile);
  c_pr->add_option("--start-time", pr.start_time, "trip start time (epoch seconds)");
  c_pr->add_option("--level", pr.level, "interval level")->check(OpenUnitInterval);
  c_pr->add_option("--table", pr.table_path, "moment table CSV (tripspec)");
  c_pr->add_option("--params", pr.params_path, "trip-specific params JSON (tripspec)");
  c_pr->add_option("--population", pr.population_path, "population params JSON");
  c_pr->add_option("--baseline", pr.baseline_path, "baseline model JSON");
  c_pr->add_option("--network", pr.network_path, "edge CSV (distance-based models)");
  c_pr->add_option("--samples", pr.samples, "Monte Carlo replicates (lognormal)");
  c_pr->add_option("--seed", pr.seed, "Monte Carlo seed (lognormal)");
  c_pr->add_option("--tz-offset", pr.tz_offset, "local time offset in seconds");
  c_pr->add_option("--threads", pr.threads, "worker thread cap");
  c_pr->add_option("--out", pr.out_path, "output CSV (stdout when omitted)");

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "score predictions against realized trips");
  auto* opt_preds = c_ev->add_option("--predictions", ev.predictions_path,
                                     "interval CSV: trip_id,point_s,lower_s,upper_s");
  auto* opt_seqs = c_ev->add_option("--sequences", ev.sequences_path,
                                    "sequence CSV from tripspec prediction");
  opt_preds->excludes(opt_seqs);
  c_ev->add_option("--actuals", ev.actuals_path, "realized trip CSV")
      ->required()
      ->check(CLI::ExistingFile);
  c_ev->add_option("--out", ev.out_path, "output report JSON")->required();
  c_ev->add_option("--tidy", ev.tidy_path, "optional tidy CSV (metric per row)");
  c_ev->add_option("--curves", ev.curves_path, "optional per-length coverage CSV");
  c_ev->add_option("--cutpoints", ev.cutpoints, "length strata cutpoints");
  c_ev->add_option("--min-curve-trips", ev.min_curve_trips,
                   "minimum surviving trips per curve point");

  ReproduceArgs rep;
  auto* c_rep = app.add_subcommand("reproduce-synthetic",
                                   "run the full synthetic study end to end");
  c_rep->add_option("--out-dir", rep.out_dir, "output directory")->required();
  c_rep->add_option("--seed", rep.seed, "master seed");
  c_rep->add_option("--threads", rep.threads, "worker thread cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*c_ev && ev.predictions_path.empty() && ev.sequences_path.empty()) {
    std::cerr << "evaluate: one of --predictions or --sequences is required\n";
    return 2;
  }

  try {
    if (*c_sim) return run_simulate(sim);
    if (*c_ing) return run_ingest(ing);
    if (*c_fpop) return run_fit_population(fpop);
    if (*c_fts) return run_fit_tripspec(fts);
    if (*c_fb) return run_fit_baseline(fb);
    if (*c_pr) return run_predict(pr);
    if (*c_ev) return run_evaluate(ev);
    if (*c_rep) return run_reproduce(rep);
  } catch (const tt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
