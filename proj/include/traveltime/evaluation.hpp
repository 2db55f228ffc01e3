#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "traveltime/errors.hpp"
#include "traveltime/format.hpp"
#include "traveltime/population.hpp"
#include "traveltime/stats.hpp"
#include "traveltime/trip.hpp"
#include "traveltime/tripspec.hpp"

namespace traveltime {

struct Prediction {
  std::string trip_id;
  double point = 0;
  double lower = 0;
  double upper = 0;
};

/// The seven scoring metrics, all per-trip means.
struct MetricsReport {
  double rmse = 0;
  double mae = 0;
  double mean_error = 0;
  double mape_pct = 0;
  double coverage_pct = 0;
  double mean_interval_length_s = 0;
  double relative_length_pct = 0;
  std::size_t trips = 0;
};

/// Scores interval predictions against realized trip totals, matching by
/// trip id. Relative length is averaged per trip, not a ratio of means.
/// Predictions are reduced in trip-id order, so the result is bit-identical
/// under input permutations.
inline MetricsReport score(std::vector<Prediction> predictions,
                           const std::vector<Trip>& actuals) {
  if (predictions.empty()) fail(Errc::EmptyInput, "score: no predictions");
  std::stable_sort(predictions.begin(), predictions.end(),
                   [](const Prediction& a, const Prediction& b) { return a.trip_id < b.trip_id; });
  std::unordered_map<std::string, double> totals;
  totals.reserve(actuals.size());
  for (const auto& t : actuals) totals.emplace(t.trip_id, t.total_time());
  MetricsReport r;
  double se = 0, ae = 0, err = 0, ape = 0, cov = 0, len = 0, rel = 0;
  for (const auto& p : predictions) {
    auto it = totals.find(p.trip_id);
    if (it == totals.end())
      fail(Errc::IdMismatch, "prediction for unknown trip '" + p.trip_id + "'");
    double T = it->second;
    double e = p.point - T;
    se += e * e;
    ae += std::fabs(e);
    err += e;
    ape += std::fabs(e) / T;
    cov += (p.lower <= T && T <= p.upper) ? 1.0 : 0.0;
    len += p.upper - p.lower;
    rel += (p.upper - p.lower) / T;
  }
  double m = static_cast<double>(predictions.size());
  r.rmse = std::sqrt(se / m);
  r.mae = ae / m;
  r.mean_error = err / m;
  r.mape_pct = 100.0 * ape / m;
  r.coverage_pct = 100.0 * cov / m;
  r.mean_interval_length_s = len / m;
  r.relative_length_pct = 100.0 * rel / m;
  r.trips = predictions.size();
  return r;
}

struct CoveragePoint {
  std::size_t k = 0;
  double coverage = 0;        // fraction in [0,1]
  double interval_width = 0;  // mean width at this prefix
  std::size_t n_trips = 0;
};

/// Per-prefix-length empirical coverage of prediction sequences: at each k,
/// the fraction of trips with at least k edges whose realized cumulative
/// time lies inside the k-th interval. Lengths with fewer than `min_trips`
/// survivors are omitted.
inline std::vector<CoveragePoint> coverage_by_length(
    const std::vector<std::string>& trip_ids, const std::vector<IntervalSequence>& sequences,
    const std::vector<Trip>& actuals, std::size_t min_trips = 30) {
  if (trip_ids.size() != sequences.size())
    fail(Errc::IdMismatch, "coverage_by_length: ids and sequences differ in size");
  std::unordered_map<std::string, const Trip*> by_id;
  for (const auto& t : actuals) by_id.emplace(t.trip_id, &t);
  std::size_t max_k = 0;
  for (const auto& s : sequences) max_k = std::max(max_k, s.steps.size());
  std::vector<CoveragePoint> curve(max_k);
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    auto it = by_id.find(trip_ids[i]);
    if (it == by_id.end())
      fail(Errc::IdMismatch, "sequence for unknown trip '" + trip_ids[i] + "'");
    const Trip& trip = *it->second;
    double cum = 0;
    std::size_t n = std::min(trip.records.size(), sequences[i].steps.size());
    for (std::size_t k = 0; k < n; ++k) {
      cum += trip.records[k].travel_time_s;
      const auto& step = sequences[i].steps[k];
      auto& pt = curve[k];
      pt.k = k + 1;
      pt.coverage += (step.lower <= cum && cum <= step.upper) ? 1.0 : 0.0;
      pt.interval_width += step.upper - step.lower;
      ++pt.n_trips;
    }
  }
  std::vector<CoveragePoint> out;
  for (auto& pt : curve) {
    if (pt.n_trips < min_trips) continue;
    pt.coverage /= static_cast<double>(pt.n_trips);
    pt.interval_width /= static_cast<double>(pt.n_trips);
    out.push_back(pt);
  }
  return out;
}

struct StratumReport {
  std::string label;
  MetricsReport metrics;
};

/// Metrics stratified by trip edge count with half-open strata
/// (n <= c1, c1 < n <= c2, ..., n > ck).
inline std::vector<StratumReport> length_stratified_report(
    const std::vector<Prediction>& predictions, const std::vector<Trip>& actuals,
    const std::vector<std::size_t>& cutpoints = {40, 80, 120}) {
  std::unordered_map<std::string, const Trip*> by_id;
  for (const auto& t : actuals) by_id.emplace(t.trip_id, &t);
  std::size_t strata = cutpoints.size() + 1;
  std::vector<std::vector<Prediction>> buckets(strata);
  for (const auto& p : predictions) {
    auto it = by_id.find(p.trip_id);
    if (it == by_id.end())
      fail(Errc::IdMismatch, "prediction for unknown trip '" + p.trip_id + "'");
    std::size_t n = it->second->edge_count();
    std::size_t s = 0;
    while (s < cutpoints.size() && n > cutpoints[s]) ++s;
    buckets[s].push_back(p);
  }
  std::vector<StratumReport> out;
  for (std::size_t s = 0; s < strata; ++s) {
    if (buckets[s].empty()) continue;
    std::string label;
    if (s == 0)
      label = "n<=" + std::to_string(cutpoints.empty() ? 0 : cutpoints[0]);
    else if (s == cutpoints.size())
      label = "n>" + std::to_string(cutpoints.back());
    else
      label = std::to_string(cutpoints[s - 1]) + "<n<=" + std::to_string(cutpoints[s]);
    if (cutpoints.empty()) label = "all";
    out.push_back({label, score(buckets[s], actuals)});
  }
  return out;
}

/// Space and time averages for the ergodicity diagnostic: the space average
/// at k is the mean over trips (with at least k edges) of cumulative time at
/// k divided by k; time averages are per-trip running means. Only trips with
/// at least `min_edges` edges participate.
struct ErgodicityReport {
  std::vector<std::size_t> ks;
  std::vector<double> space_avg;
  std::vector<std::size_t> space_n;
  std::vector<std::string> trip_ids;
  std::vector<std::vector<double>> time_avg;  // per trip, running T_k / k
  double mu_hat = 0;
};

inline ErgodicityReport ergodicity_check(const std::vector<Trip>& trips,
                                         std::size_t min_edges = 10) {
  ErgodicityReport rep;
  std::size_t max_k = 0;
  RunningMoments ratio;
  for (const auto& t : trips) {
    if (t.edge_count() < min_edges) continue;
    max_k = std::max(max_k, t.edge_count());
    ratio.add(t.total_time() / static_cast<double>(t.edge_count()));
  }
  if (ratio.count() == 0) fail(Errc::EmptyInput, "ergodicity_check: no trips long enough");
  rep.mu_hat = ratio.mean();
  std::vector<double> sums(max_k, 0.0);
  std::vector<std::size_t> counts(max_k, 0);
  for (const auto& t : trips) {
    if (t.edge_count() < min_edges) continue;
    rep.trip_ids.push_back(t.trip_id);
    std::vector<double> run(t.edge_count());
    double cum = 0;
    for (std::size_t k = 0; k < t.edge_count(); ++k) {
      cum += t.records[k].travel_time_s;
      run[k] = cum / static_cast<double>(k + 1);
      sums[k] += run[k];
      ++counts[k];
    }
    rep.time_avg.push_back(std::move(run));
  }
  for (std::size_t k = 0; k < max_k; ++k) {
    if (counts[k] == 0) continue;
    rep.ks.push_back(k + 1);
    rep.space_avg.push_back(sums[k] / static_cast<double>(counts[k]));
    rep.space_n.push_back(counts[k]);
  }
  return rep;
}

// --- serialization ---

inline nlohmann::json metrics_to_json(const MetricsReport& r) {
  return nlohmann::json{{"rmse", r.rmse},
                        {"mae", r.mae},
                        {"mean_error", r.mean_error},
                        {"mape_pct", r.mape_pct},
                        {"coverage_pct", r.coverage_pct},
                        {"mean_interval_length_s", r.mean_interval_length_s},
                        {"relative_length_pct", r.relative_length_pct},
                        {"trips", r.trips}};
}

inline std::string metrics_to_tidy_csv(const std::vector<StratumReport>& strata) {
  std::string out = "stratum,metric,value\n";
  for (const auto& s : strata) {
    auto row = [&](const char* name, double v) {
      out += s.label;
      out += ',';
      out += name;
      out += ',';
      out += format_double(v);
      out += '\n';
    };
    row("rmse", s.metrics.rmse);
    row("mae", s.metrics.mae);
    row("mean_error", s.metrics.mean_error);
    row("mape_pct", s.metrics.mape_pct);
    row("coverage_pct", s.metrics.coverage_pct);
    row("mean_interval_length_s", s.metrics.mean_interval_length_s);
    row("relative_length_pct", s.metrics.relative_length_pct);
    row("trips", static_cast<double>(s.metrics.trips));
  }
  return out;
}

inline std::string coverage_curve_to_csv(const std::vector<CoveragePoint>& curve) {
  std::string out = "k,coverage,interval_width,n_trips\n";
  for (const auto& pt : curve)
    out += std::to_string(pt.k) + "," + format_double(pt.coverage) + "," +
           format_double(pt.interval_width) + "," + std::to_string(pt.n_trips) + "\n";
  return out;
}

/// Plot-ready long-format CSV for the ergodicity diagnostic.
inline std::string ergodicity_to_csv(const ErgodicityReport& rep) {
  std::string out = "series,trip_id,k,value_s_per_edge\n";
  for (std::size_t i = 0; i < rep.ks.size(); ++i)
    out += "space_avg,," + std::to_string(rep.ks[i]) + "," + format_double(rep.space_avg[i]) +
           "\n";
  for (std::size_t t = 0; t < rep.trip_ids.size(); ++t)
    for (std::size_t k = 0; k < rep.time_avg[t].size(); ++k)
      out += "time_avg," + rep.trip_ids[t] + "," + std::to_string(k + 1) + "," +
             format_double(rep.time_avg[t][k]) + "\n";
  out += "mu_hat,,0," + format_double(rep.mu_hat) + "\n";
  return out;
}

inline std::vector<Prediction> predictions_from_csv(const std::string& path) {
  CsvFile csv = read_csv(path);
  require_header(csv, {"trip_id", "point_s", "lower_s", "upper_s"}, path);
  std::vector<Prediction> out;
  out.reserve(csv.rows.size());
  for (const auto& row : csv.rows)
    out.push_back({row[0], parse_double(row[1], path), parse_double(row[2], path),
                   parse_double(row[3], path)});
  return out;
}

inline std::string predictions_to_csv(const std::vector<Prediction>& preds) {
  std::string out = "trip_id,point_s,lower_s,upper_s\n";
  for (const auto& p : preds)
    out += p.trip_id + "," + format_double(p.point) + "," + format_double(p.lower) + "," +
           format_double(p.upper) + "\n";
  return out;
}

inline std::vector<IntervalSequence> sequences_from_csv(const std::string& path,
                                                        std::vector<std::string>& trip_ids) {
  CsvFile csv = read_csv(path);
  require_header(csv, {"trip_id", "k", "point_s", "lower_s", "upper_s", "sd_s"}, path);
  std::vector<IntervalSequence> seqs;
  for (const auto& row : csv.rows) {
    if (trip_ids.empty() || trip_ids.back() != row[0]) {
      trip_ids.push_back(row[0]);
      seqs.emplace_back();
    }
    IntervalStep step;
    step.k = static_cast<std::size_t>(parse_int(row[1], path));
    step.point = parse_double(row[2], path);
    step.lower = parse_double(row[3], path);
    step.upper = parse_double(row[4], path);
    step.sd = parse_double(row[5], path);
    if (step.k != seqs.back().steps.size() + 1)
      fail(Errc::BadFormat, path + ": sequence for '" + row[0] + "' has out-of-order k");
    seqs.back().steps.push_back(step);
  }
  return seqs;
}

}  // namespace traveltime
