#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "traveltime/errors.hpp"
#include "traveltime/parallel.hpp"
#include "traveltime/population.hpp"
#include "traveltime/rng.hpp"
#include "traveltime/stats.hpp"
#include "traveltime/traffic_bin.hpp"
#include "traveltime/trip.hpp"
#include "traveltime/tripspec.hpp"

namespace traveltime {

/// Independent log-normal edge model: per (edge, exit, bin) moments of log
/// travel time, sharing the moment-table imputation chain.
struct LogNormalEdgeModel {
  EdgeMomentTable log_moments;  // mean = log mean, var = log variance
};

inline LogNormalEdgeModel fit_lognormal(const std::vector<Trip>& trips,
                                        std::uint32_t min_count = 10, double tz_offset_s = 0) {
  return LogNormalEdgeModel{fit_moment_table(trips, min_count, tz_offset_s, true)};
}

/// Iterative Monte Carlo prediction for the no-dependence model: every
/// replicate advances its own clock edge by edge, re-resolving the traffic
/// bin at each step; the point prediction is the replicate mean and the
/// bounds are empirical quantiles. Replicates use derived seed streams, so
/// the result is reproducible and thread-count independent.
inline Interval predict_lognormal(const LogNormalEdgeModel& model,
                                  const std::vector<std::string>& route_edges, double t0,
                                  double beta, std::size_t samples = 1000,
                                  std::uint64_t seed = 1, double tz_offset_s = 0,
                                  unsigned threads = 1) {
  check_level(beta);
  if (route_edges.empty()) fail(Errc::EmptyInput, "predict_lognormal: empty route");
  std::size_t n = route_edges.size();
  if (samples < 2) fail(Errc::EmptyInput, "predict_lognormal needs samples >= 2");
  // Per-edge, per-bin moments resolved once; the replicate loop then only
  // indexes arrays.
  std::vector<double> log_mean(n * 3), log_sd(n * 3);
  for (std::size_t k = 0; k < n; ++k) {
    std::uint32_t e = model.log_moments.find(route_edges[k]);
    std::uint32_t x = k + 1 < n ? model.log_moments.find(route_edges[k + 1])
                                : EdgeMomentTable::kAny;
    for (int b = 0; b < 3; ++b) {
      MomentLookup look = model.log_moments.lookup(e, x, static_cast<TrafficBin>(b));
      log_mean[k * 3 + b] = look.mean;
      log_sd[k * 3 + b] = look.sd;
    }
  }
  std::vector<double> totals(samples);
  parallel_for(samples, threads, [&](std::size_t r) {
    Rng rng(derive_stream_seed(seed, r));
    double clock = t0;
    double total = 0;
    for (std::size_t k = 0; k < n; ++k) {
      int b = static_cast<int>(assign_traffic_bin(clock + tz_offset_s));
      double draw = std::exp(log_mean[k * 3 + b] + log_sd[k * 3 + b] * rng.normal());
      total += draw;
      clock += draw;
    }
    totals[r] = total;
  });
  double mean = 0;
  for (double t : totals) mean += t;
  mean /= static_cast<double>(samples);
  Interval iv;
  iv.point = mean;
  iv.lower = quantile_type7(totals, beta / 2.0);
  iv.upper = quantile_type7(totals, 1.0 - beta / 2.0);
  iv.level = 1.0 - beta;
  return iv;
}

/// Log-linear regression on trip distance and start-time traffic bin.
/// Coefficients live on the log-seconds scale; bin offsets are relative to
/// the Non-rush baseline.
struct LogLinearModel {
  double intercept = 0;
  double coef_distance = 0;      // per meter
  double offset_am = 0;
  double offset_pm = 0;
  double residual_sd = 0;
  std::size_t m = 0;

  double bin_offset(TrafficBin b) const {
    if (b == TrafficBin::AMRush) return offset_am;
    if (b == TrafficBin::PMRush) return offset_pm;
    return 0.0;
  }
};

namespace detail {

/// Householder QR least squares for tall-skinny systems.
inline std::vector<double> qr_solve(std::vector<std::vector<double>> a, std::vector<double> y,
                                    double pivot_tol) {
  std::size_t rows = a.size();
  std::size_t cols = a.empty() ? 0 : a[0].size();
  if (rows < cols) fail(Errc::RankDeficient, "fewer rows than coefficients");
  for (std::size_t j = 0; j < cols; ++j) {
    double norm = 0;
    for (std::size_t i = j; i < rows; ++i) norm += a[i][j] * a[i][j];
    norm = std::sqrt(norm);
    if (norm < pivot_tol) fail(Errc::RankDeficient, "design matrix is rank deficient");
    double alpha = a[j][j] > 0 ? -norm : norm;
    double v0 = a[j][j] - alpha;
    std::vector<double> v(rows - j, 0.0);
    v[0] = v0;
    for (std::size_t i = j + 1; i < rows; ++i) v[i - j] = a[i][j];
    double vnorm2 = 0;
    for (double x : v) vnorm2 += x * x;
    if (vnorm2 < pivot_tol * pivot_tol) {
      a[j][j] = alpha;
      continue;
    }
    for (std::size_t c = j; c < cols; ++c) {
      double dot = 0;
      for (std::size_t i = j; i < rows; ++i) dot += v[i - j] * a[i][c];
      double f = 2.0 * dot / vnorm2;
      for (std::size_t i = j; i < rows; ++i) a[i][c] -= f * v[i - j];
    }
    double dot = 0;
    for (std::size_t i = j; i < rows; ++i) dot += v[i - j] * y[i];
    double f = 2.0 * dot / vnorm2;
    for (std::size_t i = j; i < rows; ++i) y[i] -= f * v[i - j];
  }
  std::vector<double> beta(cols, 0.0);
  for (std::size_t jj = cols; jj-- > 0;) {
    double s = y[jj];
    for (std::size_t c = jj + 1; c < cols; ++c) s -= a[jj][c] * beta[c];
    if (std::fabs(a[jj][jj]) < pivot_tol)
      fail(Errc::RankDeficient, "design matrix is rank deficient");
    beta[jj] = s / a[jj][jj];
  }
  return beta;
}

}  // namespace detail

/// Ordinary least squares of log total time on total distance plus bin
/// indicators, via Householder QR (pivot tolerance 1e-10).
inline LogLinearModel fit_loglinear(const std::vector<Trip>& trips, double tz_offset_s = 0) {
  constexpr std::size_t p = 4;
  if (trips.size() < p + 2)
    fail(Errc::TooFewTrips, "log-linear fit needs at least " + std::to_string(p + 2) + " trips");
  std::vector<std::vector<double>> design;
  std::vector<double> y;
  design.reserve(trips.size());
  y.reserve(trips.size());
  for (const auto& t : trips) {
    double total = t.total_time();
    if (!(total > 0)) fail(Errc::BadFormat, "trip '" + t.trip_id + "' has non-positive time");
    TrafficBin b = assign_traffic_bin(t.start_time() + tz_offset_s);
    design.push_back({1.0, t.total_distance(), b == TrafficBin::AMRush ? 1.0 : 0.0,
                      b == TrafficBin::PMRush ? 1.0 : 0.0});
    y.push_back(std::log(total));
  }
  std::vector<double> beta = detail::qr_solve(design, y, 1e-10);
  LogLinearModel model;
  model.intercept = beta[0];
  model.coef_distance = beta[1];
  model.offset_am = beta[2];
  model.offset_pm = beta[3];
  model.m = trips.size();
  double rss = 0;
  for (std::size_t i = 0; i < design.size(); ++i) {
    double fit = 0;
    for (std::size_t j = 0; j < p; ++j) fit += design[i][j] * beta[j];
    rss += (y[i] - fit) * (y[i] - fit);
  }
  model.residual_sd = std::sqrt(rss / static_cast<double>(design.size() - p));
  return model;
}

/// Back-transformed log-scale interval; the point uses the log-normal mean
/// correction exp(x + sd^2/2).
inline Interval predict_loglinear(const LogLinearModel& model, double distance_m, TrafficBin bin,
                                  double beta) {
  check_level(beta);
  double x = model.intercept + model.coef_distance * distance_m + model.bin_offset(bin);
  double z = normal_quantile(1.0 - beta / 2.0);
  Interval iv;
  iv.point = std::exp(x + model.residual_sd * model.residual_sd / 2.0);
  iv.lower = std::exp(x - z * model.residual_sd);
  iv.upper = std::exp(x + z * model.residual_sd);
  iv.level = 1.0 - beta;
  return iv;
}

// --- serialization ---

inline nlohmann::json lognormal_to_json(const LogNormalEdgeModel& model) {
  nlohmann::json entries = nlohmann::json::array();
  struct Row {
    std::string edge, exit;
    int bin;
    MomentEntry e;
  };
  std::vector<Row> rows;
  model.log_moments.for_each_entry(
      [&](std::uint32_t e, std::uint32_t x, TrafficBin bin, const MomentEntry& entry) {
        rows.push_back({model.log_moments.edge_id(e),
                        x == EdgeMomentTable::kAny ? "*" : model.log_moments.edge_id(x),
                        static_cast<int>(bin), entry});
      });
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.edge != b.edge) return a.edge < b.edge;
    if (a.exit != b.exit) return a.exit < b.exit;
    return a.bin < b.bin;
  });
  for (const auto& r : rows)
    entries.push_back({{"edge", r.edge},
                       {"exit", r.exit},
                       {"bin", bin_name(static_cast<TrafficBin>(r.bin))},
                       {"log_mean", r.e.mean},
                       {"log_var", r.e.var},
                       {"count", r.e.count}});
  nlohmann::json globals = nlohmann::json::array();
  for (int b = 0; b < 3; ++b) {
    const auto& g = model.log_moments.bin_global(static_cast<TrafficBin>(b));
    globals.push_back({{"bin", bin_name(static_cast<TrafficBin>(b))},
                       {"log_mean", g.mean},
                       {"log_var", g.var},
                       {"count", g.count}});
  }
  return nlohmann::json{{"model", "lognormal"}, {"entries", entries}, {"bin_globals", globals}};
}

inline nlohmann::json loglinear_to_json(const LogLinearModel& m) {
  return nlohmann::json{{"model", "loglinear"},
                        {"intercept", m.intercept},
                        {"coef_distance", m.coef_distance},
                        {"offset_am", m.offset_am},
                        {"offset_pm", m.offset_pm},
                        {"residual_sd", m.residual_sd},
                        {"m", m.m}};
}

inline LogNormalEdgeModel lognormal_from_json(const nlohmann::json& j) {
  LogNormalEdgeModel model;
  auto& table = model.log_moments;
  for (const auto& row : j.at("entries")) {
    std::uint32_t e = table.intern(row.at("edge").get<std::string>());
    std::string exit = row.at("exit").get<std::string>();
    std::uint32_t x = exit == "*" ? EdgeMomentTable::kAny : table.intern(exit);
    TrafficBin bin = bin_from_name(row.at("bin").get<std::string>());
    table.set_entry(e, x, bin,
                    {row.at("log_mean").get<double>(), row.at("log_var").get<double>(),
                     row.at("count").get<std::uint64_t>()});
  }
  for (const auto& row : j.at("bin_globals")) {
    TrafficBin bin = bin_from_name(row.at("bin").get<std::string>());
    table.set_bin_global(bin, {row.at("log_mean").get<double>(),
                               row.at("log_var").get<double>(),
                               row.at("count").get<std::uint64_t>()});
  }
  return model;
}

inline LogLinearModel loglinear_from_json(const nlohmann::json& j) {
  LogLinearModel m;
  m.intercept = j.at("intercept").get<double>();
  m.coef_distance = j.at("coef_distance").get<double>();
  m.offset_am = j.at("offset_am").get<double>();
  m.offset_pm = j.at("offset_pm").get<double>();
  m.residual_sd = j.at("residual_sd").get<double>();
  m.m = j.at("m").get<std::size_t>();
  return m;
}

}  // namespace traveltime
