#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "traveltime/errors.hpp"
#include "traveltime/stats.hpp"
#include "traveltime/trip.hpp"

namespace traveltime {

/// Route-length unit for population fitting: edge count, or 100 m blocks of
/// trip distance.
enum class LengthUnit { Edge, Per100m };

inline const char* unit_name(LengthUnit u) {
  return u == LengthUnit::Edge ? "edge" : "per-100m";
}

inline LengthUnit unit_from_name(const std::string& s) {
  if (s == "edge") return LengthUnit::Edge;
  if (s == "per-100m") return LengthUnit::Per100m;
  fail(Errc::BadConfig, "unknown unit '" + s + "' (expected edge or per-100m)");
}

inline double route_length_units(const Trip& trip, LengthUnit unit) {
  if (unit == LengthUnit::Edge) return static_cast<double>(trip.edge_count());
  return std::ceil(trip.total_distance() / 100.0);
}

/// Population-level parameters fitted from pooled trips.
struct PopulationParams {
  double mu_hat = 0;        // seconds per length unit
  double var_hat = 0;       // variance of T/n across trips
  double mean_inv_n = 0;    // average of 1/n
  double sigma_prof_sq = 0; // var_hat / mean_inv_n
  std::size_t m = 0;        // trips used
  LengthUnit unit = LengthUnit::Edge;
};

/// Symmetric or asymmetric interval around a point prediction.
struct Interval {
  double point = 0;
  double lower = 0;
  double upper = 0;
  double level = 0.95;

  double width() const { return upper - lower; }
  bool covers(double value) const { return lower <= value && value <= upper; }
};

struct PopulationFitOptions {
  LengthUnit unit = LengthUnit::Edge;
  std::size_t min_edges = 1;  // floor on edges per fitted trip
};

/// Pooled estimators over m trips: mean and variance of T/n plus the mean of
/// 1/n, combined into the profile variance. A single deterministic pass.
inline PopulationParams estimate_population(const std::vector<Trip>& trips,
                                            const PopulationFitOptions& opt = {}) {
  RunningMoments ratio;
  double inv_sum = 0;
  for (const auto& t : trips) {
    if (t.edge_count() < opt.min_edges) continue;
    if (t.records.empty()) continue;
    double n = route_length_units(t, opt.unit);
    double total = t.total_time();
    if (!(n >= 1) || !(total > 0))
      fail(Errc::BadFormat, "trip '" + t.trip_id + "' has no usable length or time");
    ratio.add(total / n);
    inv_sum += 1.0 / n;
  }
  if (ratio.count() < 2)
    fail(Errc::TooFewTrips,
         "population fit needs at least 2 trips, got " + std::to_string(ratio.count()));
  PopulationParams p;
  p.m = ratio.count();
  p.mu_hat = ratio.mean();
  p.var_hat = ratio.variance();
  p.mean_inv_n = inv_sum / static_cast<double>(p.m);
  p.sigma_prof_sq = p.var_hat / p.mean_inv_n;
  p.unit = opt.unit;
  return p;
}

inline void check_level(double beta) {
  if (!(beta > 0 && beta < 1))
    fail(Errc::InvalidLevel, "beta must lie in (0,1), got " + format_double(beta));
}

/// Student-t confidence interval for the invariant mean.
inline Interval mean_confidence_interval(const PopulationParams& params, double beta) {
  check_level(beta);
  if (params.m < 2) fail(Errc::TooFewTrips, "confidence interval needs m >= 2");
  double t = student_t_quantile(1.0 - beta / 2.0, static_cast<double>(params.m - 1));
  double half = t * std::sqrt(params.var_hat / static_cast<double>(params.m));
  return Interval{params.mu_hat, params.mu_hat - half, params.mu_hat + half, 1.0 - beta};
}

/// Half-width of the population prediction interval for a route of n length
/// units. Kept separate so width identities (e.g. doubling when n scales by
/// 4) hold bit-exactly without round-tripping through the bounds.
inline double population_half_width(const PopulationParams& params, double n, double beta) {
  check_level(beta);
  if (!(n >= 1)) fail(Errc::NonPositiveLength, "route length must be >= 1");
  double z = normal_quantile(1.0 - beta / 2.0);
  double inflation = 1.0 + 1.0 / static_cast<double>(params.m);
  return z * std::sqrt(n * (params.sigma_prof_sq * inflation));
}

/// Gaussian population prediction interval for a new route of n length
/// units: n*mu_hat +- z * sqrt(n * sigma_prof_sq * (1 + 1/m)).
inline Interval population_prediction_interval(const PopulationParams& params, double n,
                                               double beta) {
  double half = population_half_width(params, n, beta);
  double point = n * params.mu_hat;
  return Interval{point, point - half, point + half, 1.0 - beta};
}

inline nlohmann::json population_to_json(const PopulationParams& p) {
  return nlohmann::json{{"mu_hat", p.mu_hat},
                        {"var_hat", p.var_hat},
                        {"mean_inv_n", p.mean_inv_n},
                        {"sigma_prof_sq", p.sigma_prof_sq},
                        {"m", p.m},
                        {"unit", unit_name(p.unit)}};
}

inline PopulationParams population_from_json(const nlohmann::json& j) {
  PopulationParams p;
  p.mu_hat = j.at("mu_hat").get<double>();
  p.var_hat = j.at("var_hat").get<double>();
  p.mean_inv_n = j.at("mean_inv_n").get<double>();
  p.sigma_prof_sq = j.at("sigma_prof_sq").get<double>();
  p.m = j.at("m").get<std::size_t>();
  p.unit = unit_from_name(j.at("unit").get<std::string>());
  return p;
}

}  // namespace traveltime
