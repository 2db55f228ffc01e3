#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "traveltime/population.hpp"

using namespace traveltime;
using ttfix::chained_trip;

namespace {

// T/n = {10, 12, 8, 11, 9}, n = {2, 4, 5, 10, 10}
std::vector<Trip> five_trip_fixture() {
  std::vector<Trip> trips;
  const double ratio[] = {10, 12, 8, 11, 9};
  const std::size_t n[] = {2, 4, 5, 10, 10};
  for (int j = 0; j < 5; ++j)
    trips.push_back(chained_trip("f" + std::to_string(j),
                                 std::vector<double>(n[j], ratio[j])));
  return trips;
}

}  // namespace

TEST_CASE("estimate_population on the five-trip fixture") {
  PopulationParams p = estimate_population(five_trip_fixture());
  CHECK(p.m == 5);
  CHECK(p.mu_hat == Catch::Approx(10.0).margin(1e-10));
  CHECK(p.var_hat == Catch::Approx(2.5).margin(1e-10));
  CHECK(p.mean_inv_n == Catch::Approx(0.23).margin(1e-10));
  CHECK(p.sigma_prof_sq == Catch::Approx(2.5 / 0.23).margin(1e-9));
}

TEST_CASE("degenerate sample: identical single-edge trips") {
  std::vector<Trip> trips;
  for (int j = 0; j < 7; ++j) trips.push_back(chained_trip("d" + std::to_string(j), {42.0}));
  PopulationParams p = estimate_population(trips);
  CHECK(p.mu_hat == 42.0);
  CHECK(p.var_hat == 0.0);
  CHECK(p.sigma_prof_sq == 0.0);
  CHECK(p.mean_inv_n == 1.0);
}

TEST_CASE("population fit input validation") {
  SECTION("fewer than two trips") {
    std::vector<Trip> one{chained_trip("a", {5, 5})};
    try {
      estimate_population(one);
      FAIL("expected TooFewTrips");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::TooFewTrips);
    }
  }
  SECTION("min_edges floor excludes short trips") {
    std::vector<Trip> trips{chained_trip("a", {5.0}), chained_trip("b", {4, 4, 4}),
                            chained_trip("c", {6, 6, 6})};
    PopulationFitOptions opt;
    opt.min_edges = 2;
    PopulationParams p = estimate_population(trips, opt);
    CHECK(p.m == 2);
    CHECK(p.mu_hat == Catch::Approx(5.0));
  }
}

TEST_CASE("per-100m unit counts distance blocks") {
  // 3 edges x 150 m = 450 m -> ceil(4.5) = 5 length units
  Trip t1 = chained_trip("a", {10, 10, 10}, 0, "e0", 150);
  Trip t2 = chained_trip("b", {20, 20, 20}, 0, "e0", 150);
  PopulationFitOptions opt;
  opt.unit = LengthUnit::Per100m;
  PopulationParams p = estimate_population({t1, t2}, opt);
  CHECK(p.mu_hat == Catch::Approx((30.0 / 5 + 60.0 / 5) / 2));
  CHECK(p.mean_inv_n == Catch::Approx(1.0 / 5));
}

TEST_CASE("mean confidence interval") {
  SECTION("paper-scale fit reproduces the reported interval") {
    PopulationParams p;
    p.mu_hat = 16.70;
    p.var_hat = 33.50;
    p.mean_inv_n = 0.02;
    p.sigma_prof_sq = p.var_hat / p.mean_inv_n;
    p.m = 1000;
    Interval ci = mean_confidence_interval(p, 0.05);
    CHECK(ci.point == 16.70);
    CHECK(ci.upper - ci.point == Catch::Approx(0.3592).margin(5e-4));
    CHECK(ci.lower == Catch::Approx(16.3408).margin(1e-3));
    CHECK(ci.upper == Catch::Approx(17.0592).margin(1e-3));
  }
  SECTION("zero variance collapses to a point") {
    PopulationParams p;
    p.mu_hat = 9.0;
    p.var_hat = 0.0;
    p.mean_inv_n = 0.5;
    p.m = 10;
    Interval ci = mean_confidence_interval(p, 0.05);
    CHECK(ci.lower == 9.0);
    CHECK(ci.upper == 9.0);
  }
  SECTION("small-sample t quantile, df = 4") {
    PopulationParams p = estimate_population(five_trip_fixture());
    Interval ci = mean_confidence_interval(p, 0.05);
    double half = 2.7764451051978 * std::sqrt(2.5 / 5.0);
    CHECK(ci.upper - ci.point == Catch::Approx(half).epsilon(1e-10));
    CHECK(ci.point - ci.lower == Catch::Approx(half).epsilon(1e-10));
  }
  SECTION("invalid level") {
    PopulationParams p = estimate_population(five_trip_fixture());
    for (double beta : {0.0, 1.0, 1.5, -0.2}) {
      try {
        mean_confidence_interval(p, beta);
        FAIL("expected InvalidLevel");
      } catch (const Error& e) {
        CHECK(e.code() == Errc::InvalidLevel);
      }
    }
  }
}

TEST_CASE("population prediction interval") {
  PopulationParams p;
  p.mu_hat = 10.0;
  p.var_hat = 4.0 * 0.02;
  p.mean_inv_n = 0.02;
  p.sigma_prof_sq = 4.0;
  p.m = 100;
  SECTION("hand-computed bounds") {
    Interval iv = population_prediction_interval(p, 25, 0.05);
    CHECK(iv.point == Catch::Approx(250.0));
    CHECK(iv.lower == Catch::Approx(230.30260573349594).margin(1e-6));
    CHECK(iv.upper == Catch::Approx(269.69739426650403).margin(1e-6));
    CHECK(iv.level == Catch::Approx(0.95));
  }
  SECTION("degenerate variance") {
    PopulationParams q = p;
    q.sigma_prof_sq = 0.0;
    Interval iv = population_prediction_interval(q, 25, 0.05);
    CHECK(iv.lower == 250.0);
    CHECK(iv.upper == 250.0);
  }
  SECTION("width grows exactly as sqrt(n)") {
    for (double n : {1.0, 7.0, 25.0, 100.0}) {
      double w1 = population_half_width(p, n, 0.05);
      double w4 = population_half_width(p, 4.0 * n, 0.05);
      CHECK(w4 == 2.0 * w1);  // bit-exact
    }
  }
  SECTION("errors") {
    try {
      population_prediction_interval(p, 0, 0.05);
      FAIL("expected NonPositiveLength");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::NonPositiveLength);
    }
    try {
      population_prediction_interval(p, 25, 2.0);
      FAIL("expected InvalidLevel");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::InvalidLevel);
    }
  }
}

TEST_CASE("fit is unbiased and obeys the variance identity") {
  // 200 replicated fits of m = 500 trips each on the study scenario.
  TransportNetwork net = ttfix::ring6();
  SpeedProcessSpec spec = ttfix::study_spec();
  StationaryDistribution pi = stationary_distribution(net);
  double mu = analytic_mu(net, spec, pi);
  const std::size_t fits = 200, m = 500;
  RunningMoments mu_hats;
  double predicted_var_sum = 0;
  for (std::size_t f = 0; f < fits; ++f) {
    auto trips = ttfix::sim_trips(net, spec, pi, m, 0.65, derive_stream_seed(31337, f));
    PopulationParams p = estimate_population(trips);
    mu_hats.add(p.mu_hat);
    predicted_var_sum += p.sigma_prof_sq * p.mean_inv_n / static_cast<double>(p.m);
  }
  double se = mu_hats.stddev() / std::sqrt(static_cast<double>(fits));
  CHECK(std::fabs(mu_hats.mean() - mu) < 3.0 * se);
  // law-of-total-variance identity: Var(mu_hat) = sigma_prof^2 E[1/n] / m
  double predicted = predicted_var_sum / static_cast<double>(fits);
  CHECK(mu_hats.variance() == Catch::Approx(predicted).epsilon(0.15));
}

TEST_CASE("population params json round trip") {
  PopulationParams p = estimate_population(five_trip_fixture());
  nlohmann::json j = population_to_json(p);
  PopulationParams q = population_from_json(j);
  CHECK(q.mu_hat == p.mu_hat);
  CHECK(q.var_hat == p.var_hat);
  CHECK(q.mean_inv_n == p.mean_inv_n);
  CHECK(q.sigma_prof_sq == p.sigma_prof_sq);
  CHECK(q.m == p.m);
  CHECK(q.unit == p.unit);
}
