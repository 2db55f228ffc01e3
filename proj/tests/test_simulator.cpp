#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "traveltime/network.hpp"
#include "traveltime/simulator.hpp"
#include "traveltime/stats.hpp"

using namespace traveltime;

namespace {

TransportNetwork cycle3() {
  return TransportNetwork::build({{"a", 100, {"b"}}, {"b", 100, {"c"}}, {"c", 100, {"a"}}});
}

TransportNetwork self_loop(double length = 100) {
  return TransportNetwork::build({{"e", length, {"e"}}});
}

TransportNetwork ring6() {
  std::vector<EdgeRecord> recs;
  const char* ids[] = {"e0", "e1", "e2", "e3", "e4", "e5"};
  const double len[] = {100, 150, 250, 120, 200, 80};
  for (int i = 0; i < 6; ++i)
    recs.push_back({ids[i], len[i], {ids[(i + 1) % 6], ids[(i + 2) % 6]}});
  return TransportNetwork::build(recs);
}

SpeedProcessSpec hetero_spec() {
  // Heterogeneous edge means (balanced around 20 s) with mild seasonality
  // and a one-second noise sd per edge.
  const double len[] = {100, 150, 250, 120, 200, 80};
  const double mu_e[] = {6, 30, 8, 32, 10, 34};
  std::vector<EdgeSpeedParams> edges;
  for (int i = 0; i < 6; ++i) {
    EdgeSpeedParams p;
    p.base_mean = mu_e[i] / len[i];
    p.amplitude = 0.002 * p.base_mean;
    p.phase = static_cast<double>(i);
    p.lower = 0.3 * p.base_mean;
    p.upper = 2.5 * p.base_mean;
    double cap = std::min(p.base_mean - p.amplitude - p.lower,
                          p.upper - (p.base_mean + p.amplitude)) /
                 4.0;
    p.noise_sd = std::min(0.95 * cap, 1.0 / len[i]);
    edges.push_back(p);
  }
  return SpeedProcessSpec(std::move(edges));
}

Route walk_from_pi(const TransportNetwork& net, const StationaryDistribution& pi,
                   std::size_t n, std::uint64_t stream) {
  Rng rng(stream);
  double pick = rng.next_unit();
  EdgeIndex start = 0;
  double acc = 0;
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    acc += pi.pi[e];
    start = e;
    if (pick < acc) break;
  }
  return random_walk(net, start, n, derive_stream_seed(stream, 1));
}

}  // namespace

TEST_CASE("spec validation enforces bounds and clamp headroom") {
  EdgeSpeedParams p;
  p.base_mean = 0.1;
  p.amplitude = 0.02;
  p.lower = 0.02;
  p.upper = 0.2;
  p.noise_sd = 0.01;
  CHECK_NOTHROW(SpeedProcessSpec({p}));
  SECTION("mean path below delta") {
    p.lower = 0.09;
    CHECK_THROWS_AS(SpeedProcessSpec({p}), Error);
  }
  SECTION("mean path above M") {
    p.upper = 0.11;
    CHECK_THROWS_AS(SpeedProcessSpec({p}), Error);
  }
  SECTION("noise beyond a quarter of the headroom") {
    p.noise_sd = 0.03;
    CHECK_THROWS_AS(SpeedProcessSpec({p}), Error);
  }
  SECTION("negative period") { CHECK_THROWS_AS(SpeedProcessSpec({p}, -1.0), Error); }
  CHECK_THROWS_AS(MixingSpec(1.0), Error);
}

TEST_CASE("mixing sequence: independence case is uniform") {
  std::vector<double> u = mixing_uniform_sequence(100000, MixingSpec(0.0), 31);
  double d = ks_statistic_uniform(u);
  CHECK(d < ks_critical(0.01, u.size()));
}

TEST_CASE("mixing sequence: lag-1 correlation matches the AR coefficient") {
  std::vector<double> u = mixing_uniform_sequence(1000000, MixingSpec(0.5), 77);
  std::vector<double> z(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) z[i] = normal_quantile(u[i]);
  double m = 0;
  for (double x : z) m += x;
  m /= static_cast<double>(z.size());
  double c0 = 0, c1 = 0;
  for (std::size_t i = 0; i < z.size(); ++i) c0 += (z[i] - m) * (z[i] - m);
  for (std::size_t i = 0; i + 1 < z.size(); ++i) c1 += (z[i] - m) * (z[i + 1] - m);
  CHECK(std::fabs(c1 / c0 - 0.5) < 0.01);
}

TEST_CASE("mixing sequence is seed deterministic") {
  auto a = mixing_uniform_sequence(64, MixingSpec(0.3), 5);
  auto b = mixing_uniform_sequence(64, MixingSpec(0.3), 5);
  auto c = mixing_uniform_sequence(64, MixingSpec(0.3), 6);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("sample_speed median, degenerate and periodic cases") {
  EdgeSpeedParams p;
  p.base_mean = 0.1;
  p.amplitude = 0.02;
  p.phase = 0.4;
  p.noise_sd = 0.005;
  p.lower = 0.02;
  p.upper = 0.3;
  SpeedProcessSpec spec({p});
  SECTION("u = 0.5 returns the mean path exactly") {
    for (double t : {0.0, 1234.5, 400000.0})
      CHECK(sample_speed(spec, 0, t, 0.5) == Catch::Approx(spec.mean_speed(0, t)).margin(1e-15));
  }
  SECTION("b = 0, s = 0 is constant") {
    EdgeSpeedParams q;
    q.base_mean = 0.07;
    q.lower = 0.01;
    q.upper = 0.2;
    SpeedProcessSpec flat({q});
    for (double t : {0.0, 99.0, 1e6})
      for (double u : {0.01, 0.5, 0.99}) CHECK(sample_speed(flat, 0, t, u) == 0.07);
  }
  SECTION("shifting time by one period changes nothing") {
    for (double t : {0.0, 777.0, 12345.0})
      for (double u : {0.2, 0.8})
        CHECK(sample_speed(spec, 0, t, u) == sample_speed(spec, 0, t + spec.period(), u));
  }
  SECTION("clamping keeps draws inside the bounds") {
    for (double u : {1e-12, 1.0 - 1e-12}) {
      double v = sample_speed(spec, 0, 0.0, u);
      CHECK(v >= p.lower);
      CHECK(v <= p.upper);
    }
  }
}

TEST_CASE("simulate_trip with constant speeds") {
  TransportNetwork net = cycle3();
  EdgeSpeedParams p;
  p.base_mean = 0.1;
  p.lower = 0.01;
  p.upper = 0.5;
  SpeedProcessSpec spec({p, p, p});
  Route route{{0, 1, 2}};
  Trip trip = simulate_trip(net, route, 50.0, spec, MixingSpec(0.0), 9, "x");
  REQUIRE(trip.records.size() == 3);
  for (const auto& r : trip.records) CHECK(r.travel_time_s == Catch::Approx(10.0).margin(1e-9));
  CHECK(trip.records[0].entry_time_s == Catch::Approx(50.0));
  CHECK(trip.records[1].entry_time_s == Catch::Approx(60.0).margin(1e-9));
  CHECK(trip.records[2].entry_time_s == Catch::Approx(70.0).margin(1e-9));
  CHECK(trip.total_time() == Catch::Approx(30.0).margin(1e-9));
}

TEST_CASE("simulate_trip matches the hand-unrolled two-step recursion") {
  TransportNetwork net = TransportNetwork::build({{"u", 100, {"v"}}, {"v", 200, {"u"}}});
  EdgeSpeedParams e0, e1;
  e0.base_mean = 0.1;
  e0.amplitude = 0.02;
  e0.phase = 0.3;
  e0.lower = 0.01;
  e0.upper = 0.5;
  e1.base_mean = 0.05;
  e1.amplitude = 0.01;
  e1.phase = 1.1;
  e1.lower = 0.01;
  e1.upper = 0.5;
  SpeedProcessSpec spec({e0, e1});
  Trip trip = simulate_trip(net, Route{{0, 1}}, 1000.0, spec, MixingSpec(0.0), 4, "h");
  // frozen from an independent unroll of tau' = tau + d * m(tau)
  CHECK(trip.records[0].travel_time_s == Catch::Approx(10.61085788435488).epsilon(1e-12));
  CHECK(trip.records[1].entry_time_s == Catch::Approx(1010.6108578843549).epsilon(1e-12));
  CHECK(trip.records[1].travel_time_s == Catch::Approx(11.791841008780715).epsilon(1e-12));
  CHECK(trip.total_time() == Catch::Approx(22.402698893135593).epsilon(1e-12));
}

TEST_CASE("rotation-map consistency: exits equal next entries exactly") {
  TransportNetwork net = ring6();
  SpeedProcessSpec spec = hetero_spec();
  StationaryDistribution pi = stationary_distribution(net);
  for (std::uint64_t s = 0; s < 10; ++s) {
    Route route = walk_from_pi(net, pi, 50, derive_stream_seed(404, s));
    Trip trip = simulate_trip(net, route, 123.0, spec, MixingSpec(0.4), s, "r");
    for (std::size_t k = 0; k + 1 < trip.records.size(); ++k)
      REQUIRE(trip.records[k].entry_time_s + trip.records[k].travel_time_s ==
              trip.records[k + 1].entry_time_s);
  }
}

TEST_CASE("trip periodicity: shifting t0 by one period reproduces travel times") {
  TransportNetwork net = ring6();
  SpeedProcessSpec spec = hetero_spec();
  Route route = random_walk(net, 1, 40, 11);
  Trip a = simulate_trip(net, route, 5000.0, spec, MixingSpec(0.5), 21, "a");
  Trip b = simulate_trip(net, route, 5000.0 + spec.period(), spec, MixingSpec(0.5), 21, "b");
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    REQUIRE(a.records[k].travel_time_s == b.records[k].travel_time_s);
    REQUIRE(b.records[k].entry_time_s - a.records[k].entry_time_s ==
            Catch::Approx(spec.period()).margin(1e-6));
  }
}

TEST_CASE("marginal correctness: flat-mean speeds are clamped normal") {
  TransportNetwork net = self_loop();
  EdgeSpeedParams p;
  p.base_mean = 0.1;
  p.noise_sd = 0.015;
  p.lower = 0.02;
  p.upper = 0.25;
  SpeedProcessSpec spec({p});
  Route route{std::vector<EdgeIndex>(100000, 0)};
  Trip trip = simulate_trip(net, route, 0.0, spec, MixingSpec(0.0), 3, "m");
  std::vector<double> u;
  u.reserve(trip.records.size());
  for (const auto& r : trip.records)
    u.push_back(normal_cdf((r.travel_time_s / 100.0 - p.base_mean) / p.noise_sd));
  CHECK(ks_statistic_uniform(u) < ks_critical(0.01, u.size()));
}

TEST_CASE("analytic mu") {
  SECTION("three-edge cycle with any amplitude gives d*a") {
    TransportNetwork net = cycle3();
    EdgeSpeedParams p;
    p.base_mean = 0.1;
    p.amplitude = 0.02;
    p.phase = 0.9;
    p.lower = 0.01;
    p.upper = 0.5;
    SpeedProcessSpec spec({p, p, p});
    CHECK(analytic_mu(net, spec) == Catch::Approx(10.0).epsilon(1e-12));
  }
  SECTION("heterogeneous network matches trapezoid quadrature of the mean path") {
    TransportNetwork net = ring6();
    SpeedProcessSpec spec = hetero_spec();
    StationaryDistribution pi = stationary_distribution(net);
    const std::size_t grid = 100000;
    double period = spec.period();
    double mu_quad = 0;
    for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
      double integral = 0;
      for (std::size_t i = 0; i < grid; ++i) {
        double t0 = period * static_cast<double>(i) / static_cast<double>(grid);
        double t1 = period * static_cast<double>(i + 1) / static_cast<double>(grid);
        integral += 0.5 * (spec.mean_speed(e, t0) + spec.mean_speed(e, t1)) * (t1 - t0);
      }
      mu_quad += pi.pi[e] * net.length(e) * integral / period;
    }
    CHECK(analytic_mu(net, spec, pi) == Catch::Approx(mu_quad).epsilon(1e-8));
  }
  SECTION("invariant to the phases") {
    TransportNetwork net = ring6();
    const double a[] = {0.045, 0.06, 0.13, 0.10, 0.22, 0.10};
    auto make = [&](double shift) {
      std::vector<EdgeSpeedParams> edges;
      for (int i = 0; i < 6; ++i) {
        EdgeSpeedParams p;
        p.base_mean = a[i];
        p.amplitude = 0.3 * a[i];
        p.phase = shift + i;
        p.lower = 0.02;
        p.upper = 2.5 * a[i];
        edges.push_back(p);
      }
      return SpeedProcessSpec(std::move(edges));
    };
    CHECK(analytic_mu(net, make(0.0)) == analytic_mu(net, make(2.1)));
  }
}

TEST_CASE("replicate means converge to analytic mu") {
  TransportNetwork net = ring6();
  SpeedProcessSpec spec = hetero_spec();
  StationaryDistribution pi = stationary_distribution(net);
  double mu = analytic_mu(net, spec, pi);
  const std::size_t reps = 10000, n = 500;
  RunningMoments ratio;
  for (std::size_t r = 0; r < reps; ++r) {
    std::uint64_t stream = derive_stream_seed(606, r);
    Rng rng(stream);
    double t0 = rng.uniform(0.0, spec.period());
    Route route = walk_from_pi(net, pi, n, derive_stream_seed(stream, 3));
    Trip trip =
        simulate_trip(net, route, t0, spec, MixingSpec(0.65), derive_stream_seed(stream, 4));
    ratio.add(trip.total_time() / static_cast<double>(n));
  }
  double se = ratio.stddev() / std::sqrt(static_cast<double>(reps));
  CHECK(std::fabs(ratio.mean() - mu) < 3.0 * se);
}

TEST_CASE("sigma oracle") {
  SECTION("deterministic world has zero sigma") {
    TransportNetwork net = cycle3();
    EdgeSpeedParams p;
    p.base_mean = 0.1;
    p.lower = 0.01;
    p.upper = 0.5;
    SpeedProcessSpec spec({p, p, p});
    SigmaOracle o = estimate_sigma_oracle(net, spec, MixingSpec(0.0), 50, 200, 5);
    CHECK(o.sigma < 1e-9);
  }
  SECTION("iid single-edge loop matches the closed form d*s") {
    TransportNetwork net = self_loop();
    EdgeSpeedParams p;
    p.base_mean = 0.1;
    p.noise_sd = 0.01;
    p.lower = 0.02;
    p.upper = 0.2;
    SpeedProcessSpec spec({p});
    SigmaOracle o = estimate_sigma_oracle(net, spec, MixingSpec(0.0), 400, 3000, 17);
    CHECK(std::fabs(o.sigma - 1.0) < 2.0 * o.std_error);
    CHECK(o.std_error < 0.05);
  }
  SECTION("sigma grows with the mixing coefficient") {
    // Single-edge loop: sigma^2 = (d*s)^2 * (1 + phi)/(1 - phi) exactly, so
    // the ordering is unambiguous at modest replicate counts.
    TransportNetwork net = self_loop();
    EdgeSpeedParams q;
    q.base_mean = 0.1;
    q.noise_sd = 0.01;
    q.lower = 0.02;
    q.upper = 0.2;
    SpeedProcessSpec spec({q});
    auto mean3 = [&](double phi) {
      double total = 0;
      for (std::uint64_t run = 0; run < 3; ++run)
        total += estimate_sigma_oracle(net, spec, MixingSpec(phi), 500, 500, 1000 + run).sigma;
      return total / 3.0;
    };
    double s0 = mean3(0.0), s25 = mean3(0.25), s50 = mean3(0.5);
    CHECK(s0 < s25);
    CHECK(s25 < s50);
  }
}

TEST_CASE("CLT: standardized totals pass normality at the 1% level") {
  TransportNetwork net = ring6();
  SpeedProcessSpec spec = hetero_spec();
  StationaryDistribution pi = stationary_distribution(net);
  double mu = analytic_mu(net, spec, pi);
  const std::size_t n = 100, reps = 5000;
  std::vector<double> stats(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    std::uint64_t stream = derive_stream_seed(808, r);
    Rng rng(stream);
    double t0 = rng.uniform(0.0, spec.period());
    Route route = walk_from_pi(net, pi, n, derive_stream_seed(stream, 3));
    Trip trip =
        simulate_trip(net, route, t0, spec, MixingSpec(0.65), derive_stream_seed(stream, 4));
    stats[r] = (trip.total_time() - static_cast<double>(n) * mu) /
               std::sqrt(static_cast<double>(n));
  }
  AdResult ad = anderson_darling_normality(stats);
  INFO("A*^2 = " << ad.a2_star << ", p = " << ad.p_value);
  CHECK(ad.p_value > 0.01);
}

TEST_CASE("start-time invariance of the mean") {
  // Fast cycle relative to trip duration, so a trip wraps the period many
  // times and the phase average within a trip converges; large amplitude to
  // make any residual start-time effect visible.
  TransportNetwork net = ring6();
  const double a[] = {0.045, 0.06, 0.13, 0.10, 0.22, 0.10};
  std::vector<EdgeSpeedParams> edges;
  for (int i = 0; i < 6; ++i) {
    EdgeSpeedParams p;
    p.base_mean = a[i];
    p.amplitude = 0.1 * a[i];
    p.phase = static_cast<double>(i);
    p.lower = 0.02;
    p.upper = 2.5 * a[i];
    double cap = std::min(p.base_mean - p.amplitude - p.lower,
                          p.upper - (p.base_mean + p.amplitude)) /
                 4.0;
    p.noise_sd = 0.95 * cap;
    edges.push_back(p);
  }
  SpeedProcessSpec spec(std::move(edges), 600.0);
  StationaryDistribution pi = stationary_distribution(net);
  const std::size_t n = 500, reps = 500;
  auto mean_at = [&](double t0, std::uint64_t seed) {
    RunningMoments m;
    for (std::size_t r = 0; r < reps; ++r) {
      std::uint64_t stream = derive_stream_seed(seed, r);
      Route route = walk_from_pi(net, pi, n, derive_stream_seed(stream, 3));
      Trip trip =
          simulate_trip(net, route, t0, spec, MixingSpec(0.65), derive_stream_seed(stream, 4));
      m.add(trip.total_time() / static_cast<double>(n));
    }
    return m;
  };
  RunningMoments ma = mean_at(150.0, 13);
  RunningMoments mb = mean_at(430.0, 14);  // opposite side of the cycle
  double reps_d = static_cast<double>(reps);
  double se = std::sqrt(ma.variance() / reps_d + mb.variance() / reps_d);
  CHECK(std::fabs(ma.mean() - mb.mean()) < 3.0 * se);
}
