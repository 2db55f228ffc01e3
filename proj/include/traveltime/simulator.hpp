#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "traveltime/errors.hpp"
#include "traveltime/network.hpp"
#include "traveltime/rng.hpp"
#include "traveltime/stats.hpp"
#include "traveltime/trip.hpp"

namespace traveltime {

/// Per-edge parameters of the ground-truth reciprocal-speed process
/// m_e(t) = a + b*sin(2*pi*t/P + phase), clamped noise sd s, bounds
/// [delta, bound_m]. All reciprocal speeds are in seconds per meter.
struct EdgeSpeedParams {
  double base_mean = 0.1;   // a
  double amplitude = 0.0;   // b
  double phase = 0.0;       // radians
  double noise_sd = 0.0;    // s
  double lower = 0.01;      // delta
  double upper = 1.0;       // M
};

/// Ground-truth cyclostationary speed process for a whole network: one
/// parameter set per edge plus the shared period (weekly by default).
class SpeedProcessSpec {
 public:
  SpeedProcessSpec(std::vector<EdgeSpeedParams> per_edge, double period_s = 604800.0)
      : edges_(std::move(per_edge)), period_(period_s) {
    if (!(period_ > 0)) fail(Errc::BadConfig, "period must be > 0");
    for (std::size_t e = 0; e < edges_.size(); ++e) validate_edge(e);
  }

  double period() const { return period_; }
  std::size_t edge_count() const { return edges_.size(); }
  const EdgeSpeedParams& edge(EdgeIndex e) const { return edges_[e]; }

  /// Mean reciprocal speed of edge e at clock time t.
  double mean_speed(EdgeIndex e, double t) const {
    const auto& p = edges_[e];
    double cycle = std::fmod(t, period_);
    if (cycle < 0) cycle += period_;
    return p.base_mean + p.amplitude * std::sin(2.0 * kPi * (cycle / period_) + p.phase);
  }

 private:
  void validate_edge(std::size_t e) const {
    const auto& p = edges_[e];
    double ab = std::fabs(p.amplitude);
    std::string where = "edge param set " + std::to_string(e);
    if (!(p.lower > 0)) fail(Errc::BadConfig, where + ": delta must be > 0");
    if (!(p.lower <= p.base_mean - ab))
      fail(Errc::BadConfig, where + ": mean path dips below delta (need delta <= a - |b|)");
    if (!(p.base_mean + ab <= p.upper))
      fail(Errc::BadConfig, where + ": mean path exceeds M (need a + |b| <= M)");
    if (p.noise_sd < 0) fail(Errc::BadConfig, where + ": noise sd must be >= 0");
    // Keeps clamping at least four noise sds away from the mean path, which
    // bounds the truncation bias of the mean below 1e-4 * a.
    double headroom = std::min(p.base_mean - ab - p.lower, p.upper - (p.base_mean + ab));
    if (p.noise_sd > headroom / 4.0 + 1e-15)
      fail(Errc::BadConfig, where + ": noise sd exceeds a quarter of the clamp headroom");
  }

  std::vector<EdgeSpeedParams> edges_;
  double period_;
};

/// Within-trip dependence driver. |autocorr| < 1 keeps the sequence
/// geometrically mixing.
struct MixingSpec {
  double autocorr = 0.0;  // lag-1 coefficient of the latent AR(1)

  MixingSpec() = default;
  explicit MixingSpec(double phi) : autocorr(phi) {
    if (!(std::fabs(phi) < 1)) fail(Errc::BadConfig, "mixing autocorr must satisfy |phi| < 1");
  }
};

/// Stationary Gaussian-copula AR(1) sequence: X_k = phi*X_{k-1} +
/// sqrt(1-phi^2)*Z_k with X_0 standard normal; returns U_k = Phi(X_k),
/// each marginally Uniform[0,1].
inline std::vector<double> mixing_uniform_sequence(std::size_t n, const MixingSpec& spec,
                                                   std::uint64_t seed) {
  if (n < 1) fail(Errc::EmptyInput, "mixing_uniform_sequence needs n >= 1");
  std::vector<double> u(n);
  Rng rng(seed);
  double phi = spec.autocorr;
  double scale = std::sqrt(1.0 - phi * phi);
  double x = rng.normal();
  for (std::size_t k = 0; k < n; ++k) {
    x = phi * x + scale * rng.normal();
    u[k] = normal_cdf(x);
  }
  return u;
}

/// Reciprocal speed drawn at time t from the edge marginal: mean path plus
/// Gaussian noise via the uniform u, clamped into [delta, M].
inline double sample_speed(const SpeedProcessSpec& spec, EdgeIndex e, double t, double u) {
  const auto& p = spec.edge(e);
  double value = spec.mean_speed(e, t);
  if (p.noise_sd > 0) value += p.noise_sd * normal_quantile(u);
  return std::min(std::max(value, p.lower), p.upper);
}

/// Rotation-map trip simulation: entry times follow
/// tau_{k+1} = tau_k + d_k * S_k(tau_k) exactly. The speed process is driven
/// by phase0 + elapsed rather than the absolute clock, so a start time
/// shifted by a whole period reproduces the travel times bit for bit.
inline Trip simulate_trip(const TransportNetwork& net, const Route& route, double t0,
                          const SpeedProcessSpec& spec, const MixingSpec& mixing,
                          std::uint64_t seed, const std::string& trip_id = "trip") {
  validate_route(net, route);
  std::vector<double> u = mixing_uniform_sequence(route.size(), mixing, seed);
  Trip trip;
  trip.trip_id = trip_id;
  trip.records.reserve(route.size());
  double phase0 = std::fmod(t0, spec.period());
  if (phase0 < 0) phase0 += spec.period();
  double tau = t0;
  double elapsed = 0;
  for (std::size_t k = 0; k < route.size(); ++k) {
    EdgeIndex e = route.edges[k];
    double d = net.length(e);
    double tt = d * sample_speed(spec, e, phase0 + elapsed, u[k]);
    trip.records.push_back({net.edge_id(e), tau, tt, d});
    tau += tt;
    elapsed += tt;
  }
  return trip;
}

/// Invariant mean travel time per edge: sum over edges of pi_e * d_e * a_e
/// (the sinusoid integrates away over a full period).
inline double analytic_mu(const TransportNetwork& net, const SpeedProcessSpec& spec,
                          const StationaryDistribution& pi) {
  double mu = 0;
  for (EdgeIndex e = 0; e < net.edge_count(); ++e)
    mu += pi.pi[e] * net.length(e) * spec.edge(e).base_mean;
  return mu;
}

inline double analytic_mu(const TransportNetwork& net, const SpeedProcessSpec& spec) {
  return analytic_mu(net, spec, stationary_distribution(net));
}

struct SigmaOracle {
  double sigma = 0;      // sd of n^{-1/2} (T - n*mu)
  double std_error = 0;  // delete-one jackknife standard error of sigma
  std::size_t replicates = 0;
};

/// Brute-force oracle for the asymptotic sd: replicate random-walk trips,
/// each with its own derived RNG stream, start edge drawn from the
/// stationary distribution and start time uniform over one period.
inline SigmaOracle estimate_sigma_oracle(const TransportNetwork& net,
                                         const SpeedProcessSpec& spec, const MixingSpec& mixing,
                                         std::size_t n, std::size_t replicates,
                                         std::uint64_t seed) {
  if (replicates < 100) fail(Errc::EmptyInput, "estimate_sigma_oracle needs replicates >= 100");
  StationaryDistribution pi = stationary_distribution(net);
  double mu = analytic_mu(net, spec, pi);
  std::vector<double> stats(replicates);
  for (std::size_t r = 0; r < replicates; ++r) {
    std::uint64_t s = derive_stream_seed(seed, r);
    Rng rng(s);
    double pick = rng.next_unit();
    EdgeIndex start = 0;
    double acc = 0;
    for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
      acc += pi.pi[e];
      if (pick < acc) {
        start = e;
        break;
      }
      start = e;
    }
    double t0 = rng.uniform(0.0, spec.period());
    Route route = random_walk(net, start, n, derive_stream_seed(s, 1));
    Trip trip = simulate_trip(net, route, t0, spec, mixing, derive_stream_seed(s, 2));
    stats[r] = (trip.total_time() - static_cast<double>(n) * mu) /
               std::sqrt(static_cast<double>(n));
  }
  double mean = 0;
  for (double x : stats) mean += x;
  mean /= static_cast<double>(replicates);
  double ss = 0;
  for (double x : stats) ss += (x - mean) * (x - mean);
  double m = static_cast<double>(replicates);
  double var = ss / (m - 1.0);
  SigmaOracle out;
  out.sigma = std::sqrt(var);
  out.replicates = replicates;
  // Delete-one jackknife on the sd, computed from the leave-one-out moments.
  double jk_mean = 0;
  std::vector<double> jk(replicates);
  for (std::size_t r = 0; r < replicates; ++r) {
    double ss_r = ss - (stats[r] - mean) * (stats[r] - mean) * m / (m - 1.0);
    if (ss_r < 0) ss_r = 0;
    jk[r] = std::sqrt(ss_r / (m - 2.0));
    jk_mean += jk[r];
  }
  jk_mean /= m;
  double jk_ss = 0;
  for (double x : jk) jk_ss += (x - jk_mean) * (x - jk_mean);
  out.std_error = std::sqrt((m - 1.0) / m * jk_ss);
  return out;
}

}  // namespace traveltime
