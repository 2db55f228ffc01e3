// Shared synthetic-world fixtures for the test suites.
#pragma once

#include <string>
#include <vector>

#include "traveltime/network.hpp"
#include "traveltime/parallel.hpp"
#include "traveltime/rng.hpp"
#include "traveltime/simulator.hpp"
#include "traveltime/trip.hpp"

namespace ttfix {

using namespace traveltime;

// Six-edge ring with skip links; every edge has two successors and the
// stationary distribution is uniform.
inline TransportNetwork ring6() {
  std::vector<EdgeRecord> recs;
  const char* ids[] = {"e0", "e1", "e2", "e3", "e4", "e5"};
  const double len[] = {100, 150, 250, 120, 200, 80};
  for (int i = 0; i < 6; ++i)
    recs.push_back({ids[i], len[i], {ids[(i + 1) % 6], ids[(i + 2) % 6]}});
  return TransportNetwork::build(recs);
}

// The study speed process: balanced heterogeneous edge means around 20 s,
// weekly cycle with small amplitude, one-second noise sd per edge.
inline SpeedProcessSpec study_spec() {
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

inline Route walk_from_pi(const TransportNetwork& net, const StationaryDistribution& pi,
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

// Simulated trip set mirroring the study sampling: random length in
// [n_min, n_max], stationary start edge, uniform start time over one week.
inline std::vector<Trip> sim_trips(const TransportNetwork& net, const SpeedProcessSpec& spec,
                                   const StationaryDistribution& pi, std::size_t count,
                                   double phi, std::uint64_t seed, std::size_t first_index = 0,
                                   std::size_t n_min = 20, std::size_t n_max = 200,
                                   unsigned threads = 2) {
  std::vector<Trip> trips(count);
  parallel_for(count, threads, [&](std::size_t j) {
    std::uint64_t stream = derive_stream_seed(seed, first_index + j);
    Rng rng(stream);
    std::size_t n = n_min + static_cast<std::size_t>(rng.below(n_max - n_min + 1));
    double pick = rng.next_unit();
    EdgeIndex start = 0;
    double acc = 0;
    for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
      acc += pi.pi[e];
      start = e;
      if (pick < acc) break;
    }
    double t0 = rng.uniform(0.0, spec.period());
    Route route = random_walk(net, start, n, derive_stream_seed(stream, 1));
    trips[j] = simulate_trip(net, route, t0, spec, MixingSpec(phi),
                             derive_stream_seed(stream, 2), "t" + std::to_string(first_index + j));
  });
  return trips;
}

// A trip with the given per-edge travel times on a fixed edge id, entry
// times chained from t0.
inline Trip chained_trip(const std::string& id, const std::vector<double>& times,
                         double t0 = 0, const std::string& edge = "e0", double dist = 100) {
  Trip t;
  t.trip_id = id;
  double clock = t0;
  for (double tt : times) {
    t.records.push_back({edge, clock, tt, dist});
    clock += tt;
  }
  return t;
}

}  // namespace ttfix
