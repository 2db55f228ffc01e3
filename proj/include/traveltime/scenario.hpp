#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "traveltime/format.hpp"
#include "traveltime/network.hpp"
#include "traveltime/parallel.hpp"
#include "traveltime/simulator.hpp"

namespace traveltime {

/// A simulation scenario: the network file, the speed-process parameters
/// (global values with optional per-edge overrides), the mixing coefficient
/// and the trip sampling ranges.
struct Scenario {
  std::string network_path;
  double period_s = 604800.0;
  double mixing_phi = 0.0;
  std::uint64_t seed = 1;
  std::size_t n_min = 20, n_max = 200;
  double t0_min = 0.0, t0_max = 604800.0;

  // global speed parameters; per-edge overrides keyed by edge id
  EdgeSpeedParams global;
  std::map<std::string, std::map<std::string, double>> overrides;  // edge -> key -> value
};

namespace detail {

inline void apply_speed_key(EdgeSpeedParams& p, const std::string& key, double value) {
  if (key == "a")
    p.base_mean = value;
  else if (key == "b")
    p.amplitude = value;
  else if (key == "phase")
    p.phase = value;
  else if (key == "s")
    p.noise_sd = value;
  else if (key == "delta")
    p.lower = value;
  else if (key == "M")
    p.upper = value;
  else
    fail(Errc::BadConfig, "unknown speed parameter '" + key + "'");
}

}  // namespace detail

/// Key-value scenario file: `key = value` lines, `#` comments. Per-edge
/// overrides use `a.<edge_id> = value` style keys.
inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::BadConfig, "cannot open scenario file " + path);
  Scenario scn;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = strip_cr(line);
    auto hash = sv.find('#');
    if (hash != std::string_view::npos) sv = sv.substr(0, hash);
    while (!sv.empty() && (sv.front() == ' ' || sv.front() == '\t')) sv.remove_prefix(1);
    while (!sv.empty() && (sv.back() == ' ' || sv.back() == '\t')) sv.remove_suffix(1);
    if (sv.empty()) continue;
    auto eq = sv.find('=');
    if (eq == std::string_view::npos)
      fail(Errc::BadConfig, path + ":" + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string_view v) {
      while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
      while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.remove_suffix(1);
      return v;
    };
    std::string key(trim(sv.substr(0, eq)));
    std::string value(trim(sv.substr(eq + 1)));
    const std::string ctx = path + ":" + std::to_string(lineno);
    if (key == "network") {
      scn.network_path = value;
      if (!scn.network_path.empty() && scn.network_path.front() != '/') {
        auto dir = std::filesystem::path(path).parent_path();
        if (!dir.empty()) scn.network_path = (dir / scn.network_path).string();
      }
    } else if (key == "period")
      scn.period_s = parse_double(value, ctx);
    else if (key == "mixing_phi")
      scn.mixing_phi = parse_double(value, ctx);
    else if (key == "seed")
      scn.seed = static_cast<std::uint64_t>(parse_int(value, ctx));
    else if (key == "n_min")
      scn.n_min = static_cast<std::size_t>(parse_int(value, ctx));
    else if (key == "n_max")
      scn.n_max = static_cast<std::size_t>(parse_int(value, ctx));
    else if (key == "t0_min")
      scn.t0_min = parse_double(value, ctx);
    else if (key == "t0_max")
      scn.t0_max = parse_double(value, ctx);
    else {
      auto dot = key.find('.');
      std::string param = dot == std::string::npos ? key : key.substr(0, dot);
      if (param != "a" && param != "b" && param != "phase" && param != "s" && param != "delta" &&
          param != "M")
        fail(Errc::BadConfig, ctx + ": unknown key '" + key + "'");
      if (dot == std::string::npos)
        detail::apply_speed_key(scn.global, param, parse_double(value, ctx));
      else
        scn.overrides[key.substr(dot + 1)][param] = parse_double(value, ctx);
    }
  }
  if (scn.network_path.empty()) fail(Errc::BadConfig, path + ": missing 'network' entry");
  if (scn.n_min < 1 || scn.n_max < scn.n_min)
    fail(Errc::BadConfig, path + ": need 1 <= n_min <= n_max");
  return scn;
}

inline std::string scenario_to_text(const Scenario& scn) {
  std::string out;
  out += "network = " + scn.network_path + "\n";
  out += "period = " + format_double(scn.period_s) + "\n";
  out += "mixing_phi = " + format_double(scn.mixing_phi) + "\n";
  out += "seed = " + std::to_string(scn.seed) + "\n";
  out += "n_min = " + std::to_string(scn.n_min) + "\n";
  out += "n_max = " + std::to_string(scn.n_max) + "\n";
  out += "t0_min = " + format_double(scn.t0_min) + "\n";
  out += "t0_max = " + format_double(scn.t0_max) + "\n";
  out += "a = " + format_double(scn.global.base_mean) + "\n";
  out += "b = " + format_double(scn.global.amplitude) + "\n";
  out += "phase = " + format_double(scn.global.phase) + "\n";
  out += "s = " + format_double(scn.global.noise_sd) + "\n";
  out += "delta = " + format_double(scn.global.lower) + "\n";
  out += "M = " + format_double(scn.global.upper) + "\n";
  for (const auto& [edge, params] : scn.overrides)
    for (const auto& [key, value] : params)
      out += key + "." + edge + " = " + format_double(value) + "\n";
  return out;
}

inline SpeedProcessSpec make_speed_spec(const Scenario& scn, const TransportNetwork& net) {
  std::vector<EdgeSpeedParams> per_edge(net.edge_count(), scn.global);
  for (const auto& [edge, params] : scn.overrides) {
    EdgeIndex e = net.edge_index(edge);
    for (const auto& [key, value] : params) detail::apply_speed_key(per_edge[e], key, value);
  }
  return SpeedProcessSpec(std::move(per_edge), scn.period_s);
}

/// Generates `count` independent trips. Trip j's randomness comes from a
/// stream derived from (scenario seed, first_index + j), so generation is
/// reproducible and thread-count independent; routes are random walks with
/// stationary start edges and uniform start times.
inline std::vector<Trip> generate_trips(const Scenario& scn, const TransportNetwork& net,
                                        const SpeedProcessSpec& spec,
                                        const StationaryDistribution& pi, std::size_t count,
                                        std::size_t first_index = 0, unsigned threads = 1) {
  MixingSpec mixing(scn.mixing_phi);
  std::vector<Trip> trips(count);
  parallel_for(count, threads, [&](std::size_t j) {
    std::uint64_t stream = derive_stream_seed(scn.seed, first_index + j);
    Rng rng(stream);
    std::size_t n = scn.n_min + static_cast<std::size_t>(rng.below(scn.n_max - scn.n_min + 1));
    double pick = rng.next_unit();
    EdgeIndex start = 0;
    double acc = 0;
    for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
      acc += pi.pi[e];
      start = e;
      if (pick < acc) break;
    }
    double t0 = rng.uniform(scn.t0_min, scn.t0_max);
    Route route = random_walk(net, start, n, derive_stream_seed(stream, 1));
    trips[j] = simulate_trip(net, route, t0, spec, MixingSpec(scn.mixing_phi),
                             derive_stream_seed(stream, 2),
                             "t" + std::to_string(first_index + j));
  });
  return trips;
}

}  // namespace traveltime
