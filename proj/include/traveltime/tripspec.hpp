#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "traveltime/errors.hpp"
#include "traveltime/format.hpp"
#include "traveltime/population.hpp"
#include "traveltime/stats.hpp"
#include "traveltime/traffic_bin.hpp"
#include "traveltime/trip.hpp"

namespace traveltime {

/// Where a moment lookup was resolved in the imputation chain.
enum class MomentLevel : int {
  ExitConditioned = 0,  // (edge, exit, bin)
  EdgeLevel = 1,        // (edge, *, bin) after dropping exit-conditioning
  BinGlobal = 2,        // (*, *, bin) after dropping edge-conditioning
};

struct MomentEntry {
  double mean = 0;
  double var = 0;
  std::uint64_t count = 0;
};

struct MomentLookup {
  double mean = 0;
  double var = 0;
  double sd = 0;
  std::uint64_t count = 0;
  MomentLevel level = MomentLevel::BinGlobal;
};

/// Moments of edge travel time per (edge, exit-edge, traffic bin), with the
/// two-step imputation chain: entries thinner than min_count fall back first
/// to the exit-free edge entry, then to the per-bin global. Lookup is total
/// once fitted. Edge ids are interned locally, so the table is
/// self-contained and serializable without the network.
class EdgeMomentTable {
 public:
  static constexpr std::uint32_t kAny = 0x3fffffff;

  EdgeMomentTable() = default;
  explicit EdgeMomentTable(std::uint32_t min_count) : min_count_(min_count) {}

  std::uint32_t min_count() const { return min_count_; }

  std::uint32_t intern(const std::string& edge_id) {
    auto it = intern_.find(edge_id);
    if (it != intern_.end()) return it->second;
    std::uint32_t idx = static_cast<std::uint32_t>(ids_.size());
    intern_.emplace(edge_id, idx);
    ids_.push_back(edge_id);
    return idx;
  }

  /// Interned index, or kAny when the edge never appeared in training
  /// (forcing the lookup straight to the imputation fallbacks).
  std::uint32_t find(const std::string& edge_id) const {
    auto it = intern_.find(edge_id);
    return it == intern_.end() ? kAny : it->second;
  }

  MomentLookup lookup(std::uint32_t edge, std::uint32_t exit, TrafficBin bin) const {
    int b = static_cast<int>(bin);
    if (b < 0 || b > 2) fail(Errc::BadFormat, "lookup requires a concrete traffic bin");
    if (edge != kAny) {
      if (exit != kAny) {
        auto it = entries_.find(pack(edge, exit, b));
        if (it != entries_.end()) return make(it->second, MomentLevel::ExitConditioned);
      }
      auto it = entries_.find(pack(edge, kAny, b));
      if (it != entries_.end()) return make(it->second, MomentLevel::EdgeLevel);
    }
    return make(bin_global_[b], MomentLevel::BinGlobal);
  }

  MomentLookup lookup(const std::string& edge, const std::string& exit, TrafficBin bin) const {
    return lookup(find(edge), exit.empty() ? kAny : find(exit), bin);
  }

  const std::string& edge_id(std::uint32_t idx) const { return ids_[idx]; }

  template <typename Fn>
  void for_each_entry(Fn&& fn) const {  // fn(edge, exit, bin, entry); kAny for '*'
    for (const auto& [key, entry] : entries_)
      fn(unpack_edge(key), unpack_exit(key), static_cast<TrafficBin>(unpack_bin(key)), entry);
  }

  const MomentEntry& bin_global(TrafficBin bin) const {
    return bin_global_[static_cast<int>(bin)];
  }

  /// Multiplies every stored variance by `factor`; used to study
  /// mis-calibrated tables.
  void scale_variances(double factor) {
    for (auto& [key, entry] : entries_) entry.var *= factor;
    for (auto& g : bin_global_) g.var *= factor;
  }

  void set_entry(std::uint32_t edge, std::uint32_t exit, TrafficBin bin,
                 const MomentEntry& entry) {
    entries_[pack(edge, exit, static_cast<int>(bin))] = entry;
  }

  void set_bin_global(TrafficBin bin, const MomentEntry& entry) {
    bin_global_[static_cast<int>(bin)] = entry;
  }

 private:
  static std::uint64_t pack(std::uint32_t e, std::uint32_t x, int b) {
    return (static_cast<std::uint64_t>(e) << 34) | (static_cast<std::uint64_t>(x) << 4) |
           static_cast<std::uint64_t>(b);
  }
  static std::uint32_t unpack_edge(std::uint64_t k) {
    return static_cast<std::uint32_t>(k >> 34);
  }
  static std::uint32_t unpack_exit(std::uint64_t k) {
    return static_cast<std::uint32_t>((k >> 4) & 0x3fffffff);
  }
  static int unpack_bin(std::uint64_t k) { return static_cast<int>(k & 0xf); }

  static MomentLookup make(const MomentEntry& e, MomentLevel level) {
    return MomentLookup{e.mean, e.var, std::sqrt(e.var), e.count, level};
  }

  std::unordered_map<std::string, std::uint32_t> intern_;
  std::vector<std::string> ids_;
  std::unordered_map<std::uint64_t, MomentEntry> entries_;
  MomentEntry bin_global_[3];
  std::uint32_t min_count_ = 10;
};

/// Sample mean and unbiased variance of edge travel time per
/// (edge, exit, bin), with the Appendix-style thinning: keys below min_count
/// are not stored and resolve through the imputation chain. Requires at
/// least one observation in every bin so that the chain is total.
inline EdgeMomentTable fit_moment_table(const std::vector<Trip>& trips,
                                        std::uint32_t min_count = 10, double tz_offset_s = 0,
                                        bool log_transform = false) {
  if (trips.empty()) fail(Errc::EmptyTraining, "no trips to fit");
  EdgeMomentTable table(min_count);
  auto local_pack = [](std::uint32_t e, std::uint32_t x, int b) {
    return (static_cast<std::uint64_t>(e) << 34) | (static_cast<std::uint64_t>(x) << 4) |
           static_cast<std::uint64_t>(b);
  };
  std::unordered_map<std::uint64_t, RunningMoments> acc;
  RunningMoments global[3];
  for (const auto& t : trips) {
    std::size_t n = t.records.size();
    for (std::size_t k = 0; k < n; ++k) {
      const auto& r = t.records[k];
      double obs = r.travel_time_s;
      if (log_transform) {
        if (!(obs > 0))
          fail(Errc::BadFormat, "trip '" + t.trip_id + "': log of non-positive travel time");
        obs = std::log(obs);
      }
      TrafficBin bin = assign_traffic_bin(r.entry_time_s + tz_offset_s);
      int b = static_cast<int>(bin);
      std::uint32_t e = table.intern(r.edge_id);
      if (k + 1 < n) {
        std::uint32_t x = table.intern(t.records[k + 1].edge_id);
        acc[local_pack(e, x, b)].add(obs);
      }
      acc[local_pack(e, EdgeMomentTable::kAny, b)].add(obs);
      global[b].add(obs);
    }
  }
  for (int b = 0; b < 3; ++b) {
    if (global[b].count() == 0)
      fail(Errc::EmptyTraining, std::string("traffic bin '") +
                                    bin_name(static_cast<TrafficBin>(b)) +
                                    "' has no training observations");
    table.set_bin_global(static_cast<TrafficBin>(b),
                         {global[b].mean(), global[b].variance(), global[b].count()});
  }
  for (const auto& [key, m] : acc) {
    if (m.count() < min_count) continue;
    std::uint32_t e = static_cast<std::uint32_t>(key >> 34);
    std::uint32_t x = static_cast<std::uint32_t>((key >> 4) & 0x3fffffff);
    TrafficBin b = static_cast<TrafficBin>(key & 0xf);
    table.set_entry(e, x, b, {m.mean(), m.variance(), m.count()});
  }
  return table;
}

inline EdgeMomentTable fit_edge_moments(const std::vector<Trip>& trips,
                                        std::uint32_t min_count = 10, double tz_offset_s = 0) {
  return fit_moment_table(trips, min_count, tz_offset_s, false);
}

/// Trip-specific coefficients: profile lag autocorrelations and the residual
/// variance scale.
struct TripSpecificParams {
  double xi1 = 0;
  std::optional<double> xi2;
  double nu_sq = 1.0;
  std::size_t m = 0;
  int order = 1;
};

/// A route resolved against a moment table: deterministic entry times
/// (t*_1 = t0, stepping by the looked-up means) plus the per-edge mean and
/// variance used at each step. times has n+1 entries, the last being the
/// deterministic exit of the final edge.
struct ResolvedRoute {
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> var;
  std::vector<MomentLevel> level;
};

/// Deterministic time recursion over a route of edge ids. The exit edge of
/// every non-final edge is known from the route; the final edge resolves
/// exit-free.
inline ResolvedRoute deterministic_times(const std::vector<std::string>& route_edges, double t0,
                                         const EdgeMomentTable& table,
                                         double tz_offset_s = 0) {
  if (route_edges.empty()) fail(Errc::EmptyInput, "deterministic_times: empty route");
  std::size_t n = route_edges.size();
  ResolvedRoute out;
  out.times.resize(n + 1);
  out.mean.resize(n);
  out.var.resize(n);
  out.level.resize(n);
  out.times[0] = t0;
  for (std::size_t k = 0; k < n; ++k) {
    std::uint32_t e = table.find(route_edges[k]);
    std::uint32_t x =
        k + 1 < n ? table.find(route_edges[k + 1]) : EdgeMomentTable::kAny;
    TrafficBin bin = assign_traffic_bin(out.times[k] + tz_offset_s);
    MomentLookup look = table.lookup(e, x, bin);
    out.mean[k] = look.mean;
    out.var[k] = look.var;
    out.level[k] = look.level;
    out.times[k + 1] = out.times[k] + look.mean;
  }
  return out;
}

/// Sum of the resolved means, taken from the chained time recursion so the
/// identity trip_mean == final deterministic exit - t0 holds bit for bit.
inline double trip_mean(const ResolvedRoute& rr) {
  return rr.times.back() - rr.times.front();
}

/// Reduced covariance sum: per-edge variances plus profiled lag-1 (and with
/// order 2, lag-2) cross terms. Errors out when negative cross terms drive
/// the total non-positive.
inline double trip_variance(const ResolvedRoute& rr, const TripSpecificParams& params,
                            int order) {
  double sum_var = 0, cross1 = 0, cross2 = 0;
  std::size_t n = rr.var.size();
  std::vector<double> sd(n);
  for (std::size_t k = 0; k < n; ++k) {
    sum_var += rr.var[k];
    sd[k] = std::sqrt(rr.var[k]);
  }
  for (std::size_t k = 0; k + 1 < n; ++k) cross1 += sd[k] * sd[k + 1];
  double total = sum_var + 2.0 * params.xi1 * cross1;
  double cross_part = 2.0 * params.xi1 * cross1;
  if (order >= 2) {
    if (!params.xi2) fail(Errc::BadConfig, "order-2 variance requires a fitted xi2");
    for (std::size_t k = 0; k + 2 < n; ++k) cross2 += sd[k] * sd[k + 2];
    total += 2.0 * *params.xi2 * cross2;
    cross_part += 2.0 * *params.xi2 * cross2;
  }
  if (total < 0 || (total == 0 && cross_part < 0))
    fail(Errc::NonPositiveVariance, "correlation terms drove the variance non-positive");
  return total;
}

struct XiOptions {
  int order = 1;
  bool include_imputed_pairs = true;  // pairs touching imputed entries
  double tz_offset_s = 0;
};

/// Profile autocorrelation pooled over trips: mean over trips of n^{-1} times
/// the sum of standardized residual products at the given lag, standardized
/// by the table moments at the observed entry bins.
inline double estimate_xi(const std::vector<Trip>& trips, const EdgeMomentTable& table,
                          const XiOptions& opt = {}) {
  if (opt.order < 1 || opt.order > 2) fail(Errc::BadConfig, "xi order must be 1 or 2");
  std::size_t lag = static_cast<std::size_t>(opt.order);
  double sum = 0;
  std::size_t used = 0;
  std::vector<double> resid;
  std::vector<char> usable;
  for (const auto& t : trips) {
    std::size_t n = t.records.size();
    if (n < lag + 1) continue;
    resid.assign(n, 0.0);
    usable.assign(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& r = t.records[k];
      std::uint32_t e = table.find(r.edge_id);
      std::uint32_t x = k + 1 < n ? table.find(t.records[k + 1].edge_id) : EdgeMomentTable::kAny;
      TrafficBin bin = assign_traffic_bin(r.entry_time_s + opt.tz_offset_s);
      MomentLookup look = table.lookup(e, x, bin);
      if (look.sd > 0 &&
          (opt.include_imputed_pairs || look.level == MomentLevel::ExitConditioned ||
           (k + 1 == n && look.level == MomentLevel::EdgeLevel))) {
        resid[k] = (r.travel_time_s - look.mean) / look.sd;
        usable[k] = 1;
      }
    }
    double s = 0;
    for (std::size_t k = 0; k + lag < n; ++k)
      if (usable[k] && usable[k + lag]) s += resid[k] * resid[k + lag];
    sum += s / static_cast<double>(n);
    ++used;
  }
  if (used == 0) fail(Errc::NoEligibleTrips, "no trips long enough to estimate xi");
  return sum / static_cast<double>(used);
}

/// Residual variance scale: sample variance of per-trip standardized
/// residuals (T - mu_rho) / sigma_rho around their mean.
inline double estimate_nu(const std::vector<Trip>& trips, const EdgeMomentTable& table,
                          const TripSpecificParams& params, int order,
                          double tz_offset_s = 0) {
  RunningMoments eps;
  for (const auto& t : trips) {
    std::vector<std::string> edges;
    edges.reserve(t.records.size());
    for (const auto& r : t.records) edges.push_back(r.edge_id);
    ResolvedRoute rr = deterministic_times(edges, t.start_time(), table, tz_offset_s);
    double var = trip_variance(rr, params, order);
    if (!(var > 0))
      fail(Errc::DegenerateVariance, "trip '" + t.trip_id + "' has zero profile variance");
    eps.add((t.total_time() - trip_mean(rr)) / std::sqrt(var));
  }
  if (eps.count() < 2) fail(Errc::TooFewTrips, "estimate_nu needs at least 2 trips");
  return eps.variance();
}

/// Fits xi (and xi2 when order = 2) then nu on the same trips.
inline TripSpecificParams fit_trip_specific(const std::vector<Trip>& trips,
                                            const EdgeMomentTable& table, int order = 1,
                                            double tz_offset_s = 0,
                                            bool include_imputed_pairs = true) {
  TripSpecificParams params;
  params.order = order;
  params.m = trips.size();
  params.xi1 = estimate_xi(trips, table, XiOptions{1, include_imputed_pairs, tz_offset_s});
  if (order >= 2)
    params.xi2 = estimate_xi(trips, table, XiOptions{2, include_imputed_pairs, tz_offset_s});
  params.nu_sq = estimate_nu(trips, table, params, order, tz_offset_s);
  return params;
}

/// Per-prefix point prediction and bounds for one trip (k = 1..n).
struct IntervalStep {
  std::size_t k = 0;
  double point = 0;
  double sd = 0;
  double lower = 0;
  double upper = 0;
};

struct IntervalSequence {
  std::vector<IntervalStep> steps;
  double level = 0.95;

  const IntervalStep& final() const { return steps.back(); }
};

/// Prediction sequence for a route: one forward pass maintaining running
/// sums of means, variances and the lagged sd cross terms, so the whole
/// sequence costs O(n).
inline IntervalSequence trip_prediction_sequence(const std::vector<std::string>& route_edges,
                                                 double t0, const EdgeMomentTable& table,
                                                 const TripSpecificParams& params, double beta,
                                                 int order, double tz_offset_s = 0) {
  check_level(beta);
  if (order >= 2 && !params.xi2) fail(Errc::BadConfig, "order-2 sequence requires xi2");
  ResolvedRoute rr = deterministic_times(route_edges, t0, table, tz_offset_s);
  double z = normal_quantile(1.0 - beta / 2.0);
  std::size_t n = route_edges.size();
  IntervalSequence seq;
  seq.level = 1.0 - beta;
  seq.steps.resize(n);
  double sum_mean = 0, sum_var = 0, cross1 = 0, cross2 = 0;
  std::vector<double> sd(n);
  for (std::size_t k = 0; k < n; ++k) sd[k] = std::sqrt(rr.var[k]);
  for (std::size_t k = 0; k < n; ++k) {
    sum_mean += rr.mean[k];
    sum_var += rr.var[k];
    if (k >= 1) cross1 += sd[k - 1] * sd[k];
    if (k >= 2) cross2 += sd[k - 2] * sd[k];
    double total = sum_var + 2.0 * params.xi1 * cross1;
    double cross_part = 2.0 * params.xi1 * cross1;
    if (order >= 2) {
      total += 2.0 * *params.xi2 * cross2;
      cross_part += 2.0 * *params.xi2 * cross2;
    }
    if (total < 0 || (total == 0 && cross_part < 0))
      fail(Errc::NonPositiveVariance, "correlation terms drove the variance non-positive at k=" +
                                          std::to_string(k + 1));
    double step_sd = std::sqrt(params.nu_sq * total);
    double half = z * step_sd;
    seq.steps[k] = {k + 1, sum_mean, step_sd, sum_mean - half, sum_mean + half};
  }
  return seq;
}

// --- serialization ---

inline std::string moment_table_to_csv(const EdgeMomentTable& table) {
  std::string out = "edge_id,exit_edge_id,bin,mean_tt_s,var_tt_s2,count\n";
  struct Row {
    std::string edge, exit;
    TrafficBin bin;
    MomentEntry entry;
  };
  std::vector<Row> rows;
  table.for_each_entry([&](std::uint32_t e, std::uint32_t x, TrafficBin bin,
                           const MomentEntry& entry) {
    rows.push_back({table.edge_id(e),
                    x == EdgeMomentTable::kAny ? "*" : table.edge_id(x), bin, entry});
  });
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.edge != b.edge) return a.edge < b.edge;
    if (a.exit != b.exit) return a.exit < b.exit;
    return static_cast<int>(a.bin) < static_cast<int>(b.bin);
  });
  for (int b = 0; b < 3; ++b)
    rows.push_back({"*", "*", static_cast<TrafficBin>(b),
                    table.bin_global(static_cast<TrafficBin>(b))});
  for (const auto& r : rows) {
    out += r.edge + "," + r.exit + "," + bin_name(r.bin) + "," + format_double(r.entry.mean) +
           "," + format_double(r.entry.var) + "," + std::to_string(r.entry.count) + "\n";
  }
  return out;
}

inline EdgeMomentTable moment_table_from_csv(const std::string& path) {
  CsvFile csv = read_csv(path);
  require_header(csv, {"edge_id", "exit_edge_id", "bin", "mean_tt_s", "var_tt_s2", "count"},
                 path);
  EdgeMomentTable table;
  bool have_bin[3] = {false, false, false};
  for (const auto& row : csv.rows) {
    TrafficBin bin = bin_from_name(row[2]);
    int b = static_cast<int>(bin);
    if (b > 2) fail(Errc::BadFormat, path + ": mixed bin cannot appear in a moment table");
    MomentEntry entry{parse_double(row[3], path), parse_double(row[4], path),
                      static_cast<std::uint64_t>(parse_int(row[5], path))};
    if (row[0] == "*") {
      table.set_bin_global(bin, entry);
      have_bin[b] = true;
    } else {
      std::uint32_t e = table.intern(row[0]);
      std::uint32_t x = row[1] == "*" ? EdgeMomentTable::kAny : table.intern(row[1]);
      table.set_entry(e, x, bin, entry);
    }
  }
  for (int b = 0; b < 3; ++b)
    if (!have_bin[b])
      fail(Errc::BadFormat, path + ": missing bin-global row for bin '" +
                                bin_name(static_cast<TrafficBin>(b)) + "'");
  return table;
}

inline nlohmann::json tripspec_params_to_json(const TripSpecificParams& p) {
  nlohmann::json j{{"xi1", p.xi1}, {"nu_sq", p.nu_sq}, {"m", p.m}, {"order", p.order}};
  if (p.xi2)
    j["xi2"] = *p.xi2;
  else
    j["xi2"] = nullptr;
  return j;
}

inline TripSpecificParams tripspec_params_from_json(const nlohmann::json& j) {
  TripSpecificParams p;
  p.xi1 = j.at("xi1").get<double>();
  if (!j.at("xi2").is_null()) p.xi2 = j.at("xi2").get<double>();
  p.nu_sq = j.at("nu_sq").get<double>();
  p.m = j.at("m").get<std::size_t>();
  p.order = j.at("order").get<int>();
  return p;
}

inline std::string sequences_to_csv(const std::vector<std::string>& trip_ids,
                                    const std::vector<IntervalSequence>& seqs) {
  std::string out = "trip_id,k,point_s,lower_s,upper_s,sd_s\n";
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    for (const auto& s : seqs[i].steps) {
      out += trip_ids[i] + "," + std::to_string(s.k) + "," + format_double(s.point) + "," +
             format_double(s.lower) + "," + format_double(s.upper) + "," +
             format_double(s.sd) + "\n";
    }
  }
  return out;
}

}  // namespace traveltime
