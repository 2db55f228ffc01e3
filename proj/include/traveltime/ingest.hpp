#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "traveltime/errors.hpp"
#include "traveltime/format.hpp"
#include "traveltime/network.hpp"
#include "traveltime/trip.hpp"

namespace traveltime {

/// One map-matched GPS observation.
struct MatchedPoint {
  std::string trip_id;
  double timestamp_s = 0;
  std::string edge_id;
  std::optional<double> position_m;  // meters from edge start
  std::optional<double> speed_kmh;
};

struct IngestConfig {
  double gap_split_s = 120.0;    // split on inter-observation gaps above this
  double idle_split_s = 240.0;   // split on no-move periods above this
  double idle_move_m = 5.0;      // displacement below this counts as no move
  double trim_speed_kmh = 10.0;  // trim endpoints at or below this speed
  double min_median_kmh = 20.0;
  double min_max_kmh = 35.0;
  double min_distance_m = 1000.0;
  double tz_offset_s = 0.0;
};

/// Counters for everything the pipeline dropped.
struct IngestReport {
  std::size_t raw_trips = 0;
  std::size_t segments = 0;
  std::size_t empty_segments = 0;       // fully trimmed
  std::size_t dropped_median_speed = 0;
  std::size_t dropped_max_speed = 0;
  std::size_t dropped_distance = 0;
  std::size_t trips_out = 0;
};

namespace detail {

/// Along-network displacement between consecutive observations. Missing
/// positions fall back to half of the edge in question.
inline double displacement_m(const TransportNetwork& net, const MatchedPoint& a,
                             const MatchedPoint& b) {
  if (a.edge_id == b.edge_id) {
    if (a.position_m && b.position_m) return std::fabs(*b.position_m - *a.position_m);
    return 0.0;
  }
  EdgeIndex ea = net.edge_index(a.edge_id);
  EdgeIndex eb = net.edge_index(b.edge_id);
  double la = net.length(ea);
  double tail = a.position_m ? la - *a.position_m : la / 2.0;
  double head = b.position_m ? *b.position_m : net.length(eb) / 2.0;
  double middle = 0;
  for (EdgeIndex e : net.shortest_edge_path(ea, eb)) middle += net.length(e);
  return tail + middle + head;
}

inline double derived_speed_kmh(double displacement_m, double dt_s) {
  if (dt_s <= 0) return 0.0;
  return displacement_m / dt_s * 3.6;
}

}  // namespace detail

/// Splits one raw point stream on long idle periods and observation gaps,
/// then trims each segment to its moving core. Speeds are materialized per
/// segment (forward displacement over time; backward for the final point)
/// before trimming, which makes the operation idempotent. Fully trimmed
/// segments are dropped and counted.
inline std::vector<std::vector<MatchedPoint>> segment_trips(
    const TransportNetwork& net, const std::vector<MatchedPoint>& points,
    const IngestConfig& cfg, IngestReport& report) {
  std::vector<std::vector<MatchedPoint>> out;
  if (points.empty()) return out;
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].timestamp_s < points[i - 1].timestamp_s)
      fail(Errc::BadFormat, "trip '" + points[0].trip_id + "': timestamps not sorted");

  std::vector<MatchedPoint> pts = points;
  std::vector<double> disp(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i)
    disp[i] = detail::displacement_m(net, pts[i - 1], pts[i]);

  // Cut points: gaps above the threshold, and idle runs longer than the
  // threshold (cut when the run exceeds it).
  std::vector<std::size_t> starts{0};
  std::size_t idle_start = 0;  // point at which the current no-move run began
  for (std::size_t i = 1; i < pts.size(); ++i) {
    double gap = pts[i].timestamp_s - pts[i - 1].timestamp_s;
    bool cut = gap > cfg.gap_split_s;
    if (disp[i] < cfg.idle_move_m) {
      if (pts[i].timestamp_s - pts[idle_start].timestamp_s > cfg.idle_split_s) cut = true;
    } else {
      idle_start = i;
    }
    if (cut) {
      starts.push_back(i);
      idle_start = i;
    }
  }
  starts.push_back(pts.size());

  for (std::size_t s = 0; s + 1 < starts.size(); ++s) {
    ++report.segments;
    std::size_t lo = starts[s], hi = starts[s + 1];
    // Segment-local speeds; given values win over derived ones.
    for (std::size_t i = lo; i < hi; ++i) {
      if (pts[i].speed_kmh) continue;
      if (i + 1 < hi)
        pts[i].speed_kmh =
            detail::derived_speed_kmh(disp[i + 1], pts[i + 1].timestamp_s - pts[i].timestamp_s);
      else if (i > lo)
        pts[i].speed_kmh =
            detail::derived_speed_kmh(disp[i], pts[i].timestamp_s - pts[i - 1].timestamp_s);
      else
        pts[i].speed_kmh = 0.0;
    }
    std::size_t first = hi, last = hi;
    for (std::size_t i = lo; i < hi; ++i) {
      if (*pts[i].speed_kmh > cfg.trim_speed_kmh) {
        if (first == hi) first = i;
        last = i;
      }
    }
    if (first == hi) {
      ++report.empty_segments;
      continue;
    }
    out.emplace_back(pts.begin() + static_cast<std::ptrdiff_t>(first),
                     pts.begin() + static_cast<std::ptrdiff_t>(last) + 1);
  }
  return out;
}

/// Motorized-travel filter: median speed, maximum speed and total driving
/// distance must all clear their thresholds.
inline bool is_motorized(const TransportNetwork& net, const std::vector<MatchedPoint>& seg,
                         const IngestConfig& cfg, IngestReport& report) {
  std::vector<double> speeds;
  speeds.reserve(seg.size());
  for (const auto& p : seg) speeds.push_back(p.speed_kmh.value_or(0.0));
  std::sort(speeds.begin(), speeds.end());
  double median = speeds.size() % 2 == 1
                      ? speeds[speeds.size() / 2]
                      : 0.5 * (speeds[speeds.size() / 2 - 1] + speeds[speeds.size() / 2]);
  if (median < cfg.min_median_kmh) {
    ++report.dropped_median_speed;
    return false;
  }
  if (speeds.back() < cfg.min_max_kmh) {
    ++report.dropped_max_speed;
    return false;
  }
  double dist = 0;
  for (std::size_t i = 1; i < seg.size(); ++i)
    dist += detail::displacement_m(net, seg[i - 1], seg[i]);
  if (dist < cfg.min_distance_m) {
    ++report.dropped_distance;
    return false;
  }
  return true;
}

/// Allocates the segment's time span onto the traversed edge sequence.
/// Within-edge time goes to its edge; each boundary-straddling interval is
/// split over the edge portions it covers (tail of the previous edge, full
/// lengths of unobserved intermediate edges, head of the next) in proportion
/// to distance, so the per-edge times sum to the observed span. Entry times
/// are rebuilt cumulatively from the first observation.
inline Trip allocate_edge_times(const TransportNetwork& net,
                                const std::vector<MatchedPoint>& seg,
                                const std::string& trip_id) {
  if (seg.empty()) fail(Errc::EmptyInput, "allocate_edge_times: empty segment");
  struct Piece {
    EdgeIndex edge;
    double time = 0;
  };
  std::vector<Piece> pieces;
  EdgeIndex cur = net.edge_index(seg[0].edge_id);
  double first_entry_pos = seg[0].position_m.value_or(net.length(cur) / 2.0);
  double last_obs_pos = first_entry_pos;
  pieces.push_back({cur, 0.0});

  for (std::size_t i = 1; i < seg.size(); ++i) {
    const auto& prev = seg[i - 1];
    const auto& next = seg[i];
    double dt = next.timestamp_s - prev.timestamp_s;
    EdgeIndex enext = net.edge_index(next.edge_id);
    if (enext == cur) {
      pieces.back().time += dt;
      if (next.position_m) last_obs_pos = *next.position_m;
      continue;
    }
    double tail = prev.position_m ? net.length(cur) - *prev.position_m : net.length(cur) / 2.0;
    double head = next.position_m ? *next.position_m : net.length(enext) / 2.0;
    std::vector<EdgeIndex> middle = net.shortest_edge_path(cur, enext);
    double total = tail + head;
    for (EdgeIndex e : middle) total += net.length(e);
    if (total <= 0) {
      pieces.back().time += dt / 2.0;
      pieces.push_back({enext, dt / 2.0});
    } else {
      pieces.back().time += dt * (tail / total);
      for (EdgeIndex e : middle) pieces.push_back({e, dt * (net.length(e) / total)});
      pieces.push_back({enext, dt * (head / total)});
    }
    cur = enext;
    last_obs_pos = head;
  }

  // All pieces except the first and last are fully traversed; the endpoints
  // cover only the observed stretch.
  Trip trip;
  trip.trip_id = trip_id;
  double clock = seg.front().timestamp_s;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& p = pieces[i];
    double distance;
    if (pieces.size() == 1)
      distance = std::fabs(last_obs_pos - first_entry_pos);
    else if (i == 0)
      distance = net.length(p.edge) - first_entry_pos;
    else if (i + 1 == pieces.size())
      distance = last_obs_pos;
    else
      distance = net.length(p.edge);
    if (p.time <= 0) continue;  // zero-time slivers are dropped
    trip.records.push_back({net.edge_id(p.edge), clock, p.time, distance});
    clock += p.time;
  }
  if (trip.records.empty())
    fail(Errc::EmptyInput, "segment for trip '" + trip_id + "' spans no time");
  return trip;
}

/// Full pipeline: segment, filter, allocate. Output trip ids are
/// `<raw_id>` when a raw stream yields one trip and `<raw_id>#<k>`
/// otherwise.
inline std::vector<Trip> ingest_points(const TransportNetwork& net,
                                       std::vector<MatchedPoint> points,
                                       const IngestConfig& cfg, IngestReport& report) {
  std::stable_sort(points.begin(), points.end(),
                   [](const MatchedPoint& a, const MatchedPoint& b) {
                     if (a.trip_id != b.trip_id) return a.trip_id < b.trip_id;
                     return a.timestamp_s < b.timestamp_s;
                   });
  std::vector<Trip> out;
  std::size_t i = 0;
  while (i < points.size()) {
    std::size_t j = i;
    while (j < points.size() && points[j].trip_id == points[i].trip_id) ++j;
    ++report.raw_trips;
    std::vector<MatchedPoint> raw(points.begin() + static_cast<std::ptrdiff_t>(i),
                                  points.begin() + static_cast<std::ptrdiff_t>(j));
    auto segments = segment_trips(net, raw, cfg, report);
    std::vector<std::vector<MatchedPoint>> kept;
    for (auto& seg : segments)
      if (is_motorized(net, seg, cfg, report)) kept.push_back(std::move(seg));
    for (std::size_t s = 0; s < kept.size(); ++s) {
      std::string id = points[i].trip_id;
      if (kept.size() > 1) id += "#" + std::to_string(s + 1);
      out.push_back(allocate_edge_times(net, kept[s], id));
      ++report.trips_out;
    }
    i = j;
  }
  return out;
}

// --- MatchedPoint CSV ---

inline std::vector<MatchedPoint> matched_points_from_csv(const std::string& path) {
  CsvFile csv = read_csv(path);
  require_header(csv, {"trip_id", "timestamp_s", "edge_id", "position_m", "speed_kmh"}, path);
  std::vector<MatchedPoint> points;
  points.reserve(csv.rows.size());
  for (const auto& row : csv.rows) {
    MatchedPoint p;
    p.trip_id = row[0];
    p.timestamp_s = parse_double(row[1], path);
    p.edge_id = row[2];
    if (!row[3].empty()) p.position_m = parse_double(row[3], path);
    if (!row[4].empty()) p.speed_kmh = parse_double(row[4], path);
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace traveltime
