#pragma once

#include <string>
#include <vector>

#include "traveltime/errors.hpp"
#include "traveltime/format.hpp"
#include "traveltime/traffic_bin.hpp"

namespace traveltime {

/// One edge traversal inside a trip.
struct TripRecord {
  std::string edge_id;
  double entry_time_s = 0;
  double travel_time_s = 0;
  double distance_m = 0;
};

/// Ordered edge traversals with entry timestamps; the interchange unit
/// between simulation, ingestion, fitting and evaluation.
struct Trip {
  std::string trip_id;
  std::vector<TripRecord> records;

  std::size_t edge_count() const { return records.size(); }

  double start_time() const { return records.front().entry_time_s; }

  double total_time() const {
    double t = 0;
    for (const auto& r : records) t += r.travel_time_s;
    return t;
  }

  double total_distance() const {
    double d = 0;
    for (const auto& r : records) d += r.distance_m;
    return d;
  }
};

inline void validate_trip(const Trip& trip) {
  if (trip.records.empty()) fail(Errc::EmptyInput, "trip '" + trip.trip_id + "' has no records");
  for (std::size_t k = 0; k < trip.records.size(); ++k) {
    const auto& r = trip.records[k];
    if (!(r.travel_time_s > 0))
      fail(Errc::BadFormat, "trip '" + trip.trip_id + "' record " + std::to_string(k + 1) +
                                ": travel_time_s must be > 0");
    if (k > 0) {
      const auto& p = trip.records[k - 1];
      double expected = p.entry_time_s + p.travel_time_s;
      if (std::fabs(r.entry_time_s - expected) > 1e-6)
        fail(Errc::BadFormat, "trip '" + trip.trip_id + "' record " + std::to_string(k + 1) +
                                  ": entry time is not contiguous with previous exit");
    }
  }
}

/// Bin of a whole trip under a timezone offset: a single bin when every edge
/// interval lies in that bin, Mixed otherwise.
inline TrafficBin bin_of_trip(const Trip& trip, double tz_offset_s = 0) {
  if (trip.records.empty()) fail(Errc::EmptyInput, "bin_of_trip: empty trip");
  const auto& last = trip.records.back();
  double start = trip.records.front().entry_time_s + tz_offset_s;
  double end = last.entry_time_s + last.travel_time_s + tz_offset_s;
  return bin_of_interval(start, end);
}

inline const std::vector<std::string>& trip_csv_header() {
  static const std::vector<std::string> h = {"trip_id",      "seq",           "edge_id",
                                             "entry_time_s", "travel_time_s", "distance_m"};
  return h;
}

inline std::string trips_to_csv(const std::vector<Trip>& trips) {
  std::string out = "trip_id,seq,edge_id,entry_time_s,travel_time_s,distance_m\n";
  for (const auto& t : trips) {
    for (std::size_t k = 0; k < t.records.size(); ++k) {
      const auto& r = t.records[k];
      out += t.trip_id;
      out += ',';
      out += std::to_string(k + 1);
      out += ',';
      out += r.edge_id;
      out += ',';
      out += format_double(r.entry_time_s);
      out += ',';
      out += format_double(r.travel_time_s);
      out += ',';
      out += format_double(r.distance_m);
      out += '\n';
    }
  }
  return out;
}

inline std::vector<Trip> trips_from_csv(const std::string& path) {
  CsvFile csv = read_csv(path);
  require_header(csv, trip_csv_header(), path);
  std::vector<Trip> trips;
  for (const auto& row : csv.rows) {
    if (trips.empty() || trips.back().trip_id != row[0]) {
      trips.push_back(Trip{row[0], {}});
    }
    long long seq = parse_int(row[1], path);
    if (seq != static_cast<long long>(trips.back().records.size()) + 1)
      fail(Errc::BadFormat, path + ": trip '" + row[0] + "' has out-of-order seq " +
                                std::to_string(seq));
    TripRecord rec;
    rec.edge_id = row[2];
    rec.entry_time_s = parse_double(row[3], path);
    rec.travel_time_s = parse_double(row[4], path);
    rec.distance_m = parse_double(row[5], path);
    trips.back().records.push_back(std::move(rec));
  }
  for (const auto& t : trips) validate_trip(t);
  return trips;
}

}  // namespace traveltime
