#pragma once

#include <cmath>
#include <string>

#include "traveltime/errors.hpp"

namespace traveltime {

/// Coarse time-of-week strata conditioning edge moments. Mixed marks trips
/// that straddle a bin boundary and is never a fitting stratum.
enum class TrafficBin : int { AMRush = 0, PMRush = 1, NonRush = 2, Mixed = 3 };

inline const char* bin_name(TrafficBin b) {
  switch (b) {
    case TrafficBin::AMRush: return "am";
    case TrafficBin::PMRush: return "pm";
    case TrafficBin::NonRush: return "non";
    case TrafficBin::Mixed: return "mixed";
  }
  return "?";
}

inline TrafficBin bin_from_name(const std::string& s) {
  if (s == "am") return TrafficBin::AMRush;
  if (s == "pm") return TrafficBin::PMRush;
  if (s == "non") return TrafficBin::NonRush;
  if (s == "mixed") return TrafficBin::Mixed;
  fail(Errc::BadFormat, "unknown traffic bin '" + s + "'");
}

namespace timewin {
inline constexpr double kDay = 86400.0;
inline constexpr double kWeek = 7.0 * kDay;
inline constexpr double kAmStart = 6.5 * 3600.0;   // 06:30
inline constexpr double kAmEnd = 8.5 * 3600.0;     // 08:30
inline constexpr double kPmStart = 15.5 * 3600.0;  // 15:30
inline constexpr double kPmEnd = 17.0 * 3600.0;    // 17:00
}  // namespace timewin

/// Day of week for a local timestamp in seconds since the epoch
/// (0 = Sunday .. 6 = Saturday; the epoch day was a Thursday).
inline int weekday_of(double local_s) {
  double day = std::floor(local_s / timewin::kDay);
  long long d = static_cast<long long>(day);
  return static_cast<int>(((d + 4) % 7 + 7) % 7);
}

inline double time_of_day(double local_s) {
  double r = std::fmod(local_s, timewin::kDay);
  return r < 0 ? r + timewin::kDay : r;
}

/// Classifies a local civil timestamp. Windows are half-open [start, end), so
/// the three bins partition the week exactly.
inline TrafficBin assign_traffic_bin(double local_s) {
  int wd = weekday_of(local_s);
  bool weekday = wd >= 1 && wd <= 5;
  if (weekday) {
    double tod = time_of_day(local_s);
    if (tod >= timewin::kAmStart && tod < timewin::kAmEnd) return TrafficBin::AMRush;
    if (tod >= timewin::kPmStart && tod < timewin::kPmEnd) return TrafficBin::PMRush;
  }
  return TrafficBin::NonRush;
}

/// First instant strictly after `local_s` at which the bin assignment
/// changes. Bins only change at window edges and at weekday/weekend
/// midnights.
inline double next_bin_boundary(double local_s) {
  double day_start = std::floor(local_s / timewin::kDay) * timewin::kDay;
  double tod = local_s - day_start;
  int wd = weekday_of(local_s);
  if (wd >= 1 && wd <= 5) {
    const double marks[] = {timewin::kAmStart, timewin::kAmEnd, timewin::kPmStart,
                            timewin::kPmEnd};
    for (double m : marks)
      if (tod < m) return day_start + m;
  }
  return day_start + timewin::kDay;
}

/// Bin of a half-open time interval [start, end): the common bin when the
/// whole interval stays inside one bin, Mixed otherwise.
inline TrafficBin bin_of_interval(double start_local, double end_local) {
  if (end_local < start_local)
    fail(Errc::BadFormat, "interval end precedes start");
  TrafficBin first = assign_traffic_bin(start_local);
  double t = start_local;
  while (true) {
    double boundary = next_bin_boundary(t);
    if (boundary >= end_local) return first;
    if (assign_traffic_bin(boundary) != first) return TrafficBin::Mixed;
    t = boundary;
  }
}

}  // namespace traveltime
