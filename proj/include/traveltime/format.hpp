#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "traveltime/errors.hpp"

namespace traveltime {

/// Shortest round-trip decimal form of a double. Locale-independent, so file
/// output is byte-stable across runs and machines with the same libc.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    fail(Errc::BadFormat, "expected a number, got '" + std::string(s) + "' in " + context);
  return v;
}

inline long long parse_int(std::string_view s, const std::string& context) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    fail(Errc::BadFormat, "expected an integer, got '" + std::string(s) + "' in " + context);
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

/// Reads a whole CSV file: header row plus data rows, comma-separated.
/// Blank lines are skipped. Returns rows as vectors of owned strings.
struct CsvFile {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvFile read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::BadFormat, "cannot open " + path);
  CsvFile csv;
  std::string line;
  bool first = true;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = strip_cr(line);
    if (sv.empty()) continue;
    auto fields = split(sv, ',');
    std::vector<std::string> owned(fields.begin(), fields.end());
    if (first) {
      csv.header = std::move(owned);
      first = false;
    } else {
      if (owned.size() != csv.header.size())
        fail(Errc::BadFormat, path + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(csv.header.size()) + " fields, got " +
                                  std::to_string(owned.size()));
      csv.rows.push_back(std::move(owned));
    }
  }
  if (first) fail(Errc::BadFormat, path + ": empty file (missing header)");
  return csv;
}

inline void require_header(const CsvFile& csv, const std::vector<std::string>& expected,
                           const std::string& path) {
  if (csv.header != expected) {
    std::string want;
    for (size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + expected[i];
    std::string got;
    for (size_t i = 0; i < csv.header.size(); ++i) got += (i ? "," : "") + csv.header[i];
    fail(Errc::BadFormat, path + ": expected header '" + want + "', got '" + got + "'");
  }
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::BadFormat, "cannot write " + path);
  out << content;
}

}  // namespace traveltime
