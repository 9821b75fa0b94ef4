#pragma once

#include <charconv>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pgorder/errors.hpp"

namespace pgo::csv {

/// Shortest decimal text that parses back to the same double.
inline std::string number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw FormatError("cannot format number");
  return std::string(buf, end);
}

inline std::string optional_number(const std::optional<double>& v) { return v ? number(*v) : std::string{}; }

inline double parse_number(std::string_view s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) throw FormatError("bad number '" + std::string(s) + "'");
  return v;
}

inline std::optional<double> parse_optional(std::string_view s) {
  if (s.empty()) return std::nullopt;
  return parse_number(s);
}

/// Splits one line on commas. Fields never contain commas in this project's files.
inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& fields) {
  std::string s;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) s += ',';
    s += fields[i];
  }
  return s;
}

}  // namespace pgo::csv
