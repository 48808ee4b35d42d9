// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

// Deterministic CSV/JSON emission. Needs the vendored json.hpp on the include path.

#pragma once

#include <mqlab/coherence.hpp>
#include <mqlab/refmodels.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mqlab {

#ifdef MQLAB_VERSION
inline constexpr std::string_view kVersion = MQLAB_VERSION;
#else
inline constexpr std::string_view kVersion = "0.0.0";
#endif

/// Shortest form that still carries 17 significant digits.
[[nodiscard]] inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
[[nodiscard]] inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  Table& row(std::vector<double> r) {
    if (r.size() != columns.size()) throw std::invalid_argument("Table '" + name + "': row width mismatch");
    rows.push_back(std::move(r));
    return *this;
  }
};

/// CSV with '#' header comments, a column line, and 17-digit values.
inline void write_csv(std::ostream& out, const Table& t, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  for (std::size_t k = 0; k < t.columns.size(); ++k) out << (k ? "," : "") << t.columns[k];
  out << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t k = 0; k < r.size(); ++k) out << (k ? "," : "") << format_double(r[k]);
    out << '\n';
  }
}

[[nodiscard]] inline std::string csv_string(const Table& t, const std::vector<std::string>& comments) {
  std::ostringstream s;
  write_csv(s, t, comments);
  return s.str();
}

/// Whitespace-separated columns for plotting tools.
[[nodiscard]] inline std::string columnar_string(const Table& t, const std::vector<std::string>& comments) {
  std::ostringstream s;
  for (const auto& c : comments) s << "# " << c << '\n';
  s << '#';
  for (const auto& c : t.columns) s << ' ' << c;
  s << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t k = 0; k < r.size(); ++k) s << (k ? " " : "") << format_double(r[k]);
    s << '\n';
  }
  return s.str();
}

/// Non-finite values become null.
[[nodiscard]] inline nlohmann::json json_number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

[[nodiscard]] inline nlohmann::json to_json(const Table& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json row = nlohmann::json::array();
    for (double v : r) row.push_back(json_number(v));
    rows.push_back(std::move(row));
  }
  return {{"name", t.name}, {"columns", t.columns}, {"rows", std::move(rows)}};
}

[[nodiscard]] inline nlohmann::json to_json(const MQSpectrum& s) {
  nlohmann::json in = nlohmann::json::object();
  for (const auto& [n, v] : s.intensities) in[std::to_string(n)] = json_number(v);
  return {{"time", json_number(s.time)}, {"norm", json_number(s.norm)}, {"intensities", std::move(in)},
          {"m2", json_number(second_moment(s))}};
}

[[nodiscard]] inline nlohmann::json to_json(const SolvableCheckReport& r) {
  nlohmann::json m = nlohmann::json::object();
  for (const auto& [k, v] : r.measured) m[k] = json_number(v);
  return {{"model", r.model}, {"claim", r.claim}, {"measured", std::move(m)}, {"tolerance", json_number(r.tolerance)},
          {"verdict", std::string(to_string(r.verdict))}};
}

}  // namespace mqlab
