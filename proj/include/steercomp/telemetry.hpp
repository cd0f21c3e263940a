#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "steercomp/errors.hpp"

namespace steercomp {

/// Sentinel for an absent turning_radius cell.
inline double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }
inline bool is_missing(double v) { return std::isnan(v); }

/// One uniformly sampled sensor frame. Angles are radians, angular rates
/// rad/s; a CSV header may declare `_deg` variants which are converted on
/// ingest. turning_radius may be missing (NaN); every other field is
/// mandatory and finite.
struct TelemetryFrame {
  double t = 0.0;
  double steer_cmd = 0.0;    // commanded steering wheel angle
  double steer_meas = 0.0;   // measured steering wheel angle
  double steer_torque = 0.0;
  double vel_x = 0.0, vel_y = 0.0, vel_z = 0.0;
  double ang_vel_x = 0.0, ang_vel_y = 0.0, ang_vel_z = 0.0;
  double acc_x = 0.0, acc_y = 0.0, acc_z = 0.0;
  double wheel_speed_fl = 0.0, wheel_speed_fr = 0.0;
  double wheel_speed_rl = 0.0, wheel_speed_rr = 0.0;
  double turning_radius = std::numeric_limits<double>::quiet_NaN();
};

/// Uniformly sampled log. Frames are strictly increasing in t and spaced
/// sample_period apart (within 1e-6 s); ingest_csv resamples when the raw
/// file is not on that grid.
struct TelemetryLog {
  double sample_period = 0.05;
  std::vector<TelemetryFrame> frames;

  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }
};

namespace detail {

struct FieldDesc {
  const char* name;
  double TelemetryFrame::* member;
  bool angle;     // radians; accepts <name>_deg
  bool optional;  // may be absent / empty cell
};

inline const std::array<FieldDesc, 18>& field_table() {
  static const std::array<FieldDesc, 18> table{{
      {"t", &TelemetryFrame::t, false, false},
      {"steer_cmd", &TelemetryFrame::steer_cmd, true, false},
      {"steer_meas", &TelemetryFrame::steer_meas, true, false},
      {"steer_torque", &TelemetryFrame::steer_torque, false, false},
      {"vel_x", &TelemetryFrame::vel_x, false, false},
      {"vel_y", &TelemetryFrame::vel_y, false, false},
      {"vel_z", &TelemetryFrame::vel_z, false, false},
      {"ang_vel_x", &TelemetryFrame::ang_vel_x, true, false},
      {"ang_vel_y", &TelemetryFrame::ang_vel_y, true, false},
      {"ang_vel_z", &TelemetryFrame::ang_vel_z, true, false},
      {"acc_x", &TelemetryFrame::acc_x, false, false},
      {"acc_y", &TelemetryFrame::acc_y, false, false},
      {"acc_z", &TelemetryFrame::acc_z, false, false},
      {"wheel_speed_fl", &TelemetryFrame::wheel_speed_fl, false, false},
      {"wheel_speed_fr", &TelemetryFrame::wheel_speed_fr, false, false},
      {"wheel_speed_rl", &TelemetryFrame::wheel_speed_rl, false, false},
      {"wheel_speed_rr", &TelemetryFrame::wheel_speed_rr, false, false},
      {"turning_radius", &TelemetryFrame::turning_radius, false, true},
  }};
  return table;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

inline double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
  const std::string text = trim(cell);
  if (text.empty()) {
    throw DataError("empty cell at row " + std::to_string(row) + ", column " + col);
  }
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) {
    throw DataError("unparseable cell '" + text + "' at row " + std::to_string(row) +
                    ", column " + col);
  }
  return v;
}

inline void format_value(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace detail

/// Canonical CSV column names, in file order.
inline const std::vector<std::string>& telemetry_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> v;
    for (const auto& f : detail::field_table()) v.emplace_back(f.name);
    return v;
  }();
  return cols;
}

/// The full candidate feature set: every column except t (17 features).
inline const std::vector<std::string>& telemetry_feature_names() {
  static const std::vector<std::string> feats = [] {
    std::vector<std::string> v;
    for (const auto& f : detail::field_table())
      if (std::string_view(f.name) != "t") v.emplace_back(f.name);
    return v;
  }();
  return feats;
}

/// Reads a named field; throws SchemaError for unknown names.
inline double get_field(const TelemetryFrame& frame, std::string_view name) {
  for (const auto& f : detail::field_table())
    if (name == f.name) return frame.*(f.member);
  throw SchemaError("unknown telemetry field: " + std::string(name));
}

inline void set_field(TelemetryFrame& frame, std::string_view name, double value) {
  for (const auto& f : detail::field_table()) {
    if (name == f.name) {
      frame.*(f.member) = value;
      return;
    }
  }
  throw SchemaError("unknown telemetry field: " + std::string(name));
}

/// Parses telemetry CSV from a stream and resamples it onto a uniform
/// sample_period grid anchored at the first timestamp (linear interpolation,
/// no extrapolation). `origin` is used in diagnostics only.
inline TelemetryLog parse_telemetry_csv(std::istream& in, double sample_period,
                                        const std::string& origin = "<stream>") {
  if (!(sample_period > 0.0)) throw ContractError("sample_period must be positive");

  std::string line;
  if (!std::getline(in, line)) throw DataError(origin + ": empty file");

  // Header: canonical names, with <name>_deg accepted for angle columns.
  const auto& table = detail::field_table();
  const auto header = detail::split_csv_line(line);
  std::vector<int> col_of_field(table.size(), -1);
  std::vector<bool> col_in_degrees(table.size(), false);
  for (std::size_t h = 0; h < header.size(); ++h) {
    const std::string name = detail::trim(header[h]);
    for (std::size_t f = 0; f < table.size(); ++f) {
      if (name == table[f].name) {
        col_of_field[f] = static_cast<int>(h);
      } else if (table[f].angle && name == std::string(table[f].name) + "_deg") {
        col_of_field[f] = static_cast<int>(h);
        col_in_degrees[f] = true;
      }
    }
  }
  for (std::size_t f = 0; f < table.size(); ++f) {
    if (col_of_field[f] < 0 && !table[f].optional) {
      throw SchemaError(origin + ": missing required column " + table[f].name);
    }
  }

  constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
  std::vector<TelemetryFrame> raw;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    TelemetryFrame frame;
    for (std::size_t f = 0; f < table.size(); ++f) {
      if (col_of_field[f] < 0) continue;  // absent optional column
      const auto idx = static_cast<std::size_t>(col_of_field[f]);
      if (idx >= cells.size()) {
        throw DataError(origin + ": row " + std::to_string(row) + " has too few cells");
      }
      if (table[f].optional && detail::trim(cells[idx]).empty()) {
        frame.*(table[f].member) = missing_value();
        continue;
      }
      double v = detail::parse_cell(cells[idx], row, table[f].name);
      if (col_in_degrees[f]) v *= kDegToRad;
      if (!std::isfinite(v) && !table[f].optional) {
        throw DataError(origin + ": non-finite value at row " + std::to_string(row) +
                        ", column " + table[f].name);
      }
      frame.*(table[f].member) = v;
    }
    if (!(frame.t >= 0.0) || !std::isfinite(frame.t)) {
      throw DataError(origin + ": invalid timestamp at row " + std::to_string(row));
    }
    if (!raw.empty() && !(frame.t > raw.back().t)) {
      throw DataError(origin + ": non-monotone timestamp at row " + std::to_string(row));
    }
    raw.push_back(frame);
  }
  if (raw.size() < 2) throw InsufficientDataError(origin + ": need at least 2 data rows");

  // Already on the requested grid?
  bool uniform = true;
  for (std::size_t i = 1; i < raw.size(); ++i) {
    if (std::abs((raw[i].t - raw[i - 1].t) - sample_period) > 1e-6) {
      uniform = false;
      break;
    }
  }

  TelemetryLog log;
  log.sample_period = sample_period;
  if (uniform) {
    log.frames = std::move(raw);
    return log;
  }

  // Linear interpolation onto t0 + k * sample_period, within the recorded span.
  const double t0 = raw.front().t;
  const double t_end = raw.back().t;
  const auto steps = static_cast<std::size_t>(std::floor((t_end - t0) / sample_period + 1e-9));
  if (steps < 1) throw InsufficientDataError(origin + ": span shorter than one sample period");

  std::size_t seg = 0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = t0 + static_cast<double>(k) * sample_period;
    while (seg + 2 < raw.size() && raw[seg + 1].t < t) ++seg;
    const TelemetryFrame& a = raw[seg];
    const TelemetryFrame& b = raw[seg + 1];
    const double alpha = (t - a.t) / (b.t - a.t);
    TelemetryFrame frame;
    for (const auto& f : detail::field_table()) {
      const double va = a.*(f.member);
      const double vb = b.*(f.member);
      frame.*(f.member) = va + alpha * (vb - va);  // NaN propagates for missing cells
    }
    frame.t = t;
    log.frames.push_back(frame);
  }
  return log;
}

/// Reads and validates a telemetry CSV file. See parse_telemetry_csv.
inline TelemetryLog ingest_csv(const std::string& path, double sample_period) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_telemetry_csv(in, sample_period, path);
}

/// Writes the canonical CSV (exact header, >= 12 significant digits,
/// missing turning_radius as an empty field).
inline void write_telemetry_csv(const TelemetryLog& log, std::ostream& out) {
  if (log.empty()) throw ContractError("cannot export an empty telemetry log");
  std::string buf;
  const auto& cols = telemetry_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) buf += ',';
    buf += cols[i];
  }
  buf += '\n';
  for (const auto& frame : log.frames) {
    bool first = true;
    for (const auto& f : detail::field_table()) {
      if (!first) buf += ',';
      first = false;
      const double v = frame.*(f.member);
      if (f.optional && is_missing(v)) continue;  // render as empty field
      detail::format_value(buf, v);
    }
    buf += '\n';
  }
  out << buf;
  if (!out) throw IoError("telemetry CSV write failed");
}

inline void export_csv(const TelemetryLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_telemetry_csv(log, out);
}

}  // namespace steercomp
