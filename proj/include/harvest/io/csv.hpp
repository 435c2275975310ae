#pragma once

// Plain comma-separated tables with a header row. Fields never contain commas
// or quotes in the schemas written here.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "harvest/sim/world.hpp"
#include "harvest/trace.hpp"

namespace harvest::io {

/// Malformed input data; carries the file and line when known.
struct DataError : Error {
  using Error::Error;
};

struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row

  std::optional<std::size_t> column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  }

  std::size_t require(const std::string& name) const {
    const auto c = column(name);
    if (!c) throw DataError(source + ": missing column '" + name + "'");
    return *c;
  }

  [[noreturn]] void fail(std::size_t row, const std::string& what) const {
    throw DataError(source + ":" + std::to_string(lines[row]) + ": " + what);
  }

  double number(std::size_t row, std::size_t col) const {
    const std::string& s = rows[row][col];
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
      fail(row, "'" + s + "' in column '" + header[col] + "' is not a number");
    }
    return v;
  }

  std::optional<double> optional_number(std::size_t row, std::size_t col) const {
    if (rows[row][col].empty()) return std::nullopt;
    return number(row, col);
  }
};

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline CsvTable parse_csv(std::istream& in, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw DataError(source + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(t.header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.lines.push_back(lineno);
  }
  return t;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_csv(in, path.string());
}

// Shortest text that reads back to the same double.
inline std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

// ---- cart logs ---------------------------------------------------------------

inline constexpr const char* kCartLogHeader = "timestamp_ms,x_m,y_m,filtered_mass_g,button_state";

inline void write_cart_log(std::ostream& out, const std::vector<CartLogRecord>& log) {
  out << kCartLogHeader << '\n';
  for (const auto& r : log) {
    out << r.timestamp_ms << ',' << fmt(r.x) << ',' << fmt(r.y) << ',' << fmt(r.mass) << ',' << r.button << '\n';
  }
}

inline std::vector<CartLogRecord> cart_log_from(const CsvTable& t) {
  const auto ts = t.require("timestamp_ms");
  const auto x = t.require("x_m");
  const auto y = t.require("y_m");
  const auto m = t.require("filtered_mass_g");
  const auto b = t.require("button_state");
  std::vector<CartLogRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CartLogRecord r;
    const double ms = t.number(i, ts);
    if (ms != std::floor(ms)) t.fail(i, "timestamp_ms must be an integer");
    r.timestamp_ms = static_cast<std::int64_t>(ms);
    r.x = t.number(i, x);
    r.y = t.number(i, y);
    r.mass = t.number(i, m);
    const double button = t.number(i, b);
    if (button != 0.0 && button != 1.0) t.fail(i, "button_state must be 0 or 1");
    r.button = static_cast<int>(button);
    if (i > 0 && r.timestamp_ms < out.back().timestamp_ms) t.fail(i, "timestamps are not monotone");
    out.push_back(r);
  }
  return out;
}

// ---- tray tables -------------------------------------------------------------

inline constexpr const char* kTrayHeader =
    "picker_id,t_start,t_end,request_time,full_x,full_y,productive,nonproductive,efficiency";

inline void write_tray_row(std::ostream& out, const TrayRecord& t) {
  out << t.picker_id << ',' << fmt(t.t_start) << ',' << fmt(t.t_end) << ',' << fmt(t.request_time) << ','
      << fmt(t.full_location.x) << ',' << fmt(t.full_location.y) << ',' << fmt(t.dt_ef) << ','
      << fmt(t.dt_fe) << ',' << fmt(t.efficiency);
}

inline void write_trays(std::ostream& out, const std::vector<TrayRecord>& trays) {
  out << kTrayHeader << '\n';
  for (const auto& t : trays) {
    write_tray_row(out, t);
    out << '\n';
  }
}

/// Simulator tray table: the analysis columns plus how each tray was moved.
inline void write_sim_trays(std::ostream& out, const sim::SimResult& res) {
  out << kTrayHeader << ",served,robot_id,wait\n";
  for (std::size_t i = 0; i < res.tray_records.size(); ++i) {
    write_tray_row(out, res.tray_records[i]);
    const auto& s = res.service[i];
    out << ',' << (s.served ? 1 : 0) << ',' << s.robot_id << ',' << (s.served ? fmt(s.wait) : std::string()) << '\n';
  }
}

inline std::vector<TrayRecord> trays_from(const CsvTable& t) {
  const auto pid = t.require("picker_id");
  const auto ts = t.require("t_start");
  const auto te = t.require("t_end");
  const auto rq = t.require("request_time");
  const auto fx = t.require("full_x");
  const auto fy = t.require("full_y");
  const auto pe = t.require("productive");
  const auto np = t.require("nonproductive");
  const auto ef = t.require("efficiency");
  std::vector<TrayRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    TrayRecord r;
    r.picker_id = static_cast<int>(t.number(i, pid));
    r.t_start = t.number(i, ts);
    r.t_end = t.number(i, te);
    r.request_time = t.optional_number(i, rq);
    r.full_location = {t.number(i, fx), t.number(i, fy)};
    r.dt_ef = t.number(i, pe);
    r.dt_fe = t.optional_number(i, np);
    r.efficiency = t.optional_number(i, ef);
    out.push_back(r);
  }
  return out;
}

/// Non-empty values of a numeric column.
inline std::vector<double> column_values(const CsvTable& t, const std::string& name) {
  const auto c = t.require(name);
  std::vector<double> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (auto v = t.optional_number(i, c)) out.push_back(*v);
  }
  return out;
}

// ---- event log and summaries -----------------------------------------------

inline std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

/// One JSON object per line.
inline void write_event_log(std::ostream& out, const std::vector<sim::TransitionEvent>& events) {
  for (const auto& e : events) {
    out << "{\"tick\":" << e.tick << ",\"time\":" << fmt(e.time) << ",\"agent\":\""
        << (e.robot ? "robot" : "picker") << "\",\"id\":" << e.agent_id << ",\"from\":\""
        << json_escape(e.from) << "\",\"to\":\"" << json_escape(e.to) << "\",\"payload\":\""
        << json_escape(e.payload) << "\"}\n";
  }
}

inline void write_summary(std::ostream& out, const sim::SimResult& res) {
  const auto& a = res.aggregate;
  const auto& c = res.counters;
  out << "metric,value\n";
  out << "trays," << a.trays << '\n';
  out << "efficiency," << fmt(a.efficiency) << '\n';
  out << "mean_nonproductive_s," << fmt(a.mean_nonproductive) << '\n';
  out << "trays_filled," << c.trays_filled << '\n';
  out << "trays_delivered," << c.trays_delivered << '\n';
  out << "served," << c.served << '\n';
  out << "rejected," << c.rejected << '\n';
  out << "cancelled," << c.cancelled << '\n';
  out << "collisions," << c.collisions << '\n';
  out << "plans," << c.plans << '\n';
  out << "exact_fallbacks," << c.exact_fallbacks << '\n';
  out << "plan_seconds," << fmt(c.plan_seconds) << '\n';
  out << "end_time_s," << fmt(c.end_time) << '\n';
}

// ---- sweeps --------------------------------------------------------------------

inline constexpr const char* kSweepHeader =
    "series,axis,value,run,seed,efficiency,nonproductive,plan_latency_s";

struct SweepRow {
  std::string series;
  std::string axis;
  double value = 0.0;
  int run = 0;
  std::uint64_t seed = 0;
  double efficiency = 0.0;
  double nonproductive = 0.0;
  double plan_latency = 0.0;  // mean seconds per plan() call, 0 without planning
};

inline void write_sweep_row(std::ostream& out, const SweepRow& r) {
  out << r.series << ',' << r.axis << ',' << fmt(r.value) << ',' << r.run << ',' << r.seed << ','
      << fmt(r.efficiency) << ',' << fmt(r.nonproductive) << ',' << fmt(r.plan_latency) << '\n';
}

inline std::vector<SweepRow> sweep_from(const CsvTable& t) {
  const auto known = split_fields(kSweepHeader);
  for (const auto& h : t.header) {
    if (std::find(known.begin(), known.end(), h) == known.end()) {
      throw DataError(t.source + ": unknown column '" + h + "'");
    }
  }
  const auto series = t.require("series");
  const auto axis = t.require("axis");
  const auto value = t.require("value");
  const auto eff = t.require("efficiency");
  const auto np = t.require("nonproductive");
  const auto run = t.column("run");
  const auto seed = t.column("seed");
  const auto lat = t.column("plan_latency_s");
  std::vector<SweepRow> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    SweepRow r;
    r.series = t.rows[i][series];
    r.axis = t.rows[i][axis];
    r.value = t.number(i, value);
    if (run) r.run = static_cast<int>(t.number(i, *run));
    if (seed) r.seed = static_cast<std::uint64_t>(t.number(i, *seed));
    r.efficiency = t.number(i, eff);
    r.nonproductive = t.number(i, np);
    if (lat) r.plan_latency = t.number(i, *lat);
    out.push_back(r);
  }
  return out;
}

}  // namespace harvest::io
