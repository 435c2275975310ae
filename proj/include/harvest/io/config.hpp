#pragma once

// JSON experiment configuration. Every key is optional and falls back to the
// SimConfig defaults; unknown keys are errors. See README for the schema.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "harvest/sim/config.hpp"

namespace harvest::io {

struct ConfigError : Error {
  using Error::Error;
};

struct ExperimentConfig {
  sim::SimConfig sim;
  std::vector<int> robots;               // sweep axis values
  std::vector<int> scenarios;
  std::vector<std::string> series{"msa-srlpt"};
  int runs = 100;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
};

/// Series label -> mode and per-scenario solver.
inline void apply_series(sim::SimConfig& cfg, const std::string& series) {
  if (series == "manual") {
    cfg.mode = sim::Mode::Manual;
  } else if (series == "reactive") {
    cfg.mode = sim::Mode::Reactive;
  } else if (series == "msa-srlpt" || series == "msa") {
    cfg.mode = sim::Mode::Msa;
    cfg.msa.per_scenario_solver = SolverKind::Srlpt;
  } else if (series == "msa-exact") {
    cfg.mode = sim::Mode::Msa;
    cfg.msa.per_scenario_solver = SolverKind::Exact;
  } else {
    throw ConfigError("unknown series '" + series + "' (expected manual, reactive, msa-srlpt or msa-exact)");
  }
}

namespace detail {

inline std::size_t line_at(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Walks a parsed object, remembering which keys were read so leftovers can be
// reported. Line numbers are found by locating each key along the path.
class Reader {
 public:
  Reader(const nlohmann::json& node, const std::string& text, std::string path, std::size_t offset)
      : node_(node), text_(text), path_(std::move(path)), offset_(offset) {
    if (!node_.is_object()) fail("expected an object");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  [[noreturn]] void fail(const std::string& what, const std::string& key = {}) const {
    const std::size_t at = key.empty() ? offset_ : key_offset(key);
    const std::string where = key.empty() ? path_ : (path_.empty() ? key : path_ + "." + key);
    throw ConfigError("line " + std::to_string(line_at(text_, at)) + ": " +
                      (where.empty() ? std::string("config") : where) + ": " + what);
  }

  Reader child(const std::string& key) {
    used_.insert(key);
    return Reader(node_.at(key), text_, path_.empty() ? key : path_ + "." + key, key_offset(key));
  }

  void number(const std::string& key, double& out) {
    if (!take(key)) return;
    const auto& v = node_.at(key);
    if (!v.is_number()) fail("expected a number", key);
    out = v.get<double>();
  }

  void integer(const std::string& key, int& out) {
    if (!take(key)) return;
    const auto& v = node_.at(key);
    if (!v.is_number_integer()) fail("expected an integer", key);
    out = v.get<int>();
  }

  void unsigned64(const std::string& key, std::uint64_t& out) {
    if (!take(key)) return;
    const auto& v = node_.at(key);
    if (!v.is_number_unsigned()) fail("expected a non-negative integer", key);
    out = v.get<std::uint64_t>();
  }

  void boolean(const std::string& key, bool& out) {
    if (!take(key)) return;
    const auto& v = node_.at(key);
    if (!v.is_boolean()) fail("expected true or false", key);
    out = v.get<bool>();
  }

  void string(const std::string& key, std::string& out) {
    if (!take(key)) return;
    const auto& v = node_.at(key);
    if (!v.is_string()) fail("expected a string", key);
    out = v.get<std::string>();
  }

  template <typename T>
  void list(const std::string& key, std::vector<T>& out) {
    if (!take(key)) return;
    const auto& v = node_.at(key);
    if (!v.is_array()) fail("expected an array", key);
    out.clear();
    for (const auto& e : v) {
      if constexpr (std::is_same_v<T, std::string>) {
        if (!e.is_string()) fail("expected an array of strings", key);
      } else if constexpr (std::is_integral_v<T>) {
        if (!e.is_number_integer()) fail("expected an array of integers", key);
      } else {
        if (!e.is_number()) fail("expected an array of numbers", key);
      }
      out.push_back(e.get<T>());
    }
  }

  void gaussian(const std::string& key, GaussianDist& out) {
    if (!has(key)) return;
    auto r = child(key);
    r.number("mean", out.mean);
    r.number("std", out.std);
    r.finish();
  }

  void finish() const {
    for (const auto& [k, v] : node_.items()) {
      if (!used_.count(k)) fail("unknown key '" + k + "'", k);
    }
  }

 private:
  bool take(const std::string& key) {
    if (!node_.contains(key)) return false;
    used_.insert(key);
    return true;
  }

  std::size_t key_offset(const std::string& key) const {
    const auto pos = text_.find("\"" + key + "\"", offset_);
    return pos == std::string::npos ? offset_ : pos;
  }

  const nlohmann::json& node_;
  const std::string& text_;
  std::string path_;
  std::size_t offset_;
  std::set<std::string> used_;
};

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("line " + std::to_string(detail::line_at(text, e.byte == 0 ? 0 : e.byte - 1)) +
                      ": malformed JSON: " + e.what());
  }
  ExperimentConfig out;
  auto& c = out.sim;
  detail::Reader root(doc, text, "", 0);
  root.unsigned64("seed", out.seed);
  c.seed = out.seed;
  root.string("output_dir", out.output_dir);

  if (root.has("field")) {
    auto f = root.child("field");
    int count = c.field.furrow_count;
    double spacing = c.field.furrow_spacing;
    double length = c.field.furrow_length;
    double depth = c.field.headland_depth;
    f.integer("furrow_count", count);
    f.number("furrow_spacing_m", spacing);
    f.number("furrow_length_m", length);
    f.number("headland_depth_m", depth);
    std::vector<double> station;
    f.list("station_xy_m", station);
    f.finish();
    try {
      c.field = FieldMap::with_central_station(count, spacing, length, depth);
    } catch (const Error& e) {
      f.fail(e.what());
    }
    if (!station.empty()) {
      if (station.size() != 2) f.fail("station_xy_m needs two numbers", "station_xy_m");
      c.field.stations[0].position = {station[0], station[1]};
    }
  }
  root.integer("crew_size", c.crew_size);
  root.integer("robot_count", c.robot_count);
  if (root.has("mode")) {
    std::string mode;
    root.string("mode", mode);
    try {
      c.mode = sim::parse_mode(mode);
    } catch (const Error& e) {
      root.fail(e.what(), "mode");
    }
  }
  root.number("fr_threshold", c.fr_threshold);
  root.number("tray_capacity_g", c.tray_capacity);
  root.number("tray_tare_g", c.tray_tare);
  root.number("timestep_s", c.timestep);
  root.integer("mc_runs", c.mc_runs);
  root.number("safety_stop_m", c.safety_stop);
  root.integer("picker_spacing", c.picker_spacing);
  root.number("max_time_s", c.max_time);
  root.boolean("record_traces", c.record_traces);
  if (root.has("robot")) {
    auto r = root.child("robot");
    r.number("headland_speed", c.consts.robot_profile.headland_speed);
    r.number("furrow_speed", c.consts.robot_profile.furrow_speed);
    r.number("length_m", c.footprint.length);
    r.number("width_m", c.footprint.width);
    r.finish();
  }
  if (root.has("timing")) {
    auto t = root.child("timing");
    t.number("load_s", c.consts.load_time);
    t.number("unload_s", c.consts.unload_time);
    t.finish();
  }
  root.number("reject_margin_m", c.consts.reject_margin);
  if (root.has("msa")) {
    auto m = root.child("msa");
    m.integer("scenarios", c.msa.num_scenarios);
    if (m.has("solver")) {
      std::string solver;
      m.string("solver", solver);
      if (solver == "srlpt") {
        c.msa.per_scenario_solver = SolverKind::Srlpt;
      } else if (solver == "exact") {
        c.msa.per_scenario_solver = SolverKind::Exact;
      } else {
        m.fail("expected \"srlpt\" or \"exact\"", "solver");
      }
    }
    int cap = static_cast<int>(c.msa.exact.max_requests);
    m.integer("exact_cap", cap);
    if (cap < 1) m.fail("must be >= 1", "exact_cap");
    c.msa.exact.max_requests = static_cast<std::size_t>(cap);
    m.finish();
  }
  if (root.has("prediction_noise")) {
    auto n = root.child("prediction_noise");
    n.number("bias_fraction", c.prediction_noise.bias_fraction);
    n.number("time_std_s", c.prediction_noise.time_std);
    n.number("speed_std", c.prediction_noise.speed_std);
    n.finish();
  }
  if (root.has("crew")) {
    auto w = root.child("crew");
    w.gaussian("harvest_rate_g_per_s", c.crew.harvest_rate);
    w.gaussian("pick_speed_m_per_s", c.crew.pick_speed);
    w.gaussian("walk_speed_m_per_s", c.crew.walk_speed);
    w.list("walk_speeds", c.crew.walk_speeds);
    w.finish();
  }
  if (root.has("coordination")) {
    auto k = root.child("coordination");
    k.boolean("enabled", c.coordination);
    k.number("margin_s", c.coordination_margin);
    k.number("lane_offset_m", c.lane_offset);
    k.number("lane_gap_m", c.lane_gap);
    k.finish();
  }
  if (root.has("sweep")) {
    auto s = root.child("sweep");
    s.list("robots", out.robots);
    s.list("scenarios", out.scenarios);
    s.list("series", out.series);
    s.integer("runs", out.runs);
    s.finish();
    for (const auto& name : out.series) {
      sim::SimConfig probe = c;
      try {
        apply_series(probe, name);
      } catch (const Error& e) {
        s.fail(e.what(), "series");
      }
    }
    if (out.runs < 1) s.fail("must be >= 1", "runs");
  }
  root.finish();
  try {
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return out;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace harvest::io
