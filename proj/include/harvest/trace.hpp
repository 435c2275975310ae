#pragma once

// Cart telemetry processing: per-tray event detection from filtered mass
// traces, productive/non-productive intervals, walking-speed estimation and
// the estimated manual-harvest baseline for robot-aided logs.

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "harvest/geometry.hpp"
#include "harvest/stats.hpp"

namespace harvest {

/// One row of a cart log, sampled at 10 Hz. `button` is 1 while the transport
/// request is active.
struct CartLogRecord {
  std::int64_t timestamp_ms = 0;
  double x = 0.0;
  double y = 0.0;
  double mass = 0.0;  // grams
  int button = 0;
};

struct TrayRecord {
  int picker_id = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::optional<double> request_time;
  Position full_location;
  double dt_ef = 0.0;
  std::optional<double> dt_fe;
  std::optional<double> efficiency;
};

/// Fill in productive time, and non-productive time plus efficiency when the
/// next tray's start is known.
inline void close_tray(TrayRecord& t, std::optional<double> next_start) {
  t.dt_ef = t.t_end - t.t_start;
  if (next_start) {
    t.dt_fe = *next_start - t.t_end;
    t.efficiency = t.dt_ef / (t.dt_ef + *t.dt_fe);
  } else {
    t.dt_fe.reset();
    t.efficiency.reset();
  }
}

struct DetectionParams {
  double arm_mass = 4000.0;    // tray must exceed this before an end counts
  double drop_mass = 3000.0;   // drop below the running peak that marks an end
  double start_mass = 500.0;   // empty tray on the cart
  double start_band = 100.0;
};

/// Tray start/end instants from a mass trace.
///
/// A start is the first sample at or above start_mass - start_band after the
/// previous end (or the beginning of the trace). An end is the first sample
/// that falls more than drop_mass below the peak, once the peak exceeded
/// arm_mass. A start with no later start leaves the tray's dt_fe empty; a start
/// that never reaches an end produces no record.
inline std::vector<TrayRecord> detect_tray_events(std::span<const CartLogRecord> log, int picker_id = 0,
                                                  const DetectionParams& p = {}) {
  for (std::size_t i = 1; i < log.size(); ++i) {
    if (log[i].timestamp_ms < log[i - 1].timestamp_ms) {
      throw Error("cart log timestamps are not monotone at row " + std::to_string(i));
    }
  }
  auto seconds = [](std::int64_t ms) { return static_cast<double>(ms) / 1000.0; };

  std::vector<TrayRecord> trays;
  std::vector<double> starts;
  enum class Phase { SeekStart, Filling } phase = Phase::SeekStart;
  TrayRecord cur;
  double peak = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& r = log[i];
    const double t = seconds(r.timestamp_ms);
    if (phase == Phase::SeekStart) {
      if (r.mass >= p.start_mass - p.start_band) {
        cur = TrayRecord{};
        cur.picker_id = picker_id;
        cur.t_start = t;
        starts.push_back(t);
        peak = r.mass;
        phase = Phase::Filling;
      } else {
        continue;
      }
    }
    if (i > 0 && r.button == 1 && log[i - 1].button == 0 && !cur.request_time) {
      cur.request_time = t;
    }
    peak = std::max(peak, r.mass);
    if (peak > p.arm_mass && r.mass < peak - p.drop_mass) {
      cur.t_end = t;
      cur.full_location = {r.x, r.y};
      trays.push_back(cur);
      phase = Phase::SeekStart;
      // The new tray may already be on the cart at this sample.
      if (r.mass >= p.start_mass - p.start_band) {
        cur = TrayRecord{};
        cur.picker_id = picker_id;
        cur.t_start = t;
        starts.push_back(t);
        peak = r.mass;
        phase = Phase::Filling;
      }
    }
  }
  for (std::size_t k = 0; k < trays.size(); ++k) {
    std::optional<double> next;
    if (k + 1 < starts.size()) next = starts[k + 1];
    close_tray(trays[k], next);
  }
  return trays;
}

struct WalkSpeedEstimate {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
};

struct WalkSpeedReport {
  std::map<int, WalkSpeedEstimate> speeds;
  std::vector<std::string> warnings;
};

/// Walking speed per manual tray: round-trip distance over non-productive time
/// minus station handling.
inline WalkSpeedReport estimate_walk_speeds(std::span<const TrayRecord> manual_trays,
                                            const Station& station, double handling_time = 8.0) {
  std::map<int, std::vector<double>> samples;
  WalkSpeedReport report;
  for (const auto& t : manual_trays) {
    if (!t.dt_fe) continue;
    if (*t.dt_fe <= handling_time) {
      report.warnings.push_back("picker " + std::to_string(t.picker_id) + " tray at " +
                                std::to_string(t.t_end) + " s excluded: non-productive time " +
                                "not above handling time");
      continue;
    }
    const double d = manhattan_distance(station, t.full_location);
    samples[t.picker_id].push_back(2.0 * d / (*t.dt_fe - handling_time));
  }
  for (const auto& [id, xs] : samples) {
    WalkSpeedEstimate e;
    e.n = xs.size();
    e.mean = stats::mean(xs);
    e.std = xs.size() >= 2 ? std::sqrt(stats::variance(xs)) : 0.0;
    if (xs.size() < 2) {
      report.warnings.push_back("picker " + std::to_string(id) + " has fewer than two manual trays");
    }
    report.speeds[id] = e;
  }
  return report;
}

struct ManualEstimate {
  int picker_id = 0;
  double t_end = 0.0;
  double dt_ef = 0.0;
  double dt_fe_est = 0.0;
  double efficiency_est = 0.0;
};

/// What each robot-aided tray would have cost if the picker had walked it.
inline std::vector<ManualEstimate> estimate_manual_baseline(std::span<const TrayRecord> robot_trays,
                                                            const std::map<int, double>& walk_speeds,
                                                            const Station& station,
                                                            double handling_time = 8.0) {
  std::set<int> missing;
  for (const auto& t : robot_trays) {
    if (!walk_speeds.count(t.picker_id)) missing.insert(t.picker_id);
  }
  if (!missing.empty()) {
    std::string ids;
    for (int id : missing) ids += (ids.empty() ? " " : ", ") + std::to_string(id);
    throw Error("missing walking speed for picker(s):" + ids);
  }
  std::vector<ManualEstimate> out;
  out.reserve(robot_trays.size());
  for (const auto& t : robot_trays) {
    const double v = walk_speeds.at(t.picker_id);
    if (!(v > 0.0)) throw Error("walking speed must be positive");
    ManualEstimate e;
    e.picker_id = t.picker_id;
    e.t_end = t.t_end;
    e.dt_ef = t.t_end - t.t_start;
    e.dt_fe_est = 2.0 * manhattan_distance(station, t.full_location) / v + handling_time;
    e.efficiency_est = e.dt_ef / (e.dt_ef + e.dt_fe_est);
    out.push_back(e);
  }
  return out;
}

}  // namespace harvest
