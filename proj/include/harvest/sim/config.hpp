#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "harvest/geometry.hpp"
#include "harvest/msa.hpp"
#include "harvest/request.hpp"
#include "harvest/scheduler.hpp"
#include "harvest/sim/coordination.hpp"

namespace harvest::sim {

enum class Mode { Manual, Reactive, Msa };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Manual: return "manual";
    case Mode::Reactive: return "reactive";
    case Mode::Msa: return "msa";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "manual") return Mode::Manual;
  if (s == "reactive") return Mode::Reactive;
  if (s == "msa") return Mode::Msa;
  throw Error("unknown mode '" + s + "' (expected manual, reactive or msa)");
}

// Defaults give a mean tray time near 549 s: 4000 g of fruit at ~7.29 g/s,
// advancing ~17.9 m per tray.
struct CrewParams {
  GaussianDist harvest_rate{4000.0 / 548.71, 0.8};   // g/s
  GaussianDist pick_speed{17.92 / 548.71, 0.004};    // m/s along the furrow
  GaussianDist walk_speed{0.79, 0.17};               // m/s
  std::vector<double> walk_speeds;                   // per picker; overrides walk_speed

  void validate() const {
    harvest_rate.validate();
    pick_speed.validate();
    walk_speed.validate();
    if (!(harvest_rate.mean > 0.0)) throw Error("harvest_rate mean must be > 0");
    if (!(pick_speed.mean > 0.0)) throw Error("pick_speed mean must be > 0");
    if (!(walk_speed.mean > 0.0)) throw Error("walk_speed mean must be > 0");
    for (double v : walk_speeds) {
      if (!(v > 0.0)) throw Error("walk_speeds entries must be > 0");
    }
  }
};

struct PredictionNoise {
  double bias_fraction = 0.10;  // bias bound as a fraction of the tray time
  double time_std = 30.0;       // s
  double speed_std = 0.005;     // m/s

  void validate() const {
    if (!(bias_fraction >= 0.0) || bias_fraction > 1.0) throw Error("bias_fraction must be in [0, 1]");
    if (!(time_std >= 0.0)) throw Error("time_std must be >= 0");
    if (!(speed_std >= 0.0)) throw Error("speed_std must be >= 0");
  }

  static PredictionNoise none() { return {0.0, 0.0, 0.0}; }
};

struct SimConfig {
  FieldMap field = FieldMap::with_central_station(60, 1.3, 40.0, 8.0);
  int station_id = 0;
  int crew_size = 25;
  int robot_count = 8;
  double fr_threshold = 0.7;
  double tray_capacity = 4500.0;  // gross grams of a full tray
  double tray_tare = 500.0;       // empty tray
  SchedConstants consts{};        // load/unload times and robot speeds
  MsaParams msa{};
  PredictionNoise prediction_noise{};
  CrewParams crew{};
  Mode mode = Mode::Msa;
  double timestep = 0.1;
  int mc_runs = 100;
  double safety_stop = 5.0;
  double coordination_margin = 5.0;
  bool coordination = true;
  Footprint footprint{};
  double lane_offset = 1.0;  // outbound lane height above the station
  double lane_gap = 1.5;     // inbound lane sits this far above the outbound one
  int picker_spacing = 2;
  double max_time = 200000.0;
  bool record_traces = true;
  std::uint64_t seed = 1;

  double fruit_capacity() const { return tray_capacity - tray_tare; }

  void validate() const {
    field.validate();
    (void)field.station(station_id);
    if (crew_size < 1) throw Error("crew_size must be >= 1");
    if (robot_count < 0) throw Error("robot_count must be >= 0");
    if (!(fr_threshold > 0.0) || fr_threshold > 1.0) throw Error("fr_threshold must be in (0, 1]");
    if (!(tray_tare >= 0.0) || !(tray_capacity > tray_tare)) {
      throw Error("tray_capacity must exceed tray_tare >= 0");
    }
    consts.validate();
    msa.validate();
    prediction_noise.validate();
    crew.validate();
    if (!crew.walk_speeds.empty() && static_cast<int>(crew.walk_speeds.size()) != crew_size) {
      throw Error("walk_speeds must list one speed per picker");
    }
    if (!(timestep > 0.0)) throw Error("timestep must be > 0");
    if (mc_runs < 1) throw Error("mc_runs must be >= 1");
    if (!(safety_stop >= 0.0)) throw Error("safety_stop must be >= 0");
    if (!(coordination_margin >= 0.0)) throw Error("coordination_margin must be >= 0");
    if (!(footprint.length > 0.0) || !(footprint.width > 0.0)) throw Error("footprint must be positive");
    if (!(lane_offset > 0.0) || !(lane_gap > 0.0)) throw Error("lane_offset and lane_gap must be > 0");
    const double sy = field.station(station_id).position.y;
    if (sy + lane_offset + lane_gap > 0.0) throw Error("headland too shallow for the robot lanes");
    if (picker_spacing < 1) throw Error("picker_spacing must be >= 1");
    if (!(max_time > 0.0)) throw Error("max_time must be > 0");
  }
};

}  // namespace harvest::sim
