#pragma once

// Field frame: x runs across furrows, y runs along furrows with y = 0 at the
// headland edge. The headland occupies y < 0 and the field section y in
// [0, furrow_length], ending at the split line.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace harvest {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Position {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

struct Station {
  int id = 0;
  Position position;
};

struct SpeedProfile {
  double headland_speed = 0.4;
  double furrow_speed = 1.2;

  static SpeedProfile uniform(double speed) { return {speed, speed}; }

  void validate() const {
    if (!(headland_speed > 0.0) || !(furrow_speed > 0.0)) {
      throw Error("speed profile requires positive speeds");
    }
  }
};

inline void require_finite(const Position& p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw Error("non-finite coordinate");
  }
}

struct FieldMap {
  int furrow_count = 1;
  double furrow_spacing = 1.3;
  double furrow_length = 40.0;
  double headland_depth = 8.0;
  std::vector<Station> stations;

  double furrow_x(int furrow) const { return furrow * furrow_spacing; }

  // Stations sit in the middle of the headland strip.
  double station_y() const { return -headland_depth / 2.0; }

  const Station& station(int id) const {
    for (const auto& s : stations) {
      if (s.id == id) return s;
    }
    throw Error("unknown station id " + std::to_string(id));
  }

  void validate() const {
    if (furrow_count < 1) throw Error("furrow_count must be >= 1");
    if (!(furrow_spacing > 0.0)) throw Error("furrow_spacing must be > 0");
    if (!(furrow_length > 0.0)) throw Error("furrow_length must be > 0");
    if (!(headland_depth >= 0.0)) throw Error("headland_depth must be >= 0");
    for (std::size_t i = 0; i < stations.size(); ++i) {
      require_finite(stations[i].position);
      if (stations[i].position.y > 0.0) {
        throw Error("station " + std::to_string(stations[i].id) + " is not on the headland");
      }
      for (std::size_t j = i + 1; j < stations.size(); ++j) {
        if (stations[i].id == stations[j].id) {
          throw Error("duplicate station id " + std::to_string(stations[i].id));
        }
      }
    }
  }

  // Single station centred on the furrows, the usual desk-scale setup.
  static FieldMap with_central_station(int furrows, double spacing, double length, double depth) {
    FieldMap f{furrows, spacing, length, depth, {}};
    f.stations.push_back({0, {(furrows - 1) * spacing / 2.0, -depth / 2.0}});
    f.validate();
    return f;
  }
};

namespace detail {

// Horizontal lane used to cross between furrows. Points on the headland keep
// their own depth, in-field points meet at the headland edge.
inline double lane_y(const Position& a, const Position& b) {
  return std::min({a.y, b.y, 0.0});
}

// Split a vertical run between two depths into headland and furrow parts.
inline void split_vertical(double y0, double y1, double& headland, double& furrow) {
  const double lo = std::min(y0, y1);
  const double hi = std::max(y0, y1);
  furrow += std::max(0.0, hi - std::max(lo, 0.0));
  headland += std::max(0.0, std::min(hi, 0.0) - lo);
}

}  // namespace detail

/// Headland-then-furrow polyline between two points. Consecutive waypoints are
/// axis aligned and repeated points are dropped.
inline std::vector<Position> path_waypoints(const Position& start, const Position& goal) {
  require_finite(start);
  require_finite(goal);
  std::vector<Position> pts{start};
  auto push = [&pts](Position p) {
    if (!(pts.back() == p)) pts.push_back(p);
  };
  if (start.x != goal.x) {
    const double lane = detail::lane_y(start, goal);
    push({start.x, lane});
    push({goal.x, lane});
  }
  push(goal);
  return pts;
}

inline double polyline_length(const std::vector<Position>& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    len += std::abs(pts[i].x - pts[i - 1].x) + std::abs(pts[i].y - pts[i - 1].y);
  }
  return len;
}

/// Manhattan distance along the furrow/headland path between two points.
inline double manhattan_distance(const Position& a, const Position& b) {
  require_finite(a);
  require_finite(b);
  if (a.x == b.x) return std::abs(a.y - b.y);
  const double lane = detail::lane_y(a, b);
  return std::abs(a.x - b.x) + (a.y - lane) + (b.y - lane);
}

inline double manhattan_distance(const Station& station, const Position& point) {
  return manhattan_distance(station.position, point);
}

/// Travel time along path_waypoints(a, b): headland legs at headland speed,
/// in-furrow legs at furrow speed.
inline double travel_time(const Position& a, const Position& b, const SpeedProfile& profile) {
  profile.validate();
  require_finite(a);
  require_finite(b);
  double headland = 0.0;
  double furrow = 0.0;
  if (a.x == b.x) {
    detail::split_vertical(a.y, b.y, headland, furrow);
  } else {
    const double lane = detail::lane_y(a, b);
    detail::split_vertical(a.y, lane, headland, furrow);
    headland += std::abs(a.x - b.x);
    detail::split_vertical(lane, b.y, headland, furrow);
  }
  return headland / profile.headland_speed + furrow / profile.furrow_speed;
}

inline double travel_time(const Station& station, const Position& point, const SpeedProfile& profile) {
  return travel_time(station.position, point, profile);
}

}  // namespace harvest
