#pragma once

// Headland traffic control. Each robot's footprint is swept along the part of
// its remaining path that lies on the headland; when two sweeps intersect,
// entry and exit instants into the shared area decide who may proceed.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "harvest/geometry.hpp"

namespace harvest::sim {

struct Rect {
  double xmin = 0.0;
  double xmax = 0.0;
  double ymin = 0.0;
  double ymax = 0.0;

  // Open intersection: touching edges do not count.
  bool overlaps(const Rect& o, double eps = 1e-9) const {
    return xmin < o.xmax - eps && o.xmin < xmax - eps && ymin < o.ymax - eps && o.ymin < ymax - eps;
  }
  Rect intersect(const Rect& o) const {
    return {std::max(xmin, o.xmin), std::min(xmax, o.xmax), std::max(ymin, o.ymin), std::min(ymax, o.ymax)};
  }
  Rect hull(const Rect& o) const {
    return {std::min(xmin, o.xmin), std::max(xmax, o.xmax), std::min(ymin, o.ymin), std::max(ymax, o.ymax)};
  }
};

struct Footprint {
  double length = 1.6;  // along the direction of travel
  double width = 1.2;

  Rect at(const Position& p, bool horizontal) const {
    const double hx = (horizontal ? length : width) / 2.0;
    const double hy = (horizontal ? width : length) / 2.0;
    return {p.x - hx, p.x + hx, p.y - hy, p.y + hy};
  }
};

struct RobotMotion {
  int robot_id = 0;
  Position position;
  bool horizontal = false;          // heading of the current segment
  std::vector<Position> path;       // remaining waypoints, path.front() == position
  SpeedProfile profile{};
  bool docked = false;              // waiting at the station; yields to traffic
};

struct CoordinationParams {
  double margin = 5.0;  // seconds
  Footprint footprint{};
  double headland_edge = 0.0;
};

enum class Go { Proceed, Stop };

namespace detail {

struct Leg {
  Position a;
  Position b;
  double t0 = 0.0;  // time the robot reaches a
  double speed = 1.0;
};

// Axis-aligned legs with the time each starts, split where a vertical leg
// crosses the headland edge so every leg has a single speed.
inline std::vector<Leg> timed_legs(const RobotMotion& m, double edge) {
  std::vector<Leg> legs;
  double t = 0.0;
  auto add = [&](Position a, Position b) {
    const double len = std::abs(b.x - a.x) + std::abs(b.y - a.y);
    if (len <= 0.0) return;
    const double mid_y = (a.y + b.y) / 2.0;
    const double v = mid_y > edge ? m.profile.furrow_speed : m.profile.headland_speed;
    legs.push_back({a, b, t, v});
    t += len / v;
  };
  for (std::size_t i = 1; i < m.path.size(); ++i) {
    const Position a = m.path[i - 1];
    const Position b = m.path[i];
    if (a.x == b.x && (a.y - edge) * (b.y - edge) < 0.0) {
      const Position c{a.x, edge};
      add(a, c);
      add(c, b);
    } else {
      add(a, b);
    }
  }
  return legs;
}

inline bool leg_horizontal(const Leg& l) { return l.a.y == l.b.y && l.a.x != l.b.x; }

// Footprints swept along every leg that touches the headland strip.
inline std::vector<Rect> sweep(const RobotMotion& m, const std::vector<Leg>& legs,
                               const CoordinationParams& p) {
  std::vector<Rect> out;
  const double reach = p.headland_edge + p.footprint.length / 2.0;
  for (const auto& l : legs) {
    if (std::min(l.a.y, l.b.y) > reach) continue;
    const bool h = leg_horizontal(l);
    Position a = l.a;
    Position b = l.b;
    // Clip in-furrow legs at the point where the footprint leaves the headland.
    if (!h) {
      a.y = std::min(a.y, reach);
      b.y = std::min(b.y, reach);
    }
    out.push_back(p.footprint.at(a, h).hull(p.footprint.at(b, h)));
  }
  if (out.empty() && m.position.y <= reach) out.push_back(p.footprint.at(m.position, m.horizontal));
  return out;
}

// Parameter interval s in [0, len] over which the moving footprint overlaps r.
inline bool overlap_window(const Leg& l, const Rect& r, const Footprint& fp, double& s_lo, double& s_hi) {
  const bool h = leg_horizontal(l);
  const double hx = (h ? fp.length : fp.width) / 2.0;
  const double hy = (h ? fp.width : fp.length) / 2.0;
  const double len = std::abs(l.b.x - l.a.x) + std::abs(l.b.y - l.a.y);
  // Fixed coordinate must overlap; moving coordinate gives the window.
  double fixed_c, fixed_h, lo, hi, start, dir;
  if (h) {
    fixed_c = l.a.y;
    fixed_h = hy;
    if (!(fixed_c - fixed_h < r.ymax && r.ymin < fixed_c + fixed_h)) return false;
    lo = r.xmin - hx;
    hi = r.xmax + hx;
    start = l.a.x;
    dir = l.b.x > l.a.x ? 1.0 : -1.0;
  } else {
    fixed_c = l.a.x;
    fixed_h = hx;
    if (!(fixed_c - fixed_h < r.xmax && r.xmin < fixed_c + fixed_h)) return false;
    lo = r.ymin - hy;
    hi = r.ymax + hy;
    start = l.a.y;
    dir = l.b.y > l.a.y ? 1.0 : -1.0;
  }
  // Position along the leg is start + dir * s.
  double s1 = (lo - start) * dir;
  double s2 = (hi - start) * dir;
  if (s1 > s2) std::swap(s1, s2);
  s_lo = std::max(s1, 0.0);
  s_hi = std::min(s2, len);
  return s_lo < s_hi;
}

struct Window {
  bool hit = false;
  double t_in = 0.0;
  double t_out = 0.0;
};

inline Window entry_exit(const RobotMotion& m, const std::vector<Leg>& legs,
                         const std::vector<Rect>& area, const CoordinationParams& p) {
  Window w;
  w.t_in = std::numeric_limits<double>::infinity();
  w.t_out = 0.0;
  const Rect here = p.footprint.at(m.position, m.horizontal);
  for (const auto& r : area) {
    if (here.overlaps(r)) {
      w.hit = true;
      w.t_in = 0.0;
    }
  }
  for (const auto& l : legs) {
    for (const auto& r : area) {
      double s_lo = 0.0;
      double s_hi = 0.0;
      if (!overlap_window(l, r, p.footprint, s_lo, s_hi)) continue;
      w.hit = true;
      w.t_in = std::min(w.t_in, l.t0 + s_lo / l.speed);
      w.t_out = std::max(w.t_out, l.t0 + s_hi / l.speed);
    }
  }
  if (w.hit) w.t_out = std::max(w.t_out, w.t_in);
  return w;
}

}  // namespace detail

/// Robots inside a shared area keep priority; otherwise the earlier entrant
/// goes first (ties to the lower id). Docked robots come after all others. The other robot stops while its margin-
/// extended window overlaps the priority robot's window.
///
/// Robots are settled one at a time in priority order, and only robots that
/// are allowed to proceed can stop later ones, so stops never form a cycle.
inline std::vector<Go> coordinate_headland(std::span<const RobotMotion> robots,
                                           const CoordinationParams& params = {}) {
  const std::size_t n = robots.size();
  std::vector<Go> out(n, Go::Proceed);
  std::vector<std::vector<detail::Leg>> legs(n);
  std::vector<std::vector<Rect>> sweeps(n);
  for (std::size_t i = 0; i < n; ++i) {
    legs[i] = detail::timed_legs(robots[i], params.headland_edge);
    sweeps[i] = detail::sweep(robots[i], legs[i], params);
  }
  struct Conflict {
    bool any = false;
    detail::Window wi;  // window of the lower index
    detail::Window wj;
  };
  std::vector<std::vector<Conflict>> conflict(n, std::vector<Conflict>(n));
  std::vector<bool> inside(n, false);
  std::vector<double> first_entry(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      std::vector<Rect> area;
      for (const auto& a : sweeps[i]) {
        for (const auto& b : sweeps[j]) {
          if (a.overlaps(b)) area.push_back(a.intersect(b));
        }
      }
      if (area.empty()) continue;
      const auto wi = detail::entry_exit(robots[i], legs[i], area, params);
      const auto wj = detail::entry_exit(robots[j], legs[j], area, params);
      if (!wi.hit || !wj.hit) continue;
      conflict[i][j] = {true, wi, wj};
      conflict[j][i] = {true, wj, wi};
      for (auto [k, w] : {std::pair{i, wi}, std::pair{j, wj}}) {
        if (w.t_in == 0.0 && !robots[k].docked) inside[k] = true;
        first_entry[k] = std::min(first_entry[k], w.t_in);
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (inside[a] != inside[b]) return static_cast<bool>(inside[a]);
    if (robots[a].docked != robots[b].docked) return robots[b].docked;
    if (first_entry[a] != first_entry[b]) return first_entry[a] < first_entry[b];
    return robots[a].robot_id < robots[b].robot_id;
  });
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t o = order[k];
    for (std::size_t q = 0; q < k; ++q) {
      const std::size_t f = order[q];
      if (out[f] == Go::Stop || !conflict[f][o].any) continue;
      const auto& wf = conflict[f][o].wi;
      const auto& wo = conflict[f][o].wj;
      if (wo.t_in == 0.0 && !robots[o].docked) continue;  // already committed to the shared area
      const double lo = std::max(0.0, wo.t_in - params.margin);
      if (wf.t_in <= wo.t_out && lo <= wf.t_out) {
        out[o] = Go::Stop;
        break;
      }
    }
  }
  return out;
}

}  // namespace harvest::sim
