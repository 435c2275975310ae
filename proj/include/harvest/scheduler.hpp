#pragma once

// Deterministic single-scenario scheduling of tray-transport robots with
// request rejection. Each request is either served by one robot, dispatched no
// earlier than its release delay and the robot's availability, or rejected so
// the picker carries the tray. Robots serve one request at a time. The
// objective is the total non-productive time over all requests.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "harvest/geometry.hpp"
#include "harvest/request.hpp"

namespace harvest {

struct RobotAvail {
  int robot_id = 0;
  double available_after = 0.0;
};

struct SchedConstants {
  double load_time = 15.0;    // picker swaps trays at the robot
  double unload_time = 8.0;   // station unloads a tray and issues an empty one
  SpeedProfile robot_profile{};
  double reject_margin = 5.0;  // metres from the row end

  void validate() const {
    if (!(load_time >= 0.0) || !(unload_time >= 0.0) || !(reject_margin >= 0.0)) {
      throw Error("scheduling constants must be non-negative");
    }
    robot_profile.validate();
  }
};

/// Per-request quantities derived from one sampled scenario.
struct RequestTimes {
  int picker_id = 0;
  Position full_location;
  double dt_f = 0.0;       // until tray full
  double distance = 0.0;   // station to full-tray location
  double dt_u = 0.0;       // robot one-way travel
  double dt_uP = 0.0;      // picker one-way walk
  double dt_T = 0.0;       // picker self-transport round trip
  double release = 0.0;    // earliest useful dispatch
  double proc_time = 0.0;  // robot busy time per service
};

struct ScenarioInstance {
  std::vector<RequestTimes> requests;
  std::vector<RobotAvail> robots;
  SchedConstants constants;
  double horizon = 0.0;

  std::size_t size() const { return requests.size(); }

  // Self-transport is always feasible, so no completion exceeds this.
  double reject_cost(std::size_t i) const { return requests[i].dt_T; }

  double serve_cost(std::size_t i, double dispatch) const {
    const auto& r = requests[i];
    return dispatch + r.dt_u + constants.load_time - r.dt_f;
  }
};

inline RequestTimes derive_request(const DeterministicRequest& req, const Station& station,
                                   const SchedConstants& consts) {
  if (!(req.picker_walk_speed > 0.0)) throw Error("picker walk speed must be > 0");
  RequestTimes t;
  t.picker_id = req.picker_id;
  t.full_location = req.full_tray_location;
  t.dt_f = req.sampled_full_time;
  t.distance = manhattan_distance(station, req.full_tray_location);
  t.dt_u = travel_time(station, req.full_tray_location, consts.robot_profile);
  t.dt_uP = t.distance / req.picker_walk_speed;
  t.dt_T = 2.0 * t.dt_uP + consts.unload_time;
  t.release = std::max(t.dt_f - t.dt_u, 0.0);
  t.proc_time = 2.0 * t.dt_u + consts.load_time + consts.unload_time;
  return t;
}

inline ScenarioInstance derive_instance(const Scenario& scenario, std::span<const RobotAvail> robots,
                                        const FieldMap& field, int station_id,
                                        const SchedConstants& consts) {
  consts.validate();
  const Station& station = field.station(station_id);
  ScenarioInstance inst;
  inst.constants = consts;
  inst.robots.assign(robots.begin(), robots.end());
  for (const auto& r : inst.robots) {
    if (!(r.available_after >= 0.0)) throw Error("robot availability must be >= 0");
  }
  double max_f = 0.0;
  double max_T = 0.0;
  inst.requests.reserve(scenario.requests.size());
  for (const auto& req : scenario.requests) {
    require_finite(req.full_tray_location);
    if (req.full_tray_location.y < 0.0 || req.full_tray_location.y > field.furrow_length) {
      throw Error("full tray location outside the furrow");
    }
    inst.requests.push_back(derive_request(req, station, consts));
    max_f = std::max(max_f, inst.requests.back().dt_f);
    max_T = std::max(max_T, inst.requests.back().dt_T);
  }
  inst.horizon = max_f + max_T;
  return inst;
}

struct Serve {
  int robot_id = 0;
  double dispatch_time = 0.0;
  friend bool operator==(const Serve&, const Serve&) = default;
};
struct Reject {
  friend bool operator==(const Reject&, const Reject&) = default;
};
using Decision = std::variant<Serve, Reject>;

inline bool is_served(const Decision& d) { return std::holds_alternative<Serve>(d); }

struct RequestOutcome {
  double completion = 0.0;     // instant the picker resumes picking
  double nonproductive = 0.0;  // completion minus tray-full instant
};

struct Schedule {
  std::vector<Decision> decisions;
  std::vector<RequestOutcome> outcomes;
  double objective = 0.0;
};

enum class Constraint { Assignment, UnknownRobot, Release, RobotAvailability, NoOverlap };

inline const char* to_string(Constraint c) {
  switch (c) {
    case Constraint::Assignment: return "one decision per request";
    case Constraint::UnknownRobot: return "unknown robot";
    case Constraint::Release: return "dispatch before release";
    case Constraint::RobotAvailability: return "dispatch before robot availability";
    case Constraint::NoOverlap: return "overlapping service on one robot";
  }
  return "unknown";
}

struct InfeasibleSchedule : Error {
  Constraint constraint;
  InfeasibleSchedule(Constraint c, const std::string& detail)
      : Error(std::string("infeasible schedule: ") + to_string(c) + " (" + detail + ")"),
        constraint(c) {}
};

struct Evaluation {
  std::vector<RequestOutcome> outcomes;
  double objective = 0.0;
};

namespace detail {

inline Evaluation outcomes_of(const ScenarioInstance& inst, std::span<const Decision> decisions) {
  Evaluation ev;
  ev.outcomes.resize(inst.size());
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const auto& r = inst.requests[i];
    RequestOutcome& o = ev.outcomes[i];
    if (const auto* s = std::get_if<Serve>(&decisions[i])) {
      o.completion = s->dispatch_time + r.dt_u + inst.constants.load_time;
    } else {
      o.completion = r.dt_f + r.dt_T;
    }
    o.nonproductive = o.completion - r.dt_f;
    ev.objective += o.nonproductive;
  }
  return ev;
}

inline Schedule make_schedule(const ScenarioInstance& inst, std::vector<Decision> decisions) {
  Evaluation ev = outcomes_of(inst, decisions);
  return {std::move(decisions), std::move(ev.outcomes), ev.objective};
}

inline std::optional<std::size_t> robot_index(const ScenarioInstance& inst, int robot_id) {
  for (std::size_t k = 0; k < inst.robots.size(); ++k) {
    if (inst.robots[k].robot_id == robot_id) return k;
  }
  return std::nullopt;
}

}  // namespace detail

/// Recompute completion and non-productive times from the decisions, checking
/// every feasibility constraint.
inline Evaluation evaluate_schedule(const ScenarioInstance& inst, const Schedule& sched,
                                    double tol = 1e-9) {
  if (sched.decisions.size() != inst.size()) {
    throw InfeasibleSchedule(Constraint::Assignment, "decision count " +
                                                         std::to_string(sched.decisions.size()) +
                                                         " vs " + std::to_string(inst.size()));
  }
  std::vector<std::vector<std::pair<double, double>>> busy(inst.robots.size());
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const auto* s = std::get_if<Serve>(&sched.decisions[i]);
    if (!s) continue;
    const auto k = detail::robot_index(inst, s->robot_id);
    if (!k) throw InfeasibleSchedule(Constraint::UnknownRobot, "robot " + std::to_string(s->robot_id));
    const auto& r = inst.requests[i];
    if (s->dispatch_time < r.release - tol) {
      throw InfeasibleSchedule(Constraint::Release, "request " + std::to_string(i));
    }
    if (s->dispatch_time < inst.robots[*k].available_after - tol) {
      throw InfeasibleSchedule(Constraint::RobotAvailability, "request " + std::to_string(i));
    }
    busy[*k].emplace_back(s->dispatch_time, s->dispatch_time + r.proc_time);
  }
  for (std::size_t k = 0; k < busy.size(); ++k) {
    auto& iv = busy[k];
    std::sort(iv.begin(), iv.end());
    for (std::size_t j = 1; j < iv.size(); ++j) {
      if (iv[j].first < iv[j - 1].second - tol) {
        throw InfeasibleSchedule(Constraint::NoOverlap,
                                 "robot " + std::to_string(inst.robots[k].robot_id));
      }
    }
  }
  return detail::outcomes_of(inst, sched.decisions);
}

/// Exhaustive oracle: every assignment of requests to robots or rejection and
/// every service order per robot, with earliest-feasible dispatch.
inline Schedule brute_force_schedule(const ScenarioInstance& inst) {
  const std::size_t n = inst.size();
  if (n > 7) throw Error("brute_force_schedule supports at most 7 requests");
  const std::size_t m = inst.robots.size();
  if (n == 0) return detail::make_schedule(inst, {});

  // Best sequence for each (robot, subset), found by trying every permutation.
  struct Best {
    double cost = 0.0;
    std::vector<std::size_t> order;
  };
  const std::size_t subsets = std::size_t{1} << n;
  std::vector<std::vector<Best>> best(m, std::vector<Best>(subsets));
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t mask = 1; mask < subsets; ++mask) {
      std::vector<std::size_t> perm;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (std::size_t{1} << i)) perm.push_back(i);
      }
      Best b{std::numeric_limits<double>::infinity(), {}};
      do {
        double free = inst.robots[k].available_after;
        double cost = 0.0;
        for (std::size_t i : perm) {
          const double d = std::max(inst.requests[i].release, free);
          cost += inst.serve_cost(i, d);
          free = d + inst.requests[i].proc_time;
        }
        if (cost < b.cost) b = {cost, perm};
      } while (std::next_permutation(perm.begin(), perm.end()));
      best[k][mask] = std::move(b);
    }
  }

  // Enumerate assignments; slot m means rejected.
  std::vector<std::size_t> assign(n, 0);
  std::vector<std::size_t> best_assign;
  double best_cost = std::numeric_limits<double>::infinity();
  while (true) {
    std::vector<std::size_t> masks(m, 0);
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (assign[i] == m) {
        cost += inst.reject_cost(i);
      } else {
        masks[assign[i]] |= std::size_t{1} << i;
      }
    }
    for (std::size_t k = 0; k < m; ++k) {
      if (masks[k]) cost += best[k][masks[k]].cost;
    }
    if (cost < best_cost) {
      best_cost = cost;
      best_assign = assign;
    }
    std::size_t pos = 0;
    while (pos < n && assign[pos] == m) assign[pos++] = 0;
    if (pos == n) break;
    ++assign[pos];
  }

  std::vector<Decision> decisions(n, Reject{});
  for (std::size_t k = 0; k < m; ++k) {
    std::size_t mask = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (best_assign[i] == k) mask |= std::size_t{1} << i;
    }
    if (!mask) continue;
    double free = inst.robots[k].available_after;
    for (std::size_t i : best[k][mask].order) {
      const double d = std::max(inst.requests[i].release, free);
      decisions[i] = Serve{inst.robots[k].robot_id, d};
      free = d + inst.requests[i].proc_time;
    }
  }
  return detail::make_schedule(inst, std::move(decisions));
}

/// Shortest-release pool, longest-process-time-first dispatch.
///
/// Requests whose full-tray location is within the reject margin of the row
/// end are rejected up front. The remaining requests join the pool once
/// released and the earliest-free robot takes the pooled request with the
/// longest processing time. A pooled request whose service would start too
/// late to beat self-transport is rejected instead.
inline Schedule srlpt_schedule(const ScenarioInstance& inst) {
  const std::size_t n = inst.size();
  std::vector<Decision> decisions(n, Reject{});
  std::vector<std::size_t> remaining;
  for (std::size_t i = 0; i < n; ++i) {
    if (inst.requests[i].full_location.y >= inst.constants.reject_margin) remaining.push_back(i);
  }
  if (inst.robots.empty()) remaining.clear();
  std::vector<double> free(inst.robots.size());
  for (std::size_t k = 0; k < free.size(); ++k) free[k] = inst.robots[k].available_after;

  auto deadline = [&](std::size_t i) {
    const auto& r = inst.requests[i];
    return r.dt_f + r.dt_T - (r.dt_u + inst.constants.load_time);
  };
  auto longer = [&](std::size_t a, std::size_t b) {
    const auto& ra = inst.requests[a];
    const auto& rb = inst.requests[b];
    if (ra.proc_time != rb.proc_time) return ra.proc_time > rb.proc_time;
    if (ra.picker_id != rb.picker_id) return ra.picker_id < rb.picker_id;
    return a < b;
  };

  while (!remaining.empty()) {
    const auto k = static_cast<std::size_t>(
        std::min_element(free.begin(), free.end()) - free.begin());
    double t = free[k];
    double next_release = std::numeric_limits<double>::infinity();
    for (std::size_t i : remaining) next_release = std::min(next_release, inst.requests[i].release);
    t = std::max(t, next_release);

    std::optional<std::size_t> pick;
    std::vector<std::size_t> keep;
    keep.reserve(remaining.size());
    for (std::size_t i : remaining) {
      if (inst.requests[i].release > t) {
        keep.push_back(i);
      } else if (t > deadline(i)) {
        decisions[i] = Reject{};
      } else if (!pick || longer(i, *pick)) {
        if (pick) keep.push_back(*pick);
        pick = i;
      } else {
        keep.push_back(i);
      }
    }
    remaining = std::move(keep);
    if (!pick) continue;
    decisions[*pick] = Serve{inst.robots[k].robot_id, t};
    free[k] = t + inst.requests[*pick].proc_time;
  }
  return detail::make_schedule(inst, std::move(decisions));
}

struct ExactOptions {
  std::size_t max_requests = 12;
};

/// Optimal schedule by depth-first branch and bound.
///
/// For a fixed assignment and per-robot order, earliest-feasible dispatch is
/// optimal, so the search only enumerates (assignment, order). Served requests
/// are appended in non-decreasing (dispatch time, request index) order, which
/// generates each such schedule once. Robots differ only in when they become
/// free, so in that order every request can go to the earliest-free robot:
/// handing it to a later-free robot and swapping the two robots' remaining
/// work gives the same dispatch times. Any partial schedule is also a complete
/// one with the undecided requests rejected.
inline Schedule exact_schedule(const ScenarioInstance& inst, const ExactOptions& opts = {}) {
  const std::size_t n = inst.size();
  if (n > opts.max_requests) {
    throw Error("exact_schedule: " + std::to_string(n) + " requests exceed the cap of " +
                std::to_string(opts.max_requests) + "; use srlpt_schedule");
  }
  if (n == 0) return detail::make_schedule(inst, {});
  const std::size_t m = inst.robots.size();
  const double load = inst.constants.load_time;

  Schedule incumbent = srlpt_schedule(inst);
  double best = incumbent.objective;
  std::vector<Decision> best_decisions = incumbent.decisions;

  struct Step {
    std::size_t request;
    std::size_t robot;
    double dispatch;
  };
  std::vector<double> free(m);
  for (std::size_t k = 0; k < m; ++k) free[k] = inst.robots[k].available_after;
  std::vector<char> served(n, 0);
  std::vector<Step> path;
  path.reserve(n);

  double reject_all = 0.0;
  for (std::size_t i = 0; i < n; ++i) reject_all += inst.reject_cost(i);

  // cost: served costs so far; reject_rest: sum of reject costs of unserved.
  auto search = [&](auto&& self, double cost, double reject_rest, double last_start,
                    std::size_t last_req) -> void {
    const double total = cost + reject_rest;
    if (total < best - 1e-12) {
      best = total;
      best_decisions.assign(n, Reject{});
      for (const auto& s : path) {
        best_decisions[s.request] = Serve{inst.robots[s.robot].robot_id, s.dispatch};
      }
    }
    if (path.size() == n || m == 0) return;

    const double min_free = *std::min_element(free.begin(), free.end());
    const double floor_start = std::max(min_free, last_start);
    double bound = cost;
    for (std::size_t i = 0; i < n; ++i) {
      if (served[i]) continue;
      const auto& r = inst.requests[i];
      const double s = std::max(r.release, floor_start);
      bound += std::min(r.dt_T, s + r.dt_u + load - r.dt_f);
    }
    if (bound >= best - 1e-12) return;

    struct Child {
      double gain;  // reject cost minus serve cost, larger first
      std::size_t request;
      std::size_t robot;
      double dispatch;
    };
    const auto robot = static_cast<std::size_t>(std::min_element(free.begin(), free.end()) - free.begin());
    std::vector<Child> children;
    for (std::size_t i = 0; i < n; ++i) {
      if (served[i]) continue;
      const auto& r = inst.requests[i];
      const double d = std::max(r.release, min_free);
      if (d < last_start || (d == last_start && i <= last_req && !path.empty())) continue;
      const double serve = d + r.dt_u + load - r.dt_f;
      if (serve >= r.dt_T) continue;
      children.push_back({r.dt_T - serve, i, robot, d});
    }
    std::sort(children.begin(), children.end(), [](const Child& a, const Child& b) {
      if (a.gain != b.gain) return a.gain > b.gain;
      if (a.request != b.request) return a.request < b.request;
      return a.robot < b.robot;
    });
    for (const auto& c : children) {
      const auto& r = inst.requests[c.request];
      const double saved_free = free[c.robot];
      free[c.robot] = c.dispatch + r.proc_time;
      served[c.request] = 1;
      path.push_back({c.request, c.robot, c.dispatch});
      self(self, cost + (c.dispatch + r.dt_u + load - r.dt_f), reject_rest - r.dt_T, c.dispatch,
           c.request);
      path.pop_back();
      served[c.request] = 0;
      free[c.robot] = saved_free;
    }
  };
  search(search, 0.0, reject_all, -std::numeric_limits<double>::infinity(), 0);
  return detail::make_schedule(inst, std::move(best_decisions));
}

enum class SolverKind { Exact, Srlpt };

inline Schedule solve(const ScenarioInstance& inst, SolverKind kind, const ExactOptions& opts = {}) {
  return kind == SolverKind::Exact ? exact_schedule(inst, opts) : srlpt_schedule(inst);
}

}  // namespace harvest
