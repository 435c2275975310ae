#pragma once

// Online planning with the multiple scenario approach: sample deterministic
// scenarios from the request predictions, solve each one, and fuse the
// solutions into a single serving order by consensus scoring.

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>
#include <variant>
#include <vector>

#include "harvest/request.hpp"
#include "harvest/scheduler.hpp"

namespace harvest {

struct MsaParams {
  int num_scenarios = 50;
  SolverKind per_scenario_solver = SolverKind::Srlpt;
  std::uint64_t rng_seed = 1;
  ExactOptions exact{};

  void validate() const {
    if (num_scenarios < 1) throw Error("num_scenarios must be >= 1");
  }
};

struct PlannedRequest {
  int request_id = 0;  // picker id
  int score = 0;
  double expected_release = 0.0;  // relative to the plan instant
  Position predicted_full_location;
};

struct ConsensusPlan {
  double t0 = 0.0;                     // absolute instant the plan was computed
  std::vector<PlannedRequest> ranked;  // descending score
  std::set<int> reject_set;            // negative consensus score

  const PlannedRequest* find(int request_id) const {
    for (const auto& p : ranked) {
      if (p.request_id == request_id) return &p;
    }
    return nullptr;
  }
};

/// Per-scenario: rejected scores -1, served at 1-based position O in the
/// dispatch-time order scores N - O. Totals are summed over scenarios.
inline std::vector<int> score_schedules(std::span<const Schedule> schedules, std::size_t n) {
  std::vector<int> scores(n, 0);
  std::vector<std::size_t> served;
  for (const auto& sched : schedules) {
    if (sched.decisions.size() != n) {
      throw Error("score_schedules: schedule covers " + std::to_string(sched.decisions.size()) +
                  " requests, expected " + std::to_string(n));
    }
    served.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (is_served(sched.decisions[i])) {
        served.push_back(i);
      } else {
        scores[i] -= 1;
      }
    }
    std::stable_sort(served.begin(), served.end(), [&](std::size_t a, std::size_t b) {
      return std::get<Serve>(sched.decisions[a]).dispatch_time <
             std::get<Serve>(sched.decisions[b]).dispatch_time;
    });
    for (std::size_t pos = 0; pos < served.size(); ++pos) {
      scores[served[pos]] += static_cast<int>(n) - static_cast<int>(pos + 1);
    }
  }
  return scores;
}

struct PlanContext {
  const FieldMap* field = nullptr;
  int station_id = 0;
  SchedConstants constants{};
};

inline ConsensusPlan plan(std::span<const StochasticRequest> requests,
                          std::span<const RobotAvail> robots, const MsaParams& params,
                          const PlanContext& ctx, double t0 = 0.0) {
  params.validate();
  if (!ctx.field) throw Error("plan requires a field map");
  const FieldMap& field = *ctx.field;
  const std::size_t n = requests.size();
  if (params.per_scenario_solver == SolverKind::Exact && n > params.exact.max_requests) {
    throw Error("plan: " + std::to_string(n) + " requests exceed the exact solver cap of " +
                std::to_string(params.exact.max_requests));
  }

  const auto scenarios = get_samples(requests, params.num_scenarios, params.rng_seed,
                                     field.furrow_length);
  std::vector<Schedule> schedules;
  schedules.reserve(scenarios.size());
  for (const auto& sc : scenarios) {
    const auto inst = derive_instance(sc, robots, field, ctx.station_id, ctx.constants);
    schedules.push_back(solve(inst, params.per_scenario_solver, params.exact));
  }
  const auto scores = score_schedules(schedules, n);

  const Station& station = field.station(ctx.station_id);
  ConsensusPlan out;
  out.t0 = t0;
  out.ranked.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto mean = mean_request(requests[i], field.furrow_length);
    const auto times = derive_request(mean, station, ctx.constants);
    out.ranked.push_back({requests[i].picker_id, scores[i], times.release, mean.full_tray_location});
    if (scores[i] < 0) out.reject_set.insert(requests[i].picker_id);
  }
  std::stable_sort(out.ranked.begin(), out.ranked.end(),
                   [](const PlannedRequest& a, const PlannedRequest& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.expected_release != b.expected_release) {
                       return a.expected_release < b.expected_release;
                     }
                     return a.request_id < b.request_id;
                   });
  return out;
}

struct LiveRequest {
  int request_id = 0;
  bool assigned = false;   // a robot is already on its way
  bool tray_full = false;  // the picker's tray has filled
  bool rejected = false;   // a reject flag was already sent
};

struct DispatchCommand {
  int robot_id = 0;
  int request_id = 0;
  Position goal;
};
struct RejectFlag {
  int request_id = 0;
};
using Command = std::variant<DispatchCommand, RejectFlag>;

struct DispatchOptions {
  double safety_stop = 5.0;  // robot halts this far short of the predicted location
};

/// One dispatching decision round at absolute time `now`.
///
/// Idle robots are paired in order with the highest-ranked unassigned
/// requests; a robot is released only when its request's expected release has
/// arrived. Requests whose tray filled without a robot receive a reject flag.
inline std::vector<Command> dispatch_step(const ConsensusPlan& plan, double now,
                                          std::span<const int> idle_robots,
                                          std::span<const LiveRequest> live,
                                          const DispatchOptions& opts = {}) {
  std::vector<Command> out;
  std::set<int> blocked;
  for (const auto& r : live) {
    if (r.rejected || r.assigned) blocked.insert(r.request_id);
    if (!r.assigned && !r.rejected && r.tray_full) {
      out.push_back(RejectFlag{r.request_id});
      blocked.insert(r.request_id);
    }
  }
  auto is_live = [&](int id) {
    return std::any_of(live.begin(), live.end(), [id](const LiveRequest& r) { return r.request_id == id; });
  };
  std::size_t robot = 0;
  for (const auto& p : plan.ranked) {
    if (robot == idle_robots.size()) break;
    if (blocked.count(p.request_id) || plan.reject_set.count(p.request_id) || !is_live(p.request_id)) {
      continue;
    }
    const int robot_id = idle_robots[robot++];
    if (plan.t0 + p.expected_release > now) continue;
    Position goal = p.predicted_full_location;
    goal.y = std::max(0.0, goal.y - opts.safety_stop);
    out.push_back(DispatchCommand{robot_id, p.request_id, goal});
  }
  return out;
}

struct PlannerEvents {
  int available_robots = 0;
  int new_requests = 0;  // entered since the last plan
};

inline bool replan_trigger(const PlannerEvents& ev) {
  return ev.available_robots >= 1 && ev.new_requests >= 1;
}

}  // namespace harvest
