#pragma once

// Tick-based simulation of a picking crew with or without transport robots.
// Agents spend a continuous time budget each tick, so state changes happen at
// exact instants inside the tick; logged tray events carry the tick-end stamp
// the 10 Hz cart log would show.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "harvest/msa.hpp"
#include "harvest/sim/config.hpp"
#include "harvest/sim/coordination.hpp"
#include "harvest/sim/fsm.hpp"
#include "harvest/trace.hpp"

namespace harvest::sim {

struct TransitionEvent {
  std::int64_t tick = 0;
  double time = 0.0;
  bool robot = false;
  int agent_id = 0;
  std::string from;
  std::string to;
  std::string payload;
};

struct RobotPathSample {
  double time = 0.0;
  int robot_id = 0;
  Position position;
  std::string state;
};

/// How a filled tray left the furrow; parallel to SimResult::tray_records.
struct TrayService {
  bool served = false;
  int robot_id = -1;
  double wait = 0.0;        // from tray full to robot arrival
  double robot_travel = 0.0;  // station to full-tray location at robot speeds
};

struct Aggregate {
  std::size_t trays = 0;             // trays with a known non-productive time
  double mean_nonproductive = 0.0;   // s
  double efficiency = 0.0;           // mean per-tray productive ratio
};

struct SimCounters {
  int trays_filled = 0;
  int trays_delivered = 0;
  int served = 0;
  int rejected = 0;
  int cancelled = 0;
  int collisions = 0;
  int plans = 0;
  int exact_fallbacks = 0;
  double plan_seconds = 0.0;
  double end_time = 0.0;
};

struct SimResult {
  std::vector<TrayRecord> tray_records;
  std::vector<TrayService> service;
  std::vector<std::vector<CartLogRecord>> mass_traces;  // one per picker
  std::vector<RobotPathSample> robot_paths;
  std::vector<TransitionEvent> event_log;
  Aggregate aggregate;
  SimCounters counters;
};

inline Aggregate aggregate_trays(const std::vector<TrayRecord>& trays) {
  Aggregate a;
  double sum_fe = 0.0;
  double sum_eff = 0.0;
  for (const auto& t : trays) {
    if (!t.dt_fe || !t.efficiency) continue;
    ++a.trays;
    sum_fe += *t.dt_fe;
    sum_eff += *t.efficiency;
  }
  if (a.trays > 0) {
    a.mean_nonproductive = sum_fe / static_cast<double>(a.trays);
    a.efficiency = sum_eff / static_cast<double>(a.trays);
  }
  return a;
}

namespace detail {

struct Path {
  std::vector<Position> pts;
  std::size_t next = 1;

  bool done() const { return next >= pts.size(); }
  void set(std::vector<Position> p) {
    pts = std::move(p);
    next = 1;
  }
  void clear() {
    pts.clear();
    next = 1;
  }
  std::vector<Position> remaining(const Position& from) const {
    std::vector<Position> out{from};
    for (std::size_t i = next; i < pts.size(); ++i) {
      if (!(pts[i] == out.back())) out.push_back(pts[i]);
    }
    return out;
  }
};

// Moves along the path for at most `budget` seconds; returns the time used.
inline double advance(Position& pos, Path& path, double budget, const SpeedProfile& prof) {
  double used = 0.0;
  while (!path.done() && budget - used > 1e-12) {
    const Position target = path.pts[path.next];
    Position sub = target;
    if (pos.x == target.x && ((pos.y < 0.0 && target.y > 0.0) || (pos.y > 0.0 && target.y < 0.0))) {
      sub.y = 0.0;
    }
    const double len = std::abs(sub.x - pos.x) + std::abs(sub.y - pos.y);
    const double v = (pos.y + sub.y) / 2.0 > 0.0 ? prof.furrow_speed : prof.headland_speed;
    const double need = len / v;
    if (need <= budget - used) {
      pos = sub;
      used += need;
      if (sub == target) ++path.next;
    } else {
      const double d = v * (budget - used);
      if (sub.x != pos.x) {
        pos.x += sub.x > pos.x ? d : -d;
      } else {
        pos.y += sub.y > pos.y ? d : -d;
      }
      used = budget;
    }
  }
  return used;
}

inline double path_time(const Position& from, const Path& path, const SpeedProfile& prof) {
  Position p = from;
  Path copy = path;
  double total = 0.0;
  while (!copy.done()) total += advance(p, copy, 1e9, prof);
  return total;
}

inline bool heading_horizontal(const Position& pos, const Path& path, bool previous) {
  if (path.done()) return previous;
  const Position& t = path.pts[path.next];
  if (t.y == pos.y && t.x != pos.x) return true;
  if (t.x == pos.x && t.y != pos.y) return false;
  return previous;
}

// Heading after a move: toward the next waypoint, or along the last leg.
inline bool final_heading(const Position& pos, const Path& path, bool previous) {
  if (!path.done()) return heading_horizontal(pos, path, previous);
  const std::size_t n = path.pts.size();
  if (n < 2) return previous;
  const Position& a = path.pts[n - 2];
  const Position& b = path.pts[n - 1];
  if (a.y == b.y && a.x != b.x) return true;
  if (a.x == b.x && a.y != b.y) return false;
  return previous;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Tray times are reported at millisecond resolution, like the cart logs.
inline double stamp(double t) { return static_cast<double>(std::llround(t * 1000.0)) / 1000.0; }

}  // namespace detail

struct PickerAgent {
  int id = 0;
  PickerState state = PickerState::Start;
  Position position;
  Position cart;
  int furrow = -1;
  double fruit = 0.0;  // grams on the current tray, tare excluded
  bool tray_on_cart = false;
  double harvest_rate = 1.0;
  double pick_speed = 0.03;
  double walk_speed = 0.8;
  detail::Path path;
  double busy_until = 0.0;

  bool request_made = false;     // button pressed for the current tray
  bool request_active = false;   // button is lit
  bool rejected = false;
  std::optional<int> robot;
  double predicted_full_at = 0.0;
  double predicted_speed = 0.0;

  bool full = false;
  double full_at = 0.0;
  Position full_location;
  bool exchange_ready = false;   // robot has arrived
  double exchange_start = 0.0;

  // Tray bookkeeping.
  std::optional<TrayRecord> open_tray;
  std::vector<double> starts;
  std::vector<TrayRecord> trays;
  std::vector<TrayService> services;
};

struct RobotAgent {
  int id = 0;
  RobotState state = RobotState::Start;
  Position position;
  bool horizontal = false;
  bool docked = true;
  detail::Path path;
  double busy_until = 0.0;
  std::optional<int> picker;
  double dispatched_at = 0.0;
};

class World {
 public:
  World(const SimConfig& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {
    cfg_.validate();
    station_ = cfg_.field.station(cfg_.station_id).position;
    lane_out_ = station_.y + cfg_.lane_offset;
    lane_in_ = lane_out_ + cfg_.lane_gap;
    std::seed_seq params_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 1u};
    std::seed_seq noise_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 2u};
    std::mt19937_64 params_rng(params_seq);
    noise_rng_.seed(noise_seq);

    const auto& crew = cfg_.crew;
    auto draw = [&params_rng](const GaussianDist& d, double floor) {
      return std::max(d.sample_nonnegative(params_rng), floor);
    };
    furrow_status_.assign(static_cast<std::size_t>(cfg_.field.furrow_count), FurrowStatus::Free);
    pickers_.resize(static_cast<std::size_t>(cfg_.crew_size));
    for (int q = 0; q < cfg_.crew_size; ++q) {
      auto& p = pickers_[static_cast<std::size_t>(q)];
      p.id = q;
      p.position = station_;
      p.cart = station_;
      p.harvest_rate = draw(crew.harvest_rate, 0.1 * crew.harvest_rate.mean);
      p.pick_speed = draw(crew.pick_speed, 0.1 * crew.pick_speed.mean);
      p.walk_speed = crew.walk_speeds.empty() ? draw(crew.walk_speed, 0.1 * crew.walk_speed.mean)
                                              : crew.walk_speeds[static_cast<std::size_t>(q)];
    }
    robots_.resize(static_cast<std::size_t>(cfg_.robot_count));
    for (int m = 0; m < cfg_.robot_count; ++m) {
      auto& r = robots_[static_cast<std::size_t>(m)];
      r.id = m;
      r.position = station_;
    }
    if (cfg_.record_traces) result_.mass_traces.resize(pickers_.size());
  }

  double time() const { return now_; }
  std::int64_t ticks() const { return tick_; }
  const std::vector<PickerAgent>& pickers() const { return pickers_; }
  const std::vector<RobotAgent>& robots() const { return robots_; }
  const SimConfig& config() const { return cfg_; }
  const SimCounters& counters() const { return result_.counters; }
  const std::vector<TransitionEvent>& events() const { return result_.event_log; }

  bool finished() const {
    for (const auto& p : pickers_) {
      if (p.state != PickerState::Stop) return false;
    }
    for (const auto& r : robots_) {
      if (r.state != RobotState::Stop) return false;
    }
    return true;
  }

  /// Advance every agent by dt seconds. dt = 0 leaves the world unchanged.
  void step(double dt) {
    if (dt < 0.0 || !std::isfinite(dt)) throw Error("step requires a finite dt >= 0");
    if (dt == 0.0) return;
    const double t0 = now_;
    const double t1 = t0 + dt;
    ++tick_;
    dispatch_phase(t0);
    std::vector<Go> go(robots_.size(), Go::Proceed);
    if (cfg_.coordination) go = coordinate(t1 - t0);
    for (std::size_t i = 0; i < robots_.size(); ++i) update_robot(robots_[i], t0, t1, go[i] == Go::Stop);
    for (auto& p : pickers_) update_picker(p, t0, t1);
    now_ = t1;
    for (auto& p : pickers_) {
      if (carries_cart(p.state)) p.cart = p.position;
    }
    record(t1);
    check_collisions();
  }

  /// Finalize tray records and aggregates. Call once, after the last step.
  SimResult take_result() {
    for (auto& p : pickers_) {
      for (std::size_t k = 0; k < p.trays.size(); ++k) {
        std::optional<double> next;
        if (k + 1 < p.starts.size()) next = p.starts[k + 1];
        close_tray(p.trays[k], next);
        result_.tray_records.push_back(p.trays[k]);
        result_.service.push_back(p.services[k]);
      }
    }
    result_.aggregate = aggregate_trays(result_.tray_records);
    result_.counters.end_time = now_;
    return std::move(result_);
  }

 private:
  enum class FurrowStatus { Free, Claimed, Harvested };

  static bool carries_cart(PickerState s) {
    switch (s) {
      case PickerState::TransportFullTrayFurrow:
      case PickerState::TransportFullTrayHeadland:
      case PickerState::IdleInQueue:
      case PickerState::EmptyTrayBackHeadland:
      case PickerState::EmptyTrayBackFurrow:
        return false;
      default:
        return true;
    }
  }

  // ---- transitions -------------------------------------------------------

  void log_event(bool robot, int id, std::string_view from, std::string_view to, double t,
                 std::string payload = {}) {
    result_.event_log.push_back({tick_, t, robot, id, std::string(from), std::string(to), std::move(payload)});
  }

  void set_state(PickerAgent& p, PickerState to, double t, std::string payload = {}) {
    if (!is_legal(p.state, to)) {
      throw std::logic_error("illegal picker transition " + std::string(name(p.state)) + " -> " +
                             std::string(name(to)));
    }
    log_event(false, p.id, name(p.state), name(to), t, std::move(payload));
    p.state = to;
  }

  void set_state(RobotAgent& r, RobotState to, double t, std::string payload = {}) {
    if (!is_legal(r.state, to)) {
      throw std::logic_error("illegal robot transition " + std::string(name(r.state)) + " -> " +
                             std::string(name(to)));
    }
    log_event(true, r.id, name(r.state), name(to), t, std::move(payload));
    r.state = to;
  }

  // ---- routing -----------------------------------------------------------

  std::vector<Position> robot_route(const Position& from, const Position& to, double lane) const {
    std::vector<Position> pts{from};
    auto push = [&pts](Position p) {
      if (!(pts.back() == p)) pts.push_back(p);
    };
    if (from.x != to.x) {
      push({from.x, lane});
      push({to.x, lane});
    }
    push(to);
    return pts;
  }

  // Short of the furrow mouth a robot is still on its way out. It carries on
  // to the mouth and returns on the inbound lane like everyone else.
  std::vector<Position> recall_route(const RobotAgent& r) const {
    if (r.docked || r.position.y >= 0.0) return robot_route(r.position, station_, lane_in_);
    std::vector<Position> pts{r.position};
    for (std::size_t k = r.path.next; k < r.path.pts.size(); ++k) {
      Position b = r.path.pts[k];
      if (b.y >= 0.0) {
        b.y = 0.0;
        if (!(pts.back() == b)) pts.push_back(b);
        break;
      }
      if (!(pts.back() == b)) pts.push_back(b);
    }
    auto back = robot_route(pts.back(), station_, lane_in_);
    pts.insert(pts.end(), back.begin() + 1, back.end());
    return pts;
  }

  Position furrow_entry(int furrow) const { return {cfg_.field.furrow_x(furrow), 0.0}; }
  Position furrow_top(int furrow) const { return {cfg_.field.furrow_x(furrow), cfg_.field.furrow_length}; }

  int choose_furrow(double from_x) const {
    const int n = cfg_.field.furrow_count;
    auto spaced = [&](int j) {
      for (int k = std::max(0, j - cfg_.picker_spacing + 1); k <= std::min(n - 1, j + cfg_.picker_spacing - 1); ++k) {
        if (k != j && furrow_status_[static_cast<std::size_t>(k)] == FurrowStatus::Claimed) return false;
      }
      return true;
    };
    for (int pass = 0; pass < 2; ++pass) {
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        if (furrow_status_[static_cast<std::size_t>(j)] != FurrowStatus::Free) continue;
        if (pass == 0 && !spaced(j)) continue;
        const double d = std::abs(cfg_.field.furrow_x(j) - from_x);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (best >= 0) return best;
    }
    return -1;
  }

  void claim(PickerAgent& p, int furrow) {
    p.furrow = furrow;
    furrow_status_[static_cast<std::size_t>(furrow)] = FurrowStatus::Claimed;
  }

  void finish_furrow(PickerAgent& p) {
    if (p.furrow >= 0) furrow_status_[static_cast<std::size_t>(p.furrow)] = FurrowStatus::Harvested;
  }

  // ---- tray bookkeeping ----------------------------------------------------

  void place_tray(PickerAgent& p, double t1) {
    p.tray_on_cart = true;
    p.fruit = 0.0;
    p.full = false;
    p.request_made = false;
    p.request_active = false;
    p.rejected = false;
    p.robot.reset();
    p.exchange_ready = false;
    TrayRecord rec;
    rec.picker_id = p.id;
    rec.t_start = detail::stamp(t1);
    p.starts.push_back(rec.t_start);
    p.open_tray = rec;
  }

  void press_button(PickerAgent& p, double tau, double t1) {
    p.request_made = true;
    p.request_active = true;
    p.rejected = false;
    if (p.open_tray && !p.open_tray->request_time) p.open_tray->request_time = detail::stamp(t1);
    if (cfg_.mode != Mode::Msa) return;
    const auto& noise = cfg_.prediction_noise;
    const double cap = cfg_.fruit_capacity();
    const double remaining = (cap - p.fruit) / p.harvest_rate;
    const double tray_time = cap / p.harvest_rate;
    double pred = remaining;
    double speed = p.pick_speed;
    if (noise.bias_fraction > 0.0) {
      std::uniform_real_distribution<double> bias(-noise.bias_fraction, noise.bias_fraction);
      pred += bias(noise_rng_) * tray_time;
      speed *= 1.0 + bias(noise_rng_);
    }
    if (noise.time_std > 0.0) pred += std::normal_distribution<double>(0.0, noise.time_std)(noise_rng_);
    if (noise.speed_std > 0.0) speed += std::normal_distribution<double>(0.0, noise.speed_std)(noise_rng_);
    p.predicted_full_at = tau + std::max(pred, 0.0);
    p.predicted_speed = std::max(speed, 0.0);
    ++new_requests_;
  }

  // Drop an outstanding request, recalling any robot already on its way.
  void cancel_request(PickerAgent& p, double tau) {
    if (p.robot) {
      auto& r = robots_[static_cast<std::size_t>(*p.robot)];
      r.picker.reset();
      r.path.set(recall_route(r));
      set_state(r, RobotState::EmptyTrayBack, tau, "picker " + std::to_string(p.id) + " left furrow");
      ++result_.counters.cancelled;
    }
    p.robot.reset();
    p.request_active = false;
    p.request_made = false;
    p.rejected = false;
  }

  void tray_full(PickerAgent& p, double tau, double t1) {
    p.fruit = cfg_.fruit_capacity();
    p.full = true;
    p.full_at = tau;
    p.full_location = p.position;
    p.tray_on_cart = false;
    ++result_.counters.trays_filled;
    if (p.open_tray) {
      p.open_tray->t_end = detail::stamp(t1);
      p.open_tray->full_location = p.position;
      p.trays.push_back(*p.open_tray);
      TrayService svc;
      svc.robot_travel = travel_time(station_, p.position, cfg_.consts.robot_profile);
      p.services.push_back(svc);
      p.open_tray.reset();
    }
    const std::string payload = "tray " + std::to_string(p.trays.size());
    const bool unrequested = cfg_.mode == Mode::Msa && !p.request_active;
    if (cfg_.mode == Mode::Manual || cfg_.robot_count == 0 || p.rejected || unrequested) {
      p.request_active = false;
      start_self_transport(p, tau, payload);
      return;
    }
    if (cfg_.mode == Mode::Reactive) {
      p.request_active = true;
      if (!p.trays.back().request_time) p.trays.back().request_time = detail::stamp(t1);
    }
    set_state(p, PickerState::WaitingForRobot, tau, payload);
  }

  void start_self_transport(PickerAgent& p, double tau, std::string payload = {}) {
    p.path.set({p.position, furrow_entry(p.furrow)});
    set_state(p, PickerState::TransportFullTrayFurrow, tau, std::move(payload));
  }

  // After the full tray is gone and an empty one is in hand at `tau`.
  void resume_after_exchange(PickerAgent& p, double tau, double t1) {
    if (p.full_location.y > 0.0) {
      // Back to picking at the cart: the exchange left the picker there.
      place_tray(p, t1);
      set_state(p, PickerState::Picking, tau);
      return;
    }
    relocate_with_empty_tray(p, tau, t1);
  }

  void relocate_with_empty_tray(PickerAgent& p, double tau, double t1) {
    finish_furrow(p);
    const int next = choose_furrow(p.position.x);
    if (next < 0) {
      p.tray_on_cart = false;
      set_state(p, PickerState::Stop, tau, "no furrow left");
      return;
    }
    claim(p, next);
    place_tray(p, t1);
    p.path.set(path_waypoints(p.position, furrow_entry(next)));
    set_state(p, PickerState::WalkEmptyTrayHeadland, tau, "furrow " + std::to_string(next));
  }

  // ---- picker --------------------------------------------------------------

  void update_picker(PickerAgent& p, double t0, double t1) {
    double tau = t0;
    const SpeedProfile walk = SpeedProfile::uniform(p.walk_speed);
    for (int guard = 0; guard < 64 && tau < t1; ++guard) {
      switch (p.state) {
        case PickerState::Start: {
          int furrow = p.id * cfg_.picker_spacing;
          if (furrow >= cfg_.field.furrow_count ||
              furrow_status_[static_cast<std::size_t>(furrow)] != FurrowStatus::Free) {
            furrow = choose_furrow(station_.x);
          }
          if (furrow < 0) {
            set_state(p, PickerState::WalkEmptyTrayHeadland, tau);
            p.path.clear();
            p.furrow = -1;
            break;
          }
          claim(p, furrow);
          p.path.set(path_waypoints(p.position, furrow_entry(furrow)));
          set_state(p, PickerState::WalkEmptyTrayHeadland, tau, "furrow " + std::to_string(furrow));
          break;
        }
        case PickerState::WalkEmptyTrayHeadland:
        case PickerState::WalkEmptyTrayFurrow:
        case PickerState::WalkPartlyFullTrayHeadland:
        case PickerState::WalkPartlyFullTrayFurrow:
        case PickerState::TransportFullTrayFurrow:
        case PickerState::TransportFullTrayHeadland:
        case PickerState::EmptyTrayBackHeadland:
        case PickerState::EmptyTrayBackFurrow: {
          tau += detail::advance(p.position, p.path, t1 - tau, walk);
          if (!p.path.done()) {
            tau = t1;
            break;
          }
          picker_arrived(p, tau, t1);
          break;
        }
        case PickerState::Picking:
          tau = picking(p, tau, t1);
          break;
        case PickerState::WaitingForRobot:
          if (p.exchange_ready) {
            const double start = std::max(tau, p.exchange_start);
            p.request_active = false;
            p.busy_until = start + cfg_.consts.load_time;
            set_state(p, PickerState::ExchangeTrays, start);
            tau = start;
          } else {
            tau = t1;
          }
          break;
        case PickerState::ExchangeTrays:
          if (p.busy_until <= t1) {
            tau = std::max(tau, p.busy_until);
            p.exchange_ready = false;
            resume_after_exchange(p, tau, t1);
          } else {
            tau = t1;
          }
          break;
        case PickerState::IdleInQueue:
          if (p.busy_until <= t1) {
            tau = std::max(tau, p.busy_until);
            ++result_.counters.trays_delivered;
            if (p.full_location.y > 0.0) {
              p.path.set(path_waypoints(p.position, furrow_entry(p.furrow)));
              set_state(p, PickerState::EmptyTrayBackHeadland, tau);
            } else {
              relocate_with_empty_tray(p, tau, t1);
            }
          } else {
            tau = t1;
          }
          break;
        case PickerState::Stop:
          tau = t1;
          break;
      }
    }
  }

  void picker_arrived(PickerAgent& p, double tau, double t1) {
    switch (p.state) {
      case PickerState::WalkEmptyTrayHeadland:
        if (p.furrow < 0) {
          set_state(p, PickerState::WalkEmptyTrayFurrow, tau);
          return;
        }
        p.path.set({p.position, furrow_top(p.furrow)});
        set_state(p, PickerState::WalkEmptyTrayFurrow, tau);
        return;
      case PickerState::WalkEmptyTrayFurrow:
        if (p.furrow < 0) {
          // More pickers than furrows: nothing to do.
          set_state(p, PickerState::Picking, tau);
          return;
        }
        if (!p.tray_on_cart) place_tray(p, t1);
        set_state(p, PickerState::Picking, tau);
        return;
      case PickerState::WalkPartlyFullTrayHeadland:
        p.path.set({p.position, furrow_top(p.furrow)});
        set_state(p, PickerState::WalkPartlyFullTrayFurrow, tau);
        return;
      case PickerState::WalkPartlyFullTrayFurrow:
        set_state(p, PickerState::Picking, tau);
        return;
      case PickerState::TransportFullTrayFurrow:
        p.path.set(path_waypoints(p.position, station_));
        set_state(p, PickerState::TransportFullTrayHeadland, tau);
        return;
      case PickerState::TransportFullTrayHeadland: {
        const double start = std::max(tau, station_free_at_);
        p.busy_until = start + cfg_.consts.unload_time;
        station_free_at_ = p.busy_until;
        set_state(p, PickerState::IdleInQueue, tau);
        return;
      }
      case PickerState::EmptyTrayBackHeadland:
        p.path.set({p.position, p.full_location});
        set_state(p, PickerState::EmptyTrayBackFurrow, tau);
        return;
      case PickerState::EmptyTrayBackFurrow:
        place_tray(p, t1);
        set_state(p, PickerState::Picking, tau);
        return;
      default:
        return;
    }
  }

  // Returns the instant up to which the picker has been advanced.
  double picking(PickerAgent& p, double tau, double t1) {
    if (p.furrow < 0) {
      set_state(p, PickerState::Stop, tau, "no furrow");
      return tau;
    }
    const double cap = cfg_.fruit_capacity();
    const double h = t1 - tau;
    const double r = p.harvest_rate;
    const double v = p.pick_speed;
    constexpr double inf = std::numeric_limits<double>::infinity();
    double e_press = inf;
    if (cfg_.mode == Mode::Msa && !p.request_made) {
      e_press = std::max(0.0, (cfg_.fr_threshold * cap - p.fruit) / r);
    }
    const double e_full = std::max(0.0, (cap - p.fruit) / r);
    const double e_end = std::max(0.0, p.position.y / v);
    const double e = std::min({e_press, e_full, e_end});
    if (e > h) {
      p.fruit += r * h;
      p.position.y = std::max(0.0, p.position.y - v * h);
      return t1;
    }
    p.fruit = std::min(cap, p.fruit + r * e);
    p.position.y = std::max(0.0, p.position.y - v * e);
    const double at = tau + e;
    if (e_press <= e_full && e_press <= e_end) {
      press_button(p, at, t1);
    } else if (e_full <= e_end) {
      tray_full(p, at, t1);
    } else {
      p.position.y = 0.0;
      furrow_exhausted(p, at);
    }
    return at;
  }

  void furrow_exhausted(PickerAgent& p, double tau) {
    finish_furrow(p);
    if (p.request_active || p.robot) cancel_request(p, tau);
    const int next = choose_furrow(p.position.x);
    if (next < 0) {
      set_state(p, PickerState::Stop, tau, "no furrow left");
      return;
    }
    claim(p, next);
    p.path.set(path_waypoints(p.position, furrow_entry(next)));
    set_state(p, PickerState::WalkPartlyFullTrayHeadland, tau, "furrow " + std::to_string(next));
  }

  // ---- robot ---------------------------------------------------------------

  // The stub down to the station and the inbound lane around its corner are
  // one lane wide: robots arriving from both sides, or arriving and leaving,
  // could meet head on there. One robot at a time may occupy this area.
  Rect station_zone() const {
    const double l = cfg_.footprint.length;
    return {station_.x - l, station_.x + l, station_.y - l, lane_in_ + l / 2.0};
  }

  // Footprint `o` will have right after turning at its next waypoint, when
  // that waypoint is within one robot length and is a turn.
  std::optional<Rect> turn_footprint(const RobotAgent& o) const {
    const auto& pts = o.path.pts;
    const std::size_t k = o.path.next;
    if (o.docked || k + 1 >= pts.size()) return std::nullopt;
    const Position& c = pts[k];
    if (std::hypot(o.position.x - c.x, o.position.y - c.y) > cfg_.footprint.length) return std::nullopt;
    const bool before = detail::heading_horizontal(o.position, o.path, o.horizontal);
    detail::Path after;
    after.pts = {c, pts[k + 1]};
    const bool turned = detail::heading_horizontal(c, after, before);
    if (turned == before) return std::nullopt;
    return cfg_.footprint.at(c, turned);
  }

  // Whether moving robot `o` cannot take its next step because of `body`.
  bool held_up_by(const RobotAgent& o, const Rect& body) const {
    if (!moving(o.state) || o.path.done()) return false;
    if (const auto turn = turn_footprint(o); turn && turn->overlaps(body)) return true;
    Position pos = o.position;
    detail::Path path = o.path;
    detail::advance(pos, path, cfg_.timestep, cfg_.consts.robot_profile);
    return cfg_.footprint.at(pos, detail::final_heading(pos, path, o.horizontal)).overlaps(body);
  }

  // A robot close to a turn claims the footprint it will have after turning,
  // so nobody pulls up alongside a robot that is merging into a lane.
  std::optional<Rect> corner_claim(const RobotAgent& o) const {
    const auto& pts = o.path.pts;
    const std::size_t k = o.path.next;
    if (o.docked || k + 1 >= pts.size()) return std::nullopt;
    const Position& c = pts[k];
    if (std::hypot(o.position.x - c.x, o.position.y - c.y) > cfg_.footprint.length) return std::nullopt;
    const bool before = detail::heading_horizontal(o.position, o.path, o.horizontal);
    detail::Path after;
    after.pts = {c, pts[k + 1]};
    const bool turned = detail::heading_horizontal(c, after, before);
    if (turned == before) return std::nullopt;
    // Waiting to go up an occupied furrow: the robot coming down has the way.
    if (!turned && pts[k + 1].y > c.y && c.y <= lane_out_ + 1e-9 && furrow_occupant(c.x, o.id)) return std::nullopt;
    // Extend far enough along the new leg to clear the other lane.
    const Position& n = pts[k + 1];
    const double leg = std::hypot(n.x - c.x, n.y - c.y);
    const double ext = std::min(leg, std::abs(lane_in_ - lane_out_) + cfg_.footprint.length);
    const Position far{c.x + (n.x - c.x) / leg * ext, c.y + (n.y - c.y) / leg * ext};
    const Rect a = cfg_.footprint.at(c, turned);
    // No claim while someone stands where the robot would turn.
    for (const auto& other : robots_) {
      if (other.id != o.id && !other.docked && cfg_.footprint.at(other.position, other.horizontal).overlaps(a)) {
        return std::nullopt;
      }
    }
    const Rect b = cfg_.footprint.at(far, turned);
    return Rect{std::min(a.xmin, b.xmin), std::max(a.xmax, b.xmax), std::min(a.ymin, b.ymin), std::max(a.ymax, b.ymax)};
  }

  // Furrows are one robot wide: the robot, other than `self`, in furrow
  // column x anywhere above the outbound lane.
  std::optional<std::size_t> furrow_occupant(double x, int self) const {
    for (std::size_t i = 0; i < robots_.size(); ++i) {
      const auto& o = robots_[i];
      if (o.id == self || o.docked || std::abs(o.position.x - x) > 1e-9) continue;
      if (o.position.y > lane_out_ + 1e-9) return i;
    }
    return std::nullopt;
  }

  // A robot below the inbound lane that will drive up a furrow claims its
  // crossing of the inbound lane until it has crossed. No claim is made while
  // the furrow is occupied, since the robot cannot start up it anyway.
  std::optional<Rect> crossing_claim(const RobotAgent& o) const {
    if (o.position.y >= lane_in_) return std::nullopt;
    const auto& pts = o.path.pts;
    Position a = o.position;
    for (std::size_t k = o.path.next; k < pts.size(); ++k) {
      const Position& b = pts[k];
      if (a.x == b.x && a.y < lane_in_ && b.y > lane_in_) {
        if (o.position.y <= lane_out_ + 1e-9) {
          // Still on the outbound lane: claim only on reaching the turn, and
          // only if the robot could actually turn and go up.
          if (std::hypot(o.position.x - a.x, o.position.y - a.y) > cfg_.footprint.length) return std::nullopt;
          if (furrow_occupant(a.x, o.id)) return std::nullopt;
          const Rect turn = cfg_.footprint.at(a, false);
          for (const auto& other : robots_) {
            if (other.id != o.id && !other.docked &&
                cfg_.footprint.at(other.position, other.horizontal).overlaps(turn)) {
              return std::nullopt;
            }
          }
        }
        const Position lo{a.x, std::max(a.y, lane_out_)};
        const Position hi{a.x, std::min(b.y, lane_in_ + cfg_.footprint.length)};
        Rect c = cfg_.footprint.at(lo, false).hull(cfg_.footprint.at(hi, false));
        c.ymin = std::max(c.ymin, lane_out_ + cfg_.footprint.width / 2.0);  // outbound traffic passes below
        return c;
      }
      a = b;
    }
    return std::nullopt;
  }

  // Indices of the robots that prevent `r` from moving to `proposed`.
  std::vector<std::size_t> blockers(const RobotAgent& r, const Position& proposed, bool horizontal) const {
    std::vector<std::size_t> out;
    if (!cfg_.coordination || proposed == station_) return out;  // docking is always allowed
    const Rect zone = station_zone();
    const Rect mine = cfg_.footprint.at(proposed, horizontal);
    const Rect here = cfg_.footprint.at(r.position, r.horizontal);
    const bool entering = mine.overlaps(zone) && (r.docked || !here.overlaps(zone));
    const auto mine_cross = crossing_claim(r);
    std::vector<Rect> my_claims;
    if (!r.docked) {
      if (const auto c = corner_claim(r)) my_claims.push_back(*c);
      if (mine_cross) my_claims.push_back(*mine_cross);
    }
    // Nobody turns into a robot already beside the corner.
    const auto my_turn = turn_footprint(r);
    // A crossing already under way wins; other conflicting claims go to the lower id.
    auto underway = [&](const RobotAgent& o) { return !o.horizontal && o.position.y > lane_out_ + 1e-9; };
    const bool committed = mine_cross && underway(r);
    auto respects = [&](const RobotAgent& o, const std::optional<Rect>& c, bool crossing) {
      if (!c || !mine.overlaps(*c) || here.overlaps(*c)) return false;
      if (crossing && underway(o)) return true;
      if (committed) return false;
      if (r.id < o.id) {
        for (const auto& m : my_claims) {
          if (m.overlaps(*c)) return false;
        }
      }
      return true;
    };
    if (!horizontal && r.position.y <= lane_out_ + 1e-9 && proposed.y > lane_out_ + 1e-9) {
      if (const auto occupant = furrow_occupant(proposed.x, r.id)) out.push_back(*occupant);
    }
    for (std::size_t i = 0; i < robots_.size(); ++i) {
      const auto& o = robots_[i];
      if (o.id == r.id || o.docked) continue;
      const Rect theirs = cfg_.footprint.at(o.position, o.horizontal);
      // The zone holder may be stuck behind r; r then goes first.
      if ((entering && theirs.overlaps(zone) && !held_up_by(o, here)) || mine.overlaps(theirs) ||
          (my_turn && theirs.overlaps(*my_turn)) || respects(o, corner_claim(o), false) ||
          respects(o, crossing_claim(o), true) || (r.docked && mine_cross && theirs.overlaps(*mine_cross))) {
        out.push_back(i);
      }
    }
    return out;
  }

  bool blocked(const RobotAgent& r, const Position& proposed, bool horizontal) const {
    return !blockers(r, proposed, horizontal).empty();
  }

  static bool moving(RobotState s) {
    return s == RobotState::TranspEmptyTrayToDispatchLocation || s == RobotState::DriveToFullTrayLocation ||
           s == RobotState::TranspFullTrayBack || s == RobotState::EmptyTrayBack;
  }

  void update_robot(RobotAgent& r, double t0, double t1, bool stopped) {
    double tau = t0;
    for (int guard = 0; guard < 16 && tau < t1; ++guard) {
      switch (r.state) {
        case RobotState::Start:
          set_state(r, RobotState::Available, tau);
          break;
        case RobotState::Available:
          if (all_pickers_stopped()) set_state(r, RobotState::Stop, tau);
          tau = t1;
          break;
        case RobotState::TranspEmptyTrayToDispatchLocation:
        case RobotState::DriveToFullTrayLocation:
        case RobotState::TranspFullTrayBack:
        case RobotState::EmptyTrayBack: {
          if (stopped) {
            tau = t1;
            break;
          }
          Position pos = r.position;
          detail::Path path = r.path;
          const double used = detail::advance(pos, path, t1 - tau, cfg_.consts.robot_profile);
          const bool horiz = detail::final_heading(pos, path, r.horizontal);
          if (!(pos == r.position) && blocked(r, pos, horiz)) {
            tau = t1;
            break;
          }
          if (!(pos == r.position)) r.docked = false;
          r.position = pos;
          r.path = path;
          r.horizontal = horiz;
          tau += used;
          if (!r.path.done()) {
            tau = t1;
            break;
          }
          robot_arrived(r, tau);
          break;
        }
        case RobotState::WaitAtDispatchLocation: {
          const auto& p = pickers_[static_cast<std::size_t>(*r.picker)];
          if (p.full) {
            r.path.set(robot_route(r.position, p.full_location, lane_out_));
            set_state(r, RobotState::DriveToFullTrayLocation, tau);
          } else {
            tau = t1;
          }
          break;
        }
        case RobotState::ExchangeTrays:
          if (r.busy_until <= t1) {
            tau = std::max(tau, r.busy_until);
            r.picker.reset();
            r.path.set(robot_route(r.position, station_, lane_in_));
            set_state(r, RobotState::TranspFullTrayBack, tau);
          } else {
            tau = t1;
          }
          break;
        case RobotState::IdleInQueue:
          if (r.busy_until <= t1) {
            tau = std::max(tau, r.busy_until);
            ++result_.counters.trays_delivered;
            set_state(r, RobotState::Available, tau);
          } else {
            tau = t1;
          }
          break;
        case RobotState::Stop:
          tau = t1;
          break;
      }
    }
  }

  void robot_arrived(RobotAgent& r, double tau) {
    switch (r.state) {
      case RobotState::TranspEmptyTrayToDispatchLocation: {
        const auto& p = pickers_[static_cast<std::size_t>(*r.picker)];
        if (p.full) {
          r.path.set(robot_route(r.position, p.full_location, lane_out_));
          set_state(r, RobotState::DriveToFullTrayLocation, tau);
        } else {
          set_state(r, RobotState::WaitAtDispatchLocation, tau);
        }
        return;
      }
      case RobotState::DriveToFullTrayLocation: {
        auto& p = pickers_[static_cast<std::size_t>(*r.picker)];
        r.busy_until = tau + cfg_.consts.load_time;
        p.exchange_ready = true;
        p.exchange_start = tau;
        auto& svc = p.services.back();
        svc.served = true;
        svc.robot_id = r.id;
        svc.wait = tau - p.full_at;
        ++result_.counters.served;
        set_state(r, RobotState::ExchangeTrays, tau, "picker " + std::to_string(p.id));
        return;
      }
      case RobotState::TranspFullTrayBack: {
        r.docked = true;
        const double start = std::max(tau, station_free_at_);
        r.busy_until = start + cfg_.consts.unload_time;
        station_free_at_ = r.busy_until;
        set_state(r, RobotState::IdleInQueue, tau);
        return;
      }
      case RobotState::EmptyTrayBack:
        r.docked = true;
        set_state(r, RobotState::Available, tau);
        return;
      default:
        return;
    }
  }

  bool all_pickers_stopped() const {
    return std::all_of(pickers_.begin(), pickers_.end(),
                       [](const PickerAgent& p) { return p.state == PickerState::Stop; });
  }

  std::vector<Go> coordinate(double dt) const {
    std::vector<RobotMotion> motions;
    std::vector<std::size_t> index;
    for (std::size_t i = 0; i < robots_.size(); ++i) {
      const auto& r = robots_[i];
      if (!moving(r.state) || r.path.done()) continue;
      motions.push_back({r.id, r.position, detail::heading_horizontal(r.position, r.path, r.horizontal),
                         r.path.remaining(r.position), cfg_.consts.robot_profile, r.docked});
      index.push_back(i);
    }
    std::vector<Go> out(robots_.size(), Go::Proceed);
    if (motions.size() < 2) return out;
    CoordinationParams params;
    params.margin = cfg_.coordination_margin;
    params.footprint = cfg_.footprint;
    const auto go = coordinate_headland(motions, params);
    const Rect zone = station_zone();
    for (std::size_t k = 0; k < go.size(); ++k) {
      const auto& r = robots_[index[k]];
      // Whoever holds the station zone must be able to clear it.
      const bool holder = !r.docked && cfg_.footprint.at(r.position, r.horizontal).overlaps(zone);
      out[index[k]] = holder ? Go::Proceed : go[k];
    }
    // A robot told to wait must not be the one physically holding up a robot
    // that was told to go; release such waits until nothing changes.
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t i = 0; i < robots_.size(); ++i) {
        const auto& r = robots_[i];
        if (out[i] == Go::Stop || !moving(r.state) || r.path.done()) continue;
        Position pos = r.position;
        detail::Path path = r.path;
        detail::advance(pos, path, dt, cfg_.consts.robot_profile);
        for (std::size_t b : blockers(r, pos, detail::final_heading(pos, path, r.horizontal))) {
          if (out[b] == Go::Stop) {
            out[b] = Go::Proceed;
            changed = true;
          }
        }
      }
    }
    return out;
  }

  // ---- dispatching ---------------------------------------------------------

  void dispatch_phase(double now) {
    if (cfg_.mode == Mode::Reactive) {
      reactive_dispatch(now);
    } else if (cfg_.mode == Mode::Msa) {
      msa_dispatch(now);
    }
  }

  void reject(PickerAgent& p, double now) {
    p.rejected = true;
    p.request_active = false;
    ++result_.counters.rejected;
    if (p.state == PickerState::WaitingForRobot) start_self_transport(p, now, "rejected");
  }

  void send_robot(RobotAgent& r, PickerAgent& p, const Position& goal, double now) {
    r.picker = p.id;
    r.dispatched_at = now;
    p.robot = r.id;
    if (p.full) {
      r.path.set(robot_route(r.position, p.full_location, lane_out_));
      set_state(r, RobotState::DriveToFullTrayLocation, now, "picker " + std::to_string(p.id));
    } else {
      r.path.set(robot_route(r.position, goal, lane_out_));
      set_state(r, RobotState::TranspEmptyTrayToDispatchLocation, now, "picker " + std::to_string(p.id));
    }
  }

  // Nearest available robot at the tray-full instant, otherwise the picker walks.
  void reactive_dispatch(double now) {
    for (auto& p : pickers_) {
      if (p.state != PickerState::WaitingForRobot || p.robot || p.rejected) continue;
      RobotAgent* best = nullptr;
      double best_d = std::numeric_limits<double>::infinity();
      for (auto& r : robots_) {
        if (r.state != RobotState::Available) continue;
        const double d = manhattan_distance(r.position, p.full_location);
        if (d < best_d) {
          best_d = d;
          best = &r;
        }
      }
      if (best) {
        send_robot(*best, p, p.full_location, now);
      } else {
        reject(p, now);
      }
    }
  }

  double robot_available_after(const RobotAgent& r, double now) const {
    const auto& prof = cfg_.consts.robot_profile;
    const double ul = cfg_.consts.unload_time;
    switch (r.state) {
      case RobotState::Start:
      case RobotState::Available:
        return 0.0;
      case RobotState::IdleInQueue:
        return std::max(0.0, r.busy_until - now);
      case RobotState::TranspFullTrayBack:
        return detail::path_time(r.position, r.path, prof) + ul;
      case RobotState::EmptyTrayBack:
        return detail::path_time(r.position, r.path, prof);
      case RobotState::ExchangeTrays:
        return std::max(0.0, r.busy_until - now) + travel_time(r.position, station_, prof) + ul;
      case RobotState::TranspEmptyTrayToDispatchLocation:
      case RobotState::WaitAtDispatchLocation:
      case RobotState::DriveToFullTrayLocation: {
        const auto& p = pickers_[static_cast<std::size_t>(*r.picker)];
        const double reach = detail::path_time(r.position, r.path, prof);
        const double full_in = p.full ? 0.0 : std::max(0.0, p.predicted_full_at - now);
        const Position at = p.full ? p.full_location : r.path.done() ? r.position : r.path.pts.back();
        return std::max(reach, full_in) + cfg_.consts.load_time + travel_time(at, station_, prof) + ul;
      }
      case RobotState::Stop:
        return std::numeric_limits<double>::infinity();
    }
    return 0.0;
  }

  void msa_dispatch(double now) {
    std::vector<LiveRequest> live;
    for (const auto& p : pickers_) {
      if (!p.request_active) continue;
      live.push_back({p.id, p.robot.has_value(), p.full, p.rejected});
    }
    std::vector<int> idle;
    for (const auto& r : robots_) {
      if (r.state == RobotState::Available) idle.push_back(r.id);
    }
    const PlannerEvents ev{static_cast<int>(idle.size()), new_requests_};
    if (replan_trigger(ev)) {
      replan(now);
      new_requests_ = 0;
    }
    if (live.empty()) return;
    const auto cmds = dispatch_step(plan_, now, idle, live, DispatchOptions{cfg_.safety_stop});
    for (const auto& c : cmds) {
      if (const auto* rf = std::get_if<RejectFlag>(&c)) {
        reject(pickers_[static_cast<std::size_t>(rf->request_id)], now);
      } else {
        const auto& d = std::get<DispatchCommand>(c);
        send_robot(robots_[static_cast<std::size_t>(d.robot_id)], pickers_[static_cast<std::size_t>(d.request_id)],
                   d.goal, now);
      }
    }
  }

  void replan(double now) {
    std::vector<StochasticRequest> reqs;
    const auto& noise = cfg_.prediction_noise;
    for (const auto& p : pickers_) {
      if (!p.request_active || p.robot || p.full || p.rejected || p.state != PickerState::Picking) continue;
      StochasticRequest s;
      s.picker_id = p.id;
      s.issued_at = 0.0;
      s.location = p.position;
      s.furrow_index = p.furrow;
      s.full_time_dist = {std::max(0.0, p.predicted_full_at - now), noise.time_std};
      s.speed_dist = {p.predicted_speed, noise.speed_std};
      s.picker_walk_speed = p.walk_speed;
      reqs.push_back(s);
    }
    if (reqs.empty()) return;
    std::vector<RobotAvail> avail;
    for (const auto& r : robots_) {
      const double a = robot_available_after(r, now);
      if (std::isfinite(a)) avail.push_back({r.id, a});
    }
    MsaParams params = cfg_.msa;
    params.rng_seed = detail::splitmix64(seed_ ^ detail::splitmix64(static_cast<std::uint64_t>(plan_count_)));
    if (params.per_scenario_solver == SolverKind::Exact && reqs.size() > params.exact.max_requests) {
      params.per_scenario_solver = SolverKind::Srlpt;
      ++result_.counters.exact_fallbacks;
    }
    PlanContext ctx{&cfg_.field, cfg_.station_id, cfg_.consts};
    const auto started = std::chrono::steady_clock::now();
    plan_ = plan(reqs, avail, params, ctx, now);
    result_.counters.plan_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    ++plan_count_;
    ++result_.counters.plans;
  }

  // ---- recording -----------------------------------------------------------

  void record(double t) {
    if (!cfg_.record_traces) return;
    const std::int64_t ms = std::llround(t * 1000.0);
    for (std::size_t i = 0; i < pickers_.size(); ++i) {
      const auto& p = pickers_[i];
      const double mass = p.tray_on_cart ? cfg_.tray_tare + p.fruit : 0.0;
      result_.mass_traces[i].push_back({ms, p.cart.x, p.cart.y, mass, p.request_active ? 1 : 0});
    }
    for (const auto& r : robots_) {
      result_.robot_paths.push_back({t, r.id, r.position, std::string(name(r.state))});
    }
  }

  void check_collisions() {
    for (std::size_t i = 0; i < robots_.size(); ++i) {
      if (robots_[i].docked) continue;
      const Rect a = cfg_.footprint.at(robots_[i].position, robots_[i].horizontal);
      for (std::size_t j = i + 1; j < robots_.size(); ++j) {
        if (robots_[j].docked) continue;
        if (a.overlaps(cfg_.footprint.at(robots_[j].position, robots_[j].horizontal))) {
          ++result_.counters.collisions;
        }
      }
    }
  }

  SimConfig cfg_;
  std::uint64_t seed_ = 0;
  Position station_;
  double lane_out_ = 0.0;
  double lane_in_ = 0.0;
  std::mt19937_64 noise_rng_;
  std::vector<PickerAgent> pickers_;
  std::vector<RobotAgent> robots_;
  std::vector<FurrowStatus> furrow_status_;
  double station_free_at_ = 0.0;
  double now_ = 0.0;
  std::int64_t tick_ = 0;
  int new_requests_ = 0;
  int plan_count_ = 0;
  ConsensusPlan plan_;
  SimResult result_;
};

/// Simulate until every picker and robot has stopped.
inline SimResult run(const SimConfig& cfg, std::uint64_t seed) {
  World world(cfg, seed);
  const std::int64_t max_ticks = static_cast<std::int64_t>(std::ceil(cfg.max_time / cfg.timestep));
  while (!world.finished()) {
    if (world.ticks() >= max_ticks) {
      throw Error("simulation did not finish within max_time = " + std::to_string(cfg.max_time) + " s");
    }
    world.step(cfg.timestep);
  }
  return world.take_result();
}

inline SimResult reactive_baseline(SimConfig cfg, std::uint64_t seed) {
  cfg.mode = Mode::Reactive;
  return run(cfg, seed);
}

}  // namespace harvest::sim
