#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "harvest/sim/monte_carlo.hpp"

using namespace harvest;
using namespace harvest::sim;

namespace {

SimConfig small(Mode mode, int pickers, int robots) {
  SimConfig c;
  c.field = FieldMap::with_central_station(12, 1.3, 20.0, 8.0);
  c.crew_size = pickers;
  c.robot_count = robots;
  c.mode = mode;
  return c;
}

std::set<std::pair<std::string, std::string>> edge_names(bool robot) {
  std::set<std::pair<std::string, std::string>> out;
  if (robot) {
    for (const auto& [a, b] : kRobotEdges) out.emplace(name(a), name(b));
  } else {
    for (const auto& [a, b] : kPickerEdges) out.emplace(name(a), name(b));
  }
  return out;
}

void expect_same_trays(const SimResult& a, const SimResult& b) {
  ASSERT_EQ(a.tray_records.size(), b.tray_records.size());
  for (std::size_t i = 0; i < a.tray_records.size(); ++i) {
    EXPECT_EQ(a.tray_records[i].picker_id, b.tray_records[i].picker_id);
    EXPECT_EQ(a.tray_records[i].t_start, b.tray_records[i].t_start);
    EXPECT_EQ(a.tray_records[i].t_end, b.tray_records[i].t_end);
    EXPECT_EQ(a.tray_records[i].dt_fe, b.tray_records[i].dt_fe);
  }
}

}  // namespace

TEST(Fsm, EdgeSets) {
  EXPECT_TRUE(is_legal(PickerState::Picking, PickerState::WaitingForRobot));
  EXPECT_TRUE(is_legal(RobotState::WaitAtDispatchLocation, RobotState::EmptyTrayBack));
  EXPECT_FALSE(is_legal(PickerState::Stop, PickerState::Picking));
  EXPECT_FALSE(is_legal(RobotState::Start, RobotState::ExchangeTrays));
}

TEST(Coordinate, DisjointPathsBothGo) {
  std::vector<RobotMotion> m{{0, {0, -1.5}, true, {{0, -1.5}, {3, -1.5}}},
                             {1, {20, 5}, false, {{20, 5}, {20, -1.5}}}};
  EXPECT_EQ(coordinate_headland(m), (std::vector<Go>{Go::Proceed, Go::Proceed}));
}

TEST(Coordinate, RobotInsideKeepsPriority) {
  // Robot 0 is already in the shared area; robot 1 comes down the furrow.
  std::vector<RobotMotion> m{{1, {5, 3}, false, {{5, 3}, {5, -1.5}}},
                             {0, {5, -1.5}, true, {{5, -1.5}, {15, -1.5}}}};
  EXPECT_EQ(coordinate_headland(m), (std::vector<Go>{Go::Stop, Go::Proceed}));
}

TEST(Coordinate, SeparatedByMoreThanMarginBothGo) {
  // Robot 0 clears x in [3.6, 6.4] by t = 16 s; robot 1 reaches the lane after ~33 s.
  std::vector<RobotMotion> m{{0, {0, -1.5}, true, {{0, -1.5}, {10, -1.5}}},
                             {1, {5, 40}, false, {{5, 40}, {5, -1.5}}}};
  EXPECT_EQ(coordinate_headland(m), (std::vector<Go>{Go::Proceed, Go::Proceed}));
  CoordinationParams wide;
  wide.margin = 25.0;
  EXPECT_EQ(coordinate_headland(m, wide), (std::vector<Go>{Go::Proceed, Go::Stop}));
}

TEST(World, ZeroStepChangesNothing) {
  World w(small(Mode::Msa, 3, 2), 1);
  for (int i = 0; i < 50; ++i) w.step(0.1);
  const double t = w.time();
  const auto ticks = w.ticks();
  const auto pickers = w.pickers();
  w.step(0.0);
  EXPECT_EQ(w.time(), t);
  EXPECT_EQ(w.ticks(), ticks);
  for (std::size_t i = 0; i < pickers.size(); ++i) {
    EXPECT_EQ(w.pickers()[i].position, pickers[i].position);
    EXPECT_EQ(w.pickers()[i].fruit, pickers[i].fruit);
  }
  EXPECT_THROW(w.step(-0.1), Error);
}

TEST(World, InvariantsAcrossModesAndSeeds) {
  const auto picker_edges = edge_names(false);
  const auto robot_edges = edge_names(true);
  for (auto mode : {Mode::Manual, Mode::Reactive, Mode::Msa}) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      auto cfg = small(mode, 4, 2);
      const auto res = run(cfg, seed);
      SCOPED_TRACE(std::string(to_string(mode)) + " seed " + std::to_string(seed));
      for (const auto& e : res.event_log) {
        EXPECT_TRUE((e.robot ? robot_edges : picker_edges).count({e.from, e.to})) << e.from << " -> " << e.to;
      }
      EXPECT_EQ(res.counters.trays_filled, res.counters.trays_delivered);
      EXPECT_EQ(static_cast<int>(res.tray_records.size()), res.counters.trays_filled);
      EXPECT_EQ(res.counters.collisions, 0);
      std::map<int, std::vector<TrayRecord>> by_picker;
      for (const auto& t : res.tray_records) by_picker[t.picker_id].push_back(t);
      for (const auto& [id, trays] : by_picker) {
        for (std::size_t i = 0; i < trays.size(); ++i) {
          EXPECT_GT(trays[i].t_end, trays[i].t_start);
          EXPECT_DOUBLE_EQ(trays[i].dt_ef, trays[i].t_end - trays[i].t_start);
          // The last full tray is closed too when the picker started another one.
          if (i + 1 < trays.size()) {
            ASSERT_TRUE(trays[i].dt_fe.has_value());
            EXPECT_NEAR(trays[i].dt_ef + *trays[i].dt_fe, trays[i + 1].t_start - trays[i].t_start, 1e-9);
          }
          if (trays[i].dt_fe) {
            EXPECT_GE(*trays[i].dt_fe, 0.0);
            EXPECT_GT(*trays[i].efficiency, 0.0);
            EXPECT_LE(*trays[i].efficiency, 1.0);
          }
        }
      }
    }
  }
}

TEST(World, Deterministic) {
  const auto cfg = small(Mode::Msa, 4, 2);
  const auto a = run(cfg, 9);
  const auto b = run(cfg, 9);
  expect_same_trays(a, b);
  EXPECT_EQ(a.event_log.size(), b.event_log.size());
  EXPECT_EQ(a.counters.end_time, b.counters.end_time);
}

TEST(World, ManualSinglePickerClosedForm) {
  auto cfg = small(Mode::Manual, 1, 0);
  cfg.crew.walk_speeds = {0.8};
  const auto res = run(cfg, 2);
  const Station station = cfg.field.station(0);
  int checked = 0;
  for (const auto& t : res.tray_records) {
    if (!t.dt_fe) continue;
    const double expected = 2.0 * manhattan_distance(station, t.full_location) / 0.8 + cfg.consts.unload_time;
    EXPECT_NEAR(*t.dt_fe, expected, cfg.timestep + 1e-9);
    ++checked;
  }
  EXPECT_GT(checked, 2);
}

TEST(World, FreeRobotsServeWithoutWaiting) {
  auto cfg = small(Mode::Msa, 2, 4);
  cfg.prediction_noise = PredictionNoise::none();
  const auto res = run(cfg, 3);
  int served = 0;
  for (std::size_t i = 0; i < res.tray_records.size(); ++i) {
    const auto& t = res.tray_records[i];
    if (!res.service[i].served || !t.dt_fe) continue;
    ++served;
    // The robot waits safety_stop short of the tray and covers that last stretch once it is full.
    const double last_leg = std::min(cfg.safety_stop, t.full_location.y) / cfg.consts.robot_profile.furrow_speed;
    EXPECT_NEAR(res.service[i].wait, last_leg, 2 * cfg.timestep);
    EXPECT_NEAR(*t.dt_fe, cfg.consts.load_time + last_leg, 2 * cfg.timestep);
  }
  EXPECT_GT(served, 0);
}

TEST(World, ReactiveWaitsAtLeastTheRobotTrip) {
  const auto cfg = small(Mode::Reactive, 3, 3);
  const auto res = run(cfg, 4);
  int served = 0;
  for (const auto& s : res.service) {
    if (!s.served) continue;
    ++served;
    EXPECT_GE(s.wait, s.robot_travel - cfg.timestep);
  }
  EXPECT_GT(served, 0);
}

TEST(World, NoRobotsDegeneratesToManual) {
  const auto manual = run(small(Mode::Manual, 3, 0), 6);
  expect_same_trays(run(small(Mode::Reactive, 3, 0), 6), manual);
  expect_same_trays(run(small(Mode::Msa, 3, 0), 6), manual);
}

TEST(World, MaxTimeGuard) {
  auto cfg = small(Mode::Manual, 2, 0);
  cfg.max_time = 50.0;
  EXPECT_THROW(run(cfg, 1), Error);
}

TEST(MonteCarlo, SingleRunAggregateIsTheRun) {
  const auto cfg = small(Mode::Msa, 3, 2);
  const auto mc = monte_carlo(cfg, 1, 11, 1);
  ASSERT_EQ(mc.runs.size(), 1u);
  EXPECT_EQ(mc.efficiency_summary.mean, mc.runs[0].aggregate.efficiency);
  EXPECT_EQ(mc.efficiency_summary.ci95_low, mc.efficiency_summary.ci95_high);
  EXPECT_EQ(mc.nonproductive_summary.mean, mc.runs[0].aggregate.mean_nonproductive);
  EXPECT_THROW(monte_carlo(cfg, 0, 1), Error);
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResults) {
  auto cfg = small(Mode::Msa, 3, 2);
  cfg.record_traces = false;
  const auto a = monte_carlo(cfg, 4, 20, 1);
  const auto b = monte_carlo(cfg, 4, 20, 3);
  EXPECT_EQ(a.efficiency, b.efficiency);
  EXPECT_EQ(a.nonproductive, b.nonproductive);
}
