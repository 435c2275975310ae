#include <gtest/gtest.h>

#include "harvest/sim/world.hpp"
#include "harvest/trace.hpp"

using namespace harvest;

namespace {

// 10 Hz samples of mass(t) for t in [t0, t1).
void append(std::vector<CartLogRecord>& log, double t0, double t1, double m0, double m1, double y = 10.0) {
  for (std::int64_t ms = std::llround(t0 * 1000); ms < std::llround(t1 * 1000); ms += 100) {
    const double f = (static_cast<double>(ms) / 1000.0 - t0) / (t1 - t0);
    log.push_back({ms, 2.6, y, m0 + f * (m1 - m0), 0});
  }
}

const Station kStation{0, {0.0, 0.0}};

TrayRecord manual_tray(int id, double d, double dt_fe) {
  TrayRecord t;
  t.picker_id = id;
  t.t_start = 0;
  t.t_end = 540;
  t.full_location = {0.0, d};
  t.dt_ef = 540;
  t.dt_fe = dt_fe;
  return t;
}

}  // namespace

TEST(Detect, SyntheticRamp) {
  std::vector<CartLogRecord> log;
  append(log, 0, 600, 500, 4500);
  append(log, 600, 700, 0, 0);
  const auto trays = detect_tray_events(log, 3);
  ASSERT_EQ(trays.size(), 1u);
  EXPECT_EQ(trays[0].picker_id, 3);
  EXPECT_DOUBLE_EQ(trays[0].t_start, 0.0);
  EXPECT_DOUBLE_EQ(trays[0].t_end, 600.0);
  EXPECT_DOUBLE_EQ(trays[0].dt_ef, 600.0);
  EXPECT_FALSE(trays[0].dt_fe.has_value());
}

TEST(Detect, UnfinishedTrayStillClosesThePreviousOne) {
  std::vector<CartLogRecord> log;
  append(log, 0, 600, 500, 4500);
  append(log, 600, 630, 0, 0);
  append(log, 630, 700, 500, 1500);
  const auto trays = detect_tray_events(log);
  ASSERT_EQ(trays.size(), 1u);
  ASSERT_TRUE(trays[0].dt_fe.has_value());
  EXPECT_NEAR(*trays[0].dt_fe, 30.0, 1e-9);
}

TEST(Detect, TwoTraysGiveNonProductiveTime) {
  std::vector<CartLogRecord> log;
  append(log, 0, 500, 500, 4500, 20);
  append(log, 500, 580, 0, 0, 20);  // walking to the station without a tray
  append(log, 580, 1000, 500, 4400, 15);
  append(log, 1000, 1010, 0, 0);
  const auto trays = detect_tray_events(log);
  ASSERT_EQ(trays.size(), 2u);
  EXPECT_DOUBLE_EQ(trays[0].t_end, 500.0);
  EXPECT_DOUBLE_EQ(*trays[0].dt_fe, 80.0);
  EXPECT_DOUBLE_EQ(*trays[0].efficiency, 500.0 / 580.0);
  EXPECT_DOUBLE_EQ(trays[0].full_location.y, 20.0);
  EXPECT_DOUBLE_EQ(trays[1].t_start, 580.0);
  EXPECT_DOUBLE_EQ(trays[1].t_end, 1000.0);
}

TEST(Detect, FlatAndIncomplete) {
  std::vector<CartLogRecord> log;
  append(log, 0, 100, 0, 0);
  EXPECT_TRUE(detect_tray_events(log).empty());
  append(log, 100, 200, 500, 3900);  // never armed
  append(log, 200, 210, 0, 0);
  EXPECT_TRUE(detect_tray_events(log).empty());
  EXPECT_TRUE(detect_tray_events(std::vector<CartLogRecord>{}).empty());
}

TEST(Detect, NonMonotoneTimestamps) {
  std::vector<CartLogRecord> log{{100, 0, 0, 500, 0}, {50, 0, 0, 500, 0}};
  EXPECT_THROW(detect_tray_events(log), Error);
}

TEST(Detect, RequestTimeFromButton) {
  std::vector<CartLogRecord> log;
  append(log, 0, 600, 500, 4500);
  for (auto& r : log) r.button = r.timestamp_ms >= 420000 ? 1 : 0;
  append(log, 600, 610, 0, 0);
  const auto trays = detect_tray_events(log);
  ASSERT_EQ(trays.size(), 1u);
  ASSERT_TRUE(trays[0].request_time.has_value());
  EXPECT_DOUBLE_EQ(*trays[0].request_time, 420.0);
}

TEST(Detect, IdempotentUnderTrailingFlatSamples) {
  std::vector<CartLogRecord> log;
  append(log, 0, 500, 500, 4500);
  append(log, 500, 560, 0, 0);
  append(log, 560, 900, 500, 4500);
  append(log, 900, 910, 0, 0);
  const auto a = detect_tray_events(log);
  append(log, 910, 1500, 0, 0);
  const auto b = detect_tray_events(log);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].t_start, b[i].t_start);
    EXPECT_EQ(a[i].t_end, b[i].t_end);
    EXPECT_EQ(a[i].dt_fe, b[i].dt_fe);
  }
}

TEST(WalkSpeed, InvertsCycleTime) {
  std::vector<TrayRecord> trays{manual_tray(1, 30, 84.92), manual_tray(1, 30, 84.92)};
  const auto rep = estimate_walk_speeds(trays, kStation);
  ASSERT_EQ(rep.speeds.count(1), 1u);
  EXPECT_NEAR(rep.speeds.at(1).mean, 60.0 / 76.92, 1e-12);
  EXPECT_NEAR(rep.speeds.at(1).mean, 0.78, 0.001);
  EXPECT_EQ(rep.speeds.at(1).std, 0.0);
  EXPECT_EQ(rep.speeds.at(1).n, 2u);
  EXPECT_TRUE(rep.warnings.empty());
}

TEST(WalkSpeed, ExcludesDegenerateTrays) {
  std::vector<TrayRecord> trays{manual_tray(1, 30, 8.0), manual_tray(2, 10, 40), manual_tray(2, 12, 50)};
  const auto rep = estimate_walk_speeds(trays, kStation);
  EXPECT_EQ(rep.speeds.count(1), 0u);
  EXPECT_EQ(rep.speeds.at(2).n, 2u);
  EXPECT_EQ(rep.warnings.size(), 1u);
}

TEST(ManualBaseline, Arithmetic) {
  std::vector<TrayRecord> trays{manual_tray(1, 30, 0), manual_tray(1, 0, 0)};
  const auto est = estimate_manual_baseline(trays, {{1, 0.78}}, kStation);
  ASSERT_EQ(est.size(), 2u);
  EXPECT_NEAR(est[0].dt_fe_est, 60.0 / 0.78 + 8.0, 1e-9);
  EXPECT_NEAR(est[0].dt_fe_est, 84.92, 0.01);
  EXPECT_NEAR(est[0].efficiency_est, 540.0 / (540.0 + 60.0 / 0.78 + 8.0), 1e-12);
  EXPECT_NEAR(est[0].efficiency_est, 0.864, 0.001);
  EXPECT_DOUBLE_EQ(est[1].dt_fe_est, 8.0);
}

TEST(ManualBaseline, MissingSpeedListsPickers) {
  std::vector<TrayRecord> trays{manual_tray(4, 30, 0), manual_tray(7, 30, 0)};
  try {
    estimate_manual_baseline(trays, {{1, 0.8}}, kStation);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("4, 7"), std::string::npos) << e.what();
  }
}

namespace {

sim::SimConfig small_field(sim::Mode mode, int robots) {
  sim::SimConfig c;
  c.field = FieldMap::with_central_station(12, 1.3, 20.0, 8.0);
  c.crew_size = 3;
  c.robot_count = robots;
  c.mode = mode;
  return c;
}

}  // namespace

TEST(RoundTrip, SimulatorLogsRecoverTrays) {
  for (auto mode : {sim::Mode::Manual, sim::Mode::Msa}) {
    const auto res = sim::run(small_field(mode, 2), 5);
    ASSERT_EQ(res.mass_traces.size(), 3u);
    for (int q = 0; q < 3; ++q) {
      std::vector<TrayRecord> truth;
      for (const auto& t : res.tray_records) {
        if (t.picker_id == q) truth.push_back(t);
      }
      const auto got = detect_tray_events(res.mass_traces[static_cast<std::size_t>(q)], q);
      ASSERT_EQ(got.size(), truth.size()) << "picker " << q;
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_NEAR(got[i].dt_ef, truth[i].dt_ef, 0.1);
        EXPECT_EQ(got[i].dt_fe.has_value(), truth[i].dt_fe.has_value());
        if (got[i].dt_fe) {
          EXPECT_NEAR(*got[i].dt_fe, *truth[i].dt_fe, 0.1);
          // Tray identities recomputed from raw fields.
          EXPECT_DOUBLE_EQ(*got[i].efficiency, got[i].dt_ef / (got[i].dt_ef + *got[i].dt_fe));
        }
        EXPECT_DOUBLE_EQ(got[i].dt_ef, got[i].t_end - got[i].t_start);
      }
    }
  }
}
