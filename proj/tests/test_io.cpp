#include <gtest/gtest.h>

#include <sstream>

#include "harvest/io/config.hpp"
#include "harvest/io/csv.hpp"
#include "harvest/io/svg.hpp"

using namespace harvest;
using namespace harvest::io;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, EmptyObjectGivesDefaults) {
  const auto c = parse_config("{}");
  EXPECT_EQ(c.sim.crew_size, 25);
  EXPECT_EQ(c.sim.robot_count, 8);
  EXPECT_EQ(c.runs, 100);
  EXPECT_EQ(c.series, std::vector<std::string>{"msa-srlpt"});
}

TEST(Config, ReadsNestedValues) {
  const auto c = parse_config(R"({
    "seed": 7,
    "crew_size": 6,
    "robot_count": 2,
    "mode": "reactive",
    "msa": {"scenarios": 20, "solver": "exact"},
    "crew": {"walk_speeds": [0.7, 0.8, 0.9, 0.7, 0.8, 0.9]},
    "sweep": {"robots": [4, 6], "series": ["manual", "msa-exact"], "runs": 5}
  })");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.sim.crew_size, 6);
  EXPECT_EQ(c.sim.mode, sim::Mode::Reactive);
  EXPECT_EQ(c.sim.msa.num_scenarios, 20);
  EXPECT_EQ(c.sim.msa.per_scenario_solver, SolverKind::Exact);
  EXPECT_EQ(c.sim.crew.walk_speeds.size(), 6u);
  EXPECT_EQ(c.robots, (std::vector<int>{4, 6}));
  EXPECT_EQ(c.runs, 5);
}

TEST(Config, UnknownKeyReportsLine) {
  const auto msg = config_error("{\n  \"crew_size\": 3,\n  \"robots\": 4\n}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("robots"), std::string::npos) << msg;
  const auto nested = config_error("{\n\"msa\": {\n\"scenarioz\": 4}}");
  EXPECT_NE(nested.find("line 3"), std::string::npos) << nested;
}

TEST(Config, RejectsBadValues) {
  EXPECT_FALSE(config_error(R"({"crew_size": "many"})").empty());
  EXPECT_FALSE(config_error(R"({"mode": "teleport"})").empty());
  EXPECT_FALSE(config_error(R"({"fr_threshold": 1.5})").empty());
  EXPECT_FALSE(config_error(R"({"sweep": {"series": ["fast"]}})").empty());
  EXPECT_FALSE(config_error("{\"crew_size\": 3,").empty());
  EXPECT_FALSE(config_error(R"({"crew": {"walk_speeds": [0.8]}})").empty());
}

TEST(Series, Mapping) {
  sim::SimConfig c;
  apply_series(c, "manual");
  EXPECT_EQ(c.mode, sim::Mode::Manual);
  apply_series(c, "msa-exact");
  EXPECT_EQ(c.mode, sim::Mode::Msa);
  EXPECT_EQ(c.msa.per_scenario_solver, SolverKind::Exact);
  EXPECT_THROW(apply_series(c, "bogus"), ConfigError);
}

TEST(Csv, TrayRoundTrip) {
  TrayRecord a;
  a.picker_id = 2;
  a.t_start = 0.1;
  a.t_end = 549.3;
  a.request_time = 400.25;
  a.full_location = {2.6, 17.123456789};
  close_tray(a, 631.7);
  TrayRecord b = a;
  b.request_time.reset();
  close_tray(b, std::nullopt);
  std::stringstream ss;
  write_trays(ss, {a, b});
  const auto back = trays_from(parse_csv(ss, "mem"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].t_end, a.t_end);
  EXPECT_EQ(back[0].request_time, a.request_time);
  EXPECT_EQ(back[0].full_location.y, a.full_location.y);
  EXPECT_EQ(back[0].dt_fe, a.dt_fe);
  EXPECT_EQ(back[0].efficiency, a.efficiency);
  EXPECT_FALSE(back[1].request_time.has_value());
  EXPECT_FALSE(back[1].dt_fe.has_value());
}

TEST(Csv, CartLogRoundTrip) {
  std::vector<CartLogRecord> log{{0, 1.5, 2.25, 500, 0}, {100, 1.5, 2.3, 512.5, 1}};
  std::stringstream ss;
  write_cart_log(ss, log);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), kCartLogHeader);
  const auto back = cart_log_from(parse_csv(ss, "mem"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].timestamp_ms, 100);
  EXPECT_EQ(back[1].mass, 512.5);
  EXPECT_EQ(back[1].button, 1);
}

TEST(Csv, Errors) {
  std::stringstream ragged("a,b\n1,2\n3\n");
  try {
    parse_csv(ragged, "f.csv");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("f.csv:3"), std::string::npos) << e.what();
  }
  std::stringstream bad_number("timestamp_ms,x_m,y_m,filtered_mass_g,button_state\n0,1,2,heavy,0\n");
  EXPECT_THROW(cart_log_from(parse_csv(bad_number, "m")), DataError);
  std::stringstream missing("picker_id,t_start\n1,2\n");
  EXPECT_THROW(trays_from(parse_csv(missing, "m")), DataError);
}

TEST(Csv, SweepUnknownColumn) {
  std::stringstream ok(std::string(kSweepHeader) + "\nmsa-srlpt,robots,4,0,1,0.8,100,0.01\n");
  const auto rows = sweep_from(parse_csv(ok, "s"));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].series, "msa-srlpt");
  EXPECT_EQ(rows[0].value, 4.0);
  EXPECT_EQ(rows[0].efficiency, 0.8);
  std::stringstream extra(std::string(kSweepHeader) + ",colour\nmsa,robots,4,0,1,0.8,100,0,red\n");
  EXPECT_THROW(sweep_from(parse_csv(extra, "s")), DataError);
}

TEST(Svg, SummariesAndChart) {
  std::vector<SweepRow> rows;
  for (int run = 0; run < 4; ++run) {
    rows.push_back({"msa-srlpt", "robots", 4, run, 1, 0.80 + 0.01 * run, 100, 0});
    rows.push_back({"msa-srlpt", "robots", 8, run, 1, 0.90, 50, 0});
    rows.push_back({"manual", "robots", 4, run, 1, 0.70, 150, 0});
  }
  const auto series = summarize_sweep(rows, "efficiency");
  ASSERT_EQ(series.size(), 2u);
  const auto& msa = series[0].name == "msa-srlpt" ? series[0] : series[1];
  ASSERT_EQ(msa.points.size(), 2u);
  EXPECT_DOUBLE_EQ(msa.points[0].x, 4.0);
  EXPECT_NEAR(msa.points[0].mean, 0.815, 1e-12);
  EXPECT_LT(msa.points[0].lo, msa.points[0].mean);
  EXPECT_DOUBLE_EQ(msa.points[1].lo, 0.90);
  EXPECT_THROW(summarize_sweep(rows, "speed"), DataError);

  const auto svg = render_chart(series, "Efficiency <by> robots", "robots", "efficiency");
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("&lt;by&gt;"), std::string::npos);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_THROW(render_chart({}, "t", "x", "y"), DataError);
}
