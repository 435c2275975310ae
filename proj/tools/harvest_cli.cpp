// harvest: simulate, sweep, analyze, compare and plot.
//
// Exit codes: 0 ok, 2 usage or unreadable input, 3 malformed data.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "harvest/harvest.hpp"

namespace fs = std::filesystem;
using namespace harvest;

namespace {

constexpr int kUsage = 2;
constexpr int kData = 3;

struct UsageError : Error {
  using Error::Error;
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

io::ExperimentConfig load(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("config not found: " + path);
  return io::load_config(path);
}

// ---- simulate -----------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::string out;
};

int simulate(const SimulateArgs& a) {
  auto exp = load(a.config);
  auto cfg = exp.sim;
  const std::uint64_t seed = a.seed.value_or(exp.seed);
  if (!a.mode.empty()) cfg.mode = sim::parse_mode(a.mode);
  cfg.record_traces = true;
  const fs::path dir = a.out.empty() ? fs::path(exp.output_dir) : fs::path(a.out);
  fs::create_directories(dir);
  const auto res = sim::run(cfg, seed);

  std::ostringstream trays;
  io::write_sim_trays(trays, res);
  write_file(dir / "trays.csv", trays.str());
  for (std::size_t i = 0; i < res.mass_traces.size(); ++i) {
    std::ostringstream log;
    io::write_cart_log(log, res.mass_traces[i]);
    write_file(dir / ("cart_" + std::to_string(i) + ".csv"), log.str());
  }
  std::ostringstream events;
  io::write_event_log(events, res.event_log);
  write_file(dir / "events.log", events.str());
  std::ostringstream summary;
  io::write_summary(summary, res);
  write_file(dir / "summary.csv", summary.str());

  std::cout << "mode " << sim::to_string(cfg.mode) << ", seed " << seed << ": " << res.aggregate.trays
            << " trays, efficiency " << res.aggregate.efficiency << ", mean non-productive "
            << res.aggregate.mean_nonproductive << " s\n"
            << "wrote " << dir.string() << '\n';
  return 0;
}

// ---- sweep --------------------------------------------------------------------

struct SweepArgs {
  std::string config;
  std::string axis;
  std::optional<int> runs;
  std::vector<std::string> series;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
  unsigned threads = 0;
};

// "4..12" or "1,10,20".
std::vector<int> parse_values(const std::string& text) {
  std::vector<int> out;
  auto to_int = [&](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) throw UsageError("bad axis value '" + s + "'");
    return v;
  };
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const int lo = to_int(text.substr(0, dots));
    const int hi = to_int(text.substr(dots + 2));
    if (hi < lo) throw UsageError("empty axis range '" + text + "'");
    for (int v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_int(item));
  if (out.empty()) throw UsageError("empty axis '" + text + "'");
  return out;
}

int sweep(const SweepArgs& a) {
  const auto exp = load(a.config);
  std::string axis;
  std::vector<int> values;
  if (a.axis.empty()) {
    if (!exp.robots.empty()) {
      axis = "robots";
      values = exp.robots;
    } else if (!exp.scenarios.empty()) {
      axis = "scenarios";
      values = exp.scenarios;
    } else {
      throw UsageError("no --axis given and the config has no sweep axis");
    }
  } else {
    const auto eq = a.axis.find('=');
    if (eq == std::string::npos) throw UsageError("--axis expects robots=... or scenarios=...");
    axis = a.axis.substr(0, eq);
    if (axis != "robots" && axis != "scenarios") throw UsageError("unknown axis '" + axis + "'");
    values = parse_values(a.axis.substr(eq + 1));
  }
  for (int v : values) {
    if (v < (axis == "robots" ? 0 : 1)) throw UsageError("axis value out of range: " + std::to_string(v));
  }
  const int runs = a.runs.value_or(exp.runs);
  if (runs < 1) throw UsageError("--runs must be >= 1");
  const auto series = a.series.empty() ? exp.series : a.series;
  const std::uint64_t seed = a.seed.value_or(exp.seed);

  const fs::path out = a.out.empty() ? fs::path(exp.output_dir) / "sweep.csv" : fs::path(a.out);
  if (fs::exists(out) && !a.force) {
    throw UsageError(out.string() + " already exists (use --force to overwrite)");
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream file(out, std::ios::binary);
  if (!file) throw Error("cannot write " + out.string());
  file << io::kSweepHeader << '\n';

  for (const auto& name : series) {
    for (int v : values) {
      auto cfg = exp.sim;
      io::apply_series(cfg, name);
      cfg.record_traces = false;
      if (axis == "robots") {
        cfg.robot_count = v;
      } else {
        cfg.msa.num_scenarios = v;
      }
      const auto mc = sim::monte_carlo(cfg, runs, seed, a.threads);
      for (int r = 0; r < runs; ++r) {
        const auto& res = mc.runs[static_cast<std::size_t>(r)];
        io::SweepRow row;
        row.series = name;
        row.axis = axis;
        row.value = v;
        row.run = r;
        row.seed = mc.seeds[static_cast<std::size_t>(r)];
        row.efficiency = res.aggregate.efficiency;
        row.nonproductive = res.aggregate.mean_nonproductive;
        row.plan_latency = res.counters.plans > 0 ? res.counters.plan_seconds / res.counters.plans : 0.0;
        io::write_sweep_row(file, row);
      }
      std::cerr << name << ' ' << axis << '=' << v << ": efficiency " << mc.efficiency_summary.mean << " ["
                << mc.efficiency_summary.ci95_low << ", " << mc.efficiency_summary.ci95_high << "]\n";
    }
  }
  std::cout << "wrote " << out.string() << '\n';
  return 0;
}

// ---- analyze ------------------------------------------------------------------

struct AnalyzeArgs {
  std::string dir;
  std::string out;
  std::string config;
  double handling = 8.0;
};

int analyze(const AnalyzeArgs& a) {
  const fs::path dir(a.dir);
  if (!fs::is_directory(dir)) throw UsageError("not a directory: " + a.dir);
  Station station{0, {0.0, 0.0}};
  if (!a.config.empty()) {
    const auto exp = load(a.config);
    station = exp.sim.field.station(exp.sim.station_id);
  } else {
    station = sim::SimConfig{}.field.stations.front();
  }
  // Cart files are named cart_<picker id>.csv; anything else is skipped.
  std::map<int, fs::path> carts;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_regular_file() || name.rfind("cart_", 0) != 0 || entry.path().extension() != ".csv") continue;
    const auto id_text = name.substr(5, name.size() - 9);
    try {
      std::size_t used = 0;
      const int id = std::stoi(id_text, &used);
      if (used == id_text.size()) carts[id] = entry.path();
    } catch (const std::exception&) {
    }
  }

  std::vector<TrayRecord> trays;
  for (const auto& [id, path] : carts) {
    const auto log = io::cart_log_from(io::read_csv(path));
    const auto found = detect_tray_events(log, id);
    trays.insert(trays.end(), found.begin(), found.end());
  }
  // Trays carried by hand never raised the button.
  std::vector<TrayRecord> manual;
  std::vector<TrayRecord> aided;
  for (const auto& t : trays) (t.request_time ? aided : manual).push_back(t);

  const fs::path out = a.out.empty() ? dir / "analysis" : fs::path(a.out);
  fs::create_directories(out);
  std::ostringstream tray_csv;
  io::write_trays(tray_csv, trays);
  write_file(out / "tray_metrics.csv", tray_csv.str());

  const auto speeds = estimate_walk_speeds(manual, station, a.handling);
  for (const auto& w : speeds.warnings) std::cerr << "warning: " << w << '\n';
  std::ostringstream speed_csv;
  speed_csv << "picker_id,mean_m_per_s,std_m_per_s,n\n";
  std::map<int, double> mean_speed;
  for (const auto& [id, e] : speeds.speeds) {
    speed_csv << id << ',' << io::fmt(e.mean) << ',' << io::fmt(e.std) << ',' << e.n << '\n';
    mean_speed[id] = e.mean;
  }
  write_file(out / "walk_speeds.csv", speed_csv.str());

  std::ostringstream base_csv;
  base_csv << "picker_id,t_end,productive,nonproductive_est,efficiency_est\n";
  std::vector<TrayRecord> estimable;
  for (const auto& t : aided) {
    if (mean_speed.count(t.picker_id)) estimable.push_back(t);
  }
  if (estimable.size() < aided.size()) {
    std::cerr << "warning: " << aided.size() - estimable.size()
              << " robot-aided trays skipped: no walking speed for their picker\n";
  }
  for (const auto& e : estimate_manual_baseline(estimable, mean_speed, station, a.handling)) {
    base_csv << e.picker_id << ',' << io::fmt(e.t_end) << ',' << io::fmt(e.dt_ef) << ','
             << io::fmt(e.dt_fe_est) << ',' << io::fmt(e.efficiency_est) << '\n';
  }
  write_file(out / "manual_baseline.csv", base_csv.str());

  std::cout << carts.size() << " cart logs, " << trays.size() << " trays (" << manual.size() << " manual, "
            << aided.size() << " robot-aided); wrote " << out.string() << '\n';
  return 0;
}

// ---- compare ------------------------------------------------------------------

std::vector<double> metric_column(const std::string& path, const std::string& metric) {
  if (!fs::exists(path)) throw UsageError("file not found: " + path);
  const auto t = io::read_csv(path);
  const auto xs = io::column_values(t, metric);
  if (xs.empty()) throw io::DataError(path + ": no values in column '" + metric + "'");
  return xs;
}

void print_summary(const std::string& label, const std::vector<double>& xs) {
  std::cout << label << ": n=" << xs.size() << " mean=" << stats::mean(xs);
  if (xs.size() >= 2) {
    const auto s = stats::summarize(xs);
    std::cout << " std=" << s.std << " ci95=[" << s.ci95_low << ", " << s.ci95_high << "]";
  }
  std::cout << '\n';
}

int compare(const std::string& a, const std::string& b, const std::string& metric) {
  const auto xa = metric_column(a, metric);
  const auto xb = metric_column(b, metric);
  print_summary("A " + a, xa);
  print_summary("B " + b, xb);
  const auto mw = stats::mann_whitney_u(xa, xb);
  std::cout << "mann-whitney U=" << mw.statistic << " p=" << mw.p_value << '\n';
  if (xa.size() >= 2 && xb.size() >= 2) {
    const auto w = stats::welch_t(xa, xb);
    std::cout << "welch t=" << w.statistic << " p=" << w.p_value << '\n';
  } else {
    std::cout << "welch: needs at least two values per group\n";
  }
  return 0;
}

// ---- plot ---------------------------------------------------------------------

int plot(const std::string& in, const std::string& out, const std::string& metric) {
  if (!fs::exists(in)) throw UsageError("file not found: " + in);
  const auto table = io::read_csv(in);
  if (table.header.empty() || table.rows.empty()) throw io::DataError(in + ": empty sweep file");
  const auto rows = io::sweep_from(table);
  const auto series = io::summarize_sweep(rows, metric);
  const std::string axis = rows.front().axis;
  const std::string x_label = axis == "robots" ? "number of robots" : axis == "scenarios" ? "number of scenarios" : axis;
  const std::string y_label = metric == "efficiency" ? "harvesting efficiency" : "mean non-productive time (s)";
  const fs::path target = out.empty() ? fs::path(in).replace_extension(".svg") : fs::path(out);
  write_file(target, io::render_chart(series, y_label + " vs " + x_label, x_label, y_label));
  std::cout << "wrote " << target.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robot-aided harvest simulation and analysis"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "Run one simulation and write its logs");
  sim_cmd->add_option("config", sim_args.config, "Experiment config (JSON)")->required();
  sim_cmd->add_option("--seed", sim_args.seed, "Random seed (default: config seed)");
  sim_cmd->add_option("--mode", sim_args.mode, "manual, reactive or msa")
      ->check(CLI::IsMember({"manual", "reactive", "msa"}));
  sim_cmd->add_option("--out", sim_args.out, "Output directory (default: config output_dir)");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Monte Carlo sweep over robots or scenarios");
  sweep_cmd->add_option("config", sweep_args.config, "Experiment config (JSON)")->required();
  sweep_cmd->add_option("--axis", sweep_args.axis, "robots=4..12 or scenarios=1,10,20");
  sweep_cmd->add_option("--runs", sweep_args.runs, "Monte Carlo runs per point");
  sweep_cmd->add_option("--series", sweep_args.series, "manual, reactive, msa-srlpt, msa-exact");
  sweep_cmd->add_option("--seed", sweep_args.seed, "Base seed");
  sweep_cmd->add_option("--out", sweep_args.out, "Output CSV (default: <output_dir>/sweep.csv)");
  sweep_cmd->add_option("--threads", sweep_args.threads, "Worker threads (0 = all cores)");
  sweep_cmd->add_flag("--force", sweep_args.force, "Overwrite an existing output file");

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Detect trays in cart logs and estimate the manual baseline");
  analyze_cmd->add_option("log_dir", analyze_args.dir, "Directory of cart_<id>.csv files")->required();
  analyze_cmd->add_option("--out", analyze_args.out, "Output directory (default: <log_dir>/analysis)");
  analyze_cmd->add_option("--config", analyze_args.config, "Config giving the station position");
  analyze_cmd->add_option("--handling", analyze_args.handling, "Station handling time, s");

  std::string cmp_a, cmp_b, cmp_metric = "efficiency";
  auto* compare_cmd = app.add_subcommand("compare", "Compare one metric between two CSV files");
  compare_cmd->add_option("a", cmp_a, "First CSV")->required();
  compare_cmd->add_option("b", cmp_b, "Second CSV")->required();
  compare_cmd->add_option("--metric", cmp_metric, "Column to compare")
      ->check(CLI::IsMember({"efficiency", "nonproductive"}));

  std::string plot_in, plot_out, plot_metric = "efficiency";
  auto* plot_cmd = app.add_subcommand("plot", "Render a sweep as an SVG chart");
  plot_cmd->add_option("sweep", plot_in, "Sweep CSV")->required();
  plot_cmd->add_option("--out", plot_out, "Output SVG (default: alongside the CSV)");
  plot_cmd->add_option("--metric", plot_metric, "efficiency or nonproductive")
      ->check(CLI::IsMember({"efficiency", "nonproductive"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*sim_cmd) return simulate(sim_args);
    if (*sweep_cmd) return sweep(sweep_args);
    if (*analyze_cmd) return analyze(analyze_args);
    if (*compare_cmd) return compare(cmp_a, cmp_b, cmp_metric);
    if (*plot_cmd) return plot(plot_in, plot_out, plot_metric);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const io::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const io::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
