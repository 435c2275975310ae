#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "harvest/sim/world.hpp"
#include "harvest/stats.hpp"

namespace harvest::sim {

struct MonteCarloResult {
  std::vector<std::uint64_t> seeds;
  std::vector<SimResult> runs;
  std::vector<double> efficiency;       // per-run mean efficiency
  std::vector<double> nonproductive;    // per-run mean non-productive time, s
  stats::SampleSummary efficiency_summary;
  stats::SampleSummary nonproductive_summary;
};

/// Mean and 95% interval; a single value gives a zero-width interval.
inline stats::SampleSummary summarize_runs(const std::vector<double>& xs) {
  if (xs.empty()) throw Error("no runs to summarize");
  if (xs.size() == 1) return {1, xs[0], 0.0, xs[0], xs[0]};
  return stats::summarize(xs);
}

inline std::uint64_t run_seed(std::uint64_t base_seed, int run) {
  return base_seed + static_cast<std::uint64_t>(run);
}

/// Independent runs seeded base_seed, base_seed + 1, ... Runs are spread over
/// `threads` workers (0 picks the hardware concurrency); results are stored by
/// run index so the outcome does not depend on scheduling.
inline MonteCarloResult monte_carlo(const SimConfig& cfg, int runs, std::uint64_t base_seed,
                                    unsigned threads = 0) {
  if (runs < 1) throw Error("monte_carlo requires runs >= 1");
  cfg.validate();
  MonteCarloResult out;
  out.runs.resize(static_cast<std::size_t>(runs));
  for (int r = 0; r < runs; ++r) out.seeds.push_back(run_seed(base_seed, r));

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(runs));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (int r = next++; r < runs; r = next++) {
      try {
        out.runs[static_cast<std::size_t>(r)] = run(cfg, out.seeds[static_cast<std::size_t>(r)]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (const auto& res : out.runs) {
    out.efficiency.push_back(res.aggregate.efficiency);
    out.nonproductive.push_back(res.aggregate.mean_nonproductive);
  }
  out.efficiency_summary = summarize_runs(out.efficiency);
  out.nonproductive_summary = summarize_runs(out.nonproductive);
  return out;
}

}  // namespace harvest::sim
