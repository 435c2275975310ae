#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "harvest/geometry.hpp"

namespace harvest {

struct GaussianDist {
  double mean = 0.0;
  double std = 0.0;

  void validate() const {
    if (!std::isfinite(mean) || !(std >= 0.0) || !std::isfinite(std)) {
      throw Error("gaussian requires finite mean and std >= 0");
    }
  }

  // Draw truncated at zero; a zero std returns the mean without consuming
  // randomness so degenerate requests stay independent of the stream.
  template <typename Rng>
  double sample_nonnegative(Rng& rng) const {
    if (std == 0.0) return std::max(mean, 0.0);
    std::normal_distribution<double> dist(mean, std);
    return std::max(dist(rng), 0.0);
  }
};

/// A predicted tray-transport request as seen at planning time t0 = 0.
struct StochasticRequest {
  int picker_id = 0;
  double issued_at = 0.0;
  Position location;  // picker's current position
  int furrow_index = 0;
  GaussianDist full_time_dist;  // seconds until the tray is full
  GaussianDist speed_dist;      // m/s along the furrow while picking
  double picker_walk_speed = 0.8;

  void validate(double furrow_length) const {
    require_finite(location);
    if (location.y < 0.0 || location.y > furrow_length) {
      throw Error("request location outside the furrow");
    }
    if (!(picker_walk_speed > 0.0)) throw Error("picker walk speed must be > 0");
    full_time_dist.validate();
    speed_dist.validate();
    if (full_time_dist.mean < 0.0) throw Error("full-time mean must be >= 0");
  }
};

struct DeterministicRequest {
  int picker_id = 0;
  double sampled_full_time = 0.0;
  double sampled_speed = 0.0;
  Position full_tray_location;
  double picker_walk_speed = 0.8;
};

struct Scenario {
  std::vector<DeterministicRequest> requests;
};

/// Where the tray fills: pickers move toward the headland while picking.
inline Position full_tray_location(const StochasticRequest& req, double dt_f, double v_y,
                                   double furrow_length) {
  if (!(dt_f >= 0.0) || !(v_y >= 0.0)) {
    throw Error("full_tray_location requires non-negative time and speed");
  }
  return {req.location.x, std::clamp(req.location.y - v_y * dt_f, 0.0, furrow_length)};
}

inline DeterministicRequest sample_request(const StochasticRequest& req, double dt_f, double v_y,
                                           double furrow_length) {
  return {req.picker_id, dt_f, v_y, full_tray_location(req, dt_f, v_y, furrow_length),
          req.picker_walk_speed};
}

/// Request evaluated at the means of its distributions.
inline DeterministicRequest mean_request(const StochasticRequest& req, double furrow_length) {
  return sample_request(req, std::max(req.full_time_dist.mean, 0.0),
                        std::max(req.speed_dist.mean, 0.0), furrow_length);
}

/// Monte Carlo scenario sampling. Full time and speed are drawn independently
/// per request and truncated at zero. Same seed, same scenarios.
inline std::vector<Scenario> get_samples(std::span<const StochasticRequest> requests, int m,
                                         std::uint64_t seed, double furrow_length) {
  if (m < 1) throw Error("get_samples requires at least one scenario");
  for (const auto& r : requests) r.validate(furrow_length);
  std::mt19937_64 rng(seed);
  std::vector<Scenario> out(static_cast<std::size_t>(m));
  for (auto& sc : out) {
    sc.requests.reserve(requests.size());
    for (const auto& r : requests) {
      const double dt_f = r.full_time_dist.sample_nonnegative(rng);
      const double v_y = r.speed_dist.sample_nonnegative(rng);
      sc.requests.push_back(sample_request(r, dt_f, v_y, furrow_length));
    }
  }
  return out;
}

}  // namespace harvest
