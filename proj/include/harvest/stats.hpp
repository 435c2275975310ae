#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "harvest/geometry.hpp"

namespace harvest::stats {

struct SampleSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
};

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::string method;
  double z = 0.0;  // normal-approximation score, rank test only
};

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw Error("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw Error("variance needs at least two values");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

/// Mean with a normal-approximation 95% interval.
inline SampleSummary summarize(std::span<const double> xs) {
  if (xs.size() < 2) throw Error("confidence interval needs at least two samples");
  SampleSummary s;
  s.n = xs.size();
  s.mean = mean(xs);
  s.std = std::sqrt(variance(xs));
  const double half = 1.96 * s.std / std::sqrt(static_cast<double>(s.n));
  s.ci95_low = s.mean - half;
  s.ci95_high = s.mean + half;
  return s;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_cf(a, b, x) / a;
  return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

inline double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw Error("degrees of freedom must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
  return t > 0 ? 1.0 - tail : tail;
}

inline double student_t_two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  return std::clamp(incomplete_beta(df / 2.0, 0.5, df / (df + t * t)), 0.0, 1.0);
}

/// Two-sided Welch t-test with Welch-Satterthwaite degrees of freedom.
inline TestResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw Error("welch_t needs at least two values per sample");
  const double ma = mean(a);
  const double mb = mean(b);
  const double va = variance(a) / static_cast<double>(a.size());
  const double vb = variance(b) / static_cast<double>(b.size());
  TestResult r;
  r.method = "welch-t";
  const double se2 = va + vb;
  if (se2 == 0.0) {
    if (ma == mb) {
      r.statistic = 0.0;
      r.p_value = 1.0;
    } else {
      r.statistic = ma > mb ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
    }
    return r;
  }
  r.statistic = (ma - mb) / std::sqrt(se2);
  const double df = se2 * se2 /
                    (va * va / static_cast<double>(a.size() - 1) +
                     vb * vb / static_cast<double>(b.size() - 1));
  r.p_value = student_t_two_sided_p(r.statistic, df);
  return r;
}

/// U statistic of `a` by direct pair counting; ties count one half.
inline double mann_whitney_u_pairs(std::span<const double> a, std::span<const double> b) {
  double u = 0.0;
  for (double x : a) {
    for (double y : b) {
      if (x > y) {
        u += 1.0;
      } else if (x == y) {
        u += 0.5;
      }
    }
  }
  return u;
}

/// Two-sided Mann-Whitney rank test, tie-corrected normal approximation with
/// continuity correction. `statistic` is the U of the first sample.
inline TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error("mann_whitney_u needs non-empty samples");
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  const std::size_t n = na + nb;
  std::vector<std::pair<double, int>> pooled;
  pooled.reserve(n);
  for (double x : a) pooled.emplace_back(x, 0);
  for (double x : b) pooled.emplace_back(x, 1);
  std::sort(pooled.begin(), pooled.end());

  double rank_sum_a = 0.0;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && pooled[j].first == pooled[i].first) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k) {
      if (pooled[k].second == 0) rank_sum_a += midrank;
    }
    i = j;
  }

  TestResult r;
  r.method = "mann-whitney-u";
  const double dna = static_cast<double>(na);
  const double dnb = static_cast<double>(nb);
  const double dn = static_cast<double>(n);
  r.statistic = rank_sum_a - dna * (dna + 1.0) / 2.0;
  const double mu = dna * dnb / 2.0;
  const double var = dna * dnb / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (!(var > 0.0)) {
    r.z = 0.0;
    r.p_value = 1.0;
    return r;
  }
  const double diff = r.statistic - mu;
  const double corrected = std::max(std::abs(diff) - 0.5, 0.0);
  r.z = std::copysign(corrected / std::sqrt(var), diff);
  r.p_value = std::clamp(2.0 * normal_cdf(-std::abs(r.z)), 0.0, 1.0);
  return r;
}

struct PairwiseComparison {
  std::size_t first = 0;
  std::size_t second = 0;
  double raw_p = 1.0;
  double adjusted_p = 1.0;
  bool reject = false;
};

/// Holm step-down adjustment; output is in the input order.
inline std::vector<double> holm_adjust(std::span<const double> raw) {
  const std::size_t m = raw.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });
  std::vector<double> adj(m);
  double running = 0.0;
  for (std::size_t rank = 0; rank < m; ++rank) {
    const double v = std::min(1.0, static_cast<double>(m - rank) * raw[order[rank]]);
    running = std::max(running, v);
    adj[order[rank]] = running;
  }
  return adj;
}

/// All-pairs Welch tests with Holm adjustment at level alpha.
inline std::vector<PairwiseComparison> pairwise_adjusted(const std::vector<std::vector<double>>& groups,
                                                         double alpha = 0.05) {
  if (groups.size() < 2) throw Error("pairwise_adjusted needs at least two groups");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].size() < 2) throw Error("group " + std::to_string(g) + " has fewer than two values");
  }
  std::vector<PairwiseComparison> out;
  std::vector<double> raw;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      const double p = welch_t(groups[i], groups[j]).p_value;
      out.push_back({i, j, p, p, false});
      raw.push_back(p);
    }
  }
  const auto adj = holm_adjust(raw);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].adjusted_p = adj[k];
    out[k].reject = adj[k] < alpha;
  }
  return out;
}

}  // namespace harvest::stats
