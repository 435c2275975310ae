#include <gtest/gtest.h>

#include <random>

#include "harvest/stats.hpp"

using namespace harvest;
using namespace harvest::stats;

// Reference p-values below were computed with scipy.stats (ttest_ind with
// equal_var=False; mannwhitneyu two-sided, asymptotic, continuity corrected).

namespace {

const std::vector<double> kA{0.81, 0.84, 0.79, 0.88, 0.86, 0.83, 0.85, 0.80};
const std::vector<double> kB{0.90, 0.87, 0.92, 0.89, 0.91, 0.86, 0.93};

double count_pairs(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0.0;
  for (double x : a) {
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  }
  return u;
}

}  // namespace

TEST(Summary, Examples) {
  const auto s = summarize(std::vector<double>{1, 1, 1, 1});
  EXPECT_EQ(s.mean, 1.0);
  EXPECT_EQ(s.ci95_low, 1.0);
  EXPECT_EQ(s.ci95_high, 1.0);
  const auto t = summarize(std::vector<double>{0, 2});
  EXPECT_DOUBLE_EQ(t.mean, 1.0);
  EXPECT_DOUBLE_EQ(t.std, std::sqrt(2.0));
  EXPECT_NEAR(t.ci95_low, 1 - 1.96, 1e-12);
  EXPECT_NEAR(t.ci95_high, 1 + 1.96, 1e-12);
  EXPECT_THROW(summarize(std::vector<double>{3}), Error);
}

TEST(StudentT, Cdf) {
  EXPECT_NEAR(student_t_cdf(2.0, 5), 0.9490302605850709, 1e-9);
  EXPECT_NEAR(student_t_cdf(-1.3, 12.5), 0.10853100531714448, 1e-9);
  EXPECT_NEAR(student_t_cdf(0.5, 1), 0.6475836176504333, 1e-9);
  EXPECT_NEAR(student_t_cdf(3.7, 40.2), 0.9996772032637586, 1e-9);
  EXPECT_NEAR(student_t_cdf(0.0, 7), 0.5, 1e-12);
}

TEST(Welch, MatchesReference) {
  const auto r = welch_t(kA, kB);
  EXPECT_NEAR(r.statistic, -4.414634146341461, 1e-9);
  EXPECT_NEAR(r.p_value, 0.0007022875450530465, 1e-9);
  const std::vector<double> c{1, 2, 2, 3, 3, 3, 4, 5};
  const std::vector<double> d{2, 3, 3, 4, 4, 5, 6, 6, 7};
  EXPECT_NEAR(welch_t(c, d).p_value, 0.04323236909746501, 1e-9);
}

TEST(Welch, Conventions) {
  const auto same = welch_t(kA, kA);
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_NEAR(same.p_value, 1.0, 1e-12);
  const std::vector<double> zeros{0, 0, 0, 0};
  EXPECT_EQ(welch_t(zeros, zeros).p_value, 1.0);
  const std::vector<double> ones{1, 1 + 1e-9, 1 - 1e-9, 1};
  EXPECT_LT(welch_t(zeros, ones).p_value, 0.01);
  EXPECT_DOUBLE_EQ(welch_t(kA, kB).statistic, -welch_t(kB, kA).statistic);
  EXPECT_THROW(welch_t(std::vector<double>{1}, kB), Error);
}

TEST(MannWhitney, MatchesReference) {
  const auto r = mann_whitney_u(kA, kB);
  EXPECT_NEAR(r.statistic, 2.5, 1e-12);
  EXPECT_NEAR(r.p_value, 0.003782241021636921, 1e-9);
  const std::vector<double> c{1, 2, 2, 3, 3, 3, 4, 5};
  const std::vector<double> d{2, 3, 3, 4, 4, 5, 6, 6, 7};
  const auto t = mann_whitney_u(c, d);
  EXPECT_NEAR(t.statistic, 16.5, 1e-12);
  EXPECT_NEAR(t.p_value, 0.062484795672341206, 1e-9);
}

TEST(MannWhitney, Examples) {
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  EXPECT_EQ(mann_whitney_u(a, b).statistic, 0.0);
  std::vector<double> big;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  for (int i = 0; i < 200; ++i) big.push_back(n(rng));
  EXPECT_GT(mann_whitney_u(big, big).p_value, 0.9);
  EXPECT_THROW(mann_whitney_u(std::vector<double>{}, b), Error);
}

TEST(MannWhitney, UIdentityAgainstPairCounting) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> a(1 + rng() % 30), b(1 + rng() % 30);
    // Small integer values force plenty of ties.
    for (auto& x : a) x = static_cast<double>(rng() % 7);
    for (auto& x : b) x = static_cast<double>(rng() % 7);
    const auto ab = mann_whitney_u(a, b);
    const auto ba = mann_whitney_u(b, a);
    EXPECT_DOUBLE_EQ(ab.statistic, count_pairs(a, b));
    EXPECT_DOUBLE_EQ(ab.statistic + ba.statistic, static_cast<double>(a.size() * b.size()));
    EXPECT_GE(ab.p_value, 0.0);
    EXPECT_LE(ab.p_value, 1.0);
    EXPECT_NEAR(ab.p_value, ba.p_value, 1e-12);
  }
}

TEST(Holm, MatchesReference) {
  const auto adj = holm_adjust(std::vector<double>{0.01, 0.04, 0.03, 0.2});
  const std::vector<double> expected{0.04, 0.09, 0.09, 0.2};
  for (std::size_t i = 0; i < adj.size(); ++i) EXPECT_NEAR(adj[i], expected[i], 1e-12);
}

TEST(Holm, MonotoneAndNeverBelowRaw) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> raw(1 + rng() % 12);
    for (auto& p : raw) p = u(rng) * u(rng);
    const auto adj = holm_adjust(raw);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      EXPECT_GE(adj[i], raw[i]);
      EXPECT_LE(adj[i], 1.0);
      for (std::size_t j = 0; j < raw.size(); ++j) {
        if (raw[i] <= raw[j]) {
          EXPECT_LE(adj[i], adj[j]);
        }
      }
    }
  }
}

TEST(Pairwise, IdenticalGroups) {
  const auto out = pairwise_adjusted({kA, kA});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR(out[0].adjusted_p, 1.0, 1e-12);
  EXPECT_FALSE(out[0].reject);
}

TEST(Pairwise, OneFarGroup) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0, 1);
  std::vector<std::vector<double>> g(3);
  for (int i = 0; i < 40; ++i) {
    g[0].push_back(n(rng));
    g[1].push_back(n(rng) + 0.05);
    g[2].push_back(n(rng) + 5.0);
  }
  const auto out = pairwise_adjusted(g);
  for (const auto& c : out) {
    EXPECT_GE(c.adjusted_p, c.raw_p);
    if (c.second == 2) {
      EXPECT_TRUE(c.reject);
    } else {
      EXPECT_FALSE(c.reject);
    }
  }
  EXPECT_THROW(pairwise_adjusted({kA}), Error);
  EXPECT_THROW(pairwise_adjusted({kA, {1.0}}), Error);
}
