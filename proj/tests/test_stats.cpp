#include <algorithm>
#include <cmath>
#include <random>

#include "ddgkit/stats.hpp"
#include "test_util.hpp"

using namespace ddgkit;
using namespace ddgkit::stats;

namespace {

/// Average ranks by counting: rank = #smaller + (#equal + 1) / 2.
std::vector<double> brute_force_ranks(const std::vector<double>& xs) {
  std::vector<double> r;
  for (double x : xs) {
    double less = 0, equal = 0;
    for (double y : xs) {
      less += y < x;
      equal += y == x;
    }
    r.push_back(less + (equal + 1) / 2);
  }
  return r;
}

std::pair<std::vector<double>, std::vector<double>> noisy_line(std::size_t n, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = g(rng);
    y[i] = 0.8 * x[i] + noise * g(rng);
  }
  return {x, y};
}

}  // namespace

TEST(Pearson, Examples) {
  std::vector<double> x = {1, 2, 3, 4};
  std::vector<double> lin, neg;
  for (double v : x) {
    lin.push_back(2 * v + 3);
    neg.push_back(-v);
  }
  EXPECT_NEAR(pearson(x, lin), 1.0, 1e-15);
  EXPECT_NEAR(pearson(x, neg), -1.0, 1e-15);
  // Deviations (-1.5,-0.5,0.5,1.5) and (-1.5,0.5,-0.5,1.5): 4 / 5.
  EXPECT_NEAR(pearson(x, std::vector<double>{1, 3, 2, 4}), 0.8, 1e-15);
}

TEST(Pearson, Errors) {
  EXPECT_DDG_ERROR(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), length_mismatch);
  EXPECT_DDG_ERROR(pearson(std::vector<double>{1}, std::vector<double>{1}), empty_input);
  EXPECT_DDG_ERROR(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), zero_variance);
}

TEST(Spearman, Examples) {
  std::vector<double> x = {0.3, -1.2, 4.0, 2.5, 0.9};
  std::vector<double> mono, rev;
  for (double v : x) {
    mono.push_back(std::exp(v) + 7.0);
    rev.push_back(-v * v * v);
  }
  EXPECT_NEAR(spearman(x, mono), 1.0, 1e-15);
  EXPECT_NEAR(spearman(x, rev), -1.0, 1e-15);

  std::vector<double> a = {1, 2, 3}, b = {1, 1, 2};
  auto rb = brute_force_ranks(b);
  EXPECT_EQ(average_ranks(b), rb);
  EXPECT_EQ(rb, (std::vector<double>{1.5, 1.5, 3}));
  EXPECT_NEAR(spearman(a, b), pearson(brute_force_ranks(a), rb), 1e-15);
  EXPECT_NEAR(spearman(a, b), std::sqrt(3.0) / 2.0, 1e-15);
}

TEST(Spearman, RanksMatchBruteForceWithTies) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> xs(2 + rng() % 30);
    for (auto& x : xs) x = static_cast<double>(rng() % 7);
    EXPECT_EQ(average_ranks(xs), brute_force_ranks(xs));
  }
}

TEST(Spearman, TieToleranceMergesNearEqualValues) {
  std::vector<double> xs = {1.0, 1.0 + 1e-13, 2.0};
  EXPECT_EQ(average_ranks(xs, 1e-9), (std::vector<double>{1.5, 1.5, 3}));
  EXPECT_EQ(average_ranks(xs, 0.0), (std::vector<double>{1, 2, 3}));
}

TEST(Correlation, AffineInvariance) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto [x, y] = noisy_line(20, 1.0, rng());
    double a = u(rng), b = u(rng) - 2.5;
    std::vector<double> ax, negy;
    for (double v : x) ax.push_back(a * v + b);
    for (double v : y) negy.push_back(-v);
    EXPECT_NEAR(pearson(ax, y), pearson(x, y), 1e-12);
    EXPECT_NEAR(spearman(ax, y), spearman(x, y), 1e-12);
    EXPECT_NEAR(pearson(x, negy), -pearson(x, y), 1e-12);
    double r = pearson(x, y), rho = spearman(x, y);
    EXPECT_LE(std::abs(r), 1.0);
    EXPECT_LE(std::abs(rho), 1.0);
  }
}

TEST(Bootstrap, PerfectlyLinearData) {
  std::vector<double> x = {1, 2, 3}, y;
  for (double v : x) y.push_back(3 * v - 1);
  auto b = bootstrap_sem(x, y, 100, 4);
  EXPECT_NEAR(b.point, 1.0, 1e-15);
  EXPECT_NEAR(b.sem, 0.0, 1e-12);
  EXPECT_EQ(b.resamples, 100u);
  EXPECT_GT(b.redraws, 0u);  // one resample in nine repeats a single point
}

TEST(Bootstrap, DeterministicUnderSeed) {
  auto [x, y] = noisy_line(300, 1.0, 1);
  auto a = bootstrap_sem(x, y, 100, 42), b = bootstrap_sem(x, y, 100, 42), c = bootstrap_sem(x, y, 100, 43);
  EXPECT_EQ(a.point, b.point);
  EXPECT_EQ(a.sem, b.sem);
  EXPECT_NE(a.sem, c.sem);
  EXPECT_EQ(a.point, c.point);
}

TEST(Bootstrap, AgreesWithFisherApproximation) {
  for (double noise : {0.3, 0.8, 1.5}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      auto [x, y] = noisy_line(900, noise, seed);
      auto b = bootstrap_sem(x, y, 100, seed);
      double fisher = fisher_se(b.point, x.size());
      EXPECT_GE(b.sem, 0.5 * fisher);
      EXPECT_LE(b.sem, 2.0 * fisher);
    }
  }
}

TEST(Bootstrap, FisherNeedsFourPoints) { EXPECT_DDG_ERROR(fisher_se(0.5, 3), domain); }
