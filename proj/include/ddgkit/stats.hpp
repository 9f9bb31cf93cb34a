#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "ddgkit/error.hpp"

namespace ddgkit::stats {

namespace detail {

inline void check_pair(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw Error(ErrorKind::length_mismatch, "correlation of vectors with lengths " + std::to_string(xs.size()) +
                                                " and " + std::to_string(ys.size()));
  }
  if (xs.size() < 2) throw Error(ErrorKind::empty_input, "correlation needs at least two points");
}

}  // namespace detail

/// Sample Pearson product-moment correlation.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  detail::check_pair(xs, ys);
  const double n = static_cast<double>(xs.size());
  double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::zero_variance, "correlation with a constant vector");
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

/// 1-based ranks; tied values (within `tie_tolerance` of their sorted
/// neighbour) share the average rank of their block.
inline std::vector<double> average_ranks(std::span<const double> xs, double tie_tolerance = 0.0) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && xs[order[j]] - xs[order[j - 1]] <= tie_tolerance) ++j;
    double avg = 0.5 * static_cast<double>(i + j - 1) + 1.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

/// Pearson correlation of average ranks.
inline double spearman(std::span<const double> xs, std::span<const double> ys, double tie_tolerance = 0.0) {
  detail::check_pair(xs, ys);
  auto rx = average_ranks(xs, tie_tolerance);
  auto ry = average_ranks(ys, tie_tolerance);
  return pearson(rx, ry);
}

struct BootstrapResult {
  double point = 0.0;       // statistic on the full data
  double sem = 0.0;         // standard deviation over resamples
  std::size_t resamples = 0;
  std::size_t redraws = 0;  // degenerate resamples drawn again
};

/// Bootstrap standard error of the Pearson correlation: resample pairs with
/// replacement B times (seeded), redraw zero-variance resamples, report the
/// sample standard deviation (denominator B - 1) of the resampled statistics.
inline BootstrapResult bootstrap_sem(std::span<const double> scores, std::span<const double> targets,
                                     std::size_t B = 100, std::uint64_t seed = 0) {
  detail::check_pair(scores, targets);
  BootstrapResult out;
  out.point = pearson(scores, targets);
  out.resamples = B;
  if (B < 2) return out;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, scores.size() - 1);
  const std::size_t max_redraws = 1000 * B;
  std::vector<double> xs(scores.size()), ys(scores.size()), stats;
  stats.reserve(B);
  while (stats.size() < B) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      std::size_t k = pick(rng);
      xs[i] = scores[k];
      ys[i] = targets[k];
    }
    try {
      stats.push_back(pearson(xs, ys));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::zero_variance) throw;
      if (++out.redraws > max_redraws) throw Error(ErrorKind::zero_variance, "bootstrap keeps drawing degenerate resamples");
    }
  }
  double mean = std::accumulate(stats.begin(), stats.end(), 0.0) / static_cast<double>(B);
  double ss = 0.0;
  for (double s : stats) ss += (s - mean) * (s - mean);
  out.sem = std::sqrt(ss / static_cast<double>(B - 1));
  return out;
}

/// Fisher-transform approximation of the standard error of r.
inline double fisher_se(double r, std::size_t n) {
  if (n <= 3) throw Error(ErrorKind::domain, "Fisher approximation needs n > 3");
  return (1.0 - r * r) / std::sqrt(static_cast<double>(n) - 3.0);
}

}  // namespace ddgkit::stats
