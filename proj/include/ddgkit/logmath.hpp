#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "ddgkit/error.hpp"

namespace ddgkit {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// log(sum_i exp(v_i)). -inf entries contribute nothing; an all -inf (or empty)
// input returns -inf. Summation order is the input order.
inline double logsumexp(std::span<const double> values) {
  double max_v = neg_inf;
  for (double v : values) max_v = std::max(max_v, v);
  if (max_v == neg_inf) return neg_inf;
  if (std::isinf(max_v)) return max_v;
  double sum = 0.0;
  for (double v : values) {
    if (v != neg_inf) sum += std::exp(v - max_v);
  }
  return max_v + std::log(sum);
}

inline double logaddexp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == neg_inf) return a;
  return a + std::log1p(std::exp(b - a));
}

// log of the arithmetic mean of exp(v_i).
inline double log_mean_exp(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::empty_input, "log_mean_exp of an empty list");
  return logsumexp(values) - std::log(static_cast<double>(values.size()));
}

// log(sum_i w_i exp(v_i) / sum_i w_i) with log-weights lw_i.
inline double log_weighted_mean_exp(std::span<const double> values, std::span<const double> log_weights) {
  if (values.empty()) throw Error(ErrorKind::empty_input, "weighted mean of an empty list");
  if (values.size() != log_weights.size()) {
    throw Error(ErrorKind::length_mismatch, "values and weights differ in length");
  }
  double max_v = neg_inf;
  double max_w = neg_inf;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (log_weights[i] == neg_inf) continue;
    max_v = std::max(max_v, values[i] + log_weights[i]);
    max_w = std::max(max_w, log_weights[i]);
  }
  if (max_w == neg_inf) throw Error(ErrorKind::empty_input, "all weights are zero");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (log_weights[i] == neg_inf) continue;
    num += std::exp(values[i] + log_weights[i] - max_v);
    den += std::exp(log_weights[i] - max_w);
  }
  return (max_v + std::log(num)) - (max_w + std::log(den));
}

}  // namespace ddgkit
