#include "siad/normal_tail.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace siad::stats {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))

// Phi-bar(x) / phi(x) for x >= 5 by backward evaluation of
// 1 / (x + 1 / (x + 2 / (x + 3 / (x + ...)))).
double mills_ratio(double x) {
  double t = x;
  for (int k = 120; k >= 1; --k) t = x + k / t;
  return 1.0 / t;
}

}  // namespace

double upper_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double log_upper_tail(double x) {
  if (x == kInf) return -kInf;
  if (x == -kInf) return 0.0;
  if (x < -1.0) return std::log1p(-upper_tail(-x));
  if (x < 5.0) return std::log(upper_tail(x));
  return -0.5 * x * x - kLogSqrt2Pi + std::log(mills_ratio(x));
}

double log_interval_mass(double lo, double hi) {
  if (!(lo < hi)) return -kInf;
  if (lo >= 0.0) {
    const double a = log_upper_tail(lo);
    const double b = log_upper_tail(hi);
    if (b == -kInf) return a;
    return a + std::log(-std::expm1(b - a));
  }
  if (hi <= 0.0) return log_interval_mass(-hi, -lo);
  return std::log1p(-(upper_tail(hi) + upper_tail(-lo)));
}

double log_sum_exp(std::span<const double> values) {
  double peak = -kInf;
  for (double v : values) peak = std::max(peak, v);
  if (peak == -kInf) return -kInf;
  // Smallest terms first.
  std::vector<double> terms;
  terms.reserve(values.size());
  for (double v : values) terms.push_back(std::exp(v - peak));
  std::sort(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += t;
  return peak + std::log(acc);
}

}  // namespace siad::stats
