#pragma once

#include <span>

namespace siad::stats {

// Upper tail P(Z > x) of the standard normal.
double upper_tail(double x);

// log P(Z > x), finite for every finite x (continued-fraction Mills ratio in
// the far upper tail, where erfc underflows).
double log_upper_tail(double x);

// log P(lo <= Z <= hi) for lo < hi; either end may be infinite. Computed
// from the tail nearer the interval so that far-tail masses keep full
// relative precision.
double log_interval_mass(double lo, double hi);

// log(sum(exp(v))); -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> values);

}  // namespace siad::stats
