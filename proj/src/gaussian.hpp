#pragma once

#include <cmath>
#include <numbers>

namespace msd::detail {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))

inline double log_phi(double x) { return -0.5 * x * x - kLogSqrt2Pi; }
inline double phi(double x) { return std::exp(log_phi(x)); }

// Lower and upper standard normal tails, each accurate in its own tail.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// 1 - e^{-2t} without cancellation at small t.
inline double one_minus_exp_m2t(double t) { return -std::expm1(-2.0 * t); }

}  // namespace msd::detail
