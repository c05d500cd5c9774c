#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace bvm::normal {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

inline double pdf(double y, double mean, double sd) { return pdf((y - mean) / sd) / sd; }

inline double log_pdf(double y, double mean, double sd) {
  const double z = (y - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

// Upper tail Q(z) = 1 - Phi(z), computed without cancellation for z > 0.
inline double sf(double z) { return 0.5 * std::erfc(z * kInvSqrt2); }

// log Q(z). Switches to the asymptotic Mills-ratio series once erfc underflows.
inline double log_sf(double z) {
  if (z < 37.0) return std::log(sf(z));
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - std::log(z) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

// Phi(hi) - Phi(lo) for lo <= hi in standard units. Tail intervals are
// evaluated as differences of upper-tail probabilities so that both ends
// being far out in the same tail does not cancel to zero.
inline double interval_probability(double lo, double hi) {
  if (!(lo < hi)) return 0.0;
  if (lo >= 0.0) {
    if (lo < 8.0) return sf(lo) - sf(hi);
    const double la = log_sf(lo);
    const double lb = log_sf(hi);
    return std::exp(la) * -std::expm1(lb - la);
  }
  if (hi <= 0.0) return interval_probability(-hi, -lo);
  return 1.0 - sf(hi) - sf(-lo);
}

// log of interval_probability; finite as long as the interval is nonempty.
inline double log_interval_probability(double lo, double hi) {
  if (!(lo < hi)) return -std::numeric_limits<double>::infinity();
  if (hi <= 0.0) return log_interval_probability(-hi, -lo);
  if (lo >= 8.0) {
    const double la = log_sf(lo);
    const double lb = log_sf(hi);
    return la + std::log(-std::expm1(lb - la));
  }
  return std::log(interval_probability(lo, hi));
}

}  // namespace bvm::normal
