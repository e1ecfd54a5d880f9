#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace simagents {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline bool in_heading_range(double h) { return h >= -kPi && h < kPi; }

// Maps h into [-pi, pi). Values already in range are returned untouched so
// the function is exactly idempotent.
inline double normalize_angle(double h) {
  if (!std::isfinite(h)) throw std::domain_error("normalize_angle: non-finite angle");
  if (in_heading_range(h)) return h;
  double r = std::fmod(h + kPi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  double out = r - kPi;
  // fmod/rounding can land on +pi (or a hair below -pi); both mean -pi.
  if (out >= kPi || out < -kPi) out = -kPi;
  return out;
}

// Signed shortest rotation from `from` to `to`, in [-pi, pi).
inline double wrapped_difference(double to, double from) {
  return normalize_angle(to - from);
}

}  // namespace simagents
