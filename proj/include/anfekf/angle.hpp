#pragma once

#include <numbers>

namespace anfekf {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle to the half-open interval (-pi, pi]; -pi maps to +pi.
double wrap_angle(double a);

constexpr double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
constexpr double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

}  // namespace anfekf
