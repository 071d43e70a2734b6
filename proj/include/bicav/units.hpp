#pragma once

#include <numbers>

namespace bicav {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// All internal frequencies are angular (rad/s); external interfaces speak
// ordinary MHz. Angles are radians internally, degrees at the boundary.
inline constexpr double mhz_to_angular(double f_mhz) { return two_pi * 1e6 * f_mhz; }
inline constexpr double angular_to_mhz(double w) { return w / (two_pi * 1e6); }
inline constexpr double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }

}  // namespace bicav
