#pragma once

#include <numbers>

// Unit conventions: all internal quantities are SI (rad/s, Nm, W, m/s, kg).
// rpm, km/h and kW appear only at file/CLI boundaries; conversion happens
// exactly once, through the helpers below.

namespace gearopt {

inline constexpr double kAirDensity = 1.2041;  // kg/m^3, dry air at 20 C
inline constexpr double kGravity = 9.81;       // m/s^2

constexpr double rpm_to_rad_s(double rpm) { return rpm * std::numbers::pi / 30.0; }
constexpr double rad_s_to_rpm(double w) { return w * 30.0 / std::numbers::pi; }
constexpr double kmh_to_ms(double v) { return v / 3.6; }
constexpr double ms_to_kmh(double v) { return v * 3.6; }
constexpr double w_to_kw(double p) { return p / 1e3; }
constexpr double kw_to_w(double p) { return p * 1e3; }
constexpr double j_to_kwh(double e) { return e / 3.6e6; }

}  // namespace gearopt
