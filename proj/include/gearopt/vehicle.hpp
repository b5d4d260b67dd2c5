#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gearopt/errors.hpp"
#include "gearopt/units.hpp"

// Longitudinal vehicle model: road load, drive-cycle kinematics, and the
// torque/speed transformation across a lossy transmission of ratio gamma.

namespace gearopt {

struct VehicleParams {
  double m0 = 0.0;      // curb mass, kg
  double mp = 0.0;      // payload mass, kg
  double af = 0.0;      // frontal area, m^2
  double cd = 0.0;      // aerodynamic drag coefficient
  double cr = 0.0;      // rolling-resistance coefficient
  double rw = 0.0;      // wheel radius, m
  double eta_t = 0.0;   // transmission efficiency per pass
  double kappa_r = 0.0; // fraction of braking torque routed to the machine
  double lambda = 1.0;  // rotating-mass factor on inertial force
  double rho_air = kAirDensity;  // kg/m^3
  double g = kGravity;           // m/s^2

  double mass() const { return m0 + mp; }

  void validate() const {
    require(m0 > 0.0 && mp >= 0.0, errc::config, "vehicle: masses invalid");
    require(af > 0.0 && cd > 0.0, errc::config, "vehicle: aero terms invalid");
    require(cr > 0.0 && cr < 0.1, errc::config,
            "vehicle: rolling-resistance coefficient out of range");
    require(rw > 0.0, errc::config, "vehicle: wheel radius invalid");
    require(eta_t > 0.0 && eta_t <= 1.0, errc::config,
            "vehicle: transmission efficiency out of (0, 1]");
    require(kappa_r >= 0.0 && kappa_r <= 1.0, errc::config,
            "vehicle: braking recovery fraction out of [0, 1]");
    require(lambda >= 1.0, errc::config, "vehicle: rotating-mass factor < 1");
    require(rho_air > 0.0 && g > 0.0, errc::config,
            "vehicle: environment constants invalid");
  }
};

/// Steady road load (rolling + aerodynamic) at speed v [m/s], in N.
inline double road_load_force(const VehicleParams& p, double v) {
  return p.mass() * p.g * p.cr + 0.5 * p.rho_air * p.cd * p.af * v * v;
}

/// One sample of wheel-side demand as seen by the transmission output shaft.
struct WheelDemand {
  double omega_t = 0.0;  // wheel speed, rad/s
  double tau_t = 0.0;    // wheel torque routed through the machine, Nm
  double accel = 0.0;    // vehicle acceleration, m/s^2
  bool braking = false;  // true when tau_t < 0
};

/// Wheel demand at speed v [m/s] and acceleration a [m/s^2]. During braking
/// only the kappa_r fraction of the total wheel torque is routed through the
/// machine; the rest goes to friction brakes.
inline WheelDemand road_load_demand(const VehicleParams& p, double v, double a) {
  require(v >= 0.0, errc::config, "road_load_demand: negative speed");
  WheelDemand d;
  d.omega_t = v / p.rw;
  d.accel = a;
  double force = p.lambda * p.mass() * a;
  if (v > 0.0) force += road_load_force(p, v);
  d.tau_t = force * p.rw;
  if (d.tau_t < 0.0) {
    d.tau_t *= p.kappa_r;
    d.braking = true;
  }
  return d;
}

/// Machine-side operating point implied by a wheel demand and a ratio.
struct MachinePointDemand {
  double omega_m = 0.0;  // machine speed, rad/s
  double tau_m = 0.0;    // machine torque, Nm (negative when absorbing)
};

/// Transforms wheel demand across the transmission. Traction torque is
/// amplified by the transmission loss (machine must push harder); absorbed
/// torque is attenuated (less reaches the machine).
inline MachinePointDemand wheel_to_machine(const WheelDemand& d, double gamma,
                                           double eta_t) {
  require(gamma > 0.0, errc::config, "wheel_to_machine: ratio must be positive");
  require(eta_t > 0.0 && eta_t <= 1.0, errc::config,
          "wheel_to_machine: transmission efficiency out of (0, 1]");
  MachinePointDemand m;
  m.omega_m = d.omega_t * gamma;
  m.tau_m = d.tau_t >= 0.0 ? d.tau_t / (gamma * eta_t)
                           : d.tau_t * eta_t / gamma;
  return m;
}

/// Steady-state (zero-acceleration) wheel demand at speed v [m/s].
inline WheelDemand road_load_stationary(const VehicleParams& p, double v) {
  return road_load_demand(p, v, 0.0);
}

/// A sampled speed trace with uniform time step.
struct DriveCycle {
  std::vector<double> t;  // s
  std::vector<double> v;  // m/s

  double dt() const { return t[1] - t[0]; }

  void validate() const {
    require(t.size() >= 2 && t.size() == v.size(), errc::config,
            "drive cycle: need at least two equally sized samples");
    const double step = t[1] - t[0];
    require(step > 0.0, errc::config, "drive cycle: non-increasing time");
    for (std::size_t k = 1; k < t.size(); ++k) {
      require(std::abs((t[k] - t[k - 1]) - step) <= 1e-9 * std::max(1.0, step),
              errc::config, "drive cycle: time step must be uniform");
    }
    for (double vv : v)
      require(vv >= 0.0, errc::config, "drive cycle: negative speed sample");
  }
};

/// Backward-difference accelerations; the first sample gets zero.
inline std::vector<double> cycle_accelerations(const DriveCycle& cyc) {
  cyc.validate();
  std::vector<double> a(cyc.v.size(), 0.0);
  const double dt = cyc.dt();
  for (std::size_t k = 1; k < cyc.v.size(); ++k)
    a[k] = (cyc.v[k] - cyc.v[k - 1]) / dt;
  return a;
}

/// Per-sample wheel demand over a cycle.
inline std::vector<WheelDemand> cycle_to_wheel(const VehicleParams& p,
                                               const DriveCycle& cyc) {
  p.validate();
  const std::vector<double> a = cycle_accelerations(cyc);
  std::vector<WheelDemand> out;
  out.reserve(cyc.v.size());
  for (std::size_t k = 0; k < cyc.v.size(); ++k)
    out.push_back(road_load_demand(p, cyc.v[k], a[k]));
  return out;
}

/// Trapezoidal cycle distance in km.
inline double cycle_distance_km(const DriveCycle& cyc) {
  cyc.validate();
  const double dt = cyc.dt();
  double s = 0.0;
  for (std::size_t k = 1; k < cyc.v.size(); ++k)
    s += 0.5 * (cyc.v[k] + cyc.v[k - 1]) * dt;
  return s / 1000.0;
}

/// Loads a cycle from CSV with header "t_s,v_kmh"; '#' starts a comment.
inline DriveCycle load_cycle_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::config, "load_cycle_csv: cannot open " + path);
  DriveCycle cyc;
  std::string line;
  bool header_seen = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      require(line == "t_s,v_kmh", errc::config,
              "load_cycle_csv: expected header 't_s,v_kmh'");
      header_seen = true;
      continue;
    }
    std::istringstream ls(line);
    std::string cell;
    double vals[2];
    for (int k = 0; k < 2; ++k) {
      require(static_cast<bool>(std::getline(ls, cell, ',')), errc::config,
              "load_cycle_csv: short row at line " + std::to_string(lineno));
      std::size_t pos = 0;
      vals[k] = std::stod(cell, &pos);
      require(pos == cell.size(), errc::config,
              "load_cycle_csv: bad number at line " + std::to_string(lineno));
    }
    require(!std::getline(ls, cell, ','), errc::config,
            "load_cycle_csv: extra column at line " + std::to_string(lineno));
    cyc.t.push_back(vals[0]);
    cyc.v.push_back(kmh_to_ms(vals[1]));
  }
  cyc.validate();
  return cyc;
}

}  // namespace gearopt
