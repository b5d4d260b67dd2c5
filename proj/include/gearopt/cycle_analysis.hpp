#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "gearopt/loss_model.hpp"
#include "gearopt/numeric.hpp"
#include "gearopt/ratio_opt.hpp"
#include "gearopt/vehicle.hpp"

// Drive-cycle energy accounting for a machine behind either a fixed-ratio
// gearbox or a continuously variable transmission that chases the machine's
// best-efficiency line sample by sample.
//
// Averages are energy-weighted, never arithmetic means of efficiencies:
//   eta_motoring = (machine shaft energy out) / (electrical energy in)
//   eta_combined = (shaft out + recovered electrical) /
//                  (electrical in + shaft energy absorbed)
// Idle samples (zero wheel power) carry no energy and are skipped.

namespace gearopt {

enum class RatioPolicy { fixed, cvt_optimal };

/// One engaged sample of the cycle simulation, for trace output.
struct TraceRow {
  double t = 0.0;        // s
  double v = 0.0;        // m/s
  double omega_t = 0.0;  // wheel speed, rad/s
  double tau_t = 0.0;    // wheel torque through the machine, Nm
  double gamma = 0.0;    // transmission ratio used
  double omega_m = 0.0;  // machine speed, rad/s
  double tau_m = 0.0;    // machine torque, Nm
  double eta_m = 0.0;    // machine efficiency at the sample (0 if zeroed)
  double p_ac = 0.0;     // electrical power, W (negative = recovered)
};

struct CycleReport {
  double eta_avg_motoring = 0.0;
  double eta_avg_combined = 0.0;
  double energy_ac_kwh = 0.0;        // net electrical energy consumed
  double energy_mech_kwh = 0.0;      // net machine shaft energy delivered
  double energy_per_100km_kwh = 0.0; // net electrical energy per 100 km
  double distance_km = 0.0;
  std::size_t samples_used = 0;          // engaged (non-idle) samples
  std::size_t clamp_events = 0;          // CVT ratio pinned to its window
  std::size_t envelope_violations = 0;   // machine point beyond peak envelope
  std::size_t regen_zeroed_samples = 0;  // braking samples fully eaten by loss

  // Raw per-sample optimal ratios (before clamping), CVT policy only.
  std::vector<double> cvt_ratios_raw;       // every engaged sample
  std::vector<double> cvt_ratios_traction;  // traction samples only
  double mean_cvt_ratio = 0.0;              // mean of cvt_ratios_raw
};

namespace detail {

/// Ratio window keeping the machine inside its torque and speed caps.
struct RatioWindow {
  double lo = 0.0;
  double hi = 0.0;
};

inline RatioWindow ratio_window(const WheelDemand& wd, double eta_t,
                                const MachineLimits& lim) {
  RatioWindow w;
  w.hi = lim.omega_max / wd.omega_t;
  w.lo = wd.tau_t >= 0.0 ? wd.tau_t / (eta_t * lim.tau_peak)
                         : -wd.tau_t * eta_t / lim.tau_peak;
  return w;
}

}  // namespace detail

/// Simulates one cycle under the given ratio policy and returns the
/// energy-weighted efficiency report. For the fixed policy gamma_fixed must
/// be positive; for the CVT policy the parabola coefficients steer the
/// per-sample ratio, clamped to the machine's torque/speed window.
inline CycleReport average_efficiency(const LossCoefficients& c,
                                      const OolCoefficients& d,
                                      const MachineLimits& lim,
                                      const VehicleParams& p,
                                      const DriveCycle& cyc, RatioPolicy policy,
                                      double gamma_fixed = 0.0,
                                      std::vector<TraceRow>* trace = nullptr) {
  lim.validate();
  if (policy == RatioPolicy::fixed)
    require(gamma_fixed > 0.0, errc::config,
            "average_efficiency: fixed policy needs a positive ratio");

  const std::vector<WheelDemand> wheel = cycle_to_wheel(p, cyc);
  const double dt = cyc.dt();

  CycleReport rep;
  rep.distance_km = cycle_distance_km(cyc);
  if (trace) trace->clear();

  // Per-sample power contributions, summed pairwise for run-to-run
  // determinism regardless of accumulation order.
  std::vector<double> p_mech_out, p_ac_in, p_mech_in, p_ac_out;

  for (std::size_t k = 0; k < wheel.size(); ++k) {
    const WheelDemand& wd = wheel[k];
    if (wd.omega_t <= 0.0 || wd.tau_t == 0.0) continue;  // idle: no energy
    ++rep.samples_used;

    double gamma = gamma_fixed;
    if (policy == RatioPolicy::cvt_optimal) {
      const detail::RatioWindow win = detail::ratio_window(wd, p.eta_t, lim);
      double raw;
      try {
        raw = optimal_ratio(RatioQuery{wd.tau_t, wd.omega_t, p.eta_t}, d);
      } catch (const Error& e) {
        if (e.code() != errc::infeasible &&
            e.code() != errc::closed_form_degenerate &&
            e.code() != errc::numeric_validation)
          throw;
        // Lossless or otherwise ratio-indifferent machine: park mid-window.
        raw = std::sqrt(std::max(win.lo, 1e-12) * win.hi);
      }
      rep.cvt_ratios_raw.push_back(raw);
      if (!wd.braking) rep.cvt_ratios_traction.push_back(raw);
      if (win.lo > win.hi) {
        gamma = win.hi;  // demand exceeds the envelope at every ratio
        ++rep.clamp_events;
      } else {
        gamma = std::clamp(raw, win.lo, win.hi);
        if (gamma != raw) ++rep.clamp_events;
      }
    }

    const MachinePointDemand m = wheel_to_machine(wd, gamma, p.eta_t);
    const double abs_tau = std::abs(m.tau_m);
    const double mech = abs_tau * m.omega_m;  // shaft power magnitude, W
    const double loss = loss_power(c, abs_tau, m.omega_m);
    if (check_envelope(lim, MachinePoint{abs_tau, m.omega_m}, Rating::peak) !=
        EnvelopeStatus::ok)
      ++rep.envelope_violations;

    double eta_m = 0.0;
    double p_ac = 0.0;
    if (m.tau_m >= 0.0) {
      p_ac = mech + loss;
      eta_m = mech / p_ac;
      p_mech_out.push_back(mech);
      p_ac_in.push_back(p_ac);
    } else {
      double recovered = mech - loss;
      if (recovered < 0.0) {
        recovered = 0.0;
        ++rep.regen_zeroed_samples;
      } else {
        eta_m = recovered / mech;
      }
      p_ac = -recovered;
      p_mech_in.push_back(mech);
      p_ac_out.push_back(recovered);
    }

    if (trace)
      trace->push_back(TraceRow{cyc.t[k], cyc.v[k], wd.omega_t, wd.tau_t,
                                gamma, m.omega_m, m.tau_m, eta_m, p_ac});
  }

  const double e_mech_out = pairwise_sum(p_mech_out) * dt;
  const double e_ac_in = pairwise_sum(p_ac_in) * dt;
  const double e_mech_in = pairwise_sum(p_mech_in) * dt;
  const double e_ac_out = pairwise_sum(p_ac_out) * dt;

  require(e_ac_in > 0.0, errc::infeasible,
          "average_efficiency: cycle draws no traction energy");
  rep.eta_avg_motoring = e_mech_out / e_ac_in;
  rep.eta_avg_combined = (e_mech_out + e_ac_out) / (e_ac_in + e_mech_in);
  rep.energy_ac_kwh = j_to_kwh(e_ac_in - e_ac_out);
  rep.energy_mech_kwh = j_to_kwh(e_mech_out - e_mech_in);
  rep.energy_per_100km_kwh =
      rep.distance_km > 0.0 ? rep.energy_ac_kwh / rep.distance_km * 100.0 : 0.0;
  if (!rep.cvt_ratios_raw.empty())
    rep.mean_cvt_ratio = pairwise_sum(rep.cvt_ratios_raw) /
                         static_cast<double>(rep.cvt_ratios_raw.size());
  return rep;
}

/// Side-by-side fixed-gear vs CVT comparison on one cycle.
struct CycleComparison {
  CycleReport fgt;
  CycleReport cvt;
  double delta_pts = 0.0;  // combined-efficiency gain, percentage points
  bool cvt_better = false;
};

inline CycleComparison compare_policies(const LossCoefficients& c,
                                        const OolCoefficients& d,
                                        const MachineLimits& lim,
                                        const VehicleParams& p,
                                        const DriveCycle& cyc,
                                        double gamma_fixed,
                                        double margin_pts = 0.0) {
  CycleComparison out;
  out.fgt = average_efficiency(c, d, lim, p, cyc, RatioPolicy::fixed, gamma_fixed);
  out.cvt = average_efficiency(c, d, lim, p, cyc, RatioPolicy::cvt_optimal);
  out.delta_pts =
      (out.cvt.eta_avg_combined - out.fgt.eta_avg_combined) * 100.0;
  out.cvt_better = out.delta_pts >= margin_pts;
  return out;
}

/// One candidate ratio of a fixed-gear sweep.
struct SweepPoint {
  double gamma = 0.0;
  double eta = 0.0;      // energy-weighted combined efficiency
  bool feasible = false; // false when the ratio overspeeds the machine
};

struct SweepResult {
  std::vector<SweepPoint> points;
  double best_gamma = 0.0;
  double best_eta = 0.0;
  std::size_t n_feasible = 0;
};

/// Evaluates the combined cycle efficiency over a grid of fixed ratios.
/// Ratios that would push the machine past its speed cap anywhere on the
/// cycle are marked infeasible and skipped. Ties keep the lowest ratio.
inline SweepResult fgt_sweep(const LossCoefficients& c,
                             const OolCoefficients& d,
                             const MachineLimits& lim, const VehicleParams& p,
                             const DriveCycle& cyc, double gamma_lo = 2.0,
                             double gamma_hi = 12.0, double step = 0.05) {
  require(gamma_lo > 0.0 && gamma_hi >= gamma_lo && step > 0.0, errc::config,
          "fgt_sweep: bad ratio grid");
  cyc.validate();
  p.validate();
  const double v_max = *std::max_element(cyc.v.begin(), cyc.v.end());
  const double omega_t_max = v_max / p.rw;

  SweepResult out;
  const std::size_t n =
      static_cast<std::size_t>((gamma_hi - gamma_lo) / step + 1e-9) + 1;
  out.points.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    SweepPoint pt;
    pt.gamma = gamma_lo + static_cast<double>(k) * step;
    if (pt.gamma * omega_t_max <= lim.omega_max) {
      const CycleReport rep =
          average_efficiency(c, d, lim, p, cyc, RatioPolicy::fixed, pt.gamma);
      pt.eta = rep.eta_avg_combined;
      pt.feasible = true;
      ++out.n_feasible;
      if (out.best_gamma == 0.0 || pt.eta > out.best_eta) {
        out.best_gamma = pt.gamma;
        out.best_eta = pt.eta;
      }
    }
    out.points.push_back(pt);
  }
  require(out.n_feasible > 0, errc::infeasible,
          "fgt_sweep: no feasible ratio on the grid");
  return out;
}

}  // namespace gearopt
