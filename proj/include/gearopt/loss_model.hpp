#pragma once

#include <array>
#include <cmath>
#include <string>

#include "gearopt/errors.hpp"
#include "gearopt/numeric.hpp"

// Analytical electric-machine loss model.
//
// Machine losses are a bilinear polynomial in shaft torque tau and speed
// omega, restricted to the sparse term set {c00, c01, c02, c11, c20}:
//
//   P_loss(tau, omega) = c00 + c01*omega + c02*omega^2
//                      + c11*|tau|*omega + c20*tau^2
//
// Grouping by torque power gives P_loss = a1(w) + a2(w)*|tau| + a3*tau^2,
// which keeps every downstream expression (efficiency, optimal torque,
// optimal-operation-line efficiency) in closed form.

namespace gearopt {

/// Sparse loss-polynomial coefficients. Only the five active terms are
/// stored; construction rejects negative values, and the matrix factory
/// rejects non-zero entries outside the active mask.
struct LossCoefficients {
  double c00 = 0.0;  // W
  double c01 = 0.0;  // W / (rad/s)
  double c02 = 0.0;  // W / (rad/s)^2
  double c11 = 0.0;  // W / (Nm * rad/s)
  double c20 = 0.0;  // W / Nm^2

  static LossCoefficients from_active(double c00, double c01, double c02,
                                      double c11, double c20) {
    for (double v : {c00, c01, c02, c11, c20})
      require(v >= 0.0 && std::isfinite(v), errc::infeasible,
              "loss coefficients must be finite and non-negative");
    return LossCoefficients{c00, c01, c02, c11, c20};
  }

  /// Full 3x3 coefficient matrix c[m][n] (torque power m, speed power n).
  /// Entries outside the active mask must be exactly zero.
  static LossCoefficients from_matrix(const std::array<std::array<double, 3>, 3>& c) {
    for (int m = 0; m < 3; ++m)
      for (int n = 0; n < 3; ++n) {
        const bool active = (m == 0) || (m == 1 && n == 1) || (m == 2 && n == 0);
        require(active || c[m][n] == 0.0, errc::infeasible,
                "non-zero loss coefficient outside the active term set");
      }
    return from_active(c[0][0], c[0][1], c[0][2], c[1][1], c[2][0]);
  }
};

/// Coefficients of beta(w) = d00 + d01*w + d02*w^2, the squared
/// loss-optimal torque as a function of speed (d_ij = c0j / c20).
struct OolCoefficients {
  double d00 = 0.0;  // Nm^2
  double d01 = 0.0;  // Nm^2 / (rad/s)
  double d02 = 0.0;  // Nm^2 / (rad/s)^2

  static OolCoefficients make(double d00, double d01, double d02) {
    for (double v : {d00, d01, d02})
      require(v >= 0.0 && std::isfinite(v), errc::infeasible,
              "ool coefficients must be finite and non-negative");
    require(d01 * d01 - 4.0 * d00 * d02 > 0.0, errc::infeasible,
            "ool coefficients fail the real-roots condition d01^2 > 4*d00*d02");
    return OolCoefficients{d00, d01, d02};
  }
};

/// Machine operating envelope. Torque limits apply below the rated speed;
/// above it the corresponding power limit caps torque.
struct MachineLimits {
  double tau_cont = 0.0;     // Nm
  double tau_peak = 0.0;     // Nm
  double omega_rated = 0.0;  // rad/s
  double omega_max = 0.0;    // rad/s
  double p_cont = 0.0;       // W
  double p_peak = 0.0;       // W

  void validate() const {
    require(tau_cont > 0.0 && tau_peak >= tau_cont, errc::config,
            "machine limits: need 0 < tau_cont <= tau_peak");
    require(omega_rated > 0.0 && omega_max >= omega_rated, errc::config,
            "machine limits: need 0 < omega_rated <= omega_max");
    require(p_cont > 0.0 && p_peak >= p_cont, errc::config,
            "machine limits: need 0 < p_cont <= p_peak");
  }
};

/// One machine shaft operating point. Torque is signed (negative while
/// generating); speed is non-negative.
struct MachinePoint {
  double tau = 0.0;    // Nm
  double omega = 0.0;  // rad/s
};

/// Loss polynomial grouped by torque power at a fixed speed.
struct AlphaTerms {
  double a1 = 0.0;  // W
  double a2 = 0.0;  // W / Nm
  double a3 = 0.0;  // W / Nm^2
};

inline AlphaTerms alpha_terms(const LossCoefficients& c, double omega) {
  require(omega >= 0.0 && std::isfinite(omega), errc::undefined_operating_point,
          "alpha_terms: speed must be non-negative");
  return AlphaTerms{c.c00 + c.c01 * omega + c.c02 * omega * omega,
                    c.c11 * omega, c.c20};
}

/// Total machine loss power in W. Symmetric in the sign of tau: losses are
/// identical when motoring and generating at the same |tau| and omega.
inline double loss_power(const LossCoefficients& c, double tau, double omega) {
  const AlphaTerms a = alpha_terms(c, omega);
  const double t = std::abs(tau);
  return a.a1 + a.a2 * t + a.a3 * t * t;
}

/// Motoring efficiency: shaft output over electrical input.
/// Defined only for positive mechanical power; generating-side bookkeeping
/// belongs to the drive-cycle analysis.
inline double efficiency(const LossCoefficients& c, double tau, double omega) {
  require(tau > 0.0 && omega > 0.0, errc::undefined_operating_point,
          "efficiency is undefined at zero or negative mechanical power");
  const double p = tau * omega;
  return p / (p + loss_power(c, tau, omega));
}

inline OolCoefficients d_from_c(const LossCoefficients& c) {
  require(c.c20 > 0.0, errc::infeasible, "d_from_c requires c20 > 0");
  return OolCoefficients::make(c.c00 / c.c20, c.c01 / c.c20, c.c02 / c.c20);
}

inline LossCoefficients c_from_d(const OolCoefficients& d, double c20, double c11) {
  require(c20 > 0.0, errc::infeasible, "c_from_d requires c20 > 0");
  require(c11 >= 0.0, errc::infeasible, "c_from_d requires c11 >= 0");
  return LossCoefficients::from_active(d.d00 * c20, d.d01 * c20, d.d02 * c20,
                                       c11, c20);
}

inline double beta(const OolCoefficients& d, double omega) {
  return d.d00 + (d.d01 + d.d02 * omega) * omega;
}

/// Loss-optimal torque at a given speed: the torque minimizing loss per unit
/// output, tau*(w) = sqrt(beta(w)).
inline double optimal_torque(const OolCoefficients& d, double omega) {
  require(omega >= 0.0, errc::undefined_operating_point,
          "optimal_torque: speed must be non-negative");
  const double b = beta(d, omega);
  require(b >= 0.0, errc::infeasible, "optimal_torque: negative beta");
  return std::sqrt(b);
}

inline double optimal_torque(const LossCoefficients& c, double omega) {
  return optimal_torque(d_from_c(c), omega);
}

/// Efficiency along the optimal operation line (machine held at tau*(w)).
inline double ool_efficiency(const LossCoefficients& c, double omega) {
  require(omega > 0.0, errc::undefined_operating_point,
          "ool_efficiency: speed must be positive");
  const AlphaTerms a = alpha_terms(c, omega);
  const double tau_star = optimal_torque(c, omega);
  return omega / (omega + 2.0 * a.a3 * tau_star + a.a2);
}

/// Closed-form inverse of the optimal-operation-line efficiency curve:
/// the speed at which ool_efficiency attains the value eta. Evaluated with
/// the full radicand; when d00 = 0 the radicand collapses to a perfect
/// square and the positive square-root branch is taken.
inline double ool_speed_at_efficiency(const LossCoefficients& c, double eta) {
  require(eta > 0.0 && eta < 1.0, errc::undefined_operating_point,
          "ool_speed_at_efficiency: eta must lie in (0, 1)");
  // The defining relation is w*(1/eta - 1 - c11) = 2*c20*tau*(w) with a
  // non-negative right-hand side; the squared form solved below would also
  // admit a spurious positive root when that bracket goes negative.
  require(1.0 / eta - 1.0 - c.c11 > 0.0, errc::infeasible,
          "ool_speed_at_efficiency: eta outside the attainable range");
  const OolCoefficients d = d_from_c(c);
  const double e = eta, e2 = eta * eta;
  const double c11 = c.c11, c20 = c.c20;
  const double radicand = d.d00 * c11 * c11 * e2 + 2.0 * d.d00 * c11 * e2 -
                          2.0 * d.d00 * c11 * e + c20 * c20 * d.d01 * d.d01 * e2 -
                          4.0 * d.d00 * d.d02 * c20 * c20 * e2 + d.d00 * e2 -
                          2.0 * d.d00 * e + d.d00;
  require(radicand >= 0.0, errc::infeasible,
          "ool_speed_at_efficiency: negative radicand");
  const double num = 2.0 * c20 * e * (std::sqrt(radicand) + c20 * d.d01 * e);
  const double den = c11 * c11 * e2 + 2.0 * c11 * e2 - 2.0 * c11 * e -
                     4.0 * d.d02 * c20 * c20 * e2 + e2 - 2.0 * e + 1.0;
  require(std::abs(den) > 1e-300, errc::infeasible,
          "ool_speed_at_efficiency: eta outside the attainable range");
  const double w = num / den;
  require(w > 0.0 && std::isfinite(w), errc::infeasible,
          "ool_speed_at_efficiency: eta outside the attainable range");
  return w;
}

/// Peak of the optimal-operation-line efficiency over (0, omega_hi].
struct PeakEfficiencyPoint {
  double omega = 0.0;  // rad/s
  double tau = 0.0;    // Nm (loss-optimal torque at omega)
  double eta = 0.0;
  bool at_range_boundary = false;  // true when the curve is still rising at omega_hi
};

/// Locates the best OOL efficiency reachable within (0, omega_hi] by direct
/// 1-D maximization, and cross-checks the result against the closed-form
/// curve inverse (the two routes must agree to 1e-6 relative).
///
/// For this coefficient family with d01 > 0 the OOL efficiency rises
/// monotonically toward a finite supremum, so the maximum over a speed range
/// sits at the range's upper end; the caller supplies the range of validity
/// (typically the highest calibrated speed). A flat or unbounded curve
/// (d02 <= 0, or d00 = d01 = 0) has no finite peak structure and is rejected.
inline PeakEfficiencyPoint peak_efficiency_point(const LossCoefficients& c,
                                                 double omega_hi) {
  require(omega_hi > 0.0 && std::isfinite(omega_hi), errc::config,
          "peak_efficiency_point: omega_hi must be positive");
  const OolCoefficients d = d_from_c(c);
  require(d.d02 > 0.0, errc::no_interior_maximum,
          "peak_efficiency_point: d02 = 0, efficiency approaches its "
          "supremum only as speed grows without bound");
  require(d.d01 > 0.0 || d.d00 > 0.0, errc::no_interior_maximum,
          "peak_efficiency_point: constant efficiency curve has no peak");

  const double lo = 1e-9 * omega_hi;
  const double w_star = golden_section_maximize(
      [&](double w) { return ool_efficiency(c, w); }, lo, omega_hi);
  PeakEfficiencyPoint p;
  p.at_range_boundary = w_star > omega_hi * (1.0 - 1e-6);
  p.omega = p.at_range_boundary ? omega_hi : w_star;
  p.tau = optimal_torque(c, p.omega);
  p.eta = ool_efficiency(c, p.omega);

  // Independent route: invert the efficiency curve at the found value and
  // require both to name the same speed.
  const double w_inv = ool_speed_at_efficiency(c, p.eta);
  require(std::abs(w_inv - p.omega) <= 1e-6 * p.omega, errc::numeric_validation,
          "peak_efficiency_point: maximization and curve inverse disagree");
  return p;
}

enum class Rating { continuous, peak };

/// Torque envelope: the rated torque below the rated speed, power-limited
/// above it.
inline double torque_envelope(const MachineLimits& lim, double omega, Rating r) {
  require(omega >= 0.0, errc::undefined_operating_point,
          "torque_envelope: speed must be non-negative");
  const double tau_r = (r == Rating::continuous) ? lim.tau_cont : lim.tau_peak;
  const double p_r = (r == Rating::continuous) ? lim.p_cont : lim.p_peak;
  if (omega <= lim.omega_rated) return tau_r;
  return std::min(tau_r, p_r / omega);
}

enum class EnvelopeStatus { ok, torque_exceeded, speed_exceeded };

/// Envelope check is advisory: callers decide whether a violation is fatal.
inline EnvelopeStatus check_envelope(const MachineLimits& lim,
                                     const MachinePoint& p, Rating r) {
  if (p.omega > lim.omega_max * (1.0 + 1e-12)) return EnvelopeStatus::speed_exceeded;
  if (std::abs(p.tau) > torque_envelope(lim, p.omega, r) * (1.0 + 1e-12))
    return EnvelopeStatus::torque_exceeded;
  return EnvelopeStatus::ok;
}

}  // namespace gearopt
