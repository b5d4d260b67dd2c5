#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "test_support.hpp"

using namespace gearopt;
using testsupport::error_code_of;
using testsupport::reference_c;
using testsupport::reference_d;
using testsupport::reference_limits;
using testsupport::reference_vehicle;
using testsupport::trapezoid_cycle;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

DriveCycle constant_cycle(double v_kmh, int seconds) {
  DriveCycle cyc;
  for (int k = 0; k <= seconds; ++k) {
    cyc.t.push_back(static_cast<double>(k));
    cyc.v.push_back(kmh_to_ms(v_kmh));
  }
  return cyc;
}

}  // namespace

TEST_CASE("constant cruise reduces to a single operating point") {
  const LossCoefficients c = reference_c();
  const OolCoefficients d = reference_d();
  const MachineLimits lim = reference_limits();
  const VehicleParams p = reference_vehicle();
  const DriveCycle cyc = constant_cycle(50.0, 60);

  const double gamma = 9.665;
  const CycleReport rep =
      average_efficiency(c, d, lim, p, cyc, RatioPolicy::fixed, gamma);

  const WheelDemand wd = road_load_stationary(p, kmh_to_ms(50.0));
  const MachinePointDemand m = wheel_to_machine(wd, gamma, p.eta_t);
  const double eta_point = efficiency(c, m.tau_m, m.omega_m);
  REQUIRE_THAT(rep.eta_avg_motoring, WithinRel(eta_point, 1e-12));
  REQUIRE_THAT(rep.eta_avg_combined, WithinRel(eta_point, 1e-12));

  REQUIRE(rep.samples_used == 61);
  REQUIRE(rep.clamp_events == 0);
  REQUIRE(rep.envelope_violations == 0);
  REQUIRE(rep.regen_zeroed_samples == 0);
  REQUIRE(rep.cvt_ratios_raw.empty());
  REQUIRE(rep.mean_cvt_ratio == 0.0);

  // 61 power samples, 60 trapezoid intervals: the bookkeeping keeps the
  // sample/interval distinction explicit.
  const double p_ac = m.tau_m * m.omega_m + loss_power(c, m.tau_m, m.omega_m);
  const double dist_km = 60.0 * kmh_to_ms(50.0) / 1000.0;
  REQUIRE_THAT(rep.distance_km, WithinRel(dist_km, 1e-12));
  REQUIRE_THAT(rep.energy_ac_kwh, WithinRel(j_to_kwh(61.0 * p_ac), 1e-12));
  REQUIRE_THAT(rep.energy_per_100km_kwh,
               WithinRel(j_to_kwh(61.0 * p_ac) / dist_km * 100.0, 1e-12));
}

TEST_CASE("a lossless machine turns every policy into unity efficiency") {
  const LossCoefficients c0 = LossCoefficients::from_active(0, 0, 0, 0, 0);
  const OolCoefficients d0{0.0, 0.0, 0.0};  // ratio-indifferent machine
  const MachineLimits lim = reference_limits();
  const VehicleParams p = reference_vehicle();
  const DriveCycle cyc = trapezoid_cycle(60.0, 10, 70, 6);

  for (RatioPolicy policy : {RatioPolicy::fixed, RatioPolicy::cvt_optimal}) {
    const CycleReport rep =
        average_efficiency(c0, d0, lim, p, cyc, policy, 9.665);
    REQUIRE(rep.eta_avg_motoring == 1.0);
    REQUIRE(rep.eta_avg_combined == 1.0);
    REQUIRE(rep.energy_ac_kwh == rep.energy_mech_kwh);
    REQUIRE(rep.regen_zeroed_samples == 0);
  }

  // The CVT leg had no usable optimum: every engaged sample parked
  // mid-window without counting as a clamp.
  const CycleReport cvt =
      average_efficiency(c0, d0, lim, p, cyc, RatioPolicy::cvt_optimal);
  REQUIRE(cvt.clamp_events == 0);
  REQUIRE(cvt.cvt_ratios_raw.size() == cvt.samples_used);
  REQUIRE(cvt.mean_cvt_ratio > 0.0);
}

TEST_CASE("braking energy fully eaten by losses is zeroed, not negated") {
  // A machine with an enormous standby loss: every braking sample loses
  // more than it could recover.
  const LossCoefficients c = LossCoefficients::from_active(30e3, 0, 0, 0, 0.01);
  const MachineLimits lim = reference_limits();
  const VehicleParams p = reference_vehicle();
  const DriveCycle cyc = trapezoid_cycle(60.0, 10, 20, 6);

  std::vector<TraceRow> trace;
  const CycleReport rep = average_efficiency(c, reference_d(), lim, p, cyc,
                                             RatioPolicy::fixed, 9.665, &trace);
  REQUIRE(rep.regen_zeroed_samples > 0);
  REQUIRE(rep.eta_avg_combined < rep.eta_avg_motoring);
  REQUIRE(trace.size() == rep.samples_used);

  std::size_t zeroed = 0;
  for (const TraceRow& row : trace)
    if (row.tau_m < 0.0 && row.p_ac == 0.0) {
      REQUIRE(row.eta_m == 0.0);
      ++zeroed;
    }
  REQUIRE(zeroed == rep.regen_zeroed_samples);
}

TEST_CASE("trace rows account for every watt") {
  const LossCoefficients c = reference_c();
  const OolCoefficients d = d_from_c(c);
  const MachineLimits lim = reference_limits();
  const VehicleParams p = reference_vehicle();
  const DriveCycle cyc = trapezoid_cycle(80.0, 12, 40, 8);

  std::vector<TraceRow> trace;
  const CycleReport rep = average_efficiency(c, d, lim, p, cyc,
                                             RatioPolicy::cvt_optimal, 0.0,
                                             &trace);
  REQUIRE(trace.size() == rep.samples_used);

  double loss_sum = 0.0, gap_sum = 0.0, ac_net = 0.0;
  for (const TraceRow& row : trace) {
    const double mech = std::abs(row.tau_m) * row.omega_m;
    const double loss = loss_power(c, row.tau_m, row.omega_m);
    ac_net += row.p_ac;
    if (row.tau_m >= 0.0) {
      gap_sum += row.p_ac - mech;
      loss_sum += loss;
      REQUIRE_THAT(row.p_ac * row.eta_m, WithinRel(mech, 1e-12));
      // Wheel power re-derivable from the row itself.
      REQUIRE_THAT(row.tau_m * row.omega_m * p.eta_t,
                   WithinRel(row.tau_t * row.omega_t, 1e-12));
    } else {
      REQUIRE(row.p_ac <= 0.0);
      REQUIRE_THAT(-row.p_ac, WithinAbs(std::max(0.0, mech - loss), 1e-9));
    }
  }
  REQUIRE_THAT(gap_sum, WithinRel(loss_sum, 1e-9));
  REQUIRE_THAT(rep.energy_ac_kwh, WithinRel(j_to_kwh(ac_net * cyc.dt()), 1e-9));
}

TEST_CASE("chasing the best-efficiency line beats any fixed gear") {
  const LossCoefficients c = reference_c();
  const OolCoefficients d = d_from_c(c);
  const MachineLimits lim = reference_limits();
  const VehicleParams p = reference_vehicle();
  const DriveCycle cyc = trapezoid_cycle(70.0, 10, 45, 7);

  const CycleComparison cmp = compare_policies(c, d, lim, p, cyc, 9.665);
  REQUIRE(cmp.cvt.eta_avg_combined >= cmp.fgt.eta_avg_combined);
  REQUIRE(cmp.delta_pts >= 0.0);
  REQUIRE(cmp.cvt_better);
  REQUIRE_THAT(cmp.delta_pts,
               WithinAbs((cmp.cvt.eta_avg_combined -
                          cmp.fgt.eta_avg_combined) * 100.0,
                         1e-12));

  const SweepResult sweep = fgt_sweep(c, d, lim, p, cyc, 2.0, 12.0, 0.25);
  REQUIRE(cmp.cvt.eta_avg_combined >= sweep.best_eta);
  REQUIRE(sweep.best_eta > cmp.fgt.eta_avg_combined - 1e-12);
}

TEST_CASE("matching the fixed gear to a constant cycle zeroes the gap") {
  const LossCoefficients c = reference_c();
  const OolCoefficients d = d_from_c(c);
  const MachineLimits lim = reference_limits();
  const VehicleParams p = reference_vehicle();
  const DriveCycle cyc = constant_cycle(50.0, 30);

  const WheelDemand wd = road_load_stationary(p, kmh_to_ms(50.0));
  const double g_star =
      optimal_ratio(RatioQuery{wd.tau_t, wd.omega_t, p.eta_t}, d);

  const CycleComparison cmp = compare_policies(c, d, lim, p, cyc, g_star);
  REQUIRE_THAT(cmp.delta_pts, WithinAbs(0.0, 1e-9));
  REQUIRE(cmp.cvt_better);  // zero margin: a tie still favours the variator
  REQUIRE_FALSE(
      compare_policies(c, d, lim, p, cyc, g_star, 3.0).cvt_better);
  REQUIRE(cmp.cvt.clamp_events == 0);
  REQUIRE_THAT(cmp.cvt.mean_cvt_ratio, WithinRel(g_star, 1e-9));
}

TEST_CASE("fixed-gear sweep masks overspeed ratios and keeps the grid") {
  const LossCoefficients c = reference_c();
  const OolCoefficients d = d_from_c(c);
  const MachineLimits lim = reference_limits();
  const VehicleParams p = reference_vehicle();
  const DriveCycle cyc = trapezoid_cycle(60.0, 10, 20, 6);

  // 60 km/h tops out the wheel at ~47.6 rad/s; ratios past ~25 overspeed.
  const SweepResult sweep = fgt_sweep(c, d, lim, p, cyc, 2.0, 30.0, 4.0);
  REQUIRE(sweep.points.size() == 8);
  REQUIRE(sweep.n_feasible == 6);
  for (const SweepPoint& pt : sweep.points) {
    const double omega_top = pt.gamma * kmh_to_ms(60.0) / p.rw;
    REQUIRE(pt.feasible == (omega_top <= lim.omega_max));
    if (!pt.feasible) REQUIRE(pt.eta == 0.0);
  }
  REQUIRE(sweep.best_eta > 0.8);

  // A single-point grid degenerates to the fixed-policy report.
  const SweepResult one = fgt_sweep(c, d, lim, p, cyc, 9.665, 9.665, 0.05);
  REQUIRE(one.points.size() == 1);
  const CycleReport fixed =
      average_efficiency(c, d, lim, p, cyc, RatioPolicy::fixed, 9.665);
  REQUIRE(one.best_eta == fixed.eta_avg_combined);
  REQUIRE(one.best_gamma == 9.665);

  REQUIRE(error_code_of([&] { fgt_sweep(c, d, lim, p, cyc, 40.0, 44.0, 1.0); }) ==
          errc::infeasible);
  REQUIRE(error_code_of([&] { fgt_sweep(c, d, lim, p, cyc, 5.0, 4.0, 1.0); }) ==
          errc::config);
}

TEST_CASE("idle samples carry no energy and empty cycles are rejected") {
  const LossCoefficients c = reference_c();
  const OolCoefficients d = reference_d();
  const MachineLimits lim = reference_limits();
  const VehicleParams p = reference_vehicle();

  const DriveCycle trap = trapezoid_cycle(50.0, 8, 10, 5);
  const CycleReport rep =
      average_efficiency(c, d, lim, p, trap, RatioPolicy::fixed, 9.665);
  REQUIRE(rep.samples_used < trap.v.size());  // standstill heads and tails

  DriveCycle parked;
  for (int k = 0; k < 5; ++k) {
    parked.t.push_back(static_cast<double>(k));
    parked.v.push_back(0.0);
  }
  REQUIRE(error_code_of([&] {
            average_efficiency(c, d, lim, p, parked, RatioPolicy::fixed, 9.665);
          }) == errc::infeasible);

  REQUIRE(error_code_of([&] {
            average_efficiency(c, d, lim, p, trap, RatioPolicy::fixed, 0.0);
          }) == errc::config);
}

TEST_CASE("reports are deterministic across repeated runs") {
  const LossCoefficients c = reference_c();
  const OolCoefficients d = d_from_c(c);
  const MachineLimits lim = reference_limits();
  const VehicleParams p = reference_vehicle();
  const DriveCycle cyc = trapezoid_cycle(75.0, 11, 33, 9);

  const CycleReport a =
      average_efficiency(c, d, lim, p, cyc, RatioPolicy::cvt_optimal);
  const CycleReport b =
      average_efficiency(c, d, lim, p, cyc, RatioPolicy::cvt_optimal);
  REQUIRE(a.eta_avg_motoring == b.eta_avg_motoring);
  REQUIRE(a.eta_avg_combined == b.eta_avg_combined);
  REQUIRE(a.energy_ac_kwh == b.energy_ac_kwh);
  REQUIRE(a.energy_mech_kwh == b.energy_mech_kwh);
  REQUIRE(a.energy_per_100km_kwh == b.energy_per_100km_kwh);
  REQUIRE(a.mean_cvt_ratio == b.mean_cvt_ratio);
  REQUIRE(a.cvt_ratios_raw == b.cvt_ratios_raw);
  REQUIRE(a.cvt_ratios_traction == b.cvt_ratios_traction);
  REQUIRE(a.samples_used == b.samples_used);
  REQUIRE(a.clamp_events == b.clamp_events);
}
