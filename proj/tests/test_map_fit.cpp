#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "test_support.hpp"

using namespace gearopt;
using testsupport::error_code_of;
using testsupport::exact_node_map;
using testsupport::random_model;
using testsupport::RandomModel;
using testsupport::reference_c;
using testsupport::reference_d;
using testsupport::reference_limits;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::filesystem::path temp_csv(const char* stem) {
  return std::filesystem::temp_directory_path() /
         (std::string("gearopt_test_") + stem + ".csv");
}

}  // namespace

TEST_CASE("parabola interpolation through three anchors is exact") {
  std::mt19937_64 rng(8101);
  std::uniform_real_distribution<double> speed(20.0, 1200.0);
  for (int k = 0; k < 50; ++k) {
    const RandomModel m = random_model(rng);
    double w2 = speed(rng), w3 = speed(rng);
    if (std::abs(w2 - w3) < 1.0) continue;
    const DesignPoint p1{0.0, 0.0, 0.0};
    const DesignPoint p2{optimal_torque(m.d, w2), w2, 0.9};
    const DesignPoint p3{optimal_torque(m.d, w3), w3, 0.9};
    const OolCoefficients d = solve_d(p1, p2, p3);
    REQUIRE_THAT(d.d00, WithinAbs(0.0, 1e-9));
    REQUIRE_THAT(d.d01, WithinRel(m.d.d01, 1e-9));
    REQUIRE_THAT(d.d02, WithinRel(m.d.d02, 1e-9));
  }

  // Non-zero constant term from three off-origin anchors.
  const OolCoefficients d0 = OolCoefficients::make(4.0, 9.0, 5e-4);
  const DesignPoint q1{optimal_torque(d0, 50.0), 50.0, 0.9};
  const DesignPoint q2{optimal_torque(d0, 300.0), 300.0, 0.9};
  const DesignPoint q3{optimal_torque(d0, 700.0), 700.0, 0.9};
  const OolCoefficients dr = solve_d(q1, q2, q3);
  REQUIRE_THAT(dr.d00, WithinRel(4.0, 1e-9));
  REQUIRE_THAT(dr.d01, WithinRel(9.0, 1e-9));
  REQUIRE_THAT(dr.d02, WithinRel(5e-4, 1e-9));

  REQUIRE(error_code_of([] {
            solve_d({0, 0, 0}, {40.0, 146.2, 0.958}, {50.0, 146.2, 0.97});
          }) == errc::singular_system);
  // Anchors whose torque barely grows with speed imply a negative curvature.
  REQUIRE(error_code_of([] {
            solve_d({0, 0, 0}, {10.0, 100.0, 0.9},
                    {std::sqrt(120.0), 500.0, 0.9});
          }) == errc::infeasible);
}

TEST_CASE("loss scales recover from two on-line efficiencies") {
  std::mt19937_64 rng(8102);
  std::uniform_real_distribution<double> speed(20.0, 1200.0);
  for (int k = 0; k < 50; ++k) {
    const RandomModel m = random_model(rng);
    double w2 = speed(rng), w3 = speed(rng);
    if (std::abs(w2 - w3) < 1.0) continue;
    const DesignPoint p2{optimal_torque(m.d, w2), w2,
                         ool_efficiency(m.c, w2)};
    const DesignPoint p3{optimal_torque(m.d, w3), w3,
                         ool_efficiency(m.c, w3)};
    const auto [c20, c11] = solve_c(m.d, p2, p3);
    REQUIRE_THAT(c20, WithinRel(m.c.c20, 1e-9));
    REQUIRE_THAT(c11, WithinAbs(m.c.c11, 1e-9 * std::max(m.c.c11, 1e-3)));
  }

  REQUIRE(error_code_of([] {
            solve_c(OolCoefficients::make(0, 10, 1e-4), {40, 100, 0.95},
                    {50, 200, 1.0});
          }) == errc::infeasible);
}

TEST_CASE("three published design points reproduce the published model") {
  // Design speeds given in rpm; on-line torques regenerated from the
  // published parabola (the catalogue rounds torques to three figures).
  const double w2 = rpm_to_rad_s(1396.0);
  const double w3 = rpm_to_rad_s(4886.0);
  const OolCoefficients d_ref = reference_d();
  const DesignPoint p1{0.0, 0.0, 0.0};
  const DesignPoint p2{optimal_torque(d_ref, w2), w2, 0.958};
  const DesignPoint p3{optimal_torque(d_ref, w3), w3, 0.970};
  REQUIRE_THAT(p2.tau, WithinRel(41.667811396254464, 1e-12));
  REQUIRE_THAT(p3.tau, WithinRel(78.7059149302008, 1e-12));

  const OolCoefficients d = solve_d(p1, p2, p3);
  REQUIRE_THAT(d.d01, WithinRel(d_ref.d01, 1e-12));
  REQUIRE_THAT(d.d02, WithinRel(d_ref.d02, 1e-12));

  const auto [c20, c11] = solve_c(d, p2, p3);
  REQUIRE_THAT(c20, WithinRel(0.049211910088860104, 1e-12));
  REQUIRE_THAT(c11, WithinRel(0.015787847825634076, 1e-12));
  const LossCoefficients c = c_from_d(d, c20, c11);
  REQUIRE_THAT(c.c01, WithinRel(0.5799279120601541, 1e-12));
  REQUIRE_THAT(c.c02, WithinRel(3.102712507282452e-05, 1e-12));

  // Every recovered coefficient lands within 2% of the published table.
  const LossCoefficients c_ref = reference_c();
  REQUIRE_THAT(c20, WithinRel(c_ref.c20, 0.02));
  REQUIRE_THAT(c11, WithinRel(c_ref.c11, 0.02));
  REQUIRE_THAT(c.c01, WithinRel(c_ref.c01, 0.02));
  REQUIRE_THAT(c.c02, WithinRel(c_ref.c02, 0.02));
}

TEST_CASE("rounded three-figure torques are too coarse for the curvature") {
  // Using the catalogue's rounded torques (41.7, 78.7 Nm) instead of the
  // regenerated on-line values shifts the curvature coefficient by almost
  // nine percent: the interpolation is ill-conditioned in its last pivot.
  const OolCoefficients d =
      solve_d({0, 0, 0}, {41.7, 146.2, 0.958}, {78.7, 511.7, 0.970});
  const OolCoefficients d_ref = reference_d();
  REQUIRE_THAT(d.d01 / d_ref.d01 - 1.0,
               WithinAbs(0.0021656107832144222, 1e-12));
  REQUIRE_THAT(d.d02 / d_ref.d02 - 1.0,
               WithinAbs(-0.08770090931325736, 1e-12));
}

TEST_CASE("map argmax honours validity and breaks ties deterministically") {
  EfficiencyMap m;
  m.omega_grid = {0.0, 100.0, 200.0};
  m.tau_grid = {0.0, 10.0, 20.0};
  m.eta.assign(3, std::vector<double>(3, 0.5));
  m.valid.assign(3, std::vector<char>(3, 1));
  m.eta[0][2] = 0.99;  // zero-speed row is excluded from the argmax
  m.eta[1][0] = 0.99;  // zero-torque column likewise
  m.validate();

  const DesignPoint tie = map_argmax(m);  // all remaining cells tie at 0.5
  REQUIRE(tie.omega == 100.0);
  REQUIRE(tie.tau == 10.0);

  m.eta[2][1] = 0.8;
  m.eta[2][2] = 0.9;
  m.valid[2][2] = 0;  // masked cells never win
  const DesignPoint best = map_argmax(m);
  REQUIRE(best.omega == 200.0);
  REQUIRE(best.tau == 10.0);
  REQUIRE(best.eta == 0.8);

  const auto col = column_argmax(m, 2);
  REQUIRE(col.has_value());
  REQUIRE(col->tau == 10.0);
  // column_argmax filters torque only; speed filtering is the caller's job.
  const auto col0 = column_argmax(m, 0);
  REQUIRE(col0.has_value());
  REQUIRE(col0->tau == 20.0);
  REQUIRE(col0->eta == 0.99);

  EfficiencyMap empty = m;
  for (auto& row : empty.valid) row.assign(row.size(), 0);
  REQUIRE_FALSE(column_argmax(empty, 1).has_value());
  REQUIRE(error_code_of([&] { map_argmax(empty); }) == errc::infeasible);
}

TEST_CASE("synthetic exact-node maps round-trip the generating model") {
  std::mt19937_64 rng(8103);
  for (int k = 0; k < 25; ++k) {
    const RandomModel m = random_model(rng);
    const EfficiencyMap map = exact_node_map(m, rng);
    const FitResult fit = fit_reference_map(map);
    REQUIRE_THAT(fit.c.c20, WithinRel(m.c.c20, 1e-6));
    REQUIRE_THAT(fit.c.c01, WithinRel(m.c.c01, 1e-6));
    REQUIRE_THAT(fit.c.c02, WithinRel(m.c.c02, 1e-6));
    REQUIRE_THAT(fit.c.c11, WithinAbs(m.c.c11, 1e-6 * std::max(m.c.c11, 1.0)));
    REQUIRE_THAT(fit.c.c00, WithinAbs(0.0, 1e-6));
    REQUIRE(fit.rmse < 1e-9);
    // The map's global best cell is the optimal-line node at top speed.
    REQUIRE_THAT(fit.design_points[2].omega,
                 WithinRel(map.omega_grid.back(), 1e-12));
  }
}

TEST_CASE("fit recovers the reference machine from its reconstructed map") {
  const LossCoefficients c = reference_c();
  const MachineLimits lim = reference_limits();
  const double w_top = rpm_to_rad_s(4886.0);

  // Speed grid up to the calibrated range; torque grid seeded with the
  // exact optimal torques so the map carries on-line nodes.
  std::vector<double> omega_grid = linspace_grid(w_top, 16);
  std::vector<double> taus;
  for (double w : omega_grid)
    if (w > 0.0) taus.push_back(optimal_torque(c, w));
  for (double t : linspace_grid(240.0, 13)) taus.push_back(t);
  std::sort(taus.begin(), taus.end());
  std::vector<double> tau_grid;
  for (double t : taus)
    if (tau_grid.empty() || t - tau_grid.back() > 1e-6) tau_grid.push_back(t);

  const EfficiencyMap map = reconstruct_map(c, lim, omega_grid, tau_grid);
  const FitResult fit = fit_reference_map(map);
  REQUIRE_THAT(fit.c.c20, WithinRel(c.c20, 1e-6));
  REQUIRE_THAT(fit.c.c01, WithinRel(c.c01, 1e-6));
  REQUIRE_THAT(fit.c.c02, WithinRel(c.c02, 1e-6));
  REQUIRE_THAT(fit.c.c11, WithinRel(c.c11, 1e-6));

  const PeakEfficiencyPoint peak = peak_efficiency_point(fit);
  REQUIRE(peak.at_range_boundary);
  REQUIRE_THAT(rad_s_to_rpm(peak.omega), WithinRel(4886.0, 1e-3));
  REQUIRE_THAT(peak.eta, WithinRel(ool_efficiency(c, peak.omega), 1e-9));
  REQUIRE_THAT(peak.eta, WithinAbs(0.970, 1e-3));
}

TEST_CASE("fit rejects maps that cannot pin a second anchor") {
  const LossCoefficients c = reference_c();
  EfficiencyMap m;
  m.omega_grid = {300.0};
  m.tau_grid = {20.0, 40.0, 60.0};
  m.eta.assign(1, std::vector<double>(3, 0.0));
  m.valid.assign(1, std::vector<char>(3, 1));
  for (std::size_t j = 0; j < 3; ++j)
    m.eta[0][j] = efficiency(c, m.tau_grid[j], 300.0);

  // Only one speed column: the argmax occupies it, leaving no candidate.
  REQUIRE(error_code_of([&] { fit_reference_map(m); }) == errc::infeasible);
  // The first anchor is pinned to the origin by contract.
  REQUIRE(error_code_of([&] {
            fit_second_point(m, {1.0, 0.0, 0.0}, map_argmax(m));
          }) == errc::infeasible);
}

TEST_CASE("reconstruction masks zero power and the torque envelope") {
  const LossCoefficients c = reference_c();
  const MachineLimits lim = reference_limits();
  const EfficiencyMap m = reconstruct_map(
      c, lim, linspace_grid(lim.omega_max, 30), linspace_grid(260.0, 27));

  REQUIRE(m.limits.has_value());
  for (std::size_t j = 0; j < m.n_tau(); ++j) REQUIRE_FALSE(m.valid[0][j]);
  for (std::size_t i = 0; i < m.n_omega(); ++i) {
    REQUIRE_FALSE(m.valid[i][0]);
    for (std::size_t j = 0; j < m.n_tau(); ++j) {
      const double w = m.omega_grid[i], t = m.tau_grid[j];
      const bool inside = w > 0.0 && t > 0.0 &&
                          t <= torque_envelope(lim, w, Rating::peak);
      REQUIRE(static_cast<bool>(m.valid[i][j]) == inside);
      if (m.valid[i][j]) REQUIRE_THAT(m.eta[i][j], WithinRel(efficiency(c, t, w), 1e-15));
    }
  }
  // 260 Nm exceeds the peak torque everywhere.
  for (std::size_t i = 0; i < m.n_omega(); ++i)
    REQUIRE_FALSE(m.valid[i][m.n_tau() - 1]);

  // Over the full speed range the best cell climbs the power-limited
  // envelope: it sits far above the calibrated anchor speed and beats the
  // calibrated best-line efficiency. Range-capped maps keep the anchor.
  const DesignPoint wide = map_argmax(m);
  REQUIRE(wide.omega > rpm_to_rad_s(10000.0));
  REQUIRE(wide.eta > ool_efficiency(c, 511.7));

  const EfficiencyMap capped =
      reconstruct_map(c, lim, linspace_grid(rpm_to_rad_s(4886.0), 30),
                      linspace_grid(250.0, 126));
  const DesignPoint anchor = map_argmax(capped);
  REQUIRE_THAT(anchor.omega, WithinRel(rpm_to_rad_s(4886.0), 1e-12));
  REQUIRE_THAT(anchor.tau, WithinAbs(78.7, 2.0));  // one torque-grid step

  REQUIRE(error_code_of([] { linspace_grid(100.0, 1); }) == errc::config);
  REQUIRE(error_code_of([] { linspace_grid(0.0, 5); }) == errc::config);
}

TEST_CASE("map files round-trip losslessly") {
  const LossCoefficients c = reference_c();
  const MachineLimits lim = reference_limits();
  const EfficiencyMap m = reconstruct_map(
      c, lim, linspace_grid(rpm_to_rad_s(4886.0), 7), linspace_grid(240.0, 9));
  const auto path = temp_csv("map_roundtrip");
  save_map_csv(m, path.string());
  const EfficiencyMap r = load_map_csv(path.string());

  REQUIRE(r.n_omega() + 1 == m.n_omega());  // the all-masked w = 0 row drops out
  REQUIRE(r.n_tau() + 1 == m.n_tau());      // likewise the tau = 0 column
  for (std::size_t i = 0; i < r.n_omega(); ++i) {
    REQUIRE_THAT(r.omega_grid[i], WithinRel(m.omega_grid[i + 1], 1e-15));
    for (std::size_t j = 0; j < r.n_tau(); ++j) {
      REQUIRE(r.tau_grid[j] == m.tau_grid[j + 1]);
      REQUIRE(r.valid[i][j] == m.valid[i + 1][j + 1]);
      if (r.valid[i][j]) REQUIRE(r.eta[i][j] == m.eta[i + 1][j + 1]);
    }
  }
  REQUIRE(r.limits.has_value());
  REQUIRE(r.limits->tau_cont == lim.tau_cont);
  REQUIRE(r.limits->tau_peak == lim.tau_peak);
  REQUIRE_THAT(r.limits->omega_max, WithinRel(lim.omega_max, 1e-15));
  REQUIRE(r.limits->p_peak == lim.p_peak);
  std::filesystem::remove(path);
}

TEST_CASE("map loader rejects malformed files") {
  REQUIRE(error_code_of([] { load_map_csv("/nonexistent/nowhere.csv"); }) ==
          errc::config);

  auto write_file = [](const std::filesystem::path& p, const char* text) {
    std::ofstream out(p);
    out << text;
  };
  const auto path = temp_csv("map_malformed");

  write_file(path, "speed,torque,eta\n100,10,0.9\n");
  REQUIRE(error_code_of([&] { load_map_csv(path.string()); }) == errc::config);

  write_file(path, "omega_rpm,tau_nm,eta\n100,10,0.9\n100,10,0.91\n");
  REQUIRE(error_code_of([&] { load_map_csv(path.string()); }) == errc::config);

  write_file(path, "omega_rpm,tau_nm,eta\n100,10,0.9,7\n");
  REQUIRE(error_code_of([&] { load_map_csv(path.string()); }) == errc::config);

  write_file(path, "omega_rpm,tau_nm,eta\n100,10,1.5\n");
  REQUIRE(error_code_of([&] { load_map_csv(path.string()); }) == errc::config);

  write_file(path, "omega_rpm,tau_nm,eta\n");
  REQUIRE(error_code_of([&] { load_map_csv(path.string()); }) == errc::config);
  std::filesystem::remove(path);
}
