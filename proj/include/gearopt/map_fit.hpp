#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gearopt/loss_model.hpp"
#include "gearopt/units.hpp"

// Fitting the loss model to an efficiency map.
//
// The model is pinned by three design points: the origin, the map's global
// best-efficiency point, and a second point scanned over the map's speed
// grid. For a candidate second point the squared-optimal-torque parabola is
// interpolated through the three (tau^2, omega) pairs, the two loss scales
// (c20, c11) are solved from the two non-trivial efficiencies, and the
// candidate minimizing the RMS gap between modelled and mapped
// best-efficiency curves wins.

namespace gearopt {

/// A (torque, speed, efficiency) anchor used by the fit.
struct DesignPoint {
  double tau = 0.0;    // Nm
  double omega = 0.0;  // rad/s
  double eta = 0.0;    // efficiency at the point; 0 only at the origin
};

/// Rectangular efficiency map with a validity mask. Grids are strictly
/// ascending; eta[i][j] corresponds to (omega_grid[i], tau_grid[j]).
struct EfficiencyMap {
  std::vector<double> omega_grid;  // rad/s
  std::vector<double> tau_grid;    // Nm
  std::vector<std::vector<double>> eta;
  std::vector<std::vector<char>> valid;
  std::optional<MachineLimits> limits;

  std::size_t n_omega() const { return omega_grid.size(); }
  std::size_t n_tau() const { return tau_grid.size(); }

  void validate() const {
    require(!omega_grid.empty() && !tau_grid.empty(), errc::config,
            "efficiency map: empty grid");
    require(std::is_sorted(omega_grid.begin(), omega_grid.end()) &&
                std::adjacent_find(omega_grid.begin(), omega_grid.end()) ==
                    omega_grid.end(),
            errc::config, "efficiency map: speed grid must be strictly ascending");
    require(std::is_sorted(tau_grid.begin(), tau_grid.end()) &&
                std::adjacent_find(tau_grid.begin(), tau_grid.end()) ==
                    tau_grid.end(),
            errc::config, "efficiency map: torque grid must be strictly ascending");
    require(eta.size() == n_omega() && valid.size() == n_omega(), errc::config,
            "efficiency map: ragged rows");
    for (std::size_t i = 0; i < n_omega(); ++i) {
      require(eta[i].size() == n_tau() && valid[i].size() == n_tau(),
              errc::config, "efficiency map: ragged rows");
      for (std::size_t j = 0; j < n_tau(); ++j)
        if (valid[i][j])
          require(eta[i][j] >= 0.0 && eta[i][j] <= 1.0, errc::config,
                  "efficiency map: eta outside [0, 1]");
    }
  }
};

/// Fit output: the parabola coefficients, the full loss model, the three
/// design points used, and the residual RMS efficiency gap on the map grid.
struct FitResult {
  OolCoefficients d;
  LossCoefficients c;
  std::array<DesignPoint, 3> design_points{};
  double rmse = 0.0;
};

/// Interpolates beta(w) = d00 + d01*w + d02*w^2 through three design points
/// with distinct speeds, so that beta(w_i) = tau_i^2 exactly.
inline OolCoefficients solve_d(const DesignPoint& p1, const DesignPoint& p2,
                               const DesignPoint& p3) {
  const std::array<DesignPoint, 3> ps{p1, p2, p3};
  std::array<std::array<double, 3>, 3> a{};
  std::array<double, 3> b{};
  for (std::size_t i = 0; i < 3; ++i) {
    a[i] = {1.0, ps[i].omega, ps[i].omega * ps[i].omega};
    b[i] = ps[i].tau * ps[i].tau;
  }
  const std::array<double, 3> d = solve_linear<3>(a, b);
  // Tiny negative values from elimination round-off are treated as zero.
  std::array<double, 3> dc = d;
  const double scale = std::max({std::abs(d[0]), std::abs(d[1]), std::abs(d[2]), 1.0});
  for (double& v : dc) {
    require(v > -1e-9 * scale, errc::infeasible,
            "solve_d: design points imply a negative parabola coefficient");
    v = std::max(v, 0.0);
  }
  return OolCoefficients::make(dc[0], dc[1], dc[2]);
}

/// Solves the two loss scales from two on-line design points: at a point on
/// the best-efficiency line, (1/eta - 1)*w = 2*c20*tau*(w) + c11*w.
/// The optimal torques are taken from the already-fitted parabola.
inline std::pair<double, double> solve_c(const OolCoefficients& d,
                                         const DesignPoint& p2,
                                         const DesignPoint& p3) {
  for (const DesignPoint* p : {&p2, &p3}) {
    require(p->omega > 0.0 && p->eta > 0.0 && p->eta < 1.0, errc::infeasible,
            "solve_c: points need positive speed and eta in (0, 1)");
  }
  std::array<std::array<double, 2>, 2> a{};
  std::array<double, 2> b{};
  const std::array<const DesignPoint*, 2> ps{&p2, &p3};
  for (std::size_t i = 0; i < 2; ++i) {
    const double w = ps[i]->omega;
    a[i] = {2.0 * optimal_torque(d, w), w};
    b[i] = (1.0 / ps[i]->eta - 1.0) * w;
  }
  const std::array<double, 2> x = solve_linear<2>(a, b);
  require(x[0] > 0.0, errc::infeasible,
          "solve_c: efficiencies imply a non-positive torque-squared loss scale");
  require(x[1] >= -1e-12, errc::infeasible,
          "solve_c: efficiencies imply a negative bilinear loss scale");
  return {x[0], std::max(x[1], 0.0)};
}

/// Global best-efficiency cell of the map. Ties resolve to the lowest speed,
/// then the lowest torque, so the result is deterministic.
inline DesignPoint map_argmax(const EfficiencyMap& m) {
  bool found = false;
  DesignPoint best;
  for (std::size_t i = 0; i < m.n_omega(); ++i)
    for (std::size_t j = 0; j < m.n_tau(); ++j) {
      if (!m.valid[i][j]) continue;
      if (m.omega_grid[i] <= 0.0 || m.tau_grid[j] <= 0.0) continue;
      if (!found || m.eta[i][j] > best.eta) {
        best = DesignPoint{m.tau_grid[j], m.omega_grid[i], m.eta[i][j]};
        found = true;
      }
    }
  require(found, errc::infeasible, "map_argmax: map has no valid positive-power cell");
  return best;
}

/// Best-efficiency cell within one speed column, or nullopt if the column
/// has no valid positive-torque cell.
inline std::optional<DesignPoint> column_argmax(const EfficiencyMap& m,
                                                std::size_t i) {
  std::optional<DesignPoint> best;
  for (std::size_t j = 0; j < m.n_tau(); ++j) {
    if (!m.valid[i][j] || m.tau_grid[j] <= 0.0) continue;
    if (!best || m.eta[i][j] > best->eta)
      best = DesignPoint{m.tau_grid[j], m.omega_grid[i], m.eta[i][j]};
  }
  return best;
}

namespace detail {

/// Linear interpolation of map efficiency in torque at a fixed speed column.
/// Returns nullopt when tau falls outside the column's contiguous valid
/// span around the bracketing cells.
inline std::optional<double> interp_eta_at_tau(const EfficiencyMap& m,
                                               std::size_t i, double tau) {
  const auto& grid = m.tau_grid;
  auto it = std::lower_bound(grid.begin(), grid.end(), tau);
  if (it == grid.begin()) {
    if (tau < grid.front()) return std::nullopt;
    it = grid.begin() + 1;
  }
  if (it == grid.end()) {
    if (tau > grid.back()) return std::nullopt;
    it = grid.end() - 1;
  }
  const std::size_t j1 = static_cast<std::size_t>(it - grid.begin());
  const std::size_t j0 = j1 - 1;
  if (!m.valid[i][j0] || !m.valid[i][j1]) return std::nullopt;
  const double t = (tau - grid[j0]) / (grid[j1] - grid[j0]);
  return (1.0 - t) * m.eta[i][j0] + t * m.eta[i][j1];
}

}  // namespace detail

/// RMS gap between the model's best-efficiency curve and the map's, sampled
/// on the map's positive speed grid. At each speed the map is evaluated at
/// the model's optimal torque by linear interpolation between the bracketing
/// torque cells; speeds where that torque leaves the valid span are skipped.
inline double ool_rmse(const EfficiencyMap& m, const OolCoefficients& d,
                       const LossCoefficients& c) {
  std::vector<double> sq;
  sq.reserve(m.n_omega());
  for (std::size_t i = 0; i < m.n_omega(); ++i) {
    const double w = m.omega_grid[i];
    if (w <= 0.0) continue;
    const double tau_star = optimal_torque(d, w);
    if (tau_star <= 0.0) continue;
    const std::optional<double> eta_map = detail::interp_eta_at_tau(m, i, tau_star);
    if (!eta_map) continue;
    const double diff = ool_efficiency(c, w) - *eta_map;
    sq.push_back(diff * diff);
  }
  require(!sq.empty(), errc::infeasible,
          "ool_rmse: model's optimal torque leaves the map everywhere");
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(sq.size()));
}

/// Scans the second design point over the map's speed grid and returns the
/// model minimizing the RMS efficiency gap. p1 must be the exact origin;
/// p3 is normally the map's global argmax. Candidates that produce an
/// infeasible parabola or loss scales are skipped; ties resolve to the
/// lowest candidate speed.
inline FitResult fit_second_point(const EfficiencyMap& m, const DesignPoint& p1,
                                  const DesignPoint& p3) {
  m.validate();
  require(p1.tau == 0.0 && p1.omega == 0.0 && p1.eta == 0.0, errc::infeasible,
          "fit_second_point: the first design point is pinned to the origin");
  require(p3.omega > 0.0 && p3.tau > 0.0 && p3.eta > 0.0 && p3.eta < 1.0,
          errc::infeasible, "fit_second_point: third design point must carry "
                            "positive power and eta in (0, 1)");

  std::optional<FitResult> best;
  for (std::size_t i = 0; i < m.n_omega(); ++i) {
    const double w2 = m.omega_grid[i];
    if (w2 <= 0.0) continue;
    if (std::abs(w2 - p3.omega) <= 1e-12 * p3.omega) continue;
    const std::optional<DesignPoint> p2 = column_argmax(m, i);
    if (!p2 || p2->eta <= 0.0 || p2->eta >= 1.0) continue;
    try {
      const OolCoefficients d = solve_d(p1, *p2, p3);
      const auto [c20, c11] = solve_c(d, *p2, p3);
      const LossCoefficients c = c_from_d(d, c20, c11);
      const double rmse = ool_rmse(m, d, c);
      if (!best || rmse < best->rmse ||
          (rmse == best->rmse && p2->omega < best->design_points[1].omega)) {
        best = FitResult{d, c, {p1, *p2, p3}, rmse};
      }
    } catch (const Error&) {
      continue;  // infeasible candidate; keep scanning
    }
  }
  require(best.has_value(), errc::infeasible,
          "fit_second_point: no feasible second design point on the speed grid");
  return *best;
}

/// Convenience wrapper deriving the pinned design points from the map itself.
inline FitResult fit_reference_map(const EfficiencyMap& m) {
  m.validate();
  return fit_second_point(m, DesignPoint{0.0, 0.0, 0.0}, map_argmax(m));
}

/// Peak efficiency reachable within the fit's calibrated speed range, i.e.
/// up to the highest design-point speed (the map's best-efficiency anchor).
inline PeakEfficiencyPoint peak_efficiency_point(const FitResult& fit) {
  double w_hi = 0.0;
  for (const DesignPoint& p : fit.design_points) w_hi = std::max(w_hi, p.omega);
  require(w_hi > 0.0, errc::config,
          "peak_efficiency_point: fit carries no positive design speed");
  return peak_efficiency_point(fit.c, w_hi);
}

/// Evaluates the loss model on a grid, masking cells outside the peak torque
/// envelope. Zero-power cells are masked: efficiency is undefined there.
inline EfficiencyMap reconstruct_map(const LossCoefficients& c,
                                     const MachineLimits& lim,
                                     std::vector<double> omega_grid,
                                     std::vector<double> tau_grid) {
  lim.validate();
  EfficiencyMap m;
  m.omega_grid = std::move(omega_grid);
  m.tau_grid = std::move(tau_grid);
  m.limits = lim;
  m.eta.assign(m.n_omega(), std::vector<double>(m.n_tau(), 0.0));
  m.valid.assign(m.n_omega(), std::vector<char>(m.n_tau(), 0));
  for (std::size_t i = 0; i < m.n_omega(); ++i) {
    const double w = m.omega_grid[i];
    if (w <= 0.0 || w > lim.omega_max) continue;
    const double env = torque_envelope(lim, w, Rating::peak);
    for (std::size_t j = 0; j < m.n_tau(); ++j) {
      const double tau = m.tau_grid[j];
      if (tau <= 0.0 || tau > env) continue;
      m.eta[i][j] = efficiency(c, tau, w);
      m.valid[i][j] = 1;
    }
  }
  m.validate();
  return m;
}

/// Uniformly spaced grid helper (n points from 0 to hi inclusive).
inline std::vector<double> linspace_grid(double hi, std::size_t n) {
  require(n >= 2 && hi > 0.0, errc::config, "linspace_grid: need n >= 2, hi > 0");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = hi * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

// ---------------------------------------------------------------------------
// Map file format: CSV with header "omega_rpm,tau_nm,eta", one row per valid
// cell, '#' starting a comment line. Machine limits travel in a structured
// comment so that save/load round-trips are lossless.

namespace detail {

inline std::string fmt_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void save_map_csv(const EfficiencyMap& m, const std::string& path) {
  m.validate();
  std::ofstream out(path);
  require(out.good(), errc::config, "save_map_csv: cannot open " + path);
  out << "# machine efficiency map; speeds in rpm, torques in Nm\n";
  if (m.limits) {
    const MachineLimits& l = *m.limits;
    out << "# limits tau_cont_nm=" << detail::fmt_g17(l.tau_cont)
        << " tau_peak_nm=" << detail::fmt_g17(l.tau_peak)
        << " omega_rated_rpm=" << detail::fmt_g17(rad_s_to_rpm(l.omega_rated))
        << " omega_max_rpm=" << detail::fmt_g17(rad_s_to_rpm(l.omega_max))
        << " p_cont_kw=" << detail::fmt_g17(w_to_kw(l.p_cont))
        << " p_peak_kw=" << detail::fmt_g17(w_to_kw(l.p_peak)) << "\n";
  }
  out << "omega_rpm,tau_nm,eta\n";
  for (std::size_t i = 0; i < m.n_omega(); ++i)
    for (std::size_t j = 0; j < m.n_tau(); ++j)
      if (m.valid[i][j])
        out << detail::fmt_g17(rad_s_to_rpm(m.omega_grid[i])) << ','
            << detail::fmt_g17(m.tau_grid[j]) << ','
            << detail::fmt_g17(m.eta[i][j]) << '\n';
  require(out.good(), errc::config, "save_map_csv: write failed for " + path);
}

inline EfficiencyMap load_map_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::config, "load_map_csv: cannot open " + path);
  std::optional<MachineLimits> limits;
  std::vector<std::array<double, 3>> rows;
  std::string line;
  bool header_seen = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string tag;
      ls >> tag;
      if (tag == "limits") {
        MachineLimits l;
        std::string kv;
        int seen = 0;
        while (ls >> kv) {
          const auto eq = kv.find('=');
          require(eq != std::string::npos, errc::config,
                  "load_map_csv: malformed limits comment");
          const std::string key = kv.substr(0, eq);
          const double val = std::stod(kv.substr(eq + 1));
          if (key == "tau_cont_nm") l.tau_cont = val;
          else if (key == "tau_peak_nm") l.tau_peak = val;
          else if (key == "omega_rated_rpm") l.omega_rated = rpm_to_rad_s(val);
          else if (key == "omega_max_rpm") l.omega_max = rpm_to_rad_s(val);
          else if (key == "p_cont_kw") l.p_cont = kw_to_w(val);
          else if (key == "p_peak_kw") l.p_peak = kw_to_w(val);
          else continue;
          ++seen;
        }
        require(seen == 6, errc::config,
                "load_map_csv: limits comment must carry all six fields");
        l.validate();
        limits = l;
      }
      continue;
    }
    if (!header_seen) {
      require(line == "omega_rpm,tau_nm,eta", errc::config,
              "load_map_csv: expected header 'omega_rpm,tau_nm,eta'");
      header_seen = true;
      continue;
    }
    std::array<double, 3> vals{};
    std::istringstream ls(line);
    std::string cell;
    for (int k = 0; k < 3; ++k) {
      require(static_cast<bool>(std::getline(ls, cell, ',')), errc::config,
              "load_map_csv: short row at line " + std::to_string(lineno));
      std::size_t pos = 0;
      vals[k] = std::stod(cell, &pos);
      require(pos == cell.size(), errc::config,
              "load_map_csv: bad number at line " + std::to_string(lineno));
    }
    require(!std::getline(ls, cell, ','), errc::config,
            "load_map_csv: extra column at line " + std::to_string(lineno));
    rows.push_back(vals);
  }
  require(header_seen && !rows.empty(), errc::config,
          "load_map_csv: no data rows in " + path);

  // Rebuild the rectangular grid from the distinct coordinates.
  std::vector<double> omegas, taus;
  for (const auto& r : rows) {
    omegas.push_back(rpm_to_rad_s(r[0]));
    taus.push_back(r[1]);
  }
  auto uniq = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(omegas);
  uniq(taus);

  EfficiencyMap m;
  m.omega_grid = omegas;
  m.tau_grid = taus;
  m.limits = limits;
  m.eta.assign(m.n_omega(), std::vector<double>(m.n_tau(), 0.0));
  m.valid.assign(m.n_omega(), std::vector<char>(m.n_tau(), 0));
  auto index_of = [](const std::vector<double>& grid, double v) {
    return static_cast<std::size_t>(
        std::lower_bound(grid.begin(), grid.end(), v) - grid.begin());
  };
  for (const auto& r : rows) {
    const std::size_t i = index_of(m.omega_grid, rpm_to_rad_s(r[0]));
    const std::size_t j = index_of(m.tau_grid, r[1]);
    require(!m.valid[i][j], errc::config,
            "load_map_csv: duplicate (omega, tau) cell");
    require(r[2] >= 0.0 && r[2] <= 1.0, errc::config,
            "load_map_csv: eta outside [0, 1]");
    m.eta[i][j] = r[2];
    m.valid[i][j] = 1;
  }
  m.validate();
  return m;
}

}  // namespace gearopt
