#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gearopt/cycle_analysis.hpp"
#include "gearopt/loss_model.hpp"
#include "gearopt/map_fit.hpp"
#include "gearopt/ratio_opt.hpp"
#include "gearopt/vehicle.hpp"

// Command-line front end. All physical quantities cross this boundary in
// explicit units (rpm, Nm, km/h, kW); everything behind it is SI.
//
// Exit codes: 0 success, 2 configuration/usage errors, 3 infeasible or
// undefined model queries, 4 numeric-validation failures.

namespace gearopt {
namespace cli {

using nlohmann::json;

inline int exit_code_for(errc code) {
  switch (code) {
    case errc::config:
      return 2;
    case errc::singular_system:
    case errc::infeasible:
    case errc::no_interior_maximum:
    case errc::undefined_operating_point:
      return 3;
    case errc::closed_form_degenerate:
    case errc::numeric_validation:
      return 4;
  }
  return 4;
}

// --- JSON helpers -----------------------------------------------------------

inline double jreq(const json& j, const char* key) {
  require(j.contains(key), errc::config,
          std::string("config: missing key '") + key + "'");
  require(j.at(key).is_number(), errc::config,
          std::string("config: key '") + key + "' must be a number");
  return j.at(key).get<double>();
}

inline double jopt(const json& j, const char* key, double def) {
  if (!j.contains(key)) return def;
  require(j.at(key).is_number(), errc::config,
          std::string("config: key '") + key + "' must be a number");
  return j.at(key).get<double>();
}

inline json load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::config, "config: cannot open " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);  // allow comments
  } catch (const json::exception& e) {
    fail(errc::config, std::string("config: JSON parse error: ") + e.what());
  }
  require(j.is_object(), errc::config, "config: top level must be an object");
  return j;
}

// --- config -> model objects ------------------------------------------------

inline MachineLimits parse_limits(const json& j) {
  MachineLimits lim;
  lim.tau_cont = jreq(j, "tau_cont_nm");
  lim.tau_peak = jreq(j, "tau_peak_nm");
  lim.omega_rated = rpm_to_rad_s(jreq(j, "omega_rated_rpm"));
  lim.omega_max = rpm_to_rad_s(jreq(j, "omega_max_rpm"));
  lim.p_cont = kw_to_w(jreq(j, "p_cont_kw"));
  lim.p_peak = kw_to_w(jreq(j, "p_peak_kw"));
  lim.validate();
  return lim;
}

inline VehicleParams parse_vehicle(const json& root) {
  require(root.contains("vehicle") && root.at("vehicle").is_object(),
          errc::config, "config: missing 'vehicle' object");
  const json& j = root.at("vehicle");
  VehicleParams p;
  p.m0 = jreq(j, "m0_kg");
  p.mp = jreq(j, "mp_kg");
  p.af = jreq(j, "af_m2");
  p.cd = jreq(j, "cd");
  p.cr = jreq(j, "cr");
  p.rw = jreq(j, "rw_m");
  p.eta_t = jreq(j, "eta_t");
  p.kappa_r = jreq(j, "kappa_r");
  p.lambda = jreq(j, "lambda");
  p.rho_air = jopt(j, "rho_air_kg_m3", kAirDensity);
  p.g = jopt(j, "g_m_s2", kGravity);
  p.validate();
  return p;
}

inline DesignPoint parse_design_point(const json& j) {
  return DesignPoint{jreq(j, "tau_nm"), rpm_to_rad_s(jreq(j, "omega_rpm")),
                     jreq(j, "eta")};
}

/// Machine description resolved from the config: the loss model, the
/// optimal-torque parabola when available, optional limits, and the fit
/// details when the model came from design points or a reference map.
struct ResolvedMachine {
  LossCoefficients c;
  std::optional<OolCoefficients> d;
  std::optional<MachineLimits> limits;
  std::optional<FitResult> fit;
};

inline ResolvedMachine resolve_machine(const json& root) {
  require(root.contains("machine") && root.at("machine").is_object(),
          errc::config, "config: missing 'machine' object");
  const json& m = root.at("machine");
  const int sources = static_cast<int>(m.contains("loss_coefficients")) +
                      static_cast<int>(m.contains("design_points")) +
                      static_cast<int>(m.contains("reference_map_csv"));
  require(sources == 1, errc::config,
          "config: machine needs exactly one of 'loss_coefficients', "
          "'design_points', 'reference_map_csv'");

  ResolvedMachine out;
  if (m.contains("limits")) out.limits = parse_limits(m.at("limits"));

  if (m.contains("loss_coefficients")) {
    const json& lc = m.at("loss_coefficients");
    out.c = LossCoefficients::from_active(
        jopt(lc, "c00", 0.0), jopt(lc, "c01", 0.0), jopt(lc, "c02", 0.0),
        jopt(lc, "c11", 0.0), jopt(lc, "c20", 0.0));
    if (m.contains("ool_coefficients")) {
      // Explicit parabola override, e.g. when the published parabola was
      // rounded independently of the loss coefficients.
      const json& oc = m.at("ool_coefficients");
      out.d = OolCoefficients::make(jopt(oc, "d00", 0.0), jreq(oc, "d01"),
                                    jreq(oc, "d02"));
    } else if (out.c.c20 > 0.0) {
      out.d = d_from_c(out.c);
    }
    return out;
  }
  require(!m.contains("ool_coefficients"), errc::config,
          "config: 'ool_coefficients' is only valid next to "
          "'loss_coefficients'");

  if (m.contains("design_points")) {
    const json& dp = m.at("design_points");
    require(dp.is_array() && dp.size() == 3, errc::config,
            "config: 'design_points' must hold exactly three points");
    const DesignPoint p1 = parse_design_point(dp.at(0));
    const DesignPoint p2 = parse_design_point(dp.at(1));
    const DesignPoint p3 = parse_design_point(dp.at(2));
    require(p1.tau == 0.0 && p1.omega == 0.0 && p1.eta == 0.0, errc::config,
            "config: the first design point must be the origin");
    const OolCoefficients d = solve_d(p1, p2, p3);
    const auto [c20, c11] = solve_c(d, p2, p3);
    const LossCoefficients c = c_from_d(d, c20, c11);
    out.fit = FitResult{d, c, {p1, p2, p3}, 0.0};
  } else {
    require(m.at("reference_map_csv").is_string(), errc::config,
            "config: 'reference_map_csv' must be a path string");
    const EfficiencyMap map =
        load_map_csv(m.at("reference_map_csv").get<std::string>());
    if (!out.limits && map.limits) out.limits = map.limits;
    out.fit = fit_reference_map(map);
  }
  out.c = out.fit->c;
  out.d = out.fit->d;
  return out;
}

inline const OolCoefficients& require_d(const ResolvedMachine& m) {
  require(m.d.has_value(), errc::infeasible,
          "machine: no optimal-torque parabola (torque-squared loss term "
          "is zero)");
  return *m.d;
}

inline const MachineLimits& require_limits(const ResolvedMachine& m) {
  require(m.limits.has_value(), errc::config,
          "config: this command needs 'machine.limits'");
  return *m.limits;
}

// --- output helpers ---------------------------------------------------------

struct OutputSink {
  std::string path;  // empty = stdout

  void write(const std::string& text) const {
    if (path.empty()) {
      std::cout << text;
      if (text.empty() || text.back() != '\n') std::cout << '\n';
      return;
    }
    std::ofstream out(path);
    require(out.good(), errc::config, "output: cannot open " + path);
    out << text;
    if (text.empty() || text.back() != '\n') out << '\n';
    require(out.good(), errc::config, "output: write failed for " + path);
  }
};

inline json design_point_json(const DesignPoint& p) {
  return json{{"tau_nm", p.tau},
              {"omega_rpm", rad_s_to_rpm(p.omega)},
              {"eta", p.eta}};
}

inline json fit_json(const FitResult& fit) {
  json j;
  j["ool_coefficients"] = {{"d00", fit.d.d00}, {"d01", fit.d.d01},
                           {"d02", fit.d.d02}};
  j["loss_coefficients"] = {{"c00", fit.c.c00}, {"c01", fit.c.c01},
                            {"c02", fit.c.c02}, {"c11", fit.c.c11},
                            {"c20", fit.c.c20}};
  j["design_points"] = json::array();
  for (const DesignPoint& p : fit.design_points)
    j["design_points"].push_back(design_point_json(p));
  j["rmse_eta"] = fit.rmse;
  const PeakEfficiencyPoint peak = peak_efficiency_point(fit);
  j["peak"] = {{"omega_rpm", rad_s_to_rpm(peak.omega)},
               {"tau_nm", peak.tau},
               {"eta", peak.eta},
               {"at_range_boundary", peak.at_range_boundary}};
  return j;
}

inline json report_json(const CycleReport& r, bool cvt) {
  json j{{"eta_avg_motoring", r.eta_avg_motoring},
         {"eta_avg_combined", r.eta_avg_combined},
         {"energy_ac_kwh", r.energy_ac_kwh},
         {"energy_mech_kwh", r.energy_mech_kwh},
         {"energy_per_100km_kwh", r.energy_per_100km_kwh},
         {"distance_km", r.distance_km},
         {"samples_used", r.samples_used},
         {"envelope_violations", r.envelope_violations},
         {"regen_zeroed_samples", r.regen_zeroed_samples}};
  if (cvt) {
    j["clamp_events"] = r.clamp_events;
    j["mean_optimal_ratio"] = r.mean_cvt_ratio;
  }
  return j;
}

inline void save_trace_csv(const std::vector<TraceRow>& rows,
                           const std::string& path) {
  std::ofstream out(path);
  require(out.good(), errc::config, "trace: cannot open " + path);
  out << "t_s,v_kmh,omega_t_rad_s,tau_t_nm,gamma,omega_m_rpm,tau_m_nm,eta_m,"
         "p_ac_w\n";
  for (const TraceRow& r : rows)
    out << detail::fmt_g17(r.t) << ',' << detail::fmt_g17(ms_to_kmh(r.v))
        << ',' << detail::fmt_g17(r.omega_t) << ',' << detail::fmt_g17(r.tau_t)
        << ',' << detail::fmt_g17(r.gamma) << ','
        << detail::fmt_g17(rad_s_to_rpm(r.omega_m)) << ','
        << detail::fmt_g17(r.tau_m) << ',' << detail::fmt_g17(r.eta_m) << ','
        << detail::fmt_g17(r.p_ac) << '\n';
  require(out.good(), errc::config, "trace: write failed for " + path);
}

// --- subcommands ------------------------------------------------------------

inline int cmd_fit(const json& cfg, const OutputSink& sink,
                   const std::string& format) {
  const ResolvedMachine m = resolve_machine(cfg);
  require(m.fit.has_value(), errc::config,
          "fit: config already carries loss coefficients; provide "
          "'design_points' or 'reference_map_csv' instead");
  const FitResult& fit = *m.fit;
  if (format == "json") {
    sink.write(fit_json(fit).dump(2));
    return 0;
  }
  std::ostringstream os;
  os << "optimal-torque parabola: d00=" << fit.d.d00 << " d01=" << fit.d.d01
     << " d02=" << fit.d.d02 << "\n";
  os << "loss coefficients: c00=" << fit.c.c00 << " c01=" << fit.c.c01
     << " c02=" << fit.c.c02 << " c11=" << fit.c.c11 << " c20=" << fit.c.c20
     << "\n";
  os << "design points (tau Nm, speed rpm, eta):\n";
  for (const DesignPoint& p : fit.design_points)
    os << "  " << p.tau << ", " << rad_s_to_rpm(p.omega) << ", " << p.eta
       << "\n";
  os << "rms efficiency gap vs map: " << fit.rmse << "\n";
  const PeakEfficiencyPoint peak = peak_efficiency_point(fit);
  os << "peak efficiency " << peak.eta * 100.0 << "% at "
     << rad_s_to_rpm(peak.omega) << " rpm, " << peak.tau << " Nm"
     << (peak.at_range_boundary ? " (at range boundary)" : "") << "\n";
  sink.write(os.str());
  return 0;
}

inline int cmd_reconstruct(const json& cfg, const OutputSink& sink) {
  require(!sink.path.empty(), errc::config,
          "reconstruct: --out <map.csv> is required");
  const ResolvedMachine m = resolve_machine(cfg);
  const MachineLimits& lim = require_limits(m);
  double omega_max = lim.omega_max;
  double tau_max = lim.tau_peak;
  std::size_t n_omega = 115, n_tau = 101;
  if (cfg.contains("reconstruct")) {
    const json& rj = cfg.at("reconstruct");
    n_omega = static_cast<std::size_t>(jopt(rj, "n_omega", 115.0));
    n_tau = static_cast<std::size_t>(jopt(rj, "n_tau", 101.0));
    omega_max = rpm_to_rad_s(jopt(rj, "omega_max_rpm", rad_s_to_rpm(omega_max)));
    tau_max = jopt(rj, "tau_max_nm", tau_max);
  }
  const EfficiencyMap map =
      reconstruct_map(m.c, lim, linspace_grid(omega_max, n_omega),
                      linspace_grid(tau_max, n_tau));
  save_map_csv(map, sink.path);
  return 0;
}

/// Query source for cmd_ratio: CLI flags override the config's query block.
struct RatioQueryArgs {
  std::optional<double> tau_t_nm;
  std::optional<double> omega_t_rad_s;
  std::optional<double> v_kmh;
};

inline int cmd_ratio(const json& cfg, const OutputSink& sink,
                     const std::string& format, const RatioQueryArgs& args) {
  const ResolvedMachine m = resolve_machine(cfg);
  const OolCoefficients& d = require_d(m);
  const json rj = cfg.contains("ratio") ? cfg.at("ratio") : json::object();
  const bool has_query = args.v_kmh || args.tau_t_nm || rj.contains("query");
  require(has_query || rj.contains("bounds"), errc::config,
          "ratio: need a query (--v-kmh, --tau-t-nm/--omega-t-rad-s, or "
          "config ratio.query) and/or config ratio.bounds");
  json out;
  std::ostringstream os;

  if (has_query) {
    const json qj = rj.contains("query") ? rj.at("query") : json::object();
    RatioQuery q;
    std::optional<double> v_kmh = args.v_kmh;
    if (!v_kmh && qj.contains("v_kmh") && !args.tau_t_nm)
      v_kmh = jreq(qj, "v_kmh");
    if (v_kmh) {
      const VehicleParams veh = parse_vehicle(cfg);
      const WheelDemand wd = road_load_stationary(veh, kmh_to_ms(*v_kmh));
      q = RatioQuery{wd.tau_t, wd.omega_t, veh.eta_t};
    } else {
      q.tau_t = args.tau_t_nm ? *args.tau_t_nm : jreq(qj, "tau_t_nm");
      q.omega_t =
          args.omega_t_rad_s ? *args.omega_t_rad_s : jreq(qj, "omega_t_rad_s");
      q.eta_t = jopt(qj, "eta_t", 1.0);
    }
    bool closed = true;
    double gamma;
    try {
      gamma = optimal_ratio_closed_form(q, d);
    } catch (const Error& e) {
      if (e.code() != errc::closed_form_degenerate) throw;
      gamma = optimal_ratio_numeric(q, d);
      closed = false;
    }
    const WheelDemand wd{q.omega_t, q.tau_t, 0.0, q.tau_t < 0.0};
    const MachinePointDemand mp = wheel_to_machine(wd, gamma, q.eta_t);
    out["query"] = json{{"tau_t_nm", q.tau_t},
                        {"omega_t_rad_s", q.omega_t},
                        {"eta_t", q.eta_t}};
    out["gamma"] = gamma;
    out["method"] = closed ? "closed_form" : "numeric_fallback";
    out["machine_point"] = {{"omega_rpm", rad_s_to_rpm(mp.omega_m)},
                            {"tau_nm", mp.tau_m},
                            {"eta", efficiency(m.c, std::abs(mp.tau_m),
                                               mp.omega_m)}};
    os << "optimal ratio " << gamma << " (" << out["method"].get<std::string>()
       << ") -> machine " << rad_s_to_rpm(mp.omega_m) << " rpm, " << mp.tau_m
       << " Nm\n";
  }

  if (rj.contains("bounds")) {
    const json& bj = rj.at("bounds");
    const VehicleParams veh = parse_vehicle(cfg);
    const RatioBounds b =
        cvt_bounds(d, veh, jopt(bj, "v_min_kmh", 10.0),
                   jopt(bj, "v_max_kmh", 155.0), jopt(bj, "step_kmh", 1.0));
    out["bounds"] = {{"gamma_min", b.gamma_min},
                     {"gamma_max", b.gamma_max},
                     {"v_at_min_kmh", b.v_at_min_kmh},
                     {"v_at_max_kmh", b.v_at_max_kmh}};
    os << "ratio span [" << b.gamma_min << ", " << b.gamma_max << "] (min at "
       << b.v_at_min_kmh << " km/h, max at " << b.v_at_max_kmh << " km/h)\n";
  }

  sink.write(format == "json" ? out.dump(2) : os.str());
  return 0;
}

inline int cmd_cycle(const json& cfg, const OutputSink& sink,
                     const std::string& format,
                     const std::string& trace_path) {
  const ResolvedMachine m = resolve_machine(cfg);
  const OolCoefficients& d = require_d(m);
  const MachineLimits& lim = require_limits(m);
  const VehicleParams veh = parse_vehicle(cfg);
  require(cfg.contains("cycle_csv") && cfg.at("cycle_csv").is_string(),
          errc::config, "config: missing 'cycle_csv' path");
  const DriveCycle cyc = load_cycle_csv(cfg.at("cycle_csv").get<std::string>());
  require(cfg.contains("fgt") && cfg.at("fgt").is_object(), errc::config,
          "config: missing 'fgt' object with 'gamma'");
  const double gamma_fgt = jreq(cfg.at("fgt"), "gamma");

  const CycleComparison cmp =
      compare_policies(m.c, d, lim, veh, cyc, gamma_fgt);
  if (!trace_path.empty()) {
    std::vector<TraceRow> rows;
    average_efficiency(m.c, d, lim, veh, cyc, RatioPolicy::cvt_optimal, 0.0,
                       &rows);
    save_trace_csv(rows, trace_path);
  }

  if (format == "json") {
    json out{{"gamma_fgt", gamma_fgt},
             {"fgt", report_json(cmp.fgt, false)},
             {"cvt", report_json(cmp.cvt, true)},
             {"delta_pts", cmp.delta_pts}};
    sink.write(out.dump(2));
    return 0;
  }
  std::ostringstream os;
  os << "cycle distance " << cmp.fgt.distance_km << " km, "
     << cmp.fgt.samples_used << " engaged samples\n";
  os << "fixed gear (gamma=" << gamma_fgt
     << "): eta_motoring=" << cmp.fgt.eta_avg_motoring * 100.0
     << "% eta_combined=" << cmp.fgt.eta_avg_combined * 100.0
     << "% net " << cmp.fgt.energy_per_100km_kwh << " kWh/100km\n";
  os << "cvt on best-efficiency line: eta_motoring="
     << cmp.cvt.eta_avg_motoring * 100.0
     << "% eta_combined=" << cmp.cvt.eta_avg_combined * 100.0 << "% net "
     << cmp.cvt.energy_per_100km_kwh
     << " kWh/100km (mean ratio " << cmp.cvt.mean_cvt_ratio << ", "
     << cmp.cvt.clamp_events << " clamped samples)\n";
  os << "combined-efficiency gain: " << cmp.delta_pts << " points\n";
  sink.write(os.str());
  return 0;
}

inline int cmd_sweep(const json& cfg, const OutputSink& sink,
                     const std::string& format) {
  const ResolvedMachine m = resolve_machine(cfg);
  const OolCoefficients& d = require_d(m);
  const MachineLimits& lim = require_limits(m);
  const VehicleParams veh = parse_vehicle(cfg);
  require(cfg.contains("cycle_csv") && cfg.at("cycle_csv").is_string(),
          errc::config, "config: missing 'cycle_csv' path");
  const DriveCycle cyc = load_cycle_csv(cfg.at("cycle_csv").get<std::string>());

  double lo = 2.0, hi = 12.0, step = 0.05, threshold = 6.0;
  if (cfg.contains("sweep")) {
    const json& sj = cfg.at("sweep");
    lo = jopt(sj, "gamma_lo", lo);
    hi = jopt(sj, "gamma_hi", hi);
    step = jopt(sj, "step", step);
    threshold = jopt(sj, "ratio_fraction_threshold", threshold);
  }
  const SweepResult sweep = fgt_sweep(m.c, d, lim, veh, cyc, lo, hi, step);
  const CycleReport cvt =
      average_efficiency(m.c, d, lim, veh, cyc, RatioPolicy::cvt_optimal);

  if (format == "csv") {
    std::ostringstream os;
    os << "gamma,eta_combined,feasible\n";
    for (const SweepPoint& pt : sweep.points)
      os << detail::fmt_g17(pt.gamma) << ','
         << (pt.feasible ? detail::fmt_g17(pt.eta) : std::string()) << ','
         << (pt.feasible ? 1 : 0) << '\n';
    sink.write(os.str());
    return 0;
  }
  if (format == "json") {
    json out;
    out["points"] = json::array();
    for (const SweepPoint& pt : sweep.points) {
      json pj{{"gamma", pt.gamma}, {"feasible", pt.feasible}};
      if (pt.feasible) pj["eta"] = pt.eta;
      out["points"].push_back(pj);
    }
    out["best_gamma"] = sweep.best_gamma;
    out["best_eta"] = sweep.best_eta;
    out["cvt"] = report_json(cvt, true);
    const RatioHistogram h = ratio_histogram(cvt.cvt_ratios_traction);
    out["traction_ratio_histogram"] = json::array();
    for (std::size_t i = 0; i < h.counts.size(); ++i)
      out["traction_ratio_histogram"].push_back(json{
          {"bin_lo", h.bin_lo(i)}, {"bin_hi", h.bin_hi(i)},
          {"count", h.counts[i]}});
    out["ratio_fraction_threshold"] = threshold;
    out["traction_ratio_fraction_below"] =
        fraction_below(cvt.cvt_ratios_traction, threshold);
    sink.write(out.dump(2));
    return 0;
  }
  std::ostringstream os;
  os << "best fixed ratio " << sweep.best_gamma << " with eta_combined="
     << sweep.best_eta * 100.0 << "% (" << sweep.n_feasible
     << " feasible grid points)\n";
  os << "cvt reference: eta_combined=" << cvt.eta_avg_combined * 100.0
     << "% mean optimal ratio " << cvt.mean_cvt_ratio << "\n";
  os << "traction samples with optimal ratio below " << threshold << ": "
     << fraction_below(cvt.cvt_ratios_traction, threshold) * 100.0 << "%\n";
  sink.write(os.str());
  return 0;
}

// --- entry point -------------------------------------------------------------

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"loss-model fitting and transmission-ratio optimization"};
  app.require_subcommand(1);

  std::string config_path, out_path, format = "json", trace_path;
  RatioQueryArgs ratio_args;

  auto add_common = [&](CLI::App* sub, bool with_format = true) {
    sub->add_option("--config", config_path, "JSON configuration file")
        ->required();
    sub->add_option("--out", out_path, "output file (default: stdout)");
    if (with_format)
      sub->add_option("--format", format, "output format")
          ->check(CLI::IsMember({"text", "json", "csv"}));
  };

  CLI::App* fit = app.add_subcommand(
      "fit", "fit the loss model from design points or a reference map");
  add_common(fit);
  CLI::App* rec = app.add_subcommand(
      "reconstruct", "evaluate the fitted model on a grid and write a map CSV");
  add_common(rec, false);
  CLI::App* ratio = app.add_subcommand(
      "ratio", "optimal transmission ratio queries and CVT ratio span");
  add_common(ratio);
  ratio->add_option("--tau-t-nm", ratio_args.tau_t_nm,
                    "wheel torque for a direct query");
  ratio->add_option("--omega-t-rad-s", ratio_args.omega_t_rad_s,
                    "wheel speed for a direct query");
  ratio->add_option("--v-kmh", ratio_args.v_kmh,
                    "vehicle speed for a stationary road-load query");
  CLI::App* cycle = app.add_subcommand(
      "cycle", "fixed-gear vs CVT energy accounting over a drive cycle");
  add_common(cycle);
  cycle->add_option("--trace", trace_path,
                    "write the per-sample CVT trace to this CSV");
  CLI::App* sweep = app.add_subcommand(
      "sweep", "cycle efficiency over a grid of fixed ratios");
  add_common(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const json cfg = load_config(config_path);
    const OutputSink sink{out_path};
    if (fit->parsed()) return cmd_fit(cfg, sink, format);
    if (rec->parsed()) return cmd_reconstruct(cfg, sink);
    if (ratio->parsed()) return cmd_ratio(cfg, sink, format, ratio_args);
    if (cycle->parsed()) return cmd_cycle(cfg, sink, format, trace_path);
    if (sweep->parsed()) return cmd_sweep(cfg, sink, format);
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const json::exception& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace cli
}  // namespace gearopt
