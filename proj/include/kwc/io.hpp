#pragma once

// Field snapshots, time series, and JSON renderings of the study reports.
//
// Snapshot CSV:
//   # grid dim=<d> cells=<n1[,n2]> extents=<L1[,L2]>
//   index,x[,y],value

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "experiments.hpp"
#include "grid.hpp"

namespace kwc::io {

using nlohmann::json;

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) os << ',';
    if constexpr (std::is_floating_point_v<T>) os << fmt(v[k]);
    else os << v[k];
  }
  return os.str();
}

inline void write_snapshot(std::ostream& os, const ScalarField& f) {
  const Grid& g = f.grid();
  os << "# grid dim=" << g.dim() << " cells=" << join(g.cells_vector()) << " extents=" << join(g.extents_vector())
     << '\n';
  os << (g.dim() == 1 ? "index,x,value\n" : "index,x,y,value\n");
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const std::size_t k = g.index(i, j);
      os << k << ',' << fmt(g.center(0, i));
      if (g.dim() == 2) os << ',' << fmt(g.center(1, j));
      os << ',' << fmt(f[k]) << '\n';
    }
}

inline void write_snapshot(const std::filesystem::path& path, const ScalarField& f) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  write_snapshot(os, f);
}

namespace detail {

template <class T>
std::vector<T> parse_list(const std::string& s) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if constexpr (std::is_integral_v<T>) out.push_back(static_cast<T>(std::stol(item)));
    else out.push_back(std::stod(item));
  }
  return out;
}

}  // namespace detail

inline ScalarField read_snapshot(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# grid", 0) != 0) throw Error("snapshot: missing '# grid' header");
  int dim = 0;
  std::vector<int> cells;
  std::vector<double> extents;
  std::istringstream hs(line.substr(6));
  std::string tok;
  try {
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "dim") dim = std::stoi(val);
      else if (key == "cells") cells = detail::parse_list<int>(val);
      else if (key == "extents") extents = detail::parse_list<double>(val);
    }
  } catch (const std::exception&) {
    throw Error("snapshot: malformed grid header");
  }
  Grid g(dim, cells, extents);
  if (!std::getline(is, line)) throw Error("snapshot: missing column header");
  ScalarField f(g);
  std::vector<bool> seen(g.size(), false);
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto vals = detail::parse_list<double>(line);
    if (static_cast<int>(vals.size()) != dim + 2) throw Error("snapshot: bad row '" + line + "'");
    const auto k = static_cast<std::size_t>(vals[0]);
    if (k >= g.size() || seen[k]) throw Error("snapshot: bad or repeated index in '" + line + "'");
    seen[k] = true;
    f[k] = vals.back();
    ++rows;
  }
  if (rows != g.size()) throw Error("snapshot: expected " + std::to_string(g.size()) + " rows");
  if (!f.all_finite()) throw Error("snapshot: non-finite values");
  return f;
}

inline ScalarField read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path.string());
  return read_snapshot(is);
}

inline const char* kTimeseriesHeader =
    "t,E_dirichlet,E_potential,E_interfacial,E_total,rate_eta_H,rate_theta_H,rate_eta_V,rate_theta_V,s4_residual";

inline void write_timeseries(std::ostream& os, const Trajectory& tr) {
  os << kTimeseriesHeader << '\n';
  for (const StepRecord& r : tr.records)
    os << fmt(r.t) << ',' << fmt(r.energy.dirichlet) << ',' << fmt(r.energy.potential) << ','
       << fmt(r.energy.interfacial) << ',' << fmt(r.energy.total) << ',' << fmt(r.rate_eta_h) << ','
       << fmt(r.rate_theta_h) << ',' << fmt(r.rate_eta_v) << ',' << fmt(r.rate_theta_v) << ',' << fmt(r.s4_residual)
       << '\n';
}

inline void write_timeseries(const std::filesystem::path& path, const Trajectory& tr) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  write_timeseries(os, tr);
}

inline void write_snapshots(const std::filesystem::path& dir, const Trajectory& tr) {
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof name, "%06zu", k);
    write_snapshot(dir / (std::string("eta_") + name + ".csv"), tr.snapshots[k].eta);
    write_snapshot(dir / (std::string("theta_") + name + ".csv"), tr.snapshots[k].theta);
  }
  std::ofstream idx(dir / "index.csv");
  idx << "snapshot,t\n";
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) idx << k << ',' << fmt(tr.snapshots[k].time) << '\n';
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Report serialization

inline json to_json(const SolveReport& r) {
  return {{"method", r.method},           {"iterations", r.iterations}, {"linear_iterations", r.linear_iterations},
          {"final_residual_h", r.final_residual_h}, {"tolerance", r.tolerance}, {"converged", r.converged},
          {"used_fallback", r.used_fallback}};
}

/// Aggregate of the per-step solver reports of a trajectory.
inline json solver_summary(const Trajectory& tr) {
  int steps = 0, newton = 0, fallbacks = 0, cg = 0;
  double worst_eta = 0.0, worst_theta = 0.0, worst_eq = 0.0;
  for (const auto& d : tr.diagnostics) {
    ++steps;
    newton += d.theta.iterations;
    fallbacks += d.theta.used_fallback ? 1 : 0;
    cg += d.eta.linear_iterations + d.theta.linear_iterations;
    worst_eta = std::max(worst_eta, d.eta.final_residual_h);
    worst_theta = std::max(worst_theta, d.theta.final_residual_h);
    worst_eq = std::max({worst_eq, d.eta_equation_residual, d.theta_equation_residual});
  }
  return {{"steps", steps},
          {"theta_nonlinear_iterations", newton},
          {"theta_fallbacks", fallbacks},
          {"cg_iterations", cg},
          {"max_eta_solve_residual", worst_eta},
          {"max_theta_solve_residual", worst_theta},
          {"max_step_equation_residual", worst_eq}};
}

inline json to_json(const ModelBounds& b) {
  return {{"g_d1_sup", b.g_d1_sup},         {"alpha_d1_sup", b.alpha_d1_sup}, {"alpha_d2_sup", b.alpha_d2_sup},
          {"alpha0_sup", b.alpha0_sup},     {"alpha0_d1_sup", b.alpha0_d1_sup}, {"delta_alpha", b.delta_alpha}};
}

inline json to_json(const AssumptionReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  return {{"checks", checks}, {"warnings", r.warnings}, {"bounds", to_json(r.bounds)}, {"pass", r.all_pass()}};
}

inline json to_json(const ConvergenceTable& t) {
  json j = {{"parameter", t.parameter}, {"values", t.values}, {"errors", t.errors},
            {"observed_rates", t.observed_rates}, {"pass", t.pass}};
  if (!t.secondary.empty()) j[t.secondary_name.empty() ? "secondary" : t.secondary_name] = t.secondary;
  if (!t.note.empty()) j["note"] = t.note;
  return j;
}

inline void write_table_csv(const std::filesystem::path& path, const ConvergenceTable& t) {
  std::ofstream os(path);
  os << t.parameter << ",error";
  if (!t.secondary.empty()) os << ',' << (t.secondary_name.empty() ? "secondary" : t.secondary_name);
  os << '\n';
  for (std::size_t k = 0; k < t.values.size(); ++k) {
    os << fmt(t.values[k]) << ',' << fmt(t.errors[k]);
    if (!t.secondary.empty()) os << ',' << fmt(t.secondary[k]);
    os << '\n';
  }
}

inline json to_json(const DissipationRun& r) {
  return {{"dt", r.dt},
          {"max_energy_increase", r.max_energy_increase},
          {"worst_residual", r.worst_residual},
          {"worst_residual_time", r.worst_residual_time},
          {"max_step_equation_residual", r.max_equation_residual},
          {"initial_energy", r.trajectory.records.front().energy.total},
          {"final_energy", r.trajectory.records.back().energy.total},
          {"solver", solver_summary(r.trajectory)}};
}

inline json to_json(const EnergyDissipationReport& r) {
  return {{"stepper", to_string(r.stepper)}, {"coarse", to_json(r.coarse)},   {"fine", to_json(r.fine)},
          {"fitted_C", r.fitted_C},          {"halving_ratio", r.halving_ratio}, {"stationary", r.stationary},
          {"monotone", r.monotone},          {"residual_bound", r.residual_bound}, {"ratio_ok", r.ratio_ok},
          {"pass", r.pass}};
}

inline json to_json(const EpsilonLimitReport& r) {
  return {{"epsilon0", r.epsilon0},
          {"trajectories", to_json(r.trajectories)},
          {"initial_data", to_json(r.initial_data)},
          {"pass", r.pass}};
}

inline json to_json(const MuNuLimitReport& r) {
  return {{"table", to_json(r.table)}, {"zero_path_identical", r.zero_path_identical}, {"pass", r.pass}};
}

inline json to_json(const EmbeddingEstimate& e) {
  return {{"max_ratio", e.max_ratio}, {"C_V_L4", e.C_V_L4}, {"safety", e.safety}, {"samples", e.samples}};
}

inline json to_json(const GronwallReport& r) {
  return {{"delta", r.delta},
          {"J0", r.J.empty() ? 0.0 : r.J.front()},
          {"J0_expected", r.J0_expected},
          {"C_hat", r.C_hat},
          {"C1_formula", r.C1_formula},
          {"embedding", to_json(r.embedding)},
          {"sup_sqrtJ", r.sup_sqrtJ},
          {"sup_sqrtJ_half_delta", r.sup_sqrtJ_half},
          {"halving_ratio", r.halving_ratio},
          {"zero_delta_exact", r.zero_delta_exact},
          {"gronwall_ok", r.gronwall_ok},
          {"halving_ok", r.halving_ok},
          {"pass", r.pass}};
}

inline void write_gronwall_csv(const std::filesystem::path& path, const GronwallReport& r) {
  std::ofstream os(path);
  os << "t,J,R,bound\n";
  for (std::size_t k = 0; k < r.J.size(); ++k)
    os << fmt(r.times[k]) << ',' << fmt(r.J[k]) << ',' << fmt(r.R[k]) << ',' << fmt(r.bound[k]) << '\n';
}

inline json to_json(const H2UniformityReport& r) {
  json battery = json::array();
  for (const auto& b : r.battery)
    battery.push_back({{"name", b.name}, {"epsilons", b.epsilons}, {"ratios", b.ratios}, {"spread", b.spread},
                       {"pass", b.pass}});
  auto traj = [](const H2TrajectoryCheck& c) {
    return json{{"dt", c.dt}, {"sup_h2_theta", c.sup_h2_theta}, {"fitted_constant", c.fitted_constant}};
  };
  return {{"kappa", r.kappa},
          {"battery", battery},
          {"trajectory_coarse", traj(r.coarse)},
          {"trajectory_fine", traj(r.fine)},
          {"refinement_change", r.refinement_change},
          {"battery_ok", r.battery_ok},
          {"trajectory_ok", r.trajectory_ok},
          {"pass", r.pass}};
}

inline json to_json(const ManufacturedReport& r) {
  return {{"space", to_json(r.space)}, {"time", to_json(r.time)}, {"pass", r.pass}};
}

inline json to_json(const StationaryReport& r) {
  json cases = json::array();
  for (const auto& c : r.cases)
    cases.push_back({{"stepper", to_string(c.stepper)}, {"mu", c.mu}, {"nu", c.nu}, {"max_deviation", c.max_deviation}});
  return {{"eta_star", r.eta_star}, {"theta_star", r.theta_star}, {"cases", cases}, {"pass", r.pass}};
}

}  // namespace kwc::io
