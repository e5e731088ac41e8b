// kwc: command-line driver for runs, studies and model validation.
//
//   kwc run                [--config c.json] [--out dir] [--seed n] [--threads n]
//   kwc experiment <name>  [...]
//   kwc validate           [...]
//
// Exit codes: 0 all assertions pass, 1 an assertion failed, 2 bad input, 3 runtime failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "kwc/kwc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

const std::vector<std::string> kExperiments{"energy_dissipation", "epsilon_limit", "munu_limit",
                                            "continuous_dependence", "h2_uniformity", "manufactured_convergence",
                                            "embedding_constant", "stationary"};

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string experiment;
};

json versions() {
  return {{"kwc", "1.0.0"},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION},
          {"compiler", __VERSION__}};
}

json tolerances() {
  return {{"cg_relative", kwc::linalg::kCgTolerance},
          {"singular_relative", kwc::SingularSolverOptions{}.rel_tolerance},
          {"step_equation_residual", kwc::kStepResidualTolerance},
          {"energy_slack", kwc::kEnergySlack},
          {"stationary", kwc::kStationaryTolerance},
          {"gronwall_factor", kwc::kGronwallFactor},
          {"h2_spread_limit", kwc::kH2SpreadLimit}};
}

class Session {
public:
  Session(const std::string& command, const Options& o) : command_(command), opt_(o) {}

  int execute() {
    start_ = std::chrono::steady_clock::now();
    try {
      load();
    } catch (const kwc::ConfigError& e) {
      return fail(kExitInput, "config", e.what(), e.violations());
    } catch (const std::exception& e) {
      return fail(kExitInput, "config", e.what(), {});
    }
    try {
      fs::create_directories(out_);
      const bool ok = command_ == "run" ? run() : command_ == "validate" ? validate() : experiment();
      finish(ok);
      std::cout << (ok ? "PASS" : "FAIL") << "  " << command_ << (opt_.experiment.empty() ? "" : " " + opt_.experiment)
                << "  -> " << out_.string() << '\n';
      return ok ? kExitPass : kExitFail;
    } catch (const std::exception& e) {
      return fail(kExitRuntime, "runtime", e.what(), {});
    }
  }

private:
  void load() {
    cfg_ = opt_.config.empty() ? kwc::parse_config_json(json::object()) : kwc::parse_config(opt_.config);
    if (opt_.seed) cfg_.seed = *opt_.seed;
    if (opt_.threads) {
      if (*opt_.threads < 1) throw kwc::ConfigError({"--threads: must be at least 1"});
      cfg_.threads = *opt_.threads;
    }
    if (!opt_.out.empty()) cfg_.output_dir = opt_.out;
    out_ = cfg_.output_dir;
    if (!opt_.experiment.empty()) out_ /= opt_.experiment;
  }

  void assertion(const std::string& name, bool pass, json detail = json::object()) {
    detail["pass"] = pass;
    assertions_[name] = detail;
  }

  bool all_pass() const {
    for (const auto& [_, a] : assertions_.items())
      if (!a.at("pass").get<bool>()) return false;
    return true;
  }

  void finish(bool ok) {
    json m = {{"manifest_version", 1},
              {"kind", "kwc-manifest"},
              {"command", command_},
              {"config", kwc::serialize_config(cfg_)},
              {"tolerances", tolerances()},
              {"versions", versions()},
              {"wall_clock_seconds", elapsed()},
              {"assertions", assertions_},
              {"pass", ok}};
    if (!opt_.experiment.empty()) m["experiment"] = opt_.experiment;
    if (bounds_) m["model_bounds"] = *bounds_;
    if (!solver_.is_null()) m["solver"] = solver_;
    kwc::io::write_json(out_ / "manifest.json", m);
  }

  int fail(int code, const std::string& stage, const std::string& message, const std::vector<std::string>& violations) {
    json f = {{"kind", "kwc-failure"},
              {"command", command_},
              {"stage", stage},
              {"message", message},
              {"violations", violations},
              {"exit_code", code},
              {"wall_clock_seconds", elapsed()}};
    std::cerr << "error: " << message << '\n';
    try {
      const fs::path dir = out_.empty() ? fs::path(opt_.out.empty() ? "out" : opt_.out) : out_;
      fs::create_directories(dir);
      kwc::io::write_json(dir / "failure.json", f);
    } catch (const std::exception&) {
      std::cerr << f.dump(2) << '\n';
    }
    return code;
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  kwc::ExperimentSetup setup() {
    kwc::AssumptionReport rep;
    kwc::ExperimentSetup s = kwc::make_setup(cfg_, &rep);
    bounds_ = kwc::io::to_json(rep.bounds);
    assertion("assumptions", rep.all_pass(), kwc::io::to_json(rep));
    return s;
  }

  // -------------------------------------------------------------------------

  bool validate() {
    kwc::ModelFunctions model = kwc::make_model(cfg_);
    const kwc::AssumptionReport rep = kwc::validate_assumptions(model);
    bounds_ = kwc::io::to_json(rep.bounds);
    assertion("assumptions", rep.all_pass(), kwc::io::to_json(rep));
    kwc::io::write_json(out_ / "validation.json", kwc::io::to_json(rep));
    for (const auto& c : rep.checks) std::cout << (c.pass ? "  ok   " : "  FAIL ") << c.name << "  " << c.detail << '\n';
    for (const auto& w : rep.warnings) std::cout << "  warn " << w << '\n';
    return all_pass();
  }

  bool run() {
    const kwc::ExperimentSetup s = setup();
    if (!assertions_["assumptions"]["pass"].get<bool>()) return false;
    kwc::RunOptions opt;
    opt.stepper = cfg_.stepper;
    opt.snapshot_stride = cfg_.snapshot_stride;
    const kwc::Trajectory tr = kwc::run({s.eta0, s.theta0, 0.0}, s.model, s.params, s.forcings, opt);
    kwc::io::write_timeseries(out_ / "timeseries.csv", tr);
    kwc::io::write_snapshots(out_ / "snapshots", tr);
    solver_ = kwc::io::solver_summary(tr);

    assertion("completed", tr.completed, {{"failure", tr.failure}});
    double worst = 0.0;
    for (const auto& d : tr.diagnostics) worst = std::max({worst, d.eta_equation_residual, d.theta_equation_residual});
    assertion("step_equations", worst <= kwc::kStepResidualTolerance, {{"max_residual", worst}});

    bool unforced = true;
    for (const auto& r : tr.records) unforced = unforced && r.u_norm_h == 0.0 && r.v_norm_h == 0.0;
    if (unforced) {
      double rise = 0.0;
      for (std::size_t k = 1; k < tr.records.size(); ++k)
        rise = std::max(rise, tr.records[k].energy.total - tr.records[k - 1].energy.total);
      assertion("energy_nonincreasing", rise <= kwc::kEnergySlack, {{"max_increase", rise}});
    }
    if (!tr.completed) throw kwc::Error(tr.failure);
    return all_pass();
  }

  bool experiment() {
    const std::string& name = opt_.experiment;
    const auto& e = cfg_.experiments;
    kwc::ExperimentSetup s = setup();
    if (!assertions_["assumptions"]["pass"].get<bool>()) return false;
    json report;
    if (name == "energy_dissipation") {
      kwc::ExperimentSetup sp = s;
      sp.params.mu = sp.params.nu = 0.0;
      const auto par = kwc::exp_energy_dissipation(sp, kwc::Stepper::Parabolic, e.dissipation_stride);
      sp.params.mu = e.dissipation_mu;
      sp.params.nu = e.dissipation_nu;
      const auto pseudo = kwc::exp_energy_dissipation(sp, kwc::Stepper::PseudoParabolic, e.dissipation_stride);
      report = {{"parabolic", kwc::io::to_json(par)}, {"pseudo_parabolic", kwc::io::to_json(pseudo)}};
      kwc::io::write_timeseries(out_ / "parabolic_timeseries.csv", par.coarse.trajectory);
      kwc::io::write_timeseries(out_ / "parabolic_half_dt_timeseries.csv", par.fine.trajectory);
      kwc::io::write_timeseries(out_ / "pseudo_parabolic_timeseries.csv", pseudo.coarse.trajectory);
      kwc::io::write_timeseries(out_ / "pseudo_parabolic_half_dt_timeseries.csv", pseudo.fine.trajectory);
      solver_ = kwc::io::solver_summary(par.coarse.trajectory);
      assertion("parabolic", par.pass);
      assertion("pseudo_parabolic", pseudo.pass);
    } else if (name == "epsilon_limit") {
      const auto r = kwc::exp_epsilon_limit(s, e.epsilons, e.epsilon0);
      report = kwc::io::to_json(r);
      kwc::io::write_table_csv(out_ / "trajectories.csv", r.trajectories);
      kwc::io::write_table_csv(out_ / "initial_data.csv", r.initial_data);
      assertion("trajectories_decreasing", r.trajectories.pass);
      assertion("initial_data_decreasing", r.initial_data.pass);
    } else if (name == "munu_limit") {
      const auto r = kwc::exp_munu_limit(s, e.munu);
      report = kwc::io::to_json(r);
      kwc::io::write_table_csv(out_ / "distances.csv", r.table);
      assertion("distances_decreasing", r.table.pass);
      assertion("zero_path_identical", r.zero_path_identical);
    } else if (name == "continuous_dependence") {
      const auto r = kwc::exp_continuous_dependence(s, e.delta, e.embedding_samples);
      report = kwc::io::to_json(r);
      kwc::io::write_gronwall_csv(out_ / "gronwall.csv", r);
      assertion("zero_delta_exact", r.zero_delta_exact);
      assertion("gronwall_bound", r.gronwall_ok);
      assertion("halving", r.halving_ok, {{"ratio", r.halving_ratio}});
    } else if (name == "h2_uniformity") {
      const auto r = kwc::exp_h2_uniformity(s, kwc::default_h2_battery(s.grid), e.h2_levels);
      report = kwc::io::to_json(r);
      std::ofstream os(out_ / "battery.csv");
      os << "entry,epsilon,ratio\n";
      for (const auto& b : r.battery)
        for (std::size_t k = 0; k < b.ratios.size(); ++k)
          os << b.name << ',' << kwc::io::fmt(b.epsilons[k]) << ',' << kwc::io::fmt(b.ratios[k]) << '\n';
      assertion("battery_spread", r.battery_ok);
      assertion("trajectory", r.trajectory_ok);
    } else if (name == "manufactured_convergence") {
      kwc::ManufacturedConfig mc;
      mc.space_cells = e.space_cells;
      mc.space_dt = e.space_dt;
      mc.space_T = e.space_T;
      mc.time_steps = e.time_steps;
      mc.time_cells = e.time_cells;
      mc.time_T = e.time_T;
      const auto r = kwc::exp_manufactured_convergence(s, mc);
      report = kwc::io::to_json(r);
      kwc::io::write_table_csv(out_ / "space.csv", r.space);
      kwc::io::write_table_csv(out_ / "time.csv", r.time);
      assertion("space_order", r.space.pass);
      assertion("time_order", r.time.pass);
    } else if (name == "embedding_constant") {
      const auto r = kwc::estimate_embedding_constant(s.grid, e.embedding_samples, cfg_.seed);
      report = kwc::io::to_json(r);
      assertion("finite", std::isfinite(r.C_V_L4) && r.C_V_L4 > 0.0);
    } else if (name == "stationary") {
      const auto r = kwc::exp_stationary(s, e.stationary_steps);
      report = kwc::io::to_json(r);
      assertion("fixed_point_preserved", r.pass);
    } else {
      throw kwc::Error("unknown experiment " + name);
    }
    report["pass"] = all_pass();
    kwc::io::write_json(out_ / "report.json", report);
    return all_pass();
  }

  std::string command_;
  Options opt_;
  kwc::RunConfig cfg_;
  fs::path out_;
  json assertions_ = json::object();
  std::optional<json> bounds_;
  json solver_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kobayashi-Warren-Carter grain boundary solver"};
  app.require_subcommand(1);
  Options opt;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON configuration (or a manifest from a previous run)")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory (overrides output.dir)");
    sub->add_option("--seed", opt.seed, "random seed (overrides seed)");
    sub->add_option("--threads", opt.threads, "worker threads for studies");
  };
  CLI::App* run = app.add_subcommand("run", "integrate one trajectory");
  CLI::App* exp = app.add_subcommand("experiment", "run a named study");
  CLI::App* val = app.add_subcommand("validate", "check the model assumptions");
  common(run);
  common(exp);
  common(val);
  exp->add_option("name", opt.experiment, "study name")->required()->check(CLI::IsMember(kExperiments));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }
  const std::string command = run->parsed() ? "run" : exp->parsed() ? "experiment" : "validate";
  return Session(command, opt).execute();
}
