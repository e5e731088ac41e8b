#pragma once

// Run configuration: a strict JSON schema with defaults, validation that
// collects every violation with its key path, and a serializer whose output
// parses back to an equal configuration. A run manifest (which embeds the
// configuration under "config") is accepted wherever a configuration is.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "evolution.hpp"
#include "experiments.hpp"
#include "expression.hpp"
#include "io.hpp"
#include "model.hpp"
#include "profiles.hpp"

namespace kwc {

using nlohmann::json;

class ConfigError : public Error {
public:
  explicit ConfigError(std::vector<std::string> violations)
      : Error(summary(violations)), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const { return violations_; }

private:
  static std::string summary(const std::vector<std::string>& v) {
    std::string s = "invalid configuration:";
    for (const auto& e : v) s += "\n  " + e;
    return s;
  }
  std::vector<std::string> violations_;
};

struct FieldSpec {
  std::string profile = "random_smooth";  // constant | cosine | random_smooth | expression | file
  double value = 0.0;                     // constant
  double offset = 0.0;                    // cosine, random_smooth
  double amplitude = 1.0;
  int modes = 4;
  std::uint64_t seed = 0;                 // random_smooth; 0 derives from the run seed
  std::string expr;                       // expression in x, y
  std::string path;                       // file

  bool operator==(const FieldSpec&) const = default;
};

struct ExperimentBlocks {
  int dissipation_stride = 100;
  double dissipation_mu = 0.1;  // pseudo-parabolic companion run
  double dissipation_nu = 0.1;
  std::vector<double> epsilons{0.5, 0.3, 0.2, 0.15, 0.11};
  double epsilon0 = 0.1;
  std::vector<double> munu{0.2, 0.1, 0.05, 0.025};
  double delta = 1e-3;
  int embedding_samples = 1000;
  int h2_levels = 9;
  std::vector<int> space_cells{16, 32, 64};
  double space_dt = 1e-4;
  double space_T = 0.1;
  std::vector<double> time_steps{0.02, 0.01, 0.005};
  int time_cells = 256;
  double time_T = 0.5;
  int stationary_steps = 100;

  bool operator==(const ExperimentBlocks&) const = default;
};

struct RunConfig {
  int dim = 1;
  std::vector<int> cells{64};
  std::vector<double> extents{1.0};
  Parameters params;
  std::string model = "reference";
  ReferenceModelOverrides overrides;
  FieldSpec eta0{"random_smooth", 0.0, 0.6, 0.6, 4, 0, "", ""};
  FieldSpec theta0{"random_smooth", 0.0, 0.0, 1.0, 4, 0, "", ""};
  std::string wstar = "0";
  bool prepare_theta = false;
  std::string u = "0";
  std::string v = "0";
  Stepper stepper = Stepper::Parabolic;
  std::string output_dir = "out";
  int snapshot_stride = 100;
  std::uint64_t seed = 42;
  int threads = 1;
  ExperimentBlocks experiments;

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

class Reader {
public:
  std::vector<std::string> errors;

  /// Rejects keys of `obj` outside `allowed`, suggesting the nearest known key.
  void keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) {
      errors.push_back(path + ": expected an object");
      return;
    }
    for (const auto& [k, _] : obj.items()) {
      if (allowed.count(k)) continue;
      std::string best;
      std::size_t best_d = 3;
      for (const auto& a : allowed) {
        const std::size_t d = edit_distance(k, a);
        if (d < best_d) {
          best_d = d;
          best = a;
        }
      }
      errors.push_back(join(path, k) + ": unknown key" + (best.empty() ? "" : " (did you mean \"" + best + "\"?)"));
    }
  }

  template <class T>
  void get(const json& obj, const std::string& path, const char* key, T& out) {
    if (!obj.is_object() || !obj.contains(key)) return;
    try {
      out = obj.at(key).get<T>();
    } catch (const std::exception&) {
      errors.push_back(join(path, key) + ": wrong type");
    }
  }

  void require(bool ok, const std::string& where, const std::string& what) {
    if (!ok) errors.push_back(where + ": " + what);
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }
};

inline void read_field(Reader& r, const json& j, const std::string& path, FieldSpec& f) {
  r.keys(j, path, {"profile", "value", "offset", "amplitude", "modes", "seed", "expr", "path"});
  r.get(j, path, "profile", f.profile);
  r.get(j, path, "value", f.value);
  r.get(j, path, "offset", f.offset);
  r.get(j, path, "amplitude", f.amplitude);
  r.get(j, path, "modes", f.modes);
  r.get(j, path, "seed", f.seed);
  r.get(j, path, "expr", f.expr);
  r.get(j, path, "path", f.path);
  static const std::set<std::string> profiles{"constant", "cosine", "random_smooth", "expression", "file"};
  r.require(profiles.count(f.profile) > 0, path + ".profile", "unknown profile \"" + f.profile + "\"");
  if (f.profile == "expression") {
    try {
      Expression e(f.expr);
    } catch (const std::exception& ex) {
      r.errors.push_back(path + ".expr: " + ex.what());
    }
  }
  if (f.profile == "file")
    r.require(!f.path.empty() && std::filesystem::exists(f.path), path + ".path", "file \"" + f.path + "\" not found");
  if (f.profile == "random_smooth") r.require(f.modes >= 1, path + ".modes", "must be at least 1");
}

inline json field_to_json(const FieldSpec& f) {
  json j = {{"profile", f.profile}};
  if (f.profile == "constant") j["value"] = f.value;
  if (f.profile == "cosine" || f.profile == "random_smooth") {
    j["offset"] = f.offset;
    j["amplitude"] = f.amplitude;
  }
  if (f.profile == "random_smooth") {
    j["modes"] = f.modes;
    j["seed"] = f.seed;
  }
  if (f.profile == "expression") j["expr"] = f.expr;
  if (f.profile == "file") j["path"] = f.path;
  return j;
}

}  // namespace detail

inline RunConfig parse_config_json(const json& doc_in) {
  const json& doc = doc_in.is_object() && doc_in.contains("manifest_version") && doc_in.contains("config")
                        ? doc_in.at("config")
                        : doc_in;
  RunConfig c;
  detail::Reader r;
  r.keys(doc, "", {"grid", "parameters", "model", "initial", "forcing", "stepper", "output", "seed", "threads",
                   "experiments"});

  const json empty = json::object();
  auto sub = [&](const char* k) -> const json& { return doc.is_object() && doc.contains(k) ? doc.at(k) : empty; };

  const json& grid = sub("grid");
  r.keys(grid, "grid", {"dim", "cells", "extents"});
  r.get(grid, "grid", "dim", c.dim);
  bool cells_given = grid.contains("cells"), extents_given = grid.contains("extents");
  r.get(grid, "grid", "cells", c.cells);
  r.get(grid, "grid", "extents", c.extents);
  if (!cells_given) c.cells.assign(c.dim == 2 ? 2 : 1, c.dim == 2 ? 32 : 64);
  if (!extents_given) c.extents.assign(c.dim == 2 ? 2 : 1, 1.0);
  try {
    Grid g(c.dim, c.cells, c.extents);
  } catch (const std::exception& e) {
    r.errors.push_back(std::string("grid: ") + e.what());
  }

  const json& prm = sub("parameters");
  r.keys(prm, "parameters", {"kappa", "epsilon", "T", "dt", "mu", "nu"});
  r.get(prm, "parameters", "kappa", c.params.kappa);
  r.get(prm, "parameters", "epsilon", c.params.epsilon);
  r.get(prm, "parameters", "T", c.params.T);
  r.get(prm, "parameters", "mu", c.params.mu);
  r.get(prm, "parameters", "nu", c.params.nu);
  c.params.dt = 1e-3 * c.params.T;
  r.get(prm, "parameters", "dt", c.params.dt);
  r.require(c.params.kappa > 0.0, "parameters.kappa", "must be positive (A1: kappa > 0)");
  r.require(c.params.epsilon > 0.0 && c.params.epsilon <= 1.0, "parameters.epsilon", "must lie in (0,1]");
  r.require(c.params.T > 0.0, "parameters.T", "must be positive");
  r.require(c.params.dt > 0.0 && c.params.dt <= c.params.T, "parameters.dt", "must satisfy 0 < dt <= T");
  r.require(c.params.mu >= 0.0 && c.params.mu < 1.0, "parameters.mu", "must lie in [0,1)");
  r.require(c.params.nu >= 0.0 && c.params.nu < 1.0, "parameters.nu", "must lie in [0,1)");
  if (c.params.dt > 0.0 && c.params.T > 0.0) {
    const double n = c.params.T / c.params.dt;
    r.require(std::abs(n - std::round(n)) <= 1e-9 * std::max(1.0, n), "parameters.dt", "must divide T");
  }

  const json& model = sub("model");
  r.keys(model, "model", {"name", "alpha_offset", "alpha0_offset", "alpha0_bump"});
  r.get(model, "model", "name", c.model);
  r.get(model, "model", "alpha_offset", c.overrides.alpha_offset);
  r.get(model, "model", "alpha0_offset", c.overrides.alpha0_offset);
  r.get(model, "model", "alpha0_bump", c.overrides.alpha0_bump);
  r.require(c.model == "reference", "model.name", "unknown model \"" + c.model + "\" (available: reference)");

  const json& init = sub("initial");
  r.keys(init, "initial", {"eta", "theta", "wstar", "prepare_theta"});
  if (init.contains("eta")) detail::read_field(r, init.at("eta"), "initial.eta", c.eta0);
  if (init.contains("theta")) detail::read_field(r, init.at("theta"), "initial.theta", c.theta0);
  r.get(init, "initial", "wstar", c.wstar);
  r.get(init, "initial", "prepare_theta", c.prepare_theta);

  const json& forcing = sub("forcing");
  r.keys(forcing, "forcing", {"u", "v"});
  r.get(forcing, "forcing", "u", c.u);
  r.get(forcing, "forcing", "v", c.v);
  for (auto [name, src] : {std::pair{"forcing.u", &c.u}, {"forcing.v", &c.v}, {"initial.wstar", &c.wstar}}) {
    try {
      Expression e(*src);
    } catch (const std::exception& ex) {
      r.errors.push_back(std::string(name) + ": " + ex.what());
    }
  }

  std::string stepper = to_string(c.stepper);
  r.get(doc, "", "stepper", stepper);
  if (stepper == "parabolic") c.stepper = Stepper::Parabolic;
  else if (stepper == "pseudo_parabolic") c.stepper = Stepper::PseudoParabolic;
  else r.errors.push_back("stepper: expected \"parabolic\" or \"pseudo_parabolic\"");
  if (c.stepper == Stepper::Parabolic)
    r.require(c.params.mu == 0.0 && c.params.nu == 0.0, "stepper", "parabolic stepper requires mu = nu = 0");

  const json& out = sub("output");
  r.keys(out, "output", {"dir", "snapshot_stride"});
  r.get(out, "output", "dir", c.output_dir);
  r.get(out, "output", "snapshot_stride", c.snapshot_stride);
  r.require(c.snapshot_stride >= 1, "output.snapshot_stride", "must be at least 1");

  r.get(doc, "", "seed", c.seed);
  r.get(doc, "", "threads", c.threads);
  r.require(c.threads >= 1, "threads", "must be at least 1");

  const json& ex = sub("experiments");
  auto& e = c.experiments;
  r.keys(ex, "experiments", {"energy_dissipation", "epsilon_limit", "munu_limit", "continuous_dependence",
                              "h2_uniformity", "manufactured_convergence", "stationary"});
  auto block = [&](const char* k) -> const json& { return ex.is_object() && ex.contains(k) ? ex.at(k) : empty; };
  const std::string p = "experiments.";
  r.keys(block("energy_dissipation"), p + "energy_dissipation", {"stride", "mu", "nu"});
  r.get(block("energy_dissipation"), p + "energy_dissipation", "stride", e.dissipation_stride);
  r.get(block("energy_dissipation"), p + "energy_dissipation", "mu", e.dissipation_mu);
  r.get(block("energy_dissipation"), p + "energy_dissipation", "nu", e.dissipation_nu);
  r.require(e.dissipation_stride >= 1, p + "energy_dissipation.stride", "must be at least 1");
  r.require(e.dissipation_mu >= 0.0 && e.dissipation_mu < 1.0 && e.dissipation_nu >= 0.0 && e.dissipation_nu < 1.0,
            p + "energy_dissipation", "mu and nu must lie in [0,1)");
  r.keys(block("stationary"), p + "stationary", {"steps"});
  r.get(block("stationary"), p + "stationary", "steps", e.stationary_steps);
  r.require(e.stationary_steps >= 1, p + "stationary.steps", "must be at least 1");
  r.keys(block("epsilon_limit"), p + "epsilon_limit", {"epsilons", "epsilon0"});
  r.get(block("epsilon_limit"), p + "epsilon_limit", "epsilons", e.epsilons);
  r.get(block("epsilon_limit"), p + "epsilon_limit", "epsilon0", e.epsilon0);
  r.require(e.epsilon0 > 0.0, p + "epsilon_limit.epsilon0", "must be positive");
  r.keys(block("munu_limit"), p + "munu_limit", {"values"});
  r.get(block("munu_limit"), p + "munu_limit", "values", e.munu);
  r.keys(block("continuous_dependence"), p + "continuous_dependence", {"delta", "embedding_samples"});
  r.get(block("continuous_dependence"), p + "continuous_dependence", "delta", e.delta);
  r.get(block("continuous_dependence"), p + "continuous_dependence", "embedding_samples", e.embedding_samples);
  r.require(e.delta > 0.0, p + "continuous_dependence.delta", "must be positive");
  r.require(e.embedding_samples >= 1000, p + "continuous_dependence.embedding_samples", "must be at least 1000");
  r.keys(block("h2_uniformity"), p + "h2_uniformity", {"levels"});
  r.get(block("h2_uniformity"), p + "h2_uniformity", "levels", e.h2_levels);
  const json& mms = block("manufactured_convergence");
  const std::string mp = p + "manufactured_convergence";
  r.keys(mms, mp, {"space_cells", "space_dt", "space_T", "time_steps", "time_cells", "time_T"});
  r.get(mms, mp, "space_cells", e.space_cells);
  r.get(mms, mp, "space_dt", e.space_dt);
  r.get(mms, mp, "space_T", e.space_T);
  r.get(mms, mp, "time_steps", e.time_steps);
  r.get(mms, mp, "time_cells", e.time_cells);
  r.get(mms, mp, "time_T", e.time_T);

  if (!r.errors.empty()) throw ConfigError(r.errors);
  return c;
}

inline RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError({"cannot read configuration file " + path.string()});
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("JSON parse error: ") + e.what()});
  }
  return parse_config_json(doc);
}

inline json serialize_config(const RunConfig& c) {
  const auto& e = c.experiments;
  return {
      {"grid", {{"dim", c.dim}, {"cells", c.cells}, {"extents", c.extents}}},
      {"parameters",
       {{"kappa", c.params.kappa}, {"epsilon", c.params.epsilon}, {"T", c.params.T}, {"dt", c.params.dt},
        {"mu", c.params.mu}, {"nu", c.params.nu}}},
      {"model",
       {{"name", c.model}, {"alpha_offset", c.overrides.alpha_offset}, {"alpha0_offset", c.overrides.alpha0_offset},
        {"alpha0_bump", c.overrides.alpha0_bump}}},
      {"initial",
       {{"eta", detail::field_to_json(c.eta0)}, {"theta", detail::field_to_json(c.theta0)}, {"wstar", c.wstar},
        {"prepare_theta", c.prepare_theta}}},
      {"forcing", {{"u", c.u}, {"v", c.v}}},
      {"stepper", to_string(c.stepper)},
      {"output", {{"dir", c.output_dir}, {"snapshot_stride", c.snapshot_stride}}},
      {"seed", c.seed},
      {"threads", c.threads},
      {"experiments",
       {{"energy_dissipation", {{"stride", e.dissipation_stride}, {"mu", e.dissipation_mu}, {"nu", e.dissipation_nu}}},
        {"epsilon_limit", {{"epsilons", e.epsilons}, {"epsilon0", e.epsilon0}}},
        {"munu_limit", {{"values", e.munu}}},
        {"continuous_dependence", {{"delta", e.delta}, {"embedding_samples", e.embedding_samples}}},
        {"h2_uniformity", {{"levels", e.h2_levels}}},
        {"manufactured_convergence",
         {{"space_cells", e.space_cells}, {"space_dt", e.space_dt}, {"space_T", e.space_T},
          {"time_steps", e.time_steps}, {"time_cells", e.time_cells}, {"time_T", e.time_T}}},
        {"stationary", {{"steps", e.stationary_steps}}}}}};
}

// ---------------------------------------------------------------------------

inline Grid make_grid(const RunConfig& c) { return Grid(c.dim, c.cells, c.extents); }

inline ModelFunctions make_model(const RunConfig& c) {
  if (c.model != "reference") throw Error("unknown model " + c.model);
  return reference_model(c.overrides);
}

inline ScalarField make_field(const FieldSpec& f, const Grid& g, std::uint64_t derived_seed) {
  if (f.profile == "constant") return ScalarField(g, f.value);
  if (f.profile == "cosine") return cosine_field(g, f.offset, f.amplitude);
  if (f.profile == "random_smooth")
    return random_smooth_field(g, f.seed ? f.seed : derived_seed, {f.offset, f.amplitude, f.modes});
  if (f.profile == "expression") return Expression(f.expr).sample(g, 0.0);
  if (f.profile == "file") {
    ScalarField s = io::read_snapshot(f.path);
    if (!(s.grid() == g)) throw Error("snapshot " + f.path + " does not match the configured grid");
    return s;
  }
  throw Error("unknown profile " + f.profile);
}

/// Builds the setup for runs and studies. The model is validated so its
/// sampled bounds (δ_α in particular) are available.
inline ExperimentSetup make_setup(const RunConfig& c, AssumptionReport* validation = nullptr) {
  ExperimentSetup s;
  s.grid = make_grid(c);
  s.params = c.params;
  s.model = make_model(c);
  AssumptionReport rep = validate_assumptions(s.model);
  if (validation) *validation = rep;
  s.eta0 = make_field(c.eta0, s.grid, c.seed);
  s.theta0 = make_field(c.theta0, s.grid, c.seed ^ 0x9e3779b97f4a7c15ULL);
  s.forcings = Forcings::expressions(Expression(c.u), Expression(c.v));
  s.threads = c.threads;
  if (c.prepare_theta) {
    const ScalarField w = Expression(c.wstar).sample(s.grid, 0.0);
    s.theta0 = prepare_initial_theta(s.eta0, s.theta0, w, c.params.epsilon, c.params.kappa, s.model);
  }
  return s;
}

}  // namespace kwc
