#pragma once

// Numerical studies: energy dissipation, ε- and (μ,ν)-limits, continuous
// dependence, H²-uniformity, manufactured-solution orders, and the discrete
// V → L⁴ embedding constant. Every study is deterministic given its inputs.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "elliptic.hpp"
#include "evolution.hpp"
#include "grid.hpp"
#include "manufactured.hpp"
#include "model.hpp"
#include "profiles.hpp"

namespace kwc {

/// Runs body(0..count-1) on up to `threads` workers. The first exception is rethrown.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Everything a study needs to launch runs.
struct ExperimentSetup {
  Grid grid = Grid(1, {64}, {1.0});
  Parameters params;
  ModelFunctions model = reference_model();
  ScalarField eta0;
  ScalarField theta0;
  Forcings forcings = Forcings::zero();
  int threads = 1;
};

/// Default initial pair: seeded random smooth profiles around η = 0.6, θ = 0.
inline void fill_random_initial(ExperimentSetup& s, std::uint64_t seed) {
  s.eta0 = random_smooth_field(s.grid, seed, {0.6, 0.6, 4});
  s.theta0 = random_smooth_field(s.grid, seed ^ 0x9e3779b97f4a7c15ULL, {0.0, 1.0, 4});
}

inline bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k)
    if (!(v[k] < v[k - 1])) return false;
  return true;
}

struct FieldDistance {
  double h = 0.0;
  double v = 0.0;
};

/// sup over common snapshots of the combined (η,θ) distances in H and V.
inline FieldDistance sup_distance(const Trajectory& a, const Trajectory& b) {
  if (a.snapshots.size() != b.snapshots.size()) throw Error("sup_distance: snapshot counts differ");
  FieldDistance d;
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    const ScalarField de = a.snapshots[k].eta - b.snapshots[k].eta;
    const ScalarField dt = a.snapshots[k].theta - b.snapshots[k].theta;
    d.h = std::max(d.h, std::sqrt(inner_h(de, de) + inner_h(dt, dt)));
    d.v = std::max(d.v, std::sqrt(std::pow(norm_v(de), 2) + std::pow(norm_v(dt), 2)));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Energy dissipation

struct DissipationRun {
  double dt = 0.0;
  double max_energy_increase = 0.0;  // max_k E_k − E_{k−1}
  double worst_residual = 0.0;       // min over intervals of the discrete energy-inequality residual
  double worst_residual_time = 0.0;
  double max_equation_residual = 0.0;
  Trajectory trajectory;
};

struct EnergyDissipationReport {
  Stepper stepper = Stepper::Parabolic;
  DissipationRun coarse, fine;
  double fitted_C = 0.0;        // residual ≥ −C·dt
  double halving_ratio = 0.0;   // worst(dt)/worst(dt/2)
  bool stationary = false;
  bool monotone = false;
  bool residual_bound = false;
  bool ratio_ok = false;
  bool pass = false;
};

inline constexpr double kEnergySlack = 1e-9;

inline DissipationRun dissipation_run(const ExperimentSetup& s, Stepper stepper, double dt, int stride) {
  Parameters p = s.params;
  p.dt = dt;
  RunOptions opt;
  opt.stepper = stepper;
  opt.snapshot_stride = stride;
  DissipationRun r;
  r.dt = dt;
  r.trajectory = run({s.eta0, s.theta0, 0.0}, s.model, p, Forcings::zero(), opt);
  if (!r.trajectory.completed) throw Error("energy dissipation run failed: " + r.trajectory.failure);
  const auto& rec = r.trajectory.records;
  r.max_energy_increase = -std::numeric_limits<double>::infinity();
  r.worst_residual = std::numeric_limits<double>::infinity();
  const auto res = energy_inequality_residual(r.trajectory, s.model, p);
  for (std::size_t k = 1; k < rec.size(); ++k) {
    r.max_energy_increase = std::max(r.max_energy_increase, rec[k].energy.total - rec[k - 1].energy.total);
    if (res[k - 1] < r.worst_residual) {
      r.worst_residual = res[k - 1];
      r.worst_residual_time = rec[k].t;
    }
  }
  for (const auto& d : r.trajectory.diagnostics)
    r.max_equation_residual = std::max({r.max_equation_residual, d.eta_equation_residual, d.theta_equation_residual});
  return r;
}

/// Runs with u = v = 0 at dt and dt/2. The constant C of the bound
/// residual ≥ −C·dt is fitted on the coarse run and checked on the fine one.
inline EnergyDissipationReport exp_energy_dissipation(const ExperimentSetup& s, Stepper stepper, int stride = 100) {
  EnergyDissipationReport rep;
  rep.stepper = stepper;
  DissipationRun runs[2];
  parallel_for(2, s.threads, [&](std::size_t i) {
    runs[i] = dissipation_run(s, stepper, i == 0 ? s.params.dt : 0.5 * s.params.dt, i == 0 ? stride : 2 * stride);
  });
  rep.coarse = std::move(runs[0]);
  rep.fine = std::move(runs[1]);

  const double floor = kEnergySlack;
  rep.stationary = std::abs(rep.coarse.worst_residual) <= floor && std::abs(rep.fine.worst_residual) <= floor &&
                   std::abs(rep.coarse.max_energy_increase) <= floor;
  rep.monotone = rep.coarse.max_energy_increase <= kEnergySlack && rep.fine.max_energy_increase <= kEnergySlack;
  rep.fitted_C = (std::max(0.0, -rep.coarse.worst_residual) + floor) / rep.coarse.dt;
  rep.residual_bound = rep.fine.worst_residual >= -rep.fitted_C * rep.fine.dt;
  if (rep.stationary) {
    rep.halving_ratio = 1.0;
    rep.ratio_ok = true;
  } else {
    rep.halving_ratio = rep.coarse.worst_residual / rep.fine.worst_residual;
    rep.ratio_ok = rep.halving_ratio >= 1.5 && rep.halving_ratio <= 2.5;
  }
  rep.pass = rep.monotone && rep.residual_bound && rep.ratio_ok;
  return rep;
}

// ---------------------------------------------------------------------------
// ε-limit

struct ConvergenceTable {
  std::string parameter;
  std::vector<double> values;
  std::vector<double> errors;           // primary error column
  std::vector<double> secondary;        // optional second column (same length or empty)
  std::string secondary_name;
  std::vector<double> observed_rates;   // per-row rate diagnostics; meaning set by the producing study
  bool pass = false;
  std::string note;
};

struct EpsilonLimitReport {
  double epsilon0 = 0.1;
  ConvergenceTable trajectories;   // sup-H distance to the ε₀ run; secondary: sup-V
  ConvergenceTable initial_data;   // ‖θ_{0,ε} − θ_{0,ε₀}‖_V
  bool pass = false;
};

inline EpsilonLimitReport exp_epsilon_limit(const ExperimentSetup& s, const std::vector<double>& eps_list,
                                            double eps0, int stride = 10) {
  if (!(eps0 > 0.0)) throw Error("epsilon limit: eps0 must be positive");
  for (double e : eps_list)
    if (!(e >= eps0)) throw Error("epsilon limit: the sequence must approach eps0 from above");
  EpsilonLimitReport rep;
  rep.epsilon0 = eps0;
  const ScalarField wstar(s.grid);

  const std::size_t n = eps_list.size();
  std::vector<ScalarField> theta_init(n + 1);
  std::vector<Trajectory> trajs(n + 1);
  parallel_for(n + 1, s.threads, [&](std::size_t i) {
    const double eps = i < n ? eps_list[i] : eps0;
    Parameters p = s.params;
    p.epsilon = eps;
    theta_init[i] = prepare_initial_theta(s.eta0, s.theta0, wstar, eps, p.kappa, s.model);
    RunOptions opt;
    opt.snapshot_stride = stride;
    trajs[i] = run({s.eta0, theta_init[i], 0.0}, s.model, p, s.forcings, opt);
    if (!trajs[i].completed) throw Error("epsilon limit run failed: " + trajs[i].failure);
  });

  rep.trajectories.parameter = "epsilon";
  rep.trajectories.secondary_name = "sup_V";
  rep.initial_data.parameter = "epsilon";
  for (std::size_t i = 0; i < n; ++i) {
    const FieldDistance d = sup_distance(trajs[i], trajs[n]);
    rep.trajectories.values.push_back(eps_list[i]);
    rep.trajectories.errors.push_back(d.h);
    rep.trajectories.secondary.push_back(d.v);
    rep.initial_data.values.push_back(eps_list[i]);
    rep.initial_data.errors.push_back(norm_v(theta_init[i] - theta_init[n]));
  }
  rep.trajectories.pass = strictly_decreasing(rep.trajectories.errors);
  rep.initial_data.pass = strictly_decreasing(rep.initial_data.errors);
  rep.pass = rep.trajectories.pass && rep.initial_data.pass;
  return rep;
}

// ---------------------------------------------------------------------------
// (μ,ν)-limit

struct MuNuLimitReport {
  ConvergenceTable table;  // sup-H distance of pseudo-parabolic runs (μ = ν) to the parabolic run
  bool zero_path_identical = false;
  bool pass = false;
};

inline bool identical_trajectories(const Trajectory& a, const Trajectory& b) {
  if (a.snapshots.size() != b.snapshots.size()) return false;
  for (std::size_t k = 0; k < a.snapshots.size(); ++k)
    if (!(a.snapshots[k].eta == b.snapshots[k].eta) || !(a.snapshots[k].theta == b.snapshots[k].theta)) return false;
  return true;
}

inline MuNuLimitReport exp_munu_limit(const ExperimentSetup& s, const std::vector<double>& munu_list, int stride = 10) {
  MuNuLimitReport rep;
  const std::size_t n = munu_list.size();
  // slots: 0..n-1 pseudo runs, n parabolic reference, n+1 pseudo with μ=ν=0
  std::vector<Trajectory> trajs(n + 2);
  parallel_for(n + 2, s.threads, [&](std::size_t i) {
    Parameters p = s.params;
    RunOptions opt;
    opt.snapshot_stride = stride;
    opt.stepper = Stepper::PseudoParabolic;
    if (i < n) {
      p.mu = p.nu = munu_list[i];
    } else {
      p.mu = p.nu = 0.0;
      if (i == n) opt.stepper = Stepper::Parabolic;
    }
    trajs[i] = run({s.eta0, s.theta0, 0.0}, s.model, p, s.forcings, opt);
    if (!trajs[i].completed) throw Error("mu/nu limit run failed: " + trajs[i].failure);
  });
  rep.table.parameter = "mu=nu";
  rep.table.secondary_name = "sup_V";
  for (std::size_t i = 0; i < n; ++i) {
    const FieldDistance d = sup_distance(trajs[i], trajs[n]);
    rep.table.values.push_back(munu_list[i]);
    rep.table.errors.push_back(d.h);
    rep.table.secondary.push_back(d.v);
  }
  for (std::size_t i = 1; i < n; ++i)
    if (rep.table.errors[i] > 0.0 && rep.table.errors[i - 1] > 0.0)
      rep.table.observed_rates.push_back(std::log(rep.table.errors[i - 1] / rep.table.errors[i]) /
                                         std::log(munu_list[i - 1] / munu_list[i]));
  rep.zero_path_identical = identical_trajectories(trajs[n], trajs[n + 1]);
  rep.table.pass = strictly_decreasing(rep.table.errors);
  rep.pass = rep.table.pass && rep.zero_path_identical;
  return rep;
}

// ---------------------------------------------------------------------------
// Embedding constant

struct EmbeddingEstimate {
  double max_ratio = 0.0;  // best observed ‖f‖_{L⁴}/‖f‖_V
  double C_V_L4 = 0.0;     // max_ratio × safety
  double safety = 1.5;
  int samples = 0;
};

inline double norm_l4(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.data()) s += v * v * v * v;
  return std::pow(s * f.grid().cell_volume(), 0.25);
}

inline EmbeddingEstimate estimate_embedding_constant(const Grid& g, int n_samples = 1000, std::uint64_t seed = 7) {
  if (n_samples < 1000) throw Error("estimate_embedding_constant: need at least 1000 samples");
  EmbeddingEstimate est;
  auto consider = [&](const ScalarField& f) {
    const double v = norm_v(f);
    if (v > 0.0) est.max_ratio = std::max(est.max_ratio, norm_l4(f) / v);
    ++est.samples;
  };
  // Near-extremizers: constants perturbed by the lowest modes.
  consider(ScalarField(g, 1.0));
  for (int k = 1; k <= 20; ++k) consider(cosine_field(g, 1.0, 0.05 * k));
  Rng rng(seed);
  while (est.samples < n_samples) {
    SmoothProfile p;
    p.offset = rng.uniform(-1.0, 1.0);
    p.amplitude = rng.uniform(0.0, 2.0);
    p.modes = 1 + static_cast<int>(rng.uniform() * 6.0);
    consider(random_smooth_field(g, rng.next(), p));
  }
  est.C_V_L4 = est.max_ratio * est.safety;
  return est;
}

// ---------------------------------------------------------------------------
// Continuous dependence

struct GronwallReport {
  std::vector<double> times;
  std::vector<double> J;
  std::vector<double> R;
  std::vector<double> bound;      // J(0)·exp(2·C_hat·∫R)
  double delta = 0.0;
  double J0_expected = 0.0;       // ‖δφ‖²_H of the injected perturbation
  double C_hat = 0.0;
  double C1_formula = 0.0;
  EmbeddingEstimate embedding;
  double sup_sqrtJ = 0.0;
  double sup_sqrtJ_half = 0.0;    // same with δ/2
  double halving_ratio = 0.0;
  bool zero_delta_exact = false;  // δ = 0 gives J ≡ 0 exactly
  bool gronwall_ok = false;
  bool halving_ok = false;
  bool pass = false;
};

inline constexpr double kGronwallFactor = 1.1;

namespace detail {

inline std::vector<double> J_series(const Trajectory& a, const Trajectory& b, const ModelFunctions& model) {
  std::vector<double> J;
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    const ScalarField de = a.snapshots[k].eta - b.snapshots[k].eta;
    const ScalarField dth = a.snapshots[k].theta - b.snapshots[k].theta;
    const ScalarField w = a.snapshots[k].eta.map(model.alpha0);
    double s = 0.0;
    for (std::size_t c = 0; c < dth.size(); ++c) s += w[c] * dth[c] * dth[c];
    J.push_back(inner_h(de, de) + s * dth.grid().cell_volume());
  }
  return J;
}

}  // namespace detail

/// Perturbs η₀ by δ·cos(πx)[cos(πy)] and tracks J(t) = ‖η¹−η²‖² + ‖√α₀(η¹)(θ¹−θ²)‖²
/// against R(t) = ‖∂ₜη¹‖²_V + ‖∂ₜθ²‖²_V + 1.
inline GronwallReport exp_continuous_dependence(const ExperimentSetup& s, double delta, int embedding_samples = 1000) {
  if (!(delta > 0.0)) throw Error("continuous dependence: delta must be positive");
  GronwallReport rep;
  rep.delta = delta;
  const ScalarField phi = cosine_field(s.grid);
  rep.J0_expected = delta * delta * inner_h(phi, phi);

  // slots: 0 base, 1 δ, 2 δ/2, 3 base repeated (δ = 0)
  std::vector<Trajectory> trajs(4);
  parallel_for(4, s.threads, [&](std::size_t i) {
    const double d = i == 1 ? delta : (i == 2 ? 0.5 * delta : 0.0);
    RunOptions opt;
    opt.snapshot_stride = 1;
    trajs[i] = run({s.eta0 + phi * d, s.theta0, 0.0}, s.model, s.params, s.forcings, opt);
    if (!trajs[i].completed) throw Error("continuous dependence run failed: " + trajs[i].failure);
  });

  rep.J = detail::J_series(trajs[0], trajs[1], s.model);
  const auto J_half = detail::J_series(trajs[0], trajs[2], s.model);
  const auto J_zero = detail::J_series(trajs[0], trajs[3], s.model);
  rep.zero_delta_exact = std::all_of(J_zero.begin(), J_zero.end(), [](double v) { return v == 0.0; });

  const auto& r1 = trajs[0].records;
  const auto& r2 = trajs[1].records;
  const double dt = s.params.dt;
  rep.times.push_back(0.0);
  rep.R.push_back(1.0);
  for (std::size_t k = 1; k < r1.size(); ++k) {
    rep.times.push_back(r1[k].t);
    rep.R.push_back(r1[k].rate_eta_v * r1[k].rate_eta_v + r2[k].rate_theta_v * r2[k].rate_theta_v + 1.0);
  }
  // Smallest C with (J_k − J_{k−1})/dt ≤ 2·C·R_k·J_{k−1} on every interval.
  for (std::size_t k = 1; k < rep.J.size(); ++k) {
    if (rep.J[k - 1] <= 0.0) continue;
    const double rate = (rep.J[k] - rep.J[k - 1]) / dt;
    rep.C_hat = std::max(rep.C_hat, rate / (2.0 * rep.R[k] * rep.J[k - 1]));
  }
  double integral = 0.0;
  rep.gronwall_ok = std::isfinite(rep.C_hat);
  for (std::size_t k = 0; k < rep.J.size(); ++k) {
    if (k > 0) integral += rep.R[k] * dt;
    rep.bound.push_back(rep.J[0] * std::exp(2.0 * rep.C_hat * integral));
    if (!(rep.J[k] <= rep.bound.back() * kGronwallFactor)) rep.gronwall_ok = false;
  }
  for (double v : rep.J) rep.sup_sqrtJ = std::max(rep.sup_sqrtJ, std::sqrt(v));
  for (double v : J_half) rep.sup_sqrtJ_half = std::max(rep.sup_sqrtJ_half, std::sqrt(v));
  rep.halving_ratio = rep.sup_sqrtJ / rep.sup_sqrtJ_half;
  rep.halving_ok = std::abs(rep.halving_ratio / 2.0 - 1.0) <= 0.2;

  rep.embedding = estimate_embedding_constant(s.grid, embedding_samples);
  const ModelBounds& b = s.model.bounds;
  const double kap = s.params.kappa;
  rep.C1_formula = 4.0 / (std::min(kap, 1.0) * std::min(b.delta_alpha, 1.0)) *
                   (b.g_d1_sup + b.alpha_d1_sup * b.alpha_d1_sup +
                    std::pow(rep.embedding.C_V_L4, 4) * b.alpha0_d1_sup * b.alpha0_d1_sup + kap);
  rep.pass = rep.zero_delta_exact && rep.gronwall_ok && rep.halving_ok;
  return rep;
}

// ---------------------------------------------------------------------------
// H² uniformity

struct H2BatteryEntry {
  std::string name;
  ScalarField beta;
  ScalarField z;
};

struct H2BatteryResult {
  std::string name;
  std::vector<double> epsilons;
  std::vector<double> ratios;
  double spread = 0.0;  // max/min
  bool pass = false;
};

struct H2TrajectoryCheck {
  double dt = 0.0;
  double sup_h2_theta = 0.0;
  double fitted_constant = 0.0;  // max_t |θ|²_{H²}/(|−α₀(η)∂ₜθ + θ + v|² + |α(η)|²_V)
};

struct H2UniformityReport {
  double kappa = 0.0;
  std::vector<H2BatteryResult> battery;
  H2TrajectoryCheck coarse, fine;
  double refinement_change = 0.0;  // relative change of sup |θ|_{H²} under dt halving
  bool battery_ok = false;
  bool trajectory_ok = false;
  bool pass = false;
};

inline constexpr double kH2SpreadLimit = 2.0;
inline constexpr double kH2RefinementTolerance = 0.1;

/// Battery of smooth (β, z) pairs on `g`; the singular weight is kept small
/// relative to z so that the resolvent does not collapse to a constant.
inline std::vector<H2BatteryEntry> default_h2_battery(const Grid& g) {
  const double Lx = g.extent(0);
  auto weight = [&](double scale) {
    return ScalarField::sample(g, [&](double x, double) { return scale * (1.0 + 0.5 * std::cos(M_PI * x / Lx)); });
  };
  std::vector<H2BatteryEntry> b;
  b.push_back({"constant", ScalarField(g), ScalarField(g, 0.7)});
  b.push_back({"cosine", weight(0.05), cosine_field(g)});
  b.push_back({"tanh_front", weight(0.05), ScalarField::sample(g, [&](double x, double) {
                 return std::tanh(5.0 * (x / Lx - 0.5));
               })});
  b.push_back({"two_mode", weight(0.02), ScalarField::sample(g, [&](double x, double) {
                 return 0.5 * std::cos(2.0 * M_PI * x / Lx) + 0.3 * (x / Lx) * (x / Lx);
               })});
  return b;
}

inline H2TrajectoryCheck h2_trajectory_check(const ExperimentSetup& s, double dt) {
  Parameters p = s.params;
  p.dt = dt;
  H2TrajectoryCheck out;
  out.dt = dt;
  const Grid& g = s.grid;
  SystemState prev{s.eta0, s.theta0, 0.0};
  out.sup_h2_theta = norm_h2(s.theta0);
  RunOptions opt;
  opt.snapshot_stride = step_count(p);
  opt.observer = [&](const SystemState& cur) {
    const double h2 = norm_h2(cur.theta);
    out.sup_h2_theta = std::max(out.sup_h2_theta, h2);
    const ScalarField v = s.forcings.v(g, cur.time);
    ScalarField tilde(g);
    for (std::size_t k = 0; k < g.size(); ++k)
      tilde[k] = -s.model.alpha0(cur.eta[k]) * (cur.theta[k] - prev.theta[k]) / dt + cur.theta[k] + v[k];
    const double den = std::pow(norm_h(tilde), 2) + std::pow(norm_v(cur.eta.map(s.model.alpha)), 2);
    out.fitted_constant = std::max(out.fitted_constant, h2 * h2 / den);
    prev = cur;
  };
  Trajectory tr = run(prev, s.model, p, s.forcings, opt);
  if (!tr.completed) throw Error("H2 trajectory run failed: " + tr.failure);
  return out;
}

inline H2UniformityReport exp_h2_uniformity(const ExperimentSetup& s, const std::vector<H2BatteryEntry>& battery,
                                            int eps_levels = 9) {
  H2UniformityReport rep;
  rep.kappa = s.params.kappa;
  rep.battery.resize(battery.size());
  parallel_for(battery.size(), s.threads, [&](std::size_t b) {
    const auto& e = battery[b];
    H2BatteryResult& out = rep.battery[b];
    out.name = e.name;
    const ScalarField ones(e.z.grid(), 1.0);
    for (int k = 0; k < eps_levels; ++k) {
      const double eps = std::ldexp(1.0, -k);
      SingularResolventProblem p{e.beta, s.params.kappa, ones, e.z, eps};
      SolveResult r = singular_resolvent(p);
      out.epsilons.push_back(eps);
      out.ratios.push_back(check_h2_bound(r.w, e.z, e.beta));
    }
    const auto [mn, mx] = std::minmax_element(out.ratios.begin(), out.ratios.end());
    out.spread = *mn > 0.0 ? *mx / *mn : INFINITY;
    out.pass = std::isfinite(out.spread) && out.spread <= kH2SpreadLimit;
  });
  rep.battery_ok = std::all_of(rep.battery.begin(), rep.battery.end(), [](const auto& r) { return r.pass; });

  H2TrajectoryCheck checks[2];
  parallel_for(2, s.threads, [&](std::size_t i) {
    checks[i] = h2_trajectory_check(s, i == 0 ? s.params.dt : 0.5 * s.params.dt);
  });
  rep.coarse = checks[0];
  rep.fine = checks[1];
  rep.refinement_change = std::abs(rep.coarse.sup_h2_theta - rep.fine.sup_h2_theta) / rep.fine.sup_h2_theta;
  rep.trajectory_ok = std::isfinite(rep.coarse.sup_h2_theta) && std::isfinite(rep.coarse.fitted_constant) &&
                      rep.refinement_change <= kH2RefinementTolerance;
  rep.pass = rep.battery_ok && rep.trajectory_ok;
  return rep;
}

// ---------------------------------------------------------------------------
// Manufactured solutions

struct ManufacturedConfig {
  ManufacturedPair pair;
  std::vector<int> space_cells{16, 32, 64};
  double space_dt = 1e-4;
  double space_T = 0.1;
  std::vector<double> time_steps{0.02, 0.01, 0.005};
  int time_cells = 256;
  double time_T = 0.5;
};

struct ManufacturedReport {
  ConvergenceTable space;  // rates are error ratios under h-halving
  ConvergenceTable time;   // rates are error ratios under dt-halving
  bool pass = false;
};

/// sup_t ‖(η,θ) − (η_ex,θ_ex)‖_H along a run started from the exact data.
inline double manufactured_error(const ExperimentSetup& s, const ManufacturedPair& mp, int cells, double dt, double T) {
  Grid g = s.grid.dim() == 1 ? Grid(1, {cells}, {s.grid.extent(0)})
                             : Grid(2, {cells, cells}, {s.grid.extent(0), s.grid.extent(1)});
  Parameters p = s.params;
  p.dt = dt;
  p.T = T;
  p.mu = p.nu = 0.0;
  const Forcings f = manufactured_forcings(mp, s.model, p);
  double err = 0.0;
  RunOptions opt;
  opt.snapshot_stride = step_count(p);
  opt.observer = [&](const SystemState& st) {
    const ScalarField de = st.eta - mp.eta.sample(g, st.time);
    const ScalarField dth = st.theta - mp.theta.sample(g, st.time);
    err = std::max(err, std::sqrt(inner_h(de, de) + inner_h(dth, dth)));
  };
  Trajectory tr = run({mp.eta.sample(g, 0.0), mp.theta.sample(g, 0.0), 0.0}, s.model, p, f, opt);
  if (!tr.completed) throw Error("manufactured run failed: " + tr.failure);
  return err;
}

inline ManufacturedReport exp_manufactured_convergence(const ExperimentSetup& s, const ManufacturedConfig& c = {}) {
  ManufacturedReport rep;
  rep.space.parameter = "cells";
  rep.time.parameter = "dt";
  const std::size_t ns = c.space_cells.size(), nt = c.time_steps.size();
  std::vector<double> errs(ns + nt);
  parallel_for(ns + nt, s.threads, [&](std::size_t i) {
    errs[i] = i < ns ? manufactured_error(s, c.pair, c.space_cells[i], c.space_dt, c.space_T)
                     : manufactured_error(s, c.pair, c.time_cells, c.time_steps[i - ns], c.time_T);
  });
  for (std::size_t i = 0; i < ns; ++i) {
    rep.space.values.push_back(c.space_cells[i]);
    rep.space.errors.push_back(errs[i]);
  }
  for (std::size_t i = 0; i < nt; ++i) {
    rep.time.values.push_back(c.time_steps[i]);
    rep.time.errors.push_back(errs[ns + i]);
  }
  const bool exact = c.pair.eta.is_constant() && c.pair.theta.is_constant();
  auto ratios = [&](ConvergenceTable& t, double lo, double hi) {
    bool ok = true;
    for (std::size_t i = 1; i < t.errors.size(); ++i) {
      if (exact) {
        ok = ok && t.errors[i] <= 1e-12 && t.errors[i - 1] <= 1e-12;
        continue;
      }
      const double r = t.errors[i - 1] / t.errors[i];
      t.observed_rates.push_back(r);
      ok = ok && r >= lo && r <= hi;
    }
    t.pass = ok;
  };
  ratios(rep.space, 3.5, 4.5);
  ratios(rep.time, 1.7, 2.3);
  rep.pass = rep.space.pass && rep.time.pass;
  return rep;
}


// ---------------------------------------------------------------------------
// Stationary preservation

struct StationaryCase {
  Stepper stepper = Stepper::Parabolic;
  double mu = 0.0, nu = 0.0;
  double max_deviation = 0.0;  // sup over steps of the max-norm change from the fixed point
};

struct StationaryReport {
  double eta_star = 1.0, theta_star = 0.0;
  std::vector<StationaryCase> cases;
  bool pass = false;
};

inline constexpr double kStationaryTolerance = 1e-10;

/// η ≡ η*, θ ≡ θ* with u ≡ g(η*) + α'(η*)·ε and v ≡ 0 is an exact fixed point
/// of both substeps. Checked for the parabolic stepper and every (μ,ν) ∈ {0, 0.1}².
inline StationaryReport exp_stationary(const ExperimentSetup& s, int steps = 100, double eta_star = 1.0,
                                       double theta_star = 0.0) {
  StationaryReport rep;
  rep.eta_star = eta_star;
  rep.theta_star = theta_star;
  rep.cases.push_back({Stepper::Parabolic, 0.0, 0.0});
  for (double mu : {0.0, 0.1})
    for (double nu : {0.0, 0.1}) rep.cases.push_back({Stepper::PseudoParabolic, mu, nu});
  const double u0 = s.model.g(eta_star) + s.model.alpha_d1(eta_star) * s.params.epsilon;
  const Forcings f = Forcings::constant(u0, 0.0);
  parallel_for(rep.cases.size(), s.threads, [&](std::size_t i) {
    StationaryCase& c = rep.cases[i];
    Parameters p = s.params;
    p.mu = c.mu;
    p.nu = c.nu;
    p.T = steps * p.dt;
    RunOptions opt;
    opt.stepper = c.stepper;
    opt.snapshot_stride = steps;
    opt.observer = [&](const SystemState& st) {
      for (std::size_t k = 0; k < st.eta.size(); ++k)
        c.max_deviation = std::max({c.max_deviation, std::abs(st.eta[k] - eta_star), std::abs(st.theta[k] - theta_star)});
    };
    Trajectory tr = run({ScalarField(s.grid, eta_star), ScalarField(s.grid, theta_star), 0.0}, s.model, p, f, opt);
    if (!tr.completed) c.max_deviation = std::numeric_limits<double>::infinity();
  });
  rep.pass = true;
  for (const auto& c : rep.cases) rep.pass = rep.pass && c.max_deviation <= kStationaryTolerance;
  return rep;
}

}  // namespace kwc
