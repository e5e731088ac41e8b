#pragma once

// Time integration of the KWC system and of its pseudo-parabolic
// regularization by decoupled semi-implicit splitting:
//
//   η-step  (I − μ²Δ_N)(η⁺ − η)/dt − Δ_N η⁺ + g(η) + α'(η)Γ(θ) = u(t⁺)
//   θ-step  α₀(η⁺)(θ⁺ − θ)/dt − div(α(η⁺)∇γ_ε(∇θ⁺) + κ∇θ⁺ + ν²∇(θ⁺ − θ)/dt) = v(t⁺)
//
// Each substep is a convex problem: the η-step is a linear resolvent and the
// θ-step a singular resolvent with weight m = α₀(η⁺)/dt.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "elliptic.hpp"
#include "expression.hpp"
#include "grid.hpp"
#include "interfacial.hpp"
#include "model.hpp"

namespace kwc {

struct SystemState {
  ScalarField eta;
  ScalarField theta;
  double time = 0.0;
};

using FieldProvider = std::function<ScalarField(const Grid&, double)>;

/// Piecewise-linear interpolation in time between tabulated fields.
class TabulatedField {
public:
  TabulatedField(std::vector<double> times, std::vector<ScalarField> fields)
      : times_(std::move(times)), fields_(std::move(fields)) {
    if (times_.empty() || times_.size() != fields_.size()) throw Error("tabulated field: need matching times and fields");
    for (std::size_t k = 1; k < times_.size(); ++k)
      if (!(times_[k] > times_[k - 1])) throw Error("tabulated field: times must increase");
  }

  ScalarField operator()(const Grid& g, double t) const {
    if (!(fields_.front().grid() == g)) throw Error("tabulated field: grid mismatch");
    if (t <= times_.front()) return fields_.front();
    if (t >= times_.back()) return fields_.back();
    std::size_t k = 1;
    while (times_[k] < t) ++k;
    const double s = (t - times_[k - 1]) / (times_[k] - times_[k - 1]);
    return fields_[k - 1] * (1.0 - s) + fields_[k] * s;
  }

private:
  std::vector<double> times_;
  std::vector<ScalarField> fields_;
};

struct Forcings {
  FieldProvider u;
  FieldProvider v;

  static Forcings zero() {
    auto z = [](const Grid& g, double) { return ScalarField(g); };
    return {z, z};
  }
  static Forcings constant(double u0, double v0) {
    return {[u0](const Grid& g, double) { return ScalarField(g, u0); },
            [v0](const Grid& g, double) { return ScalarField(g, v0); }};
  }
  static Forcings expressions(const Expression& u, const Expression& v) {
    return {[u](const Grid& g, double t) { return u.sample(g, t); },
            [v](const Grid& g, double t) { return v.sample(g, t); }};
  }
};

enum class Stepper { Parabolic, PseudoParabolic };

inline std::string to_string(Stepper s) { return s == Stepper::Parabolic ? "parabolic" : "pseudo_parabolic"; }

struct StepDiagnostics {
  SolveReport eta;
  SolveReport theta;
  double eta_equation_residual = 0.0;    // dt-scaled, H norm
  double theta_equation_residual = 0.0;
};

inline constexpr double kStepResidualTolerance = 1e-9;

namespace detail {

inline SystemState semi_implicit_step(const SystemState& s, const ModelFunctions& model, const Parameters& prm,
                                      const Forcings& f, StepDiagnostics* diag) {
  const Grid& g = s.eta.grid();
  const double dt = prm.dt;
  const double t1 = s.time + dt;
  const double mu2 = prm.mu * prm.mu;
  const double nu2 = prm.nu * prm.nu;

  // η-step
  const ScalarField gam = cell_gamma(s.theta, prm.epsilon);
  const ScalarField u = f.u(g, t1);
  ScalarField drive(g);
  for (std::size_t k = 0; k < g.size(); ++k)
    drive[k] = u[k] - model.g(s.eta[k]) - model.alpha_d1(s.eta[k]) * gam[k];
  LinearResolventProblem lp;
  lp.m = ScalarField(g, 1.0);
  lp.z = s.eta;
  if (mu2 > 0.0) {
    lp.lambda = dt + mu2;
    const ScalarField lap = laplacian_neumann(s.eta);
    for (std::size_t k = 0; k < g.size(); ++k) lp.z[k] += -mu2 * lap[k] + dt * drive[k];
  } else {
    lp.lambda = dt;
    for (std::size_t k = 0; k < g.size(); ++k) lp.z[k] += dt * drive[k];
  }
  SolveResult eta_sol = linear_resolvent(lp);
  if (!eta_sol.report.converged) throw SolveError("eta-step: linear solve did not converge", eta_sol.report);
  ScalarField eta1 = std::move(eta_sol.w);

  // θ-step
  SingularResolventProblem sp;
  sp.beta = eta1.map(model.alpha);
  sp.m = eta1.map([&](double e) { return model.alpha0(e) / dt; });
  sp.kappa_eff = prm.kappa + nu2 / dt;
  sp.epsilon = prm.epsilon;
  sp.z = f.v(g, t1);
  if (nu2 > 0.0) {
    const ScalarField lap = laplacian_neumann(s.theta);
    for (std::size_t k = 0; k < g.size(); ++k) sp.z[k] += sp.m[k] * s.theta[k] - (nu2 / dt) * lap[k];
  } else {
    for (std::size_t k = 0; k < g.size(); ++k) sp.z[k] += sp.m[k] * s.theta[k];
  }
  SolveResult theta_sol = singular_resolvent(sp, &s.theta);
  ScalarField theta1 = std::move(theta_sol.w);

  if (diag) {
    diag->eta = eta_sol.report;
    diag->theta = theta_sol.report;

    // Re-evaluate both discrete equations, multiplied by dt, from scratch.
    ScalarField deta = eta1 - s.eta;
    ScalarField r_eta = deta;
    const ScalarField lap_eta = laplacian_neumann(eta1 + deta * (mu2 / dt));
    for (std::size_t k = 0; k < g.size(); ++k) r_eta[k] += dt * (-lap_eta[k] - drive[k]);
    diag->eta_equation_residual = norm_h(r_eta);

    ScalarField dtheta = theta1 - s.theta;
    ScalarField r_theta = interfacial_gradient(sp.beta, theta1, prm.epsilon, prm.kappa);
    const ScalarField lap_dth = laplacian_neumann(dtheta);
    const ScalarField v = f.v(g, t1);
    for (std::size_t k = 0; k < g.size(); ++k)
      r_theta[k] = dt * (model.alpha0(eta1[k]) * dtheta[k] / dt + r_theta[k] - nu2 * lap_dth[k] / dt - v[k]);
    diag->theta_equation_residual = norm_h(r_theta);
  }
  return {std::move(eta1), std::move(theta1), t1};
}

}  // namespace detail

inline SystemState step_parabolic(const SystemState& s, const ModelFunctions& model, const Parameters& prm,
                                  const Forcings& f, StepDiagnostics* diag = nullptr) {
  if (prm.mu != 0.0 || prm.nu != 0.0) throw Error("step_parabolic: requires mu = nu = 0");
  return detail::semi_implicit_step(s, model, prm, f, diag);
}

inline SystemState step_pseudo_parabolic(const SystemState& s, const ModelFunctions& model, const Parameters& prm,
                                         const Forcings& f, StepDiagnostics* diag = nullptr) {
  if (prm.mu < 0.0 || prm.nu < 0.0) throw Error("step_pseudo_parabolic: mu, nu must be nonnegative");
  return detail::semi_implicit_step(s, model, prm, f, diag);
}

inline SystemState step(Stepper which, const SystemState& s, const ModelFunctions& model, const Parameters& prm,
                        const Forcings& f, StepDiagnostics* diag = nullptr) {
  return which == Stepper::Parabolic ? step_parabolic(s, model, prm, f, diag)
                                     : step_pseudo_parabolic(s, model, prm, f, diag);
}

/// θ_{0,ε} = (∂Φ_κ^ε(α(η₀);·) + I)⁻¹(w* + θ₀).
inline ScalarField prepare_initial_theta(const ScalarField& eta0, const ScalarField& theta0_raw,
                                         const ScalarField& wstar, double epsilon, double kappa,
                                         const ModelFunctions& model, SolveReport* report = nullptr) {
  SingularResolventProblem p;
  p.beta = eta0.map(model.alpha);
  p.m = ScalarField(eta0.grid(), 1.0);
  p.z = wstar + theta0_raw;
  p.kappa_eff = kappa;
  p.epsilon = epsilon;
  SolveResult r = singular_resolvent(p, &theta0_raw);
  if (report) *report = r.report;
  return std::move(r.w);
}

struct InitialVelocities {
  ScalarField p0;  // ∂_t η at t = 0
  ScalarField z0;  // ∂_t θ at t = 0
};

inline InitialVelocities initial_velocities(const SystemState& s0, const ModelFunctions& model,
                                            const Parameters& prm, const Forcings& f) {
  const Grid& g = s0.eta.grid();
  const ScalarField gam = cell_gamma(s0.theta, prm.epsilon);
  const ScalarField lap = laplacian_neumann(s0.eta);
  const ScalarField u0 = f.u(g, s0.time);
  LinearResolventProblem pe;
  pe.lambda = prm.mu * prm.mu;
  pe.m = ScalarField(g, 1.0);
  pe.z = ScalarField(g);
  for (std::size_t k = 0; k < g.size(); ++k)
    pe.z[k] = lap[k] - model.g(s0.eta[k]) - model.alpha_d1(s0.eta[k]) * gam[k] + u0[k];
  SolveResult pr = linear_resolvent(pe);
  if (!pr.report.converged) throw SolveError("initial_velocities: eta resolvent failed", pr.report);

  LinearResolventProblem pt;
  pt.lambda = prm.nu * prm.nu;
  pt.m = s0.eta.map(model.alpha0);
  pt.z = f.v(g, s0.time);
  pt.z -= interfacial_gradient(s0.eta.map(model.alpha), s0.theta, prm.epsilon, prm.kappa);
  SolveResult zr = linear_resolvent(pt);
  if (!zr.report.converged) throw SolveError("initial_velocities: theta resolvent failed", zr.report);
  return {std::move(pr.w), std::move(zr.w)};
}

// ---------------------------------------------------------------------------

struct StepRecord {
  double t = 0.0;
  EnergyBreakdown energy;
  double rate_eta_h = 0.0;    // ‖(η⁺ − η)/dt‖_H
  double rate_theta_h = 0.0;
  double rate_eta_v = 0.0;    // ‖(η⁺ − η)/dt‖_V
  double rate_theta_v = 0.0;
  double u_norm_h = 0.0;      // ‖u(t)‖_H
  double v_norm_h = 0.0;
  double s4_residual = 0.0;   // for the interval ending at t; 0 on the first record
};

struct Trajectory {
  std::vector<SystemState> snapshots;
  std::vector<StepRecord> records;
  std::vector<StepDiagnostics> diagnostics;
  bool completed = true;
  std::string failure;
};

struct RunOptions {
  Stepper stepper = Stepper::Parabolic;
  int snapshot_stride = 1;
  /// Called after every accepted step with the new state.
  std::function<void(const SystemState&)> observer;
};

inline int step_count(const Parameters& prm) {
  const double n = prm.T / prm.dt;
  const double rounded = std::round(n);
  if (rounded < 1.0 || std::abs(n - rounded) > 1e-9 * std::max(1.0, n))
    throw Error("run: dt must divide T");
  return static_cast<int>(rounded);
}

/// One interval of the discrete energy inequality: RHS − LHS.
inline double s4_interval_residual(const StepRecord& prev, const StepRecord& cur, double dt, double delta_alpha,
                                   const Parameters& prm) {
  const double grad_eta_sq = std::max(0.0, cur.rate_eta_v * cur.rate_eta_v - cur.rate_eta_h * cur.rate_eta_h);
  const double grad_theta_sq =
      std::max(0.0, cur.rate_theta_v * cur.rate_theta_v - cur.rate_theta_h * cur.rate_theta_h);
  const double lhs = 0.25 * dt * cur.rate_eta_h * cur.rate_eta_h + prm.mu * prm.mu * dt * grad_eta_sq +
                     0.5 * delta_alpha * dt * cur.rate_theta_h * cur.rate_theta_h +
                     prm.nu * prm.nu * dt * grad_theta_sq + cur.energy.total;
  const double rhs = prev.energy.total + 0.5 * dt * cur.u_norm_h * cur.u_norm_h +
                     dt * cur.v_norm_h * cur.v_norm_h / (2.0 * delta_alpha);
  return rhs - lhs;
}

inline Trajectory run(const SystemState& initial, const ModelFunctions& model, const Parameters& prm,
                      const Forcings& f, const RunOptions& opt = {}) {
  prm.validate();
  if (opt.stepper == Stepper::Parabolic && (prm.mu != 0.0 || prm.nu != 0.0))
    throw Error("run: the parabolic stepper requires mu = nu = 0");
  initial.eta.check(initial.theta);
  const int n = step_count(prm);
  const int stride = std::max(1, opt.snapshot_stride);
  const Grid& g = initial.eta.grid();
  const double delta_alpha = model.bounds.delta_alpha;
  if (!(delta_alpha > 0.0)) throw Error("run: model has no positive delta_alpha; validate it first");

  Trajectory traj;
  traj.snapshots.push_back(initial);
  StepRecord r0;
  r0.t = initial.time;
  r0.energy = kwc_energy(initial.eta, initial.theta, model, prm);
  r0.u_norm_h = norm_h(f.u(g, initial.time));
  r0.v_norm_h = norm_h(f.v(g, initial.time));
  traj.records.push_back(r0);

  SystemState cur = initial;
  for (int k = 1; k <= n; ++k) {
    StepDiagnostics diag;
    SystemState next;
    try {
      next = step(opt.stepper, cur, model, prm, f, &diag);
      next.time = initial.time + k * prm.dt;
    } catch (const std::exception& e) {
      traj.completed = false;
      traj.failure = "step " + std::to_string(k) + " at t=" + std::to_string(cur.time) + ": " + e.what();
      return traj;
    }
    StepRecord rec;
    rec.t = next.time;
    rec.energy = kwc_energy(next.eta, next.theta, model, prm);
    const ScalarField de = (next.eta - cur.eta) * (1.0 / prm.dt);
    const ScalarField dth = (next.theta - cur.theta) * (1.0 / prm.dt);
    rec.rate_eta_h = norm_h(de);
    rec.rate_theta_h = norm_h(dth);
    rec.rate_eta_v = norm_v(de);
    rec.rate_theta_v = norm_v(dth);
    rec.u_norm_h = norm_h(f.u(g, next.time));
    rec.v_norm_h = norm_h(f.v(g, next.time));
    rec.s4_residual = s4_interval_residual(traj.records.back(), rec, prm.dt, delta_alpha, prm);
    traj.records.push_back(rec);
    traj.diagnostics.push_back(diag);
    if (opt.observer) opt.observer(next);
    cur = std::move(next);
    if (k % stride == 0 || k == n) traj.snapshots.push_back(cur);
  }
  return traj;
}

/// Per-interval RHS − LHS of the discrete energy inequality (backward-difference
/// rates, right-endpoint rectangle rule), recomputed from the trajectory records.
inline std::vector<double> energy_inequality_residual(const Trajectory& traj, const ModelFunctions& model,
                                                      const Parameters& prm) {
  if (traj.records.size() < 2) throw Error("energy_inequality_residual: need at least two records");
  std::vector<double> out;
  out.reserve(traj.records.size() - 1);
  for (std::size_t k = 1; k < traj.records.size(); ++k)
    out.push_back(s4_interval_residual(traj.records[k - 1], traj.records[k], prm.dt, model.bounds.delta_alpha, prm));
  return out;
}

}  // namespace kwc
