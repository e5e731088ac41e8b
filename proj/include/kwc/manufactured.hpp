#pragma once

// Closed-form manufactured pair for order verification. Both fields have the
// form  a + b·e^{−c t}·φ(x,y)  with φ = cos(πx/L₁)[cos(πy/L₂)], so they satisfy
// the Neumann condition exactly and their derivatives are explicit.

#include <cmath>

#include "evolution.hpp"
#include "grid.hpp"
#include "model.hpp"

namespace kwc {

struct ManufacturedField {
  double offset = 0.0;
  double amplitude = 0.0;
  double decay = 0.0;

  struct Jet {
    double value, dt;
    Vec2 grad;
    Mat2 hess;
  };

  Jet eval(const Grid& g, double t, double x, double y) const {
    const double kx = M_PI / g.extent(0);
    const double ky = g.dim() == 2 ? M_PI / g.extent(1) : 0.0;
    const double cx = std::cos(kx * x), sx = std::sin(kx * x);
    const double cy = std::cos(ky * y), sy = std::sin(ky * y);
    const double env = amplitude * std::exp(-decay * t);
    Jet j{};
    j.value = offset + env * cx * cy;
    j.dt = -decay * env * cx * cy;
    j.grad = {-env * kx * sx * cy, -env * ky * cx * sy};
    j.hess = {{{-env * kx * kx * cx * cy, env * kx * ky * sx * sy}, {env * kx * ky * sx * sy, -env * ky * ky * cx * cy}}};
    return j;
  }

  ScalarField sample(const Grid& g, double t) const {
    return ScalarField::sample(g, [&](double x, double y) { return eval(g, t, x, y).value; });
  }

  bool is_constant() const { return amplitude == 0.0; }
};

struct ManufacturedPair {
  ManufacturedField eta{0.5, 0.3, 1.0};
  ManufacturedField theta{0.0, 0.5, 0.5};
};

/// Forcings obtained by substituting the exact pair into the strong equations
///   u = ∂ₜη − Δη + g(η) + α'(η)γ_ε(∇θ)
///   v = α₀(η)∂ₜθ − div(α(η)∇γ_ε(∇θ)) − κΔθ
/// with all derivatives taken analytically.
inline Forcings manufactured_forcings(const ManufacturedPair& mp, const ModelFunctions& model, const Parameters& prm) {
  auto u = [mp, model, prm](const Grid& g, double t) {
    return ScalarField::sample(g, [&](double x, double y) {
      const auto e = mp.eta.eval(g, t, x, y);
      const auto th = mp.theta.eval(g, t, x, y);
      const double lap = e.hess[0][0] + e.hess[1][1];
      return e.dt - lap + model.g(e.value) + model.alpha_d1(e.value) * gamma_eps(th.grad, prm.epsilon);
    });
  };
  auto v = [mp, model, prm](const Grid& g, double t) {
    return ScalarField::sample(g, [&](double x, double y) {
      const auto e = mp.eta.eval(g, t, x, y);
      const auto th = mp.theta.eval(g, t, x, y);
      const Vec2& q = th.grad;
      const double gam = gamma_eps(q, prm.epsilon);
      const double lap = th.hess[0][0] + th.hess[1][1];
      const double qHq = q[0] * (th.hess[0][0] * q[0] + th.hess[0][1] * q[1]) +
                         q[1] * (th.hess[1][0] * q[0] + th.hess[1][1] * q[1]);
      // div(∇θ/γ) = Δθ/γ − ∇θᵀ(∇²θ)∇θ/γ³
      const double div_unit = lap / gam - qHq / (gam * gam * gam);
      const double grad_eta_dot = e.grad[0] * q[0] + e.grad[1] * q[1];
      const double div_flux = model.alpha_d1(e.value) * grad_eta_dot / gam + model.alpha(e.value) * div_unit;
      return model.alpha0(e.value) * th.dt - div_flux - prm.kappa * lap;
    });
  };
  return {u, v};
}

}  // namespace kwc
