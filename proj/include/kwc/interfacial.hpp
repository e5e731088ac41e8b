#pragma once

// Quadrature of the interfacial energy ∫ β γ_ε(∇θ) + (κ/2)∫|∇θ|² and the
// KWC free energy. The γ_ε term is integrated at cell corners (trapezoid
// weights) where the full gradient vector is second-order accurate; the
// κ term uses the compact face gradient. Corner weights β̄ are averages of
// the cell values around the corner, so the energy is linear in the cell
// values of β and its derivative in η is α'(η)·Γ(θ) with Γ the cell-averaged
// corner density returned by `cell_gamma`.

#include <array>
#include <cmath>
#include <vector>

#include "grid.hpp"
#include "model.hpp"

namespace kwc {

struct Corner {
  std::array<std::size_t, 4> cells{};  // mirror-clamped neighbours
  std::array<double, 4> cx{};          // d(grad_x)/d(cell value)
  std::array<double, 4> cy{};
  int count = 0;                       // 2 in 1D, 4 in 2D
  double weight = 0.0;                 // trapezoid quadrature weight
};

class CornerStencil {
public:
  explicit CornerStencil(const Grid& g) : grid_(g) {
    const int nx = g.nx();
    const double hx = g.spacing(0);
    if (g.dim() == 1) {
      corners_.reserve(nx + 1);
      for (int a = 0; a <= nx; ++a) {
        Corner c;
        c.count = 2;
        c.cells = {g.index(clamp(a - 1, nx)), g.index(clamp(a, nx)), 0, 0};
        c.cx = {-1.0 / hx, 1.0 / hx, 0.0, 0.0};
        c.weight = hx * ((a == 0 || a == nx) ? 0.5 : 1.0);
        corners_.push_back(c);
      }
    } else {
      const int ny = g.ny();
      const double hy = g.spacing(1);
      corners_.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
      for (int b = 0; b <= ny; ++b)
        for (int a = 0; a <= nx; ++a) {
          Corner c;
          c.count = 4;
          const int il = clamp(a - 1, nx), ir = clamp(a, nx);
          const int jb = clamp(b - 1, ny), jt = clamp(b, ny);
          c.cells = {g.index(il, jb), g.index(ir, jb), g.index(il, jt), g.index(ir, jt)};
          const double sx = 0.5 / hx, sy = 0.5 / hy;
          c.cx = {-sx, sx, -sx, sx};
          c.cy = {-sy, -sy, sy, sy};
          c.weight = hx * hy * ((a == 0 || a == nx) ? 0.5 : 1.0) * ((b == 0 || b == ny) ? 0.5 : 1.0);
          corners_.push_back(c);
        }
    }
  }

  const Grid& grid() const { return grid_; }
  const std::vector<Corner>& corners() const { return corners_; }

  Vec2 gradient(const Corner& c, const ScalarField& f) const {
    Vec2 y{0.0, 0.0};
    for (int s = 0; s < c.count; ++s) {
      const double v = f[c.cells[s]];
      y[0] += c.cx[s] * v;
      y[1] += c.cy[s] * v;
    }
    return y;
  }

  double average(const Corner& c, const ScalarField& f) const {
    double s = 0.0;
    for (int k = 0; k < c.count; ++k) s += f[c.cells[k]];
    return s / c.count;
  }

private:
  static int clamp(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

  Grid grid_;
  std::vector<Corner> corners_;
};

/// Cell-valued γ_ε(∇θ) density: Σ_cells vol·β·Γ equals the corner quadrature of ∫βγ_ε(∇θ).
inline ScalarField cell_gamma(const CornerStencil& st, const ScalarField& theta, double epsilon) {
  ScalarField out(theta.grid());
  const double vol = theta.grid().cell_volume();
  for (const Corner& c : st.corners()) {
    const double share = c.weight * gamma_eps(st.gradient(c, theta), epsilon) / (c.count * vol);
    for (int s = 0; s < c.count; ++s) out[c.cells[s]] += share;
  }
  return out;
}

inline ScalarField cell_gamma(const ScalarField& theta, double epsilon) {
  return cell_gamma(CornerStencil(theta.grid()), theta, epsilon);
}

inline double singular_energy(const CornerStencil& st, const ScalarField& beta, const ScalarField& theta,
                              double epsilon) {
  double e = 0.0;
  for (const Corner& c : st.corners())
    e += c.weight * st.average(c, beta) * gamma_eps(st.gradient(c, theta), epsilon);
  return e;
}

/// Φ_κ^ε(β;θ) = ∫ β γ_ε(∇θ) + (κ/2)∫|∇θ|².
inline double interfacial_energy(const ScalarField& beta, const ScalarField& theta, double epsilon, double kappa) {
  beta.check(theta);
  for (double b : beta.data())
    if (b < 0.0) throw Error("interfacial_energy: weight beta must be nonnegative");
  CornerStencil st(theta.grid());
  return singular_energy(st, beta, theta, epsilon) + 0.5 * kappa * dirichlet_seminorm_sq(theta);
}

/// H-gradient of w ↦ ∫ β γ_ε(∇w), i.e. the discrete −div(β∇γ_ε(∇w)).
inline ScalarField singular_operator(const CornerStencil& st, const ScalarField& beta, const ScalarField& w,
                                     double epsilon) {
  ScalarField out(w.grid());
  const double vol = w.grid().cell_volume();
  for (const Corner& c : st.corners()) {
    const Vec2 d = grad_gamma_eps(st.gradient(c, w), epsilon);
    const double scale = c.weight * st.average(c, beta) / vol;
    for (int s = 0; s < c.count; ++s) out[c.cells[s]] += scale * (c.cx[s] * d[0] + c.cy[s] * d[1]);
  }
  return out;
}

/// H-gradient of Φ_κ^ε(β;·) at w: the discrete −div(β∇γ_ε(∇w) + κ∇w).
inline ScalarField interfacial_gradient(const ScalarField& beta, const ScalarField& w, double epsilon, double kappa) {
  CornerStencil st(w.grid());
  ScalarField out = singular_operator(st, beta, w, epsilon);
  ScalarField lap = laplacian_neumann(w);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] -= kappa * lap[k];
  return out;
}

struct EnergyBreakdown {
  double dirichlet = 0.0;
  double potential = 0.0;
  double interfacial = 0.0;
  double total = 0.0;
};

/// F_κ^ε(η,θ) = ½∫|∇η|² + ∫G(η) + Φ_κ^ε(α(η);θ).
inline EnergyBreakdown kwc_energy(const ScalarField& eta, const ScalarField& theta, const ModelFunctions& model,
                                  const Parameters& params) {
  eta.check(theta);
  if (!eta.all_finite() || !theta.all_finite()) throw Error("kwc_energy: non-finite field values");
  EnergyBreakdown e;
  e.dirichlet = 0.5 * dirichlet_seminorm_sq(eta);
  double pot = 0.0;
  for (double v : eta.data()) pot += model.G(v);
  e.potential = pot * eta.grid().cell_volume();
  e.interfacial = interfacial_energy(eta.map(model.alpha), theta, params.epsilon, params.kappa);
  e.total = e.dirichlet + e.potential + e.interfacial;
  return e;
}

}  // namespace kwc
