#pragma once

// Resolvents of the Neumann Laplacian and of the weighted singular-diffusion
// operator:
//
//   linear:    −λ Δ_N w + m w = z
//   singular:  −div(β ∇γ_ε(∇w) + κ ∇w) + m w = z
//
// The singular problem is the Euler–Lagrange equation of the strictly convex
// functional  ∫βγ_ε(∇w) + (κ/2)∫|∇w|² + ½∫m w² − ∫z w,  which is what the
// Newton line search and the fallback iteration descend on.

#include <cmath>
#include <string>
#include <utility>

#include "grid.hpp"
#include "interfacial.hpp"
#include "linalg.hpp"
#include "model.hpp"

namespace kwc {

struct SolveReport {
  std::string method;
  int iterations = 0;
  int linear_iterations = 0;
  double final_residual_h = 0.0;
  double tolerance = 0.0;
  bool converged = false;
  bool used_fallback = false;
};

class SolveError : public Error {
public:
  SolveError(const std::string& what, SolveReport report) : Error(what), report_(std::move(report)) {}
  const SolveReport& report() const { return report_; }

private:
  SolveReport report_;
};

struct SolveResult {
  ScalarField w;
  SolveReport report;
};

struct LinearResolventProblem {
  double lambda = 0.0;
  ScalarField m;
  ScalarField z;
};

struct SingularResolventProblem {
  ScalarField beta;
  double kappa_eff = 1.0;
  ScalarField m;
  ScalarField z;
  double epsilon = 0.5;
};

struct SingularSolverOptions {
  double rel_tolerance = 1e-10;  // residual ≤ rel_tolerance·(‖z‖_H + 1)
  int max_newton = 50;
  int max_fixed_point = 500;
  bool allow_newton = true;      // false forces the fallback path (tests)
};

namespace detail {

inline void require_positive_weight(const ScalarField& m, const char* who) {
  for (double v : m.data())
    if (!(v > 0.0)) throw Error(std::string(who) + ": zeroth-order weight m must be positive");
}

inline ScalarField from_vector(const Grid& g, std::vector<double> v) { return ScalarField(g, std::move(v)); }

}  // namespace detail

inline ScalarField linear_residual(const LinearResolventProblem& p, const ScalarField& w) {
  ScalarField r = pointwise_product(p.m, w);
  ScalarField lap = laplacian_neumann(w);
  for (std::size_t k = 0; k < r.size(); ++k) r[k] += -p.lambda * lap[k] - p.z[k];
  return r;
}

/// (−λΔ_N + m)⁻¹ z. With λ = 0 this is pointwise division.
inline SolveResult linear_resolvent(const LinearResolventProblem& p) {
  p.m.check(p.z);
  if (p.lambda < 0.0) throw Error("linear_resolvent: lambda must be nonnegative");
  detail::require_positive_weight(p.m, "linear_resolvent");
  const Grid& g = p.z.grid();
  SolveResult out;
  out.report.method = "cg";
  out.report.tolerance = 1e-10 * norm_h(p.z);
  if (p.lambda == 0.0) {
    out.w = ScalarField(g);
    for (std::size_t k = 0; k < g.size(); ++k) out.w[k] = p.z[k] / p.m[k];
    out.report.method = "pointwise";
    out.report.converged = true;
    out.report.final_residual_h = norm_h(linear_residual(p, out.w));
    return out;
  }
  linalg::Triplets t;
  linalg::add_neg_laplacian(g, p.lambda, t);
  linalg::add_diagonal(p.m, t);
  auto cg = linalg::solve_spd(linalg::assemble(g.size(), t), p.z.data());
  out.w = detail::from_vector(g, std::move(cg.x));
  out.report.iterations = 1;
  out.report.linear_iterations = cg.iterations;
  out.report.final_residual_h = norm_h(linear_residual(p, out.w));
  out.report.converged = cg.converged && out.report.final_residual_h <= out.report.tolerance;
  return out;
}

/// Independent evaluation of −div(β∇γ_ε(∇w) + κ∇w) + m w − z.
inline ScalarField singular_residual(const SingularResolventProblem& p, const ScalarField& w) {
  ScalarField r = interfacial_gradient(p.beta, w, p.epsilon, p.kappa_eff);
  for (std::size_t k = 0; k < r.size(); ++k) r[k] += p.m[k] * w[k] - p.z[k];
  return r;
}

inline double singular_objective(const SingularResolventProblem& p, const CornerStencil& st, const ScalarField& w) {
  double e = singular_energy(st, p.beta, w, p.epsilon) + 0.5 * p.kappa_eff * dirichlet_seminorm_sq(w);
  double q = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) q += (0.5 * p.m[k] * w[k] - p.z[k]) * w[k];
  return e + q * w.grid().cell_volume();
}

namespace detail {

// Assembles Σ_q c_q Gᵀ M_q G / vol + κ(−Δ_N) + diag(m), where M_q is either the
// Hessian of γ_ε (Newton) or the identity over γ_ε (lagged diffusivity).
inline linalg::SparseMatrix singular_matrix(const SingularResolventProblem& p, const CornerStencil& st,
                                            const ScalarField& w, bool newton) {
  const Grid& g = w.grid();
  const double vol = g.cell_volume();
  linalg::Triplets t;
  t.reserve(st.corners().size() * 16 + g.size() * 5);
  for (const Corner& c : st.corners()) {
    const double bq = st.average(c, p.beta);
    if (bq == 0.0) continue;
    const Vec2 y = st.gradient(c, w);
    Mat2 M;
    if (newton) {
      M = hess_gamma_eps(y, p.epsilon);
    } else {
      const double inv = 1.0 / gamma_eps(y, p.epsilon);
      M = {{{inv, 0.0}, {0.0, inv}}};
    }
    const double s = c.weight * bq / vol;
    for (int a = 0; a < c.count; ++a) {
      const double ma0 = M[0][0] * c.cx[a] + M[0][1] * c.cy[a];
      const double ma1 = M[1][0] * c.cx[a] + M[1][1] * c.cy[a];
      for (int b = 0; b < c.count; ++b)
        t.emplace_back(c.cells[b], c.cells[a], s * (c.cx[b] * ma0 + c.cy[b] * ma1));
    }
  }
  linalg::add_neg_laplacian(g, p.kappa_eff, t);
  linalg::add_diagonal(p.m, t);
  return linalg::assemble(g.size(), t);
}

}  // namespace detail

/// Solves the singular resolvent problem; Newton with line search, falling
/// back to damped lagged diffusivity. Throws SolveError when both fail.
inline SolveResult singular_resolvent(const SingularResolventProblem& p, const ScalarField* initial_guess = nullptr,
                                      const SingularSolverOptions& opt = {}) {
  p.z.check(p.beta);
  p.z.check(p.m);
  if (!(p.epsilon > 0.0)) throw Error("singular_resolvent: epsilon must be positive");
  if (!(p.kappa_eff > 0.0)) throw Error("singular_resolvent: kappa_eff must be positive");
  for (double b : p.beta.data())
    if (b < 0.0) throw Error("singular_resolvent: beta must be nonnegative");
  detail::require_positive_weight(p.m, "singular_resolvent");

  const Grid& g = p.z.grid();
  const CornerStencil st(g);
  const double tol = opt.rel_tolerance * (norm_h(p.z) + 1.0);

  ScalarField w0(g);
  if (initial_guess) {
    initial_guess->check(p.z);
    w0 = *initial_guess;
  } else {
    for (std::size_t k = 0; k < g.size(); ++k) w0[k] = p.z[k] / p.m[k];
  }

  SolveReport rep;
  rep.tolerance = tol;
  rep.method = "newton";

  auto residual_norm = [&](const ScalarField& w) { return norm_h(singular_residual(p, w)); };

  if (opt.allow_newton) {
    ScalarField w = w0;
    ScalarField r = singular_residual(p, w);
    double rn = norm_h(r);
    double J = singular_objective(p, st, w);
    bool ok = true;
    for (int it = 0; it < opt.max_newton && rn > tol; ++it) {
      std::vector<double> rhs(r.data());
      for (double& v : rhs) v = -v;
      auto cg = linalg::solve_spd(detail::singular_matrix(p, st, w, true), rhs);
      rep.linear_iterations += cg.iterations;
      rep.iterations = it + 1;
      if (!cg.converged) {
        ok = false;
        break;
      }
      const ScalarField dir = detail::from_vector(g, std::move(cg.x));
      const double slope = inner_h(r, dir);
      double step = 1.0;
      bool accepted = false;
      while (step > 1e-10) {
        ScalarField trial = w;
        for (std::size_t k = 0; k < g.size(); ++k) trial[k] += step * dir[k];
        const double Jt = singular_objective(p, st, trial);
        const bool armijo = Jt <= J + 1e-4 * step * slope;
        // Near the solution the objective decrease drops below roundoff;
        // then a residual decrease is accepted instead.
        const bool flat = Jt - J <= 1e-13 * (std::abs(J) + 1.0);
        if (armijo || flat) {
          ScalarField rt = singular_residual(p, trial);
          const double rtn = norm_h(rt);
          if (armijo || rtn < rn) {
            w = std::move(trial);
            r = std::move(rt);
            rn = rtn;
            J = Jt;
            accepted = true;
            break;
          }
        }
        step *= 0.5;
      }
      if (!accepted) {
        ok = false;
        break;
      }
    }
    if (ok && rn <= tol) {
      rep.final_residual_h = rn;
      rep.converged = true;
      return {std::move(w), rep};
    }
  }

  // Lagged diffusivity: freeze 1/γ_ε(∇w) and solve the linear problem.
  rep.used_fallback = true;
  rep.method = "lagged_diffusivity";
  ScalarField w = w0;
  double rn = residual_norm(w);
  double J = singular_objective(p, st, w);
  int it = 0;
  for (; it < opt.max_fixed_point && rn > tol; ++it) {
    auto cg = linalg::solve_spd(detail::singular_matrix(p, st, w, false), p.z.data(), &w.data());
    rep.linear_iterations += cg.iterations;
    ScalarField next = detail::from_vector(g, std::move(cg.x));
    double omega = 1.0;
    ScalarField trial = next;
    double Jt = singular_objective(p, st, trial);
    while (Jt > J + 1e-13 * (std::abs(J) + 1.0) && omega > 1e-6) {
      omega *= 0.5;
      for (std::size_t k = 0; k < g.size(); ++k) trial[k] = w[k] + omega * (next[k] - w[k]);
      Jt = singular_objective(p, st, trial);
    }
    w = std::move(trial);
    J = Jt;
    rn = residual_norm(w);
  }
  rep.iterations += it;
  rep.final_residual_h = rn;
  rep.converged = rn <= tol;
  if (!rep.converged)
    throw SolveError("singular_resolvent: Newton and lagged-diffusivity iterations failed to converge", rep);
  return {std::move(w), rep};
}

/// |w|²_{H²} / (|z|²_H + |β|²_V) with the surrogate H² norm.
inline double check_h2_bound(const ScalarField& w, const ScalarField& z, const ScalarField& beta) {
  const double num = std::pow(norm_h2(w), 2);
  const double den = std::pow(norm_h(z), 2) + std::pow(norm_v(beta), 2);
  if (den == 0.0) return num == 0.0 ? 0.0 : INFINITY;
  return num / den;
}

}  // namespace kwc
