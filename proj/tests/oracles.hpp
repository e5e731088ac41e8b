#pragma once

// Reference solutions computed by methods that share no algebra with the
// library solvers.

#include <algorithm>
#include <cmath>

#include "kwc/elliptic.hpp"
#include "kwc/evolution.hpp"

namespace kwc::oracle {

/// Minimizes the singular-resolvent functional by Nesterov-accelerated
/// gradient descent with adaptive restart. Strong convexity (modulus inf m)
/// bounds the distance to the minimizer by ‖gradient‖_H / inf m, and the loop
/// runs until that bound is below `tol`.
inline ScalarField minimize_singular(const SingularResolventProblem& p, double tol = 1e-11, int max_iter = 2000000) {
  const Grid& g = p.z.grid();
  double inv_h2 = 0.0;
  for (int a = 0; a < g.dim(); ++a) inv_h2 += 1.0 / (g.spacing(a) * g.spacing(a));
  const double L = p.m.max() + 4.0 * (p.kappa_eff + p.beta.max() / p.epsilon) * inv_h2;
  const double mu = p.m.min();
  const double momentum = (std::sqrt(L) - std::sqrt(mu)) / (std::sqrt(L) + std::sqrt(mu));
  const CornerStencil st(g);

  ScalarField x = p.z, y = p.z;
  double fx = singular_objective(p, st, x);
  bool restarted = false;
  for (int it = 0; it < max_iter; ++it) {
    const ScalarField gy = singular_residual(p, y);  // H-gradient of the functional
    ScalarField xn = y - gy * (1.0 / L);
    const double fn = singular_objective(p, st, xn);
    if (fn > fx && !restarted) {  // restart from the last iterate
      y = x;
      restarted = true;
      continue;
    }
    restarted = false;
    ScalarField yn = xn + (xn - x) * momentum;
    x = std::move(xn);
    y = std::move(yn);
    fx = fn;
    if (it % 50 == 0 && norm_h(singular_residual(p, x)) / mu <= tol) break;
  }
  return x;
}

}  // namespace kwc::oracle
