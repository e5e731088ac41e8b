#pragma once

// Model functions of the KWC system, the smoothed norm family γ_ε, run
// parameters, and sampled validation of the structural assumptions.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "grid.hpp"

namespace kwc {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

// ---------------------------------------------------------------------------
// γ_ε(y) = √(ε² + |y|²). Vectors are two-component; 1D callers leave y[1] = 0.

inline double gamma_eps(const Vec2& y, double epsilon) {
  if (epsilon < 0.0) throw Error("gamma_eps: epsilon must be nonnegative");
  return std::sqrt(epsilon * epsilon + y[0] * y[0] + y[1] * y[1]);
}

inline Vec2 grad_gamma_eps(const Vec2& y, double epsilon) {
  if (!(epsilon > 0.0)) throw Error("grad_gamma_eps: epsilon must be positive");
  const double r = std::sqrt(epsilon * epsilon + y[0] * y[0] + y[1] * y[1]);
  return {y[0] / r, y[1] / r};
}

inline Mat2 hess_gamma_eps(const Vec2& y, double epsilon) {
  if (!(epsilon > 0.0)) throw Error("hess_gamma_eps: epsilon must be positive");
  const double s = epsilon * epsilon + y[0] * y[0] + y[1] * y[1];
  const double r3 = s * std::sqrt(s);
  return {{{(s - y[0] * y[0]) / r3, -y[0] * y[1] / r3},
           {-y[0] * y[1] / r3, (s - y[1] * y[1]) / r3}}};
}

// ---------------------------------------------------------------------------

struct Parameters {
  double kappa = 0.5;
  double epsilon = 0.5;
  double T = 1.0;
  double dt = 1.0e-3;
  double mu = 0.0;
  double nu = 0.0;

  /// Throws with the violated condition; kappa > 0 is assumption (A1).
  void validate() const {
    if (!(kappa > 0.0)) throw Error("parameters: kappa must be positive (A1)");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw Error("parameters: epsilon must lie in (0,1]");
    if (!(T > 0.0)) throw Error("parameters: T must be positive");
    if (!(dt > 0.0) || !(dt <= T)) throw Error("parameters: dt must satisfy 0 < dt <= T");
    if (!(mu >= 0.0 && mu < 1.0)) throw Error("parameters: mu must lie in [0,1)");
    if (!(nu >= 0.0 && nu < 1.0)) throw Error("parameters: nu must lie in [0,1)");
  }

  bool operator==(const Parameters&) const = default;
};

struct ModelBounds {
  double g_d1_sup = 0.0;       // |g'|_∞
  double alpha_d1_sup = 0.0;   // |α'|_∞
  double alpha_d2_sup = 0.0;   // |α''|_∞
  double alpha0_sup = 0.0;     // |α₀|_∞
  double alpha0_d1_sup = 0.0;  // |α₀'|_∞
  double delta_alpha = 0.0;    // inf α₀
};

using ScalarMap = std::function<double(double)>;

struct ModelFunctions {
  std::string name = "custom";
  ScalarMap g, G, alpha, alpha_d1, alpha_d2, alpha0, alpha0_d1;
  ModelBounds bounds;
};

/// Additive constants of the reference model that a run configuration may override.
struct ReferenceModelOverrides {
  double alpha_offset = 0.1;   // α(r) = alpha_offset + √(0.01 + r²)
  double alpha0_offset = 1.0;  // α₀(r) = alpha0_offset + alpha0_bump/(1 + r²)
  double alpha0_bump = 1.0;

  bool operator==(const ReferenceModelOverrides&) const = default;
};

inline ModelFunctions reference_model(const ReferenceModelOverrides& o = {}) {
  ModelFunctions m;
  m.name = "reference";
  m.g = [](double r) { return r - 1.0; };
  m.G = [](double r) { return 0.5 * (r - 1.0) * (r - 1.0); };
  const double a = o.alpha_offset;
  m.alpha = [a](double r) { return a + std::sqrt(0.01 + r * r); };
  m.alpha_d1 = [](double r) { return r / std::sqrt(0.01 + r * r); };
  m.alpha_d2 = [](double r) {
    double s = 0.01 + r * r;
    return 0.01 / (s * std::sqrt(s));
  };
  const double c0 = o.alpha0_offset;
  const double c1 = o.alpha0_bump;
  m.alpha0 = [c0, c1](double r) { return c0 + c1 / (1.0 + r * r); };
  m.alpha0_d1 = [c1](double r) {
    double s = 1.0 + r * r;
    return -2.0 * c1 * r / (s * s);
  };
  // Analytic bounds; validate_assumptions replaces them by sampled values.
  m.bounds.g_d1_sup = 1.0;
  m.bounds.alpha_d1_sup = 1.0;
  m.bounds.alpha_d2_sup = 10.0;
  m.bounds.alpha0_sup = c0 + std::max(c1, 0.0);
  m.bounds.alpha0_d1_sup = std::abs(c1) * 3.0 * std::sqrt(3.0) / 8.0;
  m.bounds.delta_alpha = c0 + std::min(c1, 0.0);
  return m;
}

struct AssumptionCheck {
  std::string name;
  bool pass = true;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  std::vector<std::string> warnings;
  ModelBounds bounds;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
  }
};

/// Samples the model on [lo, hi] and checks (A2) G ≥ 0, G' = g and (A3) α'' ≥ 0,
/// inf α₀ > 0. Sampled sup-norms are written into `model.bounds`.
inline AssumptionReport validate_assumptions(ModelFunctions& model, double lo = -10.0, double hi = 10.0,
                                             int n_samples = 100000) {
  if (!(hi > lo) || n_samples < 2) throw Error("validate_assumptions: empty sample range");
  AssumptionReport rep;
  ModelBounds b;
  b.delta_alpha = INFINITY;
  double worst_G = INFINITY, worst_dG = 0.0, worst_convex = INFINITY;
  double alpha_d1_inner = 0.0;
  const double step = (hi - lo) / (n_samples - 1);
  const double fd = 1e-5 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  for (int k = 0; k < n_samples; ++k) {
    const double r = lo + k * step;
    worst_G = std::min(worst_G, model.G(r));
    const double dG = (model.G(r + fd) - model.G(r - fd)) / (2.0 * fd);
    const double gr = model.g(r);
    worst_dG = std::max(worst_dG, std::abs(dG - gr) / std::max(1.0, std::abs(gr)));
    worst_convex = std::min(worst_convex, model.alpha_d2(r));
    const double dg = (model.g(r + fd) - model.g(r - fd)) / (2.0 * fd);
    b.g_d1_sup = std::max(b.g_d1_sup, std::abs(dg));
    b.alpha_d1_sup = std::max(b.alpha_d1_sup, std::abs(model.alpha_d1(r)));
    if (2.0 * std::abs(r - 0.5 * (lo + hi)) <= 0.5 * (hi - lo))
      alpha_d1_inner = std::max(alpha_d1_inner, std::abs(model.alpha_d1(r)));
    b.alpha_d2_sup = std::max(b.alpha_d2_sup, std::abs(model.alpha_d2(r)));
    b.alpha0_sup = std::max(b.alpha0_sup, std::abs(model.alpha0(r)));
    b.alpha0_d1_sup = std::max(b.alpha0_d1_sup, std::abs(model.alpha0_d1(r)));
    b.delta_alpha = std::min(b.delta_alpha, model.alpha0(r));
  }
  rep.checks.push_back({"A2: G >= 0", worst_G >= 0.0, "min G = " + std::to_string(worst_G)});
  rep.checks.push_back({"A2: G' = g", worst_dG <= 1e-6, "max relative mismatch = " + std::to_string(worst_dG)});
  rep.checks.push_back({"A3: alpha convex", worst_convex >= -1e-12, "min alpha'' = " + std::to_string(worst_convex)});
  rep.checks.push_back({"A3: inf alpha0 > 0", b.delta_alpha > 0.0, "delta_alpha = " + std::to_string(b.delta_alpha)});
  if (b.alpha_d1_sup > 1.05 * alpha_d1_inner + 1e-12)
    rep.warnings.push_back("sampled |alpha'| grows with the sample range; the bound may not be finite");
  model.bounds = b;
  rep.bounds = b;
  return rep;
}

}  // namespace kwc
