#include <gtest/gtest.h>

#include <cmath>

#include "kwc/elliptic.hpp"
#include "kwc/experiments.hpp"
#include "kwc/profiles.hpp"
#include "oracles.hpp"

using namespace kwc;

namespace {

ScalarField noise(const Grid& g, std::uint64_t seed, double amp = 1.0) {
  Rng r(seed);
  ScalarField f(g);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = amp * r.uniform(-1.0, 1.0);
  return f;
}

ScalarField step_profile(const Grid& g) {
  return ScalarField::sample(g, [](double x, double) { return std::tanh(8.0 * (x - 0.5)); });
}

double cosine_resolvent_error(int n, double lambda) {
  Grid g(1, {n}, {1.0});
  const ScalarField z = cosine_field(g);
  SolveResult r = linear_resolvent({lambda, ScalarField(g, 1.0), z});
  return norm_h(r.w - z * (1.0 / (1.0 + lambda * M_PI * M_PI)));
}

}  // namespace

TEST(LinearResolvent, ConstantIsFixedPoint) {
  Grid g(1, {32}, {1.0});
  SolveResult r = linear_resolvent({0.25, ScalarField(g, 1.0), ScalarField(g, 3.0)});
  EXPECT_TRUE(r.report.converged);
  for (double v : r.w.data()) EXPECT_NEAR(v, 3.0, 1e-12);
}

TEST(LinearResolvent, ResidualBound) {
  for (const Grid& g : {Grid(1, {64}, {1.0}), Grid(2, {32, 32}, {1.0, 1.0})}) {
    const ScalarField z = noise(g, 4);
    const ScalarField m = random_smooth_field(g, 5, {2.0, 0.5, 3});
    SolveResult r = linear_resolvent({0.3, m, z});
    EXPECT_TRUE(r.report.converged);
    EXPECT_LE(norm_h(linear_residual({0.3, m, z}, r.w)), 1e-10 * norm_h(z));
    EXPECT_LE(r.report.final_residual_h, r.report.tolerance);
  }
}

TEST(LinearResolvent, PointwiseFallback) {
  Grid g(1, {16}, {1.0});
  const ScalarField z = noise(g, 1);
  const ScalarField m(g, 4.0);
  SolveResult r = linear_resolvent({0.0, m, z});
  EXPECT_EQ(r.report.method, "pointwise");
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_DOUBLE_EQ(r.w[k], z[k] / 4.0);
  EXPECT_THROW(linear_resolvent({0.1, ScalarField(g, 0.0), z}), Error);
  EXPECT_THROW(linear_resolvent({-0.1, m, z}), Error);
}

TEST(LinearResolvent, NeumannEigenfunction) {
  const double e32 = cosine_resolvent_error(32, 0.1), e64 = cosine_resolvent_error(64, 0.1),
               e128 = cosine_resolvent_error(128, 0.1);
  EXPECT_LE(e64, 1e-4);
  EXPECT_NEAR(e32 / e64, 4.0, 0.5);
  EXPECT_NEAR(e64 / e128, 4.0, 0.5);
}

TEST(LinearResolvent, NonExpansiveInHAndV) {
  for (const Grid& g : {Grid(1, {64}, {1.0}), Grid(2, {32, 32}, {1.0, 1.0})}) {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const ScalarField z1 = noise(g, 2 * s), z2 = noise(g, 2 * s + 1);
      const ScalarField one(g, 1.0);
      const double lam = 0.01 + 0.1 * s;
      const ScalarField w1 = linear_resolvent({lam, one, z1}).w, w2 = linear_resolvent({lam, one, z2}).w;
      EXPECT_LE(norm_h(w1 - w2), norm_h(z1 - z2) * (1 + 1e-10));
      EXPECT_LE(norm_v(w1 - w2), norm_v(z1 - z2) * (1 + 1e-10));
    }
  }
}

TEST(SingularResolvent, ZeroWeightMatchesLinear) {
  for (const Grid& g : {Grid(1, {64}, {1.0}), Grid(2, {16, 16}, {1.0, 1.0})}) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const ScalarField z = noise(g, s);
      const ScalarField one(g, 1.0);
      SolveResult a = singular_resolvent({ScalarField(g), 0.7, one, z, 0.5});
      SolveResult b = linear_resolvent({0.7, one, z});
      EXPECT_LE(norm_h(a.w - b.w), 1e-10);
    }
  }
}

TEST(SingularResolvent, ConstantsAreFixedPoints) {
  for (const Grid& g : {Grid(1, {32}, {1.0}), Grid(2, {12, 12}, {1.0, 1.0})}) {
    const ScalarField beta = random_smooth_field(g, 3, {1.0, 0.5, 3});
    SolveResult r = singular_resolvent({beta, 0.5, ScalarField(g, 1.0), ScalarField(g, -1.25), 0.2});
    for (double v : r.w.data()) EXPECT_NEAR(v, -1.25, 1e-12);
  }
}

TEST(SingularResolvent, ResidualBoundIndependentlyEvaluated) {
  for (const Grid& g : {Grid(1, {64}, {1.0}), Grid(2, {24, 24}, {1.0, 1.0})}) {
    for (double eps : {1.0, 0.1, 0.01}) {
      SingularResolventProblem p{random_smooth_field(g, 1, {1.0, 0.2, 3}), 0.5,
                                 random_smooth_field(g, 2, {3.0, 1.0, 2}), step_profile(g) * 2.0, eps};
      SolveResult r = singular_resolvent(p);
      EXPECT_TRUE(r.report.converged);
      EXPECT_LE(norm_h(singular_residual(p, r.w)), 1e-10 * (norm_h(p.z) + 1.0));
    }
  }
}

TEST(SingularResolvent, MatchesConvexMinimizationOracle) {
  Grid g(1, {64}, {1.0});
  SingularResolventProblem p{ScalarField(g, 1.0), 1.0, ScalarField(g, 1.0), step_profile(g), 0.5};
  const ScalarField w = singular_resolvent(p).w;
  const ScalarField ref = oracle::minimize_singular(p);
  EXPECT_LE(norm_h(w - ref), 1e-8);
}

TEST(SingularResolvent, FallbackPathAgrees) {
  Grid g(1, {48}, {1.0});
  SingularResolventProblem p{ScalarField(g, 0.5), 0.3, ScalarField(g, 1.0), step_profile(g), 0.2};
  SingularSolverOptions opt;
  opt.allow_newton = false;
  SolveResult lagged = singular_resolvent(p, nullptr, opt);
  SolveResult newton = singular_resolvent(p);
  EXPECT_TRUE(lagged.report.used_fallback);
  EXPECT_FALSE(newton.report.used_fallback);
  EXPECT_LE(norm_h(lagged.w - newton.w), 1e-9);
}

TEST(SingularResolvent, ResolventOfMonotoneOperator) {
  Grid g(2, {16, 16}, {1.0, 1.0});
  const ScalarField beta = random_smooth_field(g, 8, {1.0, 0.5, 3});
  const ScalarField m = random_smooth_field(g, 9, {2.0, 0.5, 2});
  for (std::uint64_t s = 0; s < 5; ++s) {
    const ScalarField z1 = noise(g, 10 + s), z2 = noise(g, 20 + s);
    const ScalarField w1 = singular_resolvent({beta, 0.4, m, z1, 0.3}).w;
    const ScalarField w2 = singular_resolvent({beta, 0.4, m, z2, 0.3}).w;
    EXPECT_LE(norm_h(w1 - w2), norm_h(z1 - z2) / m.min() * (1 + 1e-9));
  }
}

TEST(SingularResolvent, RejectsBadInput) {
  Grid g(1, {16}, {1.0});
  const ScalarField z = noise(g, 1);
  EXPECT_THROW(singular_resolvent({ScalarField(g, 1.0), 1.0, ScalarField(g, 0.0), z, 0.5}), Error);
  EXPECT_THROW(singular_resolvent({ScalarField(g, -1.0), 1.0, ScalarField(g, 1.0), z, 0.5}), Error);
  EXPECT_THROW(singular_resolvent({ScalarField(g, 1.0), 0.0, ScalarField(g, 1.0), z, 0.5}), Error);
  EXPECT_THROW(singular_resolvent({ScalarField(g, 1.0), 1.0, ScalarField(g, 1.0), z, 0.0}), Error);
}

TEST(H2Bound, ConstantAndPositive) {
  Grid g(1, {32}, {1.0});
  EXPECT_NEAR(check_h2_bound(ScalarField(g, 0.7), ScalarField(g, 0.7), ScalarField(g)), 1.0, 1e-14);
  const ScalarField z = step_profile(g);
  const ScalarField beta(g, 0.05);
  const ScalarField w = singular_resolvent({beta, 0.5, ScalarField(g, 1.0), z, 0.25}).w;
  EXPECT_GT(check_h2_bound(w, z, beta), 0.0);
}

TEST(H2Bound, BatteryUniformInEpsilon) {
  Grid g(1, {128}, {1.0});
  ExperimentSetup s;
  s.grid = g;
  s.eta0 = random_smooth_field(g, 1, {0.6, 0.6, 4});
  s.theta0 = random_smooth_field(g, 2);
  H2UniformityReport r = exp_h2_uniformity(s, default_h2_battery(g));
  for (const auto& b : r.battery) {
    EXPECT_TRUE(b.pass) << b.name << " spread " << b.spread;
    EXPECT_EQ(b.ratios.size(), 9u);
  }
  EXPECT_NEAR(r.battery[0].spread, 1.0, 1e-12);
  for (double v : r.battery[0].ratios) EXPECT_NEAR(v, 1.0, 1e-12);
}
