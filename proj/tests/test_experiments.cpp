#include <gtest/gtest.h>

#include <atomic>
#include <cmath>

#include "kwc/experiments.hpp"

using namespace kwc;

namespace {

ExperimentSetup default_setup(Grid g = Grid(1, {64}, {1.0})) {
  ExperimentSetup s;
  s.grid = g;
  validate_assumptions(s.model);
  fill_random_initial(s, 42);
  return s;
}

ExperimentSetup stationary_setup() {
  ExperimentSetup s = default_setup();
  // η* solves g(η) + α'(η)ε = 0, so η ≡ η*, θ ≡ const is at rest without forcing
  double lo = 0.0, hi = 1.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (s.model.g(mid) + s.model.alpha_d1(mid) * s.params.epsilon > 0.0 ? hi : lo) = mid;
  }
  s.eta0 = ScalarField(s.grid, lo);
  s.theta0 = ScalarField(s.grid, 0.25);
  s.params.T = 0.1;
  return s;
}

}  // namespace

TEST(ParallelFor, CoversAllIndicesAndPropagatesErrors) {
  for (int threads : {1, 3, 8}) {
    std::vector<std::atomic<int>> hits(37);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    EXPECT_THROW(parallel_for(10, threads, [](std::size_t i) {
                   if (i == 7) throw Error("boom");
                 }),
                 Error);
  }
}

TEST(EnergyDissipation, StationaryDataHasZeroResiduals) {
  ExperimentSetup s = stationary_setup();
  EnergyDissipationReport r = exp_energy_dissipation(s, Stepper::Parabolic, 10);
  EXPECT_TRUE(r.stationary);
  EXPECT_NEAR(r.coarse.worst_residual, 0.0, 1e-9);
  EXPECT_TRUE(r.pass);
}

TEST(EnergyDissipation, RandomDataBothSteppers) {
  ExperimentSetup s = default_setup();
  EnergyDissipationReport par = exp_energy_dissipation(s, Stepper::Parabolic);
  EXPECT_TRUE(par.monotone);
  EXPECT_TRUE(par.residual_bound);
  EXPECT_TRUE(par.ratio_ok) << par.halving_ratio;
  s.params.mu = s.params.nu = 0.1;
  EnergyDissipationReport pseudo = exp_energy_dissipation(s, Stepper::PseudoParabolic);
  EXPECT_TRUE(pseudo.pass) << pseudo.halving_ratio;
}

TEST(EpsilonLimit, IdenticalEpsilonGivesZero) {
  ExperimentSetup s = default_setup(Grid(1, {32}, {1.0}));
  s.params.T = 0.1;
  EpsilonLimitReport r = exp_epsilon_limit(s, {0.1}, 0.1);
  EXPECT_EQ(r.trajectories.errors[0], 0.0);
  EXPECT_EQ(r.initial_data.errors[0], 0.0);
  EXPECT_THROW(exp_epsilon_limit(s, {0.05}, 0.1), Error);
}

TEST(EpsilonLimit, TablesDecrease) {
  ExperimentSetup s = default_setup();
  EpsilonLimitReport r = exp_epsilon_limit(s, {0.5, 0.3, 0.2, 0.15, 0.11}, 0.1);
  EXPECT_TRUE(r.trajectories.pass);
  EXPECT_TRUE(r.initial_data.pass);
  EXPECT_TRUE(strictly_decreasing(r.trajectories.secondary));
}

TEST(MuNuLimit, DecreasingAndZeroPathIdentical) {
  ExperimentSetup s = default_setup();
  MuNuLimitReport r = exp_munu_limit(s, {0.2, 0.1, 0.05, 0.025});
  EXPECT_TRUE(r.zero_path_identical);
  EXPECT_TRUE(r.table.pass);
}

TEST(MuNuLimit, StationaryDataHasZeroDistance) {
  ExperimentSetup s = stationary_setup();
  MuNuLimitReport r = exp_munu_limit(s, {0.2, 0.1});
  for (double e : r.table.errors) EXPECT_LE(e, 1e-10);
}

TEST(Embedding, ConstantWitnessAndRefinement) {
  Grid g64(1, {64}, {1.0}), g128(1, {128}, {1.0});
  EXPECT_NEAR(norm_l4(ScalarField(g64, 1.0)) / norm_v(ScalarField(g64, 1.0)), 1.0, 1e-14);
  EmbeddingEstimate a = estimate_embedding_constant(g64), b = estimate_embedding_constant(g128);
  EXPECT_GE(a.max_ratio, 1.0);
  EXPECT_GE(a.C_V_L4, 1.0);
  EXPECT_NEAR(a.C_V_L4, 1.5 * a.max_ratio, 1e-15);
  EXPECT_LE(std::abs(a.C_V_L4 / b.C_V_L4 - 1.0), 0.1);
  EXPECT_EQ(a.samples, 1000);
  EXPECT_THROW(estimate_embedding_constant(g64, 999), Error);
  Grid sq(2, {16, 16}, {1.0, 1.0});
  EXPECT_GE(estimate_embedding_constant(sq).C_V_L4, 1.0);
}

TEST(ContinuousDependence, GronwallAndLinearScaling) {
  ExperimentSetup s = default_setup();
  GronwallReport r = exp_continuous_dependence(s, 1e-3);
  EXPECT_TRUE(r.zero_delta_exact);
  EXPECT_TRUE(r.gronwall_ok);
  EXPECT_TRUE(r.halving_ok) << r.halving_ratio;
  EXPECT_TRUE(std::isfinite(r.C_hat));
  EXPECT_NEAR(r.J.front(), r.J0_expected, 1e-15);
  EXPECT_GT(r.C1_formula, 0.0);
  for (double j : r.J) EXPECT_GE(j, 0.0);
  EXPECT_THROW(exp_continuous_dependence(s, 0.0), Error);
}

TEST(H2Uniformity, TrajectoryBoundStable) {
  ExperimentSetup s = default_setup(Grid(1, {128}, {1.0}));
  H2UniformityReport r = exp_h2_uniformity(s, default_h2_battery(s.grid));
  EXPECT_TRUE(r.battery_ok);
  EXPECT_TRUE(r.trajectory_ok);
  EXPECT_TRUE(std::isfinite(r.coarse.sup_h2_theta));
}

TEST(Manufactured, ConstantPairIsExact) {
  ExperimentSetup s = default_setup();
  ManufacturedConfig c;
  c.pair.eta = {0.7, 0.0, 0.0};
  c.pair.theta = {-0.2, 0.0, 0.0};
  c.space_cells = {8, 16};
  c.space_T = 0.01;
  c.time_steps = {0.02, 0.01};
  c.time_cells = 16;
  c.time_T = 0.1;
  ManufacturedReport r = exp_manufactured_convergence(s, c);
  for (double e : r.space.errors) EXPECT_LE(e, 1e-12);
  for (double e : r.time.errors) EXPECT_LE(e, 1e-12);
  EXPECT_TRUE(r.pass);
}

TEST(Manufactured, CosinePairOrders) {
  ExperimentSetup s = default_setup();
  ManufacturedReport r = exp_manufactured_convergence(s);
  ASSERT_EQ(r.space.observed_rates.size(), 2u);
  for (double q : r.space.observed_rates) EXPECT_TRUE(q >= 3.5 && q <= 4.5) << q;
  for (double q : r.time.observed_rates) EXPECT_TRUE(q >= 1.7 && q <= 2.3) << q;
}

TEST(Stationary, AllStepperConfigurations) {
  ExperimentSetup s = default_setup();
  StationaryReport r = exp_stationary(s);
  EXPECT_EQ(r.cases.size(), 5u);
  EXPECT_TRUE(r.pass);
}

TEST(Distances, SupDistance) {
  ExperimentSetup s = default_setup(Grid(1, {16}, {1.0}));
  s.params.T = 0.01;
  Trajectory a = run({s.eta0, s.theta0, 0.0}, s.model, s.params, Forcings::zero());
  EXPECT_EQ(sup_distance(a, a).h, 0.0);
  EXPECT_TRUE(identical_trajectories(a, a));
  Trajectory b = a;
  b.snapshots.back().theta[3] += 1.0;
  EXPECT_NEAR(sup_distance(a, b).h, std::sqrt(s.grid.cell_volume()), 1e-15);
  EXPECT_FALSE(identical_trajectories(a, b));
  EXPECT_TRUE(strictly_decreasing({3, 2, 1}));
  EXPECT_FALSE(strictly_decreasing({3, 3, 1}));
}
