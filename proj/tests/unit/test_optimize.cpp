#include <gtest/gtest.h>

#include <cmath>

#include "cptlab/dual.hpp"
#include "cptlab/errors.hpp"
#include "cptlab/optimize.hpp"
#include "fixtures.hpp"

using namespace cptlab;
using namespace cptlab::testing;

namespace {

// V(theta) = 0.6 sqrt(1 + 2 theta) + 0.4 sqrt(1 - theta) on [0, 1], maximized
// at theta = 8/11.
constexpr double kFixtureTheta = 0.72727272727272727273;
constexpr double kFixtureValue = 1.148912529307605732;

CptSpec fixture_spec() { return CptSpec::power_family(0.5, 0.9, 1.0, 1.0, 1.0, 2.0); }

}  // namespace

TEST(Optimize, FixtureClosedForm) {
  const ScenarioTree tree = updown_tree();
  const OptimizeResult r = maximize_cpt(tree, fixture_spec(), 1.0, {});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.theta_star.at(0)[0], kFixtureTheta, 1e-6);
  EXPECT_NEAR(r.v_star, kFixtureValue, 1e-10);
  EXPECT_LE(r.v_star, kFixtureValue + 1e-15);
}

TEST(Optimize, Reproducible) {
  const ScenarioTree tree = random_na_tree(12, 2, 1);
  const CptSpec spec = CptSpec::power_family(0.5, 0.9, 0.6, 0.8, 1.0, 2.25);
  OptimizeConfig cfg;
  cfg.seed = 31;
  const OptimizeResult a = maximize_cpt(tree, spec, 1.0, cfg);
  const OptimizeResult b = maximize_cpt(tree, spec, 1.0, cfg);
  EXPECT_EQ(a.theta_star, b.theta_star);
  EXPECT_EQ(a.v_star, b.v_star);
  EXPECT_EQ(a.trace.size(), b.trace.size());
  cfg.threads = 3;
  const OptimizeResult c = maximize_cpt(tree, spec, 1.0, cfg);
  EXPECT_EQ(a.theta_star, c.theta_star);
  EXPECT_EQ(a.evaluations, c.evaluations);
}

TEST(Optimize, NeverWorseThanCash) {
  const CptSpec spec = CptSpec::power_family(0.5, 0.9, 0.6, 0.8, 1.0, 2.25);
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const ScenarioTree tree = random_na_tree(seed, 1 + static_cast<int>(seed % 2), 1 + static_cast<int>(seed % 3 == 0));
    OptimizeConfig cfg;
    cfg.seed = seed;
    cfg.budget = 20000;
    const OptimizeResult r = maximize_cpt(tree, spec, 0.5, cfg);
    EXPECT_GE(r.v_star, evaluate_strategy(tree, spec, 0.5, Strategy::zero(tree)).v);
    EXPECT_NEAR(r.v_star, evaluate_strategy(tree, spec, 0.5, r.theta_star).v, 1e-12);
  }
}

TEST(Optimize, InertCoordinateNeverMoves) {
  const ScenarioTree tree = one_step_tree({0.0, 5.0}, {{0.6, {2.0, 0.0}}, {0.4, {-1.0, 0.0}}});
  const OptimizeResult r = maximize_cpt(tree, fixture_spec(), 1.0, {});
  EXPECT_EQ(r.theta_star.at(0)[1], 0.0);
  EXPECT_NEAR(r.theta_star.at(0)[0], kFixtureTheta, 1e-6);
}

TEST(Optimize, NoUpsideMeansNoPosition) {
  CptSpec spec = CptSpec::power_family(0.5, 0.9, 0.6, 0.8);
  spec.u_plus = [](double) { return 0.0; };
  const ScenarioTree tree = random_na_tree(2, 2, 1);
  const OptimizeResult r = maximize_cpt(tree, spec, 0.0, {});
  EXPECT_TRUE(r.theta_star.is_zero());
  EXPECT_DOUBLE_EQ(r.v_star, 0.0);
}

TEST(Optimize, GateRefusesIllPosedParameters) {
  OptimizeConfig cfg;
  cfg.require_gate = true;
  EXPECT_THROW(maximize_cpt(updown_tree(), CptSpec::power_family(0.9, 0.8, 1.0, 1.0), 1.0, cfg), GateRefusal);
  EXPECT_NO_THROW(maximize_cpt(updown_tree(), CptSpec::power_family(0.5, 0.9, 0.6, 0.8), 1.0, cfg));
}

TEST(Optimize, ConfigValidation) {
  OptimizeConfig cfg;
  cfg.contraction = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.min_step = 2.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.budget = 2;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Optimize, TinyBudgetReportsNonConvergence) {
  OptimizeConfig cfg;
  cfg.budget = 8;
  cfg.starts = 2;
  const OptimizeResult r = maximize_cpt(updown_tree(), fixture_spec(), 1.0, cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_LE(r.evaluations, 8);
}

TEST(Optimize, DiagnosticsOnEveryIterate) {
  const ScenarioTree tree = random_na_tree(21, 2, 1);
  const MartingaleDensity q = construct_q(tree);
  const CptSpec spec = CptSpec::power_family(0.5, 0.9, 0.6, 0.8, 1.0, 2.25);
  const OptimizeResult r = maximize_cpt(tree, spec, 1.0, {}, &q);
  ASSERT_FALSE(r.trace.empty());
  EXPECT_TRUE(r.holding_bounds_ok);
  EXPECT_TRUE(r.increment_bounds_ok);
  EXPECT_EQ(r.max_eq_theta_half.size(), 2u);
  for (const IterateRecord& rec : r.trace) {
    EXPECT_EQ(rec.holding.size(), 2u);
    EXPECT_TRUE(rec.holding_ok);
  }
  double running = -INFINITY;
  for (const IterateRecord& rec : r.trace) {
    running = std::max(running, rec.v);
    EXPECT_DOUBLE_EQ(rec.best_so_far, running);
  }
}
