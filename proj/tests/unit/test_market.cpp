#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "cptlab/errors.hpp"
#include "cptlab/market.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cptlab;
using namespace cptlab::testing;

TEST(Distribution, RejectsBadMasses) {
  EXPECT_THROW(DiscreteDistribution({{1.0, 0.5}, {2.0, 0.4}}), ConfigError);
  EXPECT_THROW(DiscreteDistribution({{1.0, 0.0}, {2.0, 1.0}}), ConfigError);
  EXPECT_THROW(DiscreteDistribution({{1.0, -0.1}, {2.0, 1.1}}), ConfigError);
  EXPECT_NO_THROW(DiscreteDistribution({{1.0, 0.25}, {2.0, 0.75}}));
}

TEST(Distribution, NormalizedMergesTiesAndSorts) {
  const DiscreteDistribution d({{3.0, 0.2}, {-1.0, 0.3}, {3.0, 0.1}, {0.0, 0.4}});
  const auto n = d.normalized();
  ASSERT_EQ(n.size(), 3u);
  EXPECT_DOUBLE_EQ(n.atoms()[0].value, -1.0);
  EXPECT_DOUBLE_EQ(n.atoms()[2].value, 3.0);
  EXPECT_NEAR(n.atoms()[2].probability, 0.3, 1e-15);
  EXPECT_NEAR(d.expectation(), 0.6, 1e-15);
  EXPECT_NEAR(d.scaled(2.0).expectation(), 1.2, 1e-15);
  EXPECT_NEAR(d.shifted(-0.6).expectation(), 0.0, 1e-15);
}

TEST(Rational, ParseAndReduce) {
  EXPECT_EQ(Rational::parse("2/4"), (Rational{1, 2}));
  EXPECT_EQ(Rational::parse("-3/9"), (Rational{-1, 3}));
  EXPECT_EQ(Rational::parse("5"), (Rational{5, 1}));
  EXPECT_EQ(Rational::parse("1/3") + Rational::parse("2/3"), (Rational{1, 1}));
  EXPECT_THROW(Rational::parse("1/0"), Error);
  EXPECT_THROW(Rational::parse("abc"), Error);
}

TEST(Tree, ExactFractionsMustSumToOne) {
  ScenarioTree::Builder ok({1.0});
  ok.add_child(0, Rational{1, 3}, {2.0});
  ok.add_child(0, Rational{2, 3}, {0.5});
  EXPECT_NO_THROW(ok.build());

  ScenarioTree::Builder bad({1.0});
  bad.add_child(0, Rational{1, 3}, {2.0});
  bad.add_child(0, Rational{1, 3}, {0.5});
  EXPECT_THROW(bad.build(), ConfigError);
}

TEST(Tree, RejectsDimensionMismatchAndUnevenDepth) {
  ScenarioTree::Builder dims({1.0, 2.0});
  dims.add_child(0, 0.5, {1.0});
  dims.add_child(0, 0.5, {1.0, 2.0});
  EXPECT_THROW(dims.build(), ConfigError);

  ScenarioTree::Builder depth({0.0});
  const int a = depth.add_child(0, 0.5, {1.0});
  depth.add_child(0, 0.5, {-1.0});
  depth.add_child(a, 1.0, {2.0});
  EXPECT_THROW(depth.build(), ConfigError);
}

TEST(Tree, StructureOfReferenceBinomial) {
  const ScenarioTree tree = reference_binomial(3);
  EXPECT_EQ(tree.horizon(), 3);
  EXPECT_EQ(tree.dim(), 1);
  EXPECT_EQ(tree.leaves().size(), 8u);
  EXPECT_EQ(tree.decision_nodes().size(), 7u);
  double total = 0.0;
  for (int leaf : tree.leaves()) total += tree.path_probability(leaf);
  EXPECT_NEAR(total, 1.0, 1e-15);
  for (int leaf : tree.leaves()) EXPECT_EQ(tree.path(leaf).size(), 4u);
}

TEST(Wealth, MatchesPathOracle) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const ScenarioTree tree = random_na_tree(seed, 1 + static_cast<int>(seed % 3), 1 + static_cast<int>(seed % 2));
    const Strategy theta = random_strategy(tree, seed, 3.0);
    const double z = 0.25 * static_cast<double>(seed % 5);
    const auto oracle = path_wealth(tree, z, theta);
    const DiscreteDistribution d = terminal_distribution(tree, z, theta);
    ASSERT_EQ(d.size(), oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      EXPECT_NEAR(d.atoms()[i].value, oracle[i], 1e-9);
      EXPECT_NEAR(d.atoms()[i].probability, tree.path_probability(tree.leaves()[i]), 1e-15);
    }
    const WealthProcess w = wealth(tree, z, theta);
    EXPECT_DOUBLE_EQ(w.values[0], z);
  }
}

TEST(Wealth, BenchmarkIsSubtracted) {
  const ScenarioTree tree = updown_tree(0.5);
  Strategy theta = Strategy::zero(tree);
  theta.at(0)[0] = 1.0;
  const auto d = terminal_distribution(tree, 1.0, theta);
  EXPECT_DOUBLE_EQ(d.atoms()[0].value, 1.0 + 2.0 - 0.5);
  EXPECT_DOUBLE_EQ(d.atoms()[1].value, 1.0 - 1.0 - 0.5);
}

TEST(Strategy, FlatRoundTrip) {
  const ScenarioTree tree = random_na_tree(7, 2, 2);
  const Strategy s = random_strategy(tree, 3);
  const auto flat = s.flatten(tree);
  EXPECT_EQ(flat.size(), tree.decision_nodes().size() * 2);
  EXPECT_EQ(Strategy::from_flat(tree, flat), s);
  EXPECT_TRUE(Strategy::zero(tree).is_zero());
  EXPECT_EQ((s + s), s.scaled(2.0));
}

TEST(NoArbitrage, UpDownCertificateIsExact) {
  const NaCertificate cert = check_robust_na(updown_tree());
  ASSERT_TRUE(cert.passed);
  EXPECT_TRUE(cert.exact);
  EXPECT_EQ(cert.nodes.size(), 1u);
  EXPECT_DOUBLE_EQ(cert.nodes[0].kappa, 1.0);
  EXPECT_DOUBLE_EQ(cert.nodes[0].beta, 0.4);
}

TEST(NoArbitrage, OneSignedNodeReportsDirection) {
  const ScenarioTree tree = one_step_tree({0.0}, {{0.5, {1.0}}, {0.5, {2.0}}});
  const NaCertificate cert = check_robust_na(tree);
  EXPECT_FALSE(cert.passed);
  ASSERT_TRUE(cert.failure.has_value());
  EXPECT_EQ(cert.failure->node, 0);
  ASSERT_EQ(cert.failure->direction.size(), 1u);
  EXPECT_DOUBLE_EQ(cert.failure->direction[0], 1.0);
}

TEST(NoArbitrage, FailureDeepInTree) {
  ScenarioTree::Builder b({0.0});
  const int up = b.add_child(0, 0.5, {1.0});
  const int dn = b.add_child(0, 0.5, {-1.0});
  b.add_child(up, 0.5, {2.0});
  b.add_child(up, 0.5, {0.0});
  b.add_child(dn, 0.5, {-1.5});
  b.add_child(dn, 0.5, {-3.0});
  const NaCertificate cert = check_robust_na(b.build());
  EXPECT_FALSE(cert.passed);
  ASSERT_TRUE(cert.failure.has_value());
  EXPECT_EQ(cert.failure->node, dn);
  EXPECT_DOUBLE_EQ(cert.failure->direction[0], -1.0);
}

TEST(NoArbitrage, RandomSurroundingTreesPass) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const ScenarioTree tree = random_na_tree(seed, 2, 1 + static_cast<int>(seed % 2));
    const NaCertificate cert = check_robust_na(tree);
    EXPECT_TRUE(cert.passed) << "seed " << seed;
    for (const auto& n : cert.nodes) {
      EXPECT_GT(n.kappa, 0.0);
      EXPECT_GT(n.beta, 0.0);
    }
  }
}

TEST(NoArbitrage, TwoDimensionalHalfPlaneFails) {
  const ScenarioTree tree =
      one_step_tree({0.0, 0.0}, {{0.3, {1.0, 0.0}}, {0.3, {0.0, 1.0}}, {0.4, {1.0, 1.0}}});
  const NaCertificate cert = check_robust_na(tree);
  EXPECT_FALSE(cert.passed);
  ASSERT_TRUE(cert.failure.has_value());
  const auto& dir = cert.failure->direction;
  // Every increment is nonnegative along the reported direction.
  for (int leaf : tree.leaves()) {
    const auto inc = tree.increment(leaf);
    EXPECT_GE(dir[0] * inc[0] + dir[1] * inc[1], -1e-12);
  }
}

TEST(ProbeDirections, UnitLength) {
  for (int d : {1, 2, 3, 5}) {
    for (const auto& v : probe_directions(d, 32)) {
      EXPECT_NEAR(std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)), 1.0, 1e-12);
    }
  }
}
