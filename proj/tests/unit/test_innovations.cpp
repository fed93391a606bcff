#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "cptlab/errors.hpp"
#include "cptlab/innovations.hpp"
#include "cptlab/rng.hpp"
#include "oracles.hpp"

using namespace cptlab;
using namespace cptlab::testing;

namespace {

// x_1 | x_2 for a bivariate normal, first coordinate conditioned on the second.
double bivariate_conditional(double x1, double x2, const GaussianParams& g) {
  const double s1 = std::sqrt(g.cov[0]);
  const double s2 = std::sqrt(g.cov[3]);
  const double r = g.cov[1] / (s1 * s2);
  const double m = g.mean[0] + r * s1 / s2 * (x2 - g.mean[1]);
  return normal_cdf((x1 - m) / (s1 * std::sqrt(1.0 - r * r)));
}

const GaussianParams kCorrelated{{0.3, -0.2}, {1.0, 0.6, 0.6, 2.0}};

}  // namespace

TEST(Density, PresetsAreValid) {
  EXPECT_TRUE(check_density(JointDensity::product_normal(1)).ok);
  EXPECT_TRUE(check_density(JointDensity::product_normal(3)).ok);
  const DensityCheck c = check_density(JointDensity::correlated_normal(kCorrelated.mean, kCorrelated.cov));
  EXPECT_TRUE(c.ok);
  EXPECT_NEAR(c.mass, 1.0, 1e-6);
}

TEST(Density, DefectsAreReported) {
  JointDensity heavy = JointDensity::product_normal(1);
  const DensityFn f = heavy.f;
  heavy.f = [f](std::span<const double> x) { return 1.5 * f(x); };
  heavy.factorized = false;
  EXPECT_FALSE(check_density(heavy).ok);
  EXPECT_THROW(validate_density(heavy), ConfigError);

  JointDensity holey = JointDensity::product_normal(1);
  holey.f = [f](std::span<const double> x) { return std::abs(x[0]) < 0.01 ? 0.0 : f(x); };
  holey.factorized = false;
  EXPECT_FALSE(check_density(holey).ok);

  EXPECT_THROW(JointDensity::correlated_normal({0.0, 0.0}, {1.0, 2.0, 2.0, 1.0}), ConfigError);
}

TEST(ConditionalCdf, OneDimensionalNormal) {
  const JointDensity d = JointDensity::product_normal(1);
  const double h = (d.upper[0] - d.lower[0]) / (d.nodes - 1);
  for (int k = 0; k < d.nodes; k += 16) {
    const double x = d.lower[0] + k * h;
    const double p[] = {x};
    // Simpson error at h = 1/32.
    EXPECT_NEAR(conditional_cdf(d, p), normal_cdf(x), 5e-9) << x;
  }
}

TEST(ConditionalCdf, CorrelatedNormalClosedForm) {
  const JointDensity d = JointDensity::correlated_normal(kCorrelated.mean, kCorrelated.cov);
  for (double x1 : {-2.0, -0.5, 0.3, 1.1, 2.4}) {
    for (double x2 : {-1.5, 0.0, 2.0}) {
      const double p[] = {x1, x2};
      EXPECT_NEAR(conditional_cdf(d, p), bivariate_conditional(x1, x2, kCorrelated), 1e-6);
    }
  }
  const double outside[] = {100.0, 0.0};
  EXPECT_THROW(conditional_cdf(d, outside), DomainError);
}

TEST(Chain, StagesAndMonotonicity) {
  const TransformChain chain = TransformChain::build(JointDensity::correlated_normal(kCorrelated.mean, kCorrelated.cov));
  ASSERT_EQ(chain.stages.size(), 2u);
  EXPECT_EQ(chain.stages[0].coordinate, 0);
  EXPECT_EQ(chain.stages[1].density.dim, 2);
  EXPECT_TRUE(chain.strictly_monotone());
}

TEST(Chain, ForwardMatchesClosedForm) {
  const TransformChain chain = TransformChain::build(JointDensity::correlated_normal(kCorrelated.mean, kCorrelated.cov));
  const double x[] = {0.7, -1.1};
  const auto u = rosenblatt(chain, x);
  EXPECT_NEAR(u[0], normal_cdf((0.7 - 0.3) / 1.0), 1e-8);
  const GaussianParams swapped{{-0.2, 0.3}, {2.0, 0.6, 0.6, 1.0}};
  EXPECT_NEAR(u[1], bivariate_conditional(-1.1, 0.7, swapped), 1e-6);
}

TEST(Chain, InverseRoundTrip) {
  const TransformChain chain = TransformChain::build(JointDensity::correlated_normal(kCorrelated.mean, kCorrelated.cov));
  CounterRng rng(3, 0);
  for (int i = 0; i < 50; ++i) {
    const double x[] = {-2.0 + 4.0 * rng.uniform(), -3.0 + 6.0 * rng.uniform()};
    const auto u = rosenblatt(chain, x);
    const auto back = inverse_rosenblatt(chain, u);
    EXPECT_NEAR(back[0], x[0], 1e-6);
    EXPECT_NEAR(back[1], x[1], 1e-6);
  }
}

TEST(Chain, ProductFactorizedStagesIgnorePredecessors) {
  const TransformChain chain = TransformChain::build(JointDensity::product_normal(3));
  const double a[] = {0.5, -1.0, 0.25};
  const double b[] = {-2.0, 3.0, 0.25};
  EXPECT_EQ(rosenblatt(chain, a)[2], rosenblatt(chain, b)[2]);
  EXPECT_NEAR(rosenblatt(chain, a)[2], normal_cdf(0.25), 5e-9);
}

TEST(Chain, FactorizedStageIsTheAxisCdfAtNodes) {
  const JointDensity product = JointDensity::product_normal(2);
  const TransformChain chain = TransformChain::build(product);
  JointDensity axis;
  axis.dim = 1;
  axis.nodes = product.nodes;
  axis.lower = {product.lower[1]};
  axis.upper = {product.upper[1]};
  axis.f = [](std::span<const double> x) { return std::exp(-0.5 * x[0] * x[0]) / std::sqrt(2.0 * 3.141592653589793); };
  const double h = (product.upper[1] - product.lower[1]) / (product.nodes - 1);
  for (int k = 0; k < product.nodes; k += 8) {
    const double x = product.lower[1] + k * h;
    const double pt[] = {-1.7, x};
    const double one[] = {x};
    EXPECT_EQ(rosenblatt(chain, pt)[1], conditional_cdf(axis, one)) << x;
  }
}

TEST(Grid, FileRoundTrip) {
  const std::filesystem::path dir = CPTLAB_TEST_TMP;
  std::filesystem::create_directories(dir);
  const auto path = dir / "grid2.txt";
  {
    std::ofstream out(path);
    out << "# separable tent on [0,1]^2\ndim 2\nlower 0 0\nupper 1 1\ncounts 3 3\n";
    const double tent[] = {0.5, 1.5, 0.5};
    for (double a : tent)
      for (double b : tent) out << a * b << "\n";
  }
  JointDensity d = JointDensity::from_grid_file(path.string());
  d.nodes = 257;
  EXPECT_EQ(d.dim, 2);
  const double centre[] = {0.5, 0.5};
  EXPECT_NEAR(d.f(centre), 2.25, 1e-12);
  const double midway[] = {0.25, 0.5};
  EXPECT_NEAR(d.f(midway), 1.5, 1e-12);
  EXPECT_TRUE(check_density(d).ok);
  const double p[] = {0.5, 0.3};
  EXPECT_NEAR(conditional_cdf(d, p), 0.5, 1e-9);
  EXPECT_THROW(JointDensity::from_grid_file((dir / "missing.txt").string()), ConfigError);
}

TEST(Independentize, BlocksAndUniformity) {
  const GaussianParams g{{0.0, 0.0, 0.0, 0.0}, {1.0, 0.5, 0.2, 0.0, 0.5, 1.0, 0.3, 0.1, 0.2, 0.3, 1.0, 0.4, 0.0, 0.1, 0.4, 1.0}};
  JointDensity d = JointDensity::correlated_normal(g.mean, g.cov);
  d.nodes = 129;
  const auto samples = sample_gaussian(g, 1500, 17);
  const auto blocks = independentize(d, 2, 2, samples, 2);
  ASSERT_EQ(blocks.size(), 1500u);
  ASSERT_EQ(blocks[0].size(), 2u);
  ASSERT_EQ(blocks[0][0].size(), 2u);
  for (int c = 0; c < 4; ++c) {
    std::vector<double> col;
    for (const auto& b : blocks) col.push_back(b[static_cast<std::size_t>(c / 2)][static_cast<std::size_t>(c % 2)]);
    EXPECT_LT(ks_uniform_deviation(col), 0.05) << "coordinate " << c;
  }
  EXPECT_THROW(independentize(d, 3, 2, samples), ConfigError);
}

TEST(Statistics, Basics) {
  std::vector<double> grid;
  for (int i = 0; i < 1000; ++i) grid.push_back((i + 0.5) / 1000.0);
  EXPECT_NEAR(ks_uniform_deviation(grid), 0.0005, 1e-12);
  EXPECT_NEAR(sample_correlation(grid, grid), 1.0, 1e-12);

  CounterRng rng(1, 0);
  std::vector<double> u, v;
  for (int i = 0; i < 8000; ++i) {
    u.push_back(rng.uniform());
    v.push_back(rng.uniform());
  }
  EXPECT_LT(chi_square_4x4(u, v), kChiSquare4x4Critical);
  EXPECT_GT(chi_square_4x4(u, u), 1000.0);
  EXPECT_LT(std::abs(sample_correlation(u, v)), 0.05);
}

TEST(Sampling, GaussianIsSeeded) {
  const auto a = sample_gaussian(kCorrelated, 4000, 5);
  const auto b = sample_gaussian(kCorrelated, 4000, 5);
  EXPECT_EQ(a, b);
  double m0 = 0.0, c01 = 0.0;
  for (const auto& x : a) m0 += x[0];
  m0 /= 4000.0;
  for (const auto& x : a) c01 += (x[0] - 0.3) * (x[1] + 0.2);
  EXPECT_NEAR(m0, 0.3, 0.06);
  EXPECT_NEAR(c01 / 4000.0, 0.6, 0.1);
}
