#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cptlab {

using DensityFn = std::function<double(std::span<const double>)>;
using AxisFn = std::function<double(double)>;

struct GaussianParams {
  std::vector<double> mean;
  std::vector<double> cov;  // row-major dim x dim, symmetric positive definite
};

// Probability density on R^dim, effectively supported on the box
// [lower, upper]. Quadrature uses `nodes` points per axis (odd).
struct JointDensity {
  int dim = 0;
  DensityFn f;
  std::vector<double> lower;
  std::vector<double> upper;
  int nodes = 513;
  // Declared, never inferred: f is the product of axis_density[i].
  bool factorized = false;
  std::vector<AxisFn> axis_density;
  // Set by the Gaussian presets; gives the leading marginals in closed form.
  std::optional<GaussianParams> gaussian;
  std::string name = "custom";

  static JointDensity product_normal(int dim, double half_width = 8.0);
  // Box is mean +- half_width * sd on every axis.
  static JointDensity correlated_normal(std::vector<double> mean, std::vector<double> cov, double half_width = 8.0);
  // Multilinear interpolation of strictly positive grid values; values are
  // row-major with the last axis fastest.
  static JointDensity from_grid(std::vector<double> lower, std::vector<double> upper, std::vector<int> counts,
                                std::vector<double> values);
  // Plain text: "dim k", "lower ...", "upper ...", "counts ..." header lines
  // then one value per line.
  static JointDensity from_grid_file(const std::string& path);

  // Density of (x_1, ..., x_l), closed form for Gaussians, tensor Simpson
  // over the trailing axes otherwise.
  JointDensity leading_marginal(int l) const;
};

struct DensityCheck {
  bool ok = true;
  double mass = 0.0;
  double min_value = 0.0;  // over the checked nodes
  std::string message;
};

inline constexpr double kMassTolerance = 1e-3;

// f > 0 on the quadrature nodes and |box mass - 1| <= kMassTolerance. Above
// two dimensions the tensor grid is thinned to keep the check near 2e6
// evaluations.
DensityCheck check_density(const JointDensity& density);
void validate_density(const JointDensity& density);  // ConfigError

// F(x^1 | x^2..) = int_lower^x1 f(z, x^2, ..) dz / int_lower^upper f(z, x^2, ..) dz
// by composite Simpson along the first axis with the density's node spacing.
// Throws DomainError outside the box or when the denominator is below 1e-300.
double conditional_cdf(const JointDensity& density, std::span<const double> point);

// Stage l (0-based) maps x_l through its conditional CDF given x_0..x_{l-1}.
// Each stage reads only coordinates <= l.
struct ChainStage {
  int coordinate = 0;
  JointDensity density;  // arguments ordered (x_l, x_0, ..., x_{l-1})
};

struct TransformChain {
  int dim = 0;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<ChainStage> stages;

  static TransformChain build(const JointDensity& density);

  // Every stage strictly increasing in its leading argument on a grid of
  // `grid` points per axis (predecessors on a coarser grid).
  bool strictly_monotone(int grid = 33) const;
};

std::vector<double> rosenblatt(const TransformChain& chain, std::span<const double> sample);
// Bisection inverse, |x - x*| <= tol on every coordinate.
std::vector<double> inverse_rosenblatt(const TransformChain& chain, std::span<const double> u, double tol = 1e-12);

// Applies the T*N chain to every sample and regroups each image into T
// blocks of N coordinates: result[sample][t][n].
std::vector<std::vector<std::vector<double>>> independentize(const JointDensity& density, int T, int N,
                                                             const std::vector<std::vector<double>>& samples,
                                                             int threads = 1);

// Seeded Gaussian draws via Cholesky and Box-Muller.
std::vector<std::vector<double>> sample_gaussian(const GaussianParams& params, std::size_t n, std::uint64_t seed);

// Evidence statistics for transformed samples.
double ks_uniform_deviation(std::vector<double> values);  // sup |F_n(u) - u|
double sample_correlation(std::span<const double> x, std::span<const double> y);
// Pearson statistic of the 4 x 4 table of quartile bins of two samples
// against the independent-uniform expectation n/16 per cell (15 dof).
double chi_square_4x4(std::span<const double> u, std::span<const double> v);
inline constexpr double kChiSquare4x4Critical = 37.697;  // 0.999 quantile, 15 dof

}  // namespace cptlab
