#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cptlab/distribution.hpp"
#include "cptlab/dual.hpp"

namespace cptlab {

enum class FamilyShape { Random, SingleAtom, TwoPoint };

// Seeded family of finite laws used to stress the distorted-moment
// inequalities.
struct StressFamily {
  std::uint64_t seed = 0;
  int count = 200;
  int min_atoms = 1;
  int max_atoms = 20;
  double value_min = 0.0;
  double value_max = 10.0;
  FamilyShape shape = FamilyShape::Random;
  std::optional<double> q_mean;  // E_Q X = m, used with a density

  // Unconstrained members: atoms drawn from [value_min, value_max].
  std::vector<DiscreteDistribution> generate() const;
  // Members living on the leaves of the density's tree (atoms in leaf order
  // with the leaf P-masses), shifted so that E_Q X = q_mean (default 0).
  std::vector<DiscreteDistribution> generate(const MartingaleDensity& density) const;
};

FamilyShape parse_family_shape(const std::string& text);

struct MemberRow {
  int member = 0;
  double scale = 1.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

struct InequalityReport {
  std::string lemma;
  std::vector<MemberRow> rows;           // member-major, scale-minor
  std::vector<double> scales;            // 2^0 .. 2^10
  std::vector<double> max_ratio_by_scale;
  double max_ratio = 0.0;                // empirical D, L2 or R2
  double intercept = 0.0;                // L1 or R1 (zero for the first inequality)
  double trend_slope = 0.0;              // least-squares slope of max ratio against the scale index
  bool nonincreasing_trend = false;
  std::optional<double> exponent;        // zeta or eta
  double exponent_residual = 0.0;
  double exponent_lower = 0.0;           // open search interval for eta
  double exponent_upper = 0.0;
  bool inconclusive = false;
  double brute_crosscheck_error = 0.0;   // exact step sum against the Riemann oracle on a sample
  bool brute_crosscheck_ok = false;
  bool passed = false;
};

// E X^s <= 1 + D (int P(X^b > y)^a dy)^(1/a) for X >= 0, with b/(s a) > 1.
// Ratios (E X^s - 1)_+ / (int ...)^(1/a) are collected over X -> cX,
// c = 2^0 .. 2^10.
InequalityReport check_suti(const StressFamily& family, double a, double b, double s, int threads = 1);

// int P(X+^alpha > y)^gamma dy <= L1 + L2 int P(X-^eta > y)^delta dy for
// E_Q X = m. eta is chosen from an interior grid of (max(alpha, delta), beta)
// minimizing L2, refined once. Members are scaled about m so the
// constraint is kept along the ladder.
InequalityReport check_moz1(const StressFamily& family, const MartingaleDensity& density, double alpha, double beta,
                            double gamma, double delta, double m, int threads = 1);

// int P(X^a > y)^s dy <= R1 + R2 (int P(X^b > y)^s dy)^zeta for X >= 0,
// s <= a < b, s <= 1 (s = a is accepted). zeta is the largest per-member log-log slope of the
// left side against the right side along the scale ladder.
InequalityReport check_moz2(const StressFamily& family, double a, double b, double s, int threads = 1);

}  // namespace cptlab
