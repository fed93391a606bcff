#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "cptlab/distribution.hpp"

namespace cptlab {

using RealFn = std::function<double(double)>;

// Exponents and scales of the built-in power family
//   u+(x) = k+ x^alpha, u-(x) = k- x^beta, w+(p) = p^gamma, w-(p) = p^delta.
struct PowerParams {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double delta = 1.0;
  double k_plus = 1.0;
  double k_minus = 1.0;
};

// Utilities u+-: R+ -> R+ and distortions w+-: [0,1] -> [0,1] together with
// the constants of the power envelopes
//   u+(x) <= k+ (x^alpha + 1),   u-(x) >= k- (x^beta - 1),
//   w+(p) <= g+ p^gamma,         w-(p) >= g- p^delta.
struct CptSpec {
  RealFn u_plus;
  RealFn u_minus;
  RealFn w_plus;
  RealFn w_minus;
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double delta = 1.0;
  double k_plus = 1.0;
  double k_minus = 1.0;
  double g_plus = 1.0;
  double g_minus = 1.0;
  std::optional<PowerParams> power;  // set for the built-in family
  std::string name = "custom";

  static CptSpec power_family(double alpha, double beta, double gamma, double delta,
                              double k_plus = 1.0, double k_minus = 1.0);
  // "linear" (all exponents one) or "tk92": Tversky-Kahneman value function
  // 0.88 / 0.88 / loss aversion 2.25 with inverse-S weights 0.61 and 0.69.
  static CptSpec preset(std::string_view name);
};

// Tversky-Kahneman inverse-S weighting p^c / (p^c + (1-p)^c)^(1/c).
double tk_weight(double p, double c);

struct SpecCheck {
  bool ok = true;
  std::string message;
};

// u(0) = 0, w(0) = 0, w(1) = 1, envelope inequalities and monotone w on a
// uniform grid of `grid` points (utilities probed on [0, x_max]).
SpecCheck check_spec(const CptSpec& spec, int grid = 1001, double x_max = 100.0);
void validate_spec(const CptSpec& spec, int grid = 1001, double x_max = 100.0);

// Exact value of  int_0^inf w(P(u(X) > y)) dy  for a finite law, where u is
// applied to max(X, 0). With distinct values v_1 > ... > v_n > 0 of u(X+)
// and P_k = P(u(X+) >= v_k), the integrand equals w(P_k) on (v_{k+1}, v_k],
// so the integral is sum_k (v_k - v_{k+1}) w(P_k). Using >= at the jump
// points changes the integrand on a null set only. Throws SpecError if w
// decreases along the cumulative masses.
double distorted_integral(const DiscreteDistribution& dist, const RealFn& u, const RealFn& w);

double choquet_plus(const DiscreteDistribution& dist, const CptSpec& spec);
// Applied to X- = max(-X, 0) with u- and w-.
double choquet_minus(const DiscreteDistribution& dist, const CptSpec& spec);
double cpt_value(const DiscreteDistribution& dist, const CptSpec& spec);

struct CptParts {
  double v = 0.0;
  double v_plus = 0.0;
  double v_minus = 0.0;
};
CptParts cpt_parts(const DiscreteDistribution& dist, const CptSpec& spec);

// Logarithms of V+ and V- computed without forming u-values; requires the
// power family. -inf when the corresponding part vanishes.
struct LogCptParts {
  double log_v_plus = 0.0;
  double log_v_minus = 0.0;
};
LogCptParts log_cpt_parts(const DiscreteDistribution& dist, const CptSpec& spec);

// Independent oracle: the left-endpoint Riemann sum
//   sum_{j=0}^{n-1} step * w(P(u(X) > j*step)),  n = ceil(cutoff / step),
// of the tail integrand. Here u is applied to the raw atom values. The
// integrand is a step function in y with one jump per distinct u-value, and
// the sum is evaluated exactly by counting grid points between jumps.
// Throws DomainError when step <= 0 or cutoff < max u(X).
double choquet_brute(const DiscreteDistribution& dist, const RealFn& u, const RealFn& w,
                     double step, double cutoff);

// |choquet_brute - exact| <= step * (number of jumps) * (largest jump of
// w along the tail masses).
double choquet_brute_error_bound(const DiscreteDistribution& dist, const RealFn& u, const RealFn& w,
                                 double step);

}  // namespace cptlab
