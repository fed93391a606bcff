#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cptlab/cpt.hpp"
#include "cptlab/market.hpp"

namespace cptlab {

enum class Verdict { WellPosedA, WellPosedB, IllPosedNecessary, Indeterminate };
enum class BenchmarkMode { Ba, Bb };

std::string_view to_string(Verdict v) noexcept;
std::string_view to_string(BenchmarkMode m) noexcept;
Verdict parse_verdict(std::string_view text);
BenchmarkMode parse_benchmark_mode(std::string_view text);

// Parameter regimes of the power envelopes:
//   A:          alpha < beta and alpha/gamma < 1 < beta/delta
//   B:          delta <= 1, alpha < beta and alpha/gamma < beta
//   necessary:  alpha < beta and alpha/gamma <= beta/delta
// A verdict of WellPosedA or WellPosedB means the supremum of V is finite
// (A with a benchmark in L^{1+r}, B with a benchmark dominating a portfolio).
// Indeterminate covers the gap where the necessary conditions hold but
// neither sufficient set does.
struct ParameterVerdict {
  Verdict tag = Verdict::Indeterminate;
  std::string witness;
  std::optional<BenchmarkMode> required_benchmark;
  bool assumption_a = false;
  bool assumption_b = false;
  bool necessary = false;
  bool both_hold = false;
  bool benchmark_compatible = false;
};

// All comparisons are done in cross-multiplied form (alpha < gamma instead
// of alpha/gamma < 1, ...) so dyadic inputs are decided exactly.
ParameterVerdict classify(double alpha, double beta, double gamma, double delta,
                          BenchmarkMode benchmark_mode = BenchmarkMode::Ba);

struct ProbePoint {
  double lambda = 0.0;
  double v_plus = 0.0;
  double v_minus = 0.0;
  double v = 0.0;
  double log_v_plus = 0.0;  // -inf when V+ = 0
  double log_v_minus = 0.0;
  double log_abs_v = 0.0;
  int sign = 0;  // sign of V
};

struct RayResult {
  int direction_id = 0;
  std::vector<ProbePoint> points;
  double slope_plus = 0.0;   // fitted d log V+ / d log lambda over the window
  double slope_minus = 0.0;
  double net_slope = 0.0;    // fitted d log|V| / d log lambda over the window
  bool divergent = false;
  bool bounded = false;      // V nonincreasing over the window
};

struct RayProbeReport {
  std::vector<RayResult> rays;
  bool any_divergent = false;
  bool certified_bounded = false;  // every ray eventually nonincreasing
};

struct ProbeOptions {
  double divergence_threshold = 1e12;
  int window = 5;  // lambda steps used for the slope fits and flags
};

// lambda = base^k for k in [k_min, k_max].
std::vector<double> geometric_lambdas(int k_min = 0, int k_max = 60, double base = 2.0);

// +-e_i at the root (zero elsewhere) followed by `random_count` seeded
// directions with independent standard normal holdings on every
// non-terminal node.
std::vector<Strategy> default_directions(const ScenarioTree& tree, std::uint64_t seed, int random_count = 8);

// Evaluates V(z, lambda * direction) exactly for every lambda and fits the
// growth exponents of V+, V- and |V|. Divergence is declared when V exceeds
// the threshold at the last lambda while increasing with positive slope over
// the window; this is evidence, not a proof. Power-family specs are
// evaluated in log space when the linear values overflow.
RayProbeReport ray_probe(const ScenarioTree& tree, const CptSpec& spec, double z,
                         const std::vector<Strategy>& directions, const std::vector<double>& lambdas,
                         const ProbeOptions& options = {}, int threads = 1);

}  // namespace cptlab
