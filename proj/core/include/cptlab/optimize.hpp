#pragma once

#include <cstdint>
#include <vector>

#include "cptlab/cpt.hpp"
#include "cptlab/dual.hpp"
#include "cptlab/market.hpp"

namespace cptlab {

struct OptimizeConfig {
  int starts = 4;
  std::uint64_t seed = 0;
  double initial_step = 1.0;
  double contraction = 0.5;
  double min_step = 1e-9;
  long budget = 200000;  // objective evaluations over all starts
  bool require_gate = false;
  int threads = 1;
  int direction_grid = 64;  // certificate grid for the holding diagnostics

  void validate() const;  // ConfigError on violations
};

struct Evaluation {
  double v = 0.0;
  double v_plus = 0.0;
  double v_minus = 0.0;
};

// V(z, theta) = V(X_T^z(theta) - B), evaluated exactly.
Evaluation evaluate_strategy(const ScenarioTree& tree, const CptSpec& spec, double z, const Strategy& theta);

// Every strategy has V- < infinity on a finite tree, so A(z) is the whole
// strategy space. Kept so callers do not special-case finite backends.
bool is_admissible(const ScenarioTree& tree, const CptSpec& spec, double z, const Strategy& theta);

// One accepted iterate of one start.
struct IterateRecord {
  int start = 0;
  int iteration = 0;
  long evaluations = 0;     // evaluations spent by this start so far
  double step = 0.0;
  double v = 0.0;
  double v_plus = 0.0;
  double v_minus = 0.0;
  double best_so_far = 0.0;  // running max over the merged trace
  std::vector<double> eq_theta_half;  // E_Q|theta_t|^(1/2), t = 1..T; empty without a density
  std::vector<HoldingBound> holding;  // per period, empty without a density
  bool holding_ok = true;
  bool increment_bound_ok = true;
};

struct OptimizeResult {
  Strategy theta_star;
  double v_star = 0.0;
  double v_plus = 0.0;
  double v_minus = 0.0;
  int winner_start = 0;
  long evaluations = 0;
  bool converged = false;  // every start reached min_step within its budget
  std::vector<IterateRecord> trace;  // start-major, iteration order
  double sup_v_minus = 0.0;          // over all accepted iterates
  std::vector<double> max_eq_theta_half;  // per period, over accepted iterates
  bool holding_bounds_ok = true;     // holding inequality held on every iterate
  bool increment_bounds_ok = true;   // pointwise gain bound held on every iterate
};

// Multi-start compass search over the stacked holdings. Every poll
// evaluates all 2n neighbours and moves to the best strict improvement
// (lowest index on ties); failing polls contract the step. Coordinates
// whose increment vanishes on every branch are frozen at zero. Starts are
// theta = 0, phi* from the density when given, then seeded Gaussian
// holdings scaled per node by 1/kappa. With a density the holding bounds
// and the pointwise gain bound are recorded for every accepted iterate.
// Throws GateRefusal when require_gate is set and the spec's exponents are
// not classified as well posed.
OptimizeResult maximize_cpt(const ScenarioTree& tree, const CptSpec& spec, double z, const OptimizeConfig& config,
                            const MartingaleDensity* density = nullptr);

}  // namespace cptlab
