#pragma once

#include <optional>
#include <vector>

#include "cptlab/market.hpp"

namespace cptlab {

// Concave, C^1 utility used to build the martingale measure:
//   U(x) = x - 1/2 for x >= 0,   U(x) = -(x - 1)^2 / 2 for x < 0.
// U'(x) = 1 on x >= 0 and 1 - x below, so U' >= 1 everywhere.
double utility_u(double x) noexcept;
double utility_u_prime(double x) noexcept;

struct SolverTrace {
  int iterations = 0;
  std::vector<double> gradient_norms;  // sup-norm before each step
  bool converged = false;
};

// Equivalent martingale measure Q given by its density against P.
struct MartingaleDensity {
  std::vector<double> rho;       // dQ/dP per leaf, tree.leaves() order
  std::vector<double> leaf_p;    // P-mass per leaf
  std::vector<double> rho_t;     // E_P[rho | node] per node id
  std::vector<double> q_branch;  // Q(child | parent) per node id, root = 1
  Strategy phi_star;             // maximizer of E_P U(X^0_T(phi))
  SolverTrace trace;

  // Fills leaf_p, rho_t and q_branch from per-leaf densities.
  static MartingaleDensity from_leaf_density(const ScenarioTree& tree, std::vector<double> rho);

  // Unconditional Q-mass of a node.
  double q_node(const ScenarioTree& tree, int node) const;
  double min_rho() const;
  double max_rho() const;
};

struct ConstructQOptions {
  double tol = 1e-10;  // gradient sup-norm
  int max_iter = 500;
  int direction_grid = 64;  // for the no-arbitrage precheck when d >= 2
};

// Maximizes phi -> E_P U(X^0_T(phi)) over predictable strategies by damped
// Newton iterations and returns rho = U'(X*) / E_P U'(X*).
// Throws ArbitrageError when the robust no-arbitrage check fails or the
// objective is unbounded, ConvergenceError when max_iter is exhausted.
MartingaleDensity construct_q(const ScenarioTree& tree, const ConstructQOptions& options = {});

// max over non-terminal nodes and coordinates of |E_Q[Delta S | node]|.
double verify_martingale(const ScenarioTree& tree, const MartingaleDensity& density);

struct MomentReport {
  double pi = 1.0;
  double eq_terminal_minus_pi = 0.0;  // E_Q (X_T)_-^pi
  double eq_terminal_plus = 0.0;      // E_Q (X_T)_+
  double eq_terminal_minus = 0.0;     // E_Q (X_T)_-
  double eq_sup_minus_pi = 0.0;       // E_Q sup_t (X_t)_-^pi
  std::vector<double> eq_wealth;      // E_Q X_t, t = 0..T
  std::vector<double> eq_abs_wealth;  // E_Q |X_t|, t = 0..T
  std::vector<double> eq_theta_half;  // E_Q |theta_t|^(1/2), t = 1..T (index t-1)
  std::vector<double> eq_gain_plus;   // E_Q (theta_t . Delta S_t)_+, t = 1..T
  double martingale_identity_error = 0.0;  // max_t |E_Q X_t - z|
  bool martingale_identity_ok = false;     // error <= 1e-8
  // (theta_t . dS_t)_+ <= (X_t)_+ + (X_{t-1})_- on every node, every t.
  bool increment_bound_ok = false;
  // E_Q (X_T)_+ <= |z| + E_Q (X_T)_- (within 1e-8).
  bool plus_minus_consistent = false;
};

MomentReport moment_diagnostics(const ScenarioTree& tree, const MartingaleDensity& density, double z,
                                const Strategy& theta, double pi);

// Upper end of the admissible moment exponent: pi can be any s/lambda with
// 1 < lambda < s < beta/delta, capped at 1 + r/2 when B has 1 + r moments.
// Returns nullopt when beta/delta <= 1 (no admissible pi).
std::optional<double> admissible_pi_upper(double beta, double delta, std::optional<double> r = std::nullopt);

// Holding moment bound for one period t, evaluated exactly on the tree:
//   E_Q|theta_t|^(1/2) <= sqrt( E_Q(theta_t . dS_t)_+ *
//                               E_Q[rho_{t-1} kappa^-1 beta^-2 E_P[rho_t^-1 | F_{t-1}]] ).
struct HoldingBound {
  int t = 0;
  double lhs = 0.0;
  double gain_plus = 0.0;
  double weight = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

// (kappa, beta) come from the certificate; for d >= 2, where the certificate
// is only grid-sufficient, beta at a node is lowered to the exact conditional
// probability of {theta/|theta| . dS >= kappa} when that is smaller, so the
// inequality only relies on facts verified for the actual direction.
std::vector<HoldingBound> holding_moment_bounds(const ScenarioTree& tree, const MartingaleDensity& density,
                                                const NaCertificate& certificate, const Strategy& theta,
                                                double slack = 1e-10);

}  // namespace cptlab
