#include "cptlab/dual.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cptlab/errors.hpp"

namespace cptlab {

double utility_u(double x) noexcept { return x >= 0.0 ? x - 0.5 : -0.5 * (x - 1.0) * (x - 1.0); }

double utility_u_prime(double x) noexcept { return x >= 0.0 ? 1.0 : 1.0 - x; }

namespace {

// Generalized second derivative; the left branch is used at 0 so the first
// Newton step from phi = 0 sees the curvature of the loss side.
double utility_u_second(double x) noexcept { return x <= 0.0 ? -1.0 : 0.0; }

// X_T = A phi, one row per leaf, one column per (decision node, asset).
struct LinearWealth {
  Eigen::MatrixXd a;
  Eigen::VectorXd p;
};

LinearWealth linear_wealth(const ScenarioTree& tree) {
  const auto d = static_cast<Eigen::Index>(tree.dim());
  LinearWealth lw;
  lw.a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(tree.leaves().size()),
                               static_cast<Eigen::Index>(tree.decision_nodes().size()) * d);
  lw.p.resize(lw.a.rows());
  for (std::size_t li = 0; li < tree.leaves().size(); ++li) {
    const int leaf = tree.leaves()[li];
    const auto row = static_cast<Eigen::Index>(li);
    lw.p(row) = tree.path_probability(leaf);
    const std::vector<int> path = tree.path(leaf);
    for (std::size_t k = 1; k < path.size(); ++k) {
      const auto col = static_cast<Eigen::Index>(tree.decision_index(path[k - 1])) * d;
      const std::vector<double> ds = tree.increment(path[k]);
      for (Eigen::Index i = 0; i < d; ++i) lw.a(row, col + i) = ds[static_cast<std::size_t>(i)];
    }
  }
  return lw;
}

double objective(const LinearWealth& lw, const Eigen::VectorXd& x) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) total += lw.p(i) * utility_u(x(i));
  return total;
}

// h'(t) for h(t) = E U(x + t slope), which is nonincreasing in t.
double directional_slope(const LinearWealth& lw, const Eigen::VectorXd& x, const Eigen::VectorXd& slope, double t) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) total += lw.p(i) * utility_u_prime(x(i) + t * slope(i)) * slope(i);
  return total;
}

// Exact maximizer along the ray: h' is continuous, piecewise linear and
// nonincreasing, so bracket its root and bisect.
double line_search(const LinearWealth& lw, const Eigen::VectorXd& x, const Eigen::VectorXd& slope) {
  double lo = 0.0;
  double hi = 1.0;
  int expansions = 0;
  while (directional_slope(lw, x, slope, hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++expansions > 200) throw ArbitrageError("utility objective is unbounded along a search direction");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (directional_slope(lw, x, slope, mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // Inside the final linear piece the root follows from interpolation.
  const double s_lo = directional_slope(lw, x, slope, lo);
  const double s_hi = directional_slope(lw, x, slope, hi);
  if (s_lo > s_hi) return std::clamp(lo + (hi - lo) * s_lo / (s_lo - s_hi), lo, hi);
  return hi;
}

}  // namespace

MartingaleDensity MartingaleDensity::from_leaf_density(const ScenarioTree& tree, std::vector<double> rho) {
  if (rho.size() != tree.leaves().size()) {
    throw ConfigError("density has " + std::to_string(rho.size()) + " entries for " +
                      std::to_string(tree.leaves().size()) + " leaves");
  }
  MartingaleDensity out;
  out.rho = std::move(rho);
  out.leaf_p.reserve(out.rho.size());
  for (int leaf : tree.leaves()) out.leaf_p.push_back(tree.path_probability(leaf));
  out.rho_t.assign(tree.size(), 0.0);
  for (int leaf : tree.leaves()) {
    const double r = out.rho[static_cast<std::size_t>(tree.leaf_index(leaf))];
    if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("density must be positive and finite on every leaf");
    out.rho_t[static_cast<std::size_t>(leaf)] = r;
  }
  // Children have larger ids than their parents.
  for (std::size_t id = tree.size(); id-- > 0;) {
    const Node& node = tree.node(static_cast<int>(id));
    if (node.children.empty()) continue;
    double acc = 0.0;
    for (int c : node.children) acc += tree.node(c).prob * out.rho_t[static_cast<std::size_t>(c)];
    out.rho_t[id] = acc;
  }
  out.q_branch.assign(tree.size(), 1.0);
  for (std::size_t id = 1; id < tree.size(); ++id) {
    const Node& node = tree.node(static_cast<int>(id));
    out.q_branch[id] = node.prob * out.rho_t[id] / out.rho_t[static_cast<std::size_t>(node.parent)];
  }
  out.phi_star = Strategy::zero(tree);
  return out;
}

double MartingaleDensity::q_node(const ScenarioTree& tree, int node) const {
  return tree.path_probability(node) * rho_t.at(static_cast<std::size_t>(node)) / rho_t.at(0);
}

double MartingaleDensity::min_rho() const { return *std::min_element(rho.begin(), rho.end()); }

double MartingaleDensity::max_rho() const { return *std::max_element(rho.begin(), rho.end()); }

MartingaleDensity construct_q(const ScenarioTree& tree, const ConstructQOptions& options) {
  const NaCertificate cert = check_robust_na(tree, options.direction_grid);
  if (!cert.passed) {
    throw ArbitrageError("refusing to construct Q: " + cert.failure->reason);
  }

  const LinearWealth lw = linear_wealth(tree);
  const Eigen::Index n = lw.a.cols();
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(lw.a.rows());

  SolverTrace trace;
  auto gradient = [&](const Eigen::VectorXd& wealth) {
    Eigen::VectorXd weights(wealth.size());
    for (Eigen::Index i = 0; i < wealth.size(); ++i) weights(i) = lw.p(i) * utility_u_prime(wealth(i));
    return Eigen::VectorXd(lw.a.transpose() * weights);
  };

  Eigen::VectorXd g = gradient(x);
  double gnorm = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
  for (;;) {
    trace.gradient_norms.push_back(gnorm);
    if (gnorm <= options.tol) {
      trace.converged = true;
      break;
    }
    if (trace.iterations >= options.max_iter) {
      std::ostringstream msg;
      msg << "construct_q did not converge in " << options.max_iter << " iterations (gradient norm " << gnorm << ")";
      throw ConvergenceError(msg.str(), gnorm, trace.iterations);
    }
    // Generalized Newton on the piecewise quadratic objective. Leaves in the
    // linear region of U carry no curvature; a small mu ~ |g| keeps the
    // system definite without damping the step (larger mu zig-zags across
    // the kinks on four-period trees), and the exact line search limits the
    // long steps along nearly flat directions.
    const double mu = 1e-6 * std::min(1.0, gnorm);
    Eigen::VectorXd curvature(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) curvature(i) = lw.p(i) * (mu - utility_u_second(x(i)));
    const Eigen::MatrixXd m = lw.a.transpose() * curvature.asDiagonal() * lw.a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const double floor = 1e-12 * std::max(1.0, lambda.cwiseAbs().maxCoeff());
    const Eigen::VectorXd coeff = eig.eigenvectors().transpose() * g;
    Eigen::VectorXd scaled(coeff.size());
    // Eigenvalues are clamped at the floor. Redundant holdings (A v = 0)
    // have zero gradient component, so clamping never moves along them.
    for (Eigen::Index k = 0; k < coeff.size(); ++k) scaled(k) = coeff(k) / std::max(lambda(k), floor);
    Eigen::VectorXd step = eig.eigenvectors() * scaled;
    if (!(step.dot(g) > 0.0)) step = g;

    const Eigen::VectorXd slope = lw.a * step;
    const double t = line_search(lw, x, slope);
    const double before = objective(lw, x);
    phi += t * step;
    x = lw.a * phi;
    if (objective(lw, x) < before - 1e-14 * (1.0 + std::abs(before))) {
      // Should not happen for an exact line search on a concave function.
      throw ConvergenceError("construct_q line search failed to ascend", gnorm, trace.iterations);
    }
    g = gradient(x);
    gnorm = g.cwiseAbs().maxCoeff();
    ++trace.iterations;
  }

  std::vector<double> marginal(static_cast<std::size_t>(x.size()));
  double mean = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    marginal[static_cast<std::size_t>(i)] = utility_u_prime(x(i));
    mean += lw.p(i) * marginal[static_cast<std::size_t>(i)];
  }
  for (double& r : marginal) r /= mean;

  MartingaleDensity density = MartingaleDensity::from_leaf_density(tree, std::move(marginal));
  density.phi_star = Strategy::from_flat(tree, std::span<const double>(phi.data(), static_cast<std::size_t>(phi.size())));
  density.trace = std::move(trace);
  return density;
}

double verify_martingale(const ScenarioTree& tree, const MartingaleDensity& density) {
  double residual = 0.0;
  for (int node : tree.decision_nodes()) {
    std::vector<double> drift(static_cast<std::size_t>(tree.dim()), 0.0);
    for (int c : tree.node(node).children) {
      const std::vector<double> ds = tree.increment(c);
      const double q = density.q_branch.at(static_cast<std::size_t>(c));
      for (std::size_t i = 0; i < ds.size(); ++i) drift[i] += q * ds[i];
    }
    for (double v : drift) residual = std::max(residual, std::abs(v));
  }
  return residual;
}

MomentReport moment_diagnostics(const ScenarioTree& tree, const MartingaleDensity& density, double z,
                                const Strategy& theta, double pi) {
  if (!(pi > 1.0)) throw DomainError("moment exponent pi must exceed 1");
  const WealthProcess x = wealth(tree, z, theta);
  const int horizon = tree.horizon();

  MomentReport report;
  report.pi = pi;
  report.eq_wealth.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
  report.eq_abs_wealth.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
  report.eq_theta_half.assign(static_cast<std::size_t>(horizon), 0.0);
  report.eq_gain_plus.assign(static_cast<std::size_t>(horizon), 0.0);
  report.increment_bound_ok = true;

  for (int t = 0; t <= horizon; ++t) {
    for (int node : tree.nodes_at_depth(t)) {
      const double q = density.q_node(tree, node);
      const double xv = x.values[static_cast<std::size_t>(node)];
      report.eq_wealth[static_cast<std::size_t>(t)] += q * xv;
      report.eq_abs_wealth[static_cast<std::size_t>(t)] += q * std::abs(xv);
      if (t == 0) continue;
      const int parent = tree.node(node).parent;
      const double xp = x.values[static_cast<std::size_t>(parent)];
      const auto holding = theta.at(parent);
      const std::vector<double> ds = tree.increment(node);
      double gain = 0.0;
      double norm2 = 0.0;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        gain += holding[i] * ds[i];
        norm2 += holding[i] * holding[i];
      }
      report.eq_theta_half[static_cast<std::size_t>(t - 1)] += q * std::pow(norm2, 0.25);
      report.eq_gain_plus[static_cast<std::size_t>(t - 1)] += q * std::max(gain, 0.0);
      const double bound = std::max(xv, 0.0) + std::max(-xp, 0.0);
      if (std::max(gain, 0.0) > bound + 1e-12 * (1.0 + std::abs(bound))) report.increment_bound_ok = false;
    }
  }
  for (int leaf : tree.leaves()) {
    const double q = density.q_node(tree, leaf);
    const double xt = x.values[static_cast<std::size_t>(leaf)];
    report.eq_terminal_minus_pi += q * std::pow(std::max(-xt, 0.0), pi);
    report.eq_terminal_plus += q * std::max(xt, 0.0);
    report.eq_terminal_minus += q * std::max(-xt, 0.0);
    double worst = 0.0;
    for (int node : tree.path(leaf)) worst = std::max(worst, -x.values[static_cast<std::size_t>(node)]);
    report.eq_sup_minus_pi += q * std::pow(worst, pi);
  }
  for (double e : report.eq_wealth) {
    report.martingale_identity_error = std::max(report.martingale_identity_error, std::abs(e - z));
  }
  report.martingale_identity_ok = report.martingale_identity_error <= 1e-8;
  report.plus_minus_consistent = report.eq_terminal_plus <= std::abs(z) + report.eq_terminal_minus + 1e-8;
  return report;
}

std::optional<double> admissible_pi_upper(double beta, double delta, std::optional<double> r) {
  if (!(beta > 0.0 && delta > 0.0)) throw DomainError("beta and delta must be positive");
  if (r && !(*r > 0.0)) throw DomainError("benchmark moment excess r must be positive");
  const double ratio = beta / delta;
  if (!(ratio > 1.0)) return std::nullopt;
  return r ? std::min(ratio, 1.0 + *r / 2.0) : ratio;
}

std::vector<HoldingBound> holding_moment_bounds(const ScenarioTree& tree, const MartingaleDensity& density,
                                                const NaCertificate& certificate, const Strategy& theta,
                                                double slack) {
  if (theta.dim() != tree.dim() || theta.node_count() != tree.size()) {
    throw ConfigError("strategy shape does not match tree");
  }
  std::vector<HoldingBound> out;
  for (int t = 1; t <= tree.horizon(); ++t) {
    HoldingBound b;
    b.t = t;
    bool unbounded_weight = false;
    for (int node : tree.nodes_at_depth(t - 1)) {
      const auto holding = theta.at(node);
      double norm2 = 0.0;
      for (double h : holding) norm2 += h * h;
      const double norm = std::sqrt(norm2);
      const double q_parent = density.q_node(tree, node);
      b.lhs += q_parent * std::sqrt(norm);

      double inv_rho_cond = 0.0;  // E_P[rho_t^-1 | node]
      double hit_mass = 0.0;      // P(theta/|theta| . dS >= kappa | node)
      const NodeCertificate& nc = certificate.at(tree, node);
      for (int c : tree.node(node).children) {
        const std::vector<double> ds = tree.increment(c);
        double gain = 0.0;
        for (std::size_t i = 0; i < ds.size(); ++i) gain += holding[i] * ds[i];
        b.gain_plus += density.q_node(tree, c) * std::max(gain, 0.0);
        inv_rho_cond += tree.node(c).prob / density.rho_t[static_cast<std::size_t>(c)];
        if (norm > 0.0 && gain / norm >= nc.kappa) hit_mass += tree.node(c).prob;
      }
      double beta = nc.beta;
      if (norm > 0.0 && !certificate.exact) beta = std::min(beta, hit_mass);
      if (!(nc.kappa > 0.0) || !(beta > 0.0)) {
        unbounded_weight = true;
        continue;
      }
      b.weight += q_parent * density.rho_t[static_cast<std::size_t>(node)] / (nc.kappa * beta * beta) * inv_rho_cond;
    }
    if (unbounded_weight) b.weight = std::numeric_limits<double>::infinity();
    b.rhs = std::sqrt(b.gain_plus * b.weight);
    if (std::isnan(b.rhs)) b.rhs = std::numeric_limits<double>::infinity();  // 0 * inf
    b.holds = b.lhs <= b.rhs + slack;
    out.push_back(b);
  }
  return out;
}

}  // namespace cptlab
