// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cptlab/cpt.hpp"
#include "cptlab/dual.hpp"
#include "cptlab/errors.hpp"
#include "cptlab/gate.hpp"
#include "cptlab/innovations.hpp"
#include "cptlab/lemmas.hpp"
#include "cptlab/market.hpp"
#include "cptlab/optimize.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cptlab;
using namespace cptlab::testing;

namespace {

struct Check {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int id, const std::string& title, const std::function<void(Check&)>& body) {
  Check v;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!v.pass) ++failures;
  std::printf("%s  %2d  %s:%s (%.1fs)\n", v.pass ? "PASS" : "FAIL", id, title.c_str(), v.detail.str().c_str(), secs);
  std::fflush(stdout);
}

double positive_part(double x) { return x > 0.0 ? x : 0.0; }

void brute_choquet(Check& v) {
  double worst_plus = 0.0;
  double worst_minus = 0.0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    CounterRng rng(seed, 77);
    const double alpha = 0.2 + 0.8 * rng.uniform();
    const double beta = 0.2 + 0.8 * rng.uniform();
    const double gamma = 0.3 + 0.7 * rng.uniform();
    const double delta = 0.3 + 0.7 * rng.uniform();
    const CptSpec spec = CptSpec::power_family(alpha, beta, gamma, delta, 1.0, 2.25);
    const DiscreteDistribution d = random_law(seed + 10'000, 20, 0.0, 10.0);
    // Losses use the mirrored law so both parts see the same atoms.
    const DiscreteDistribution mirrored = negate(d);
    const double cut_plus = spec.u_plus(10.0) + 1.0;
    const double cut_minus = spec.u_minus(10.0) + 1.0;
    worst_plus = std::max(worst_plus, std::abs(choquet_brute(d, spec.u_plus, spec.w_plus, 1e-6, cut_plus) -
                                               choquet_plus(d, spec)));
    worst_minus = std::max(worst_minus, std::abs(choquet_brute(d, spec.u_minus, spec.w_minus, 1e-6, cut_minus) -
                                                 choquet_minus(mirrored, spec)));
  }
  v.detail << " 500 laws, max error plus " << worst_plus << " minus " << worst_minus;
  v.require(worst_plus <= 1e-5 && worst_minus <= 1e-5, "error above 1e-5");
}

void identity_reduction(Check& v) {
  const CptSpec linear = CptSpec::preset("linear");
  CptSpec curved = CptSpec::power_family(0.6, 0.85, 1.0, 1.0, 1.0, 2.25);
  double worst_linear = 0.0;
  double worst_curved = 0.0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const DiscreteDistribution d = random_law(seed + 20'000, 25, -100.0, 100.0);
    const double e = d.expectation();
    const double scale = d.expectation([](double x) { return std::abs(x); });
    worst_linear = std::max(worst_linear, std::abs(cpt_value(d, linear) - e) / scale);
    const double eu_plus = d.expectation([](double x) { return x > 0.0 ? std::pow(x, 0.6) : 0.0; });
    const double eu_minus = d.expectation([](double x) { return x < 0.0 ? 2.25 * std::pow(-x, 0.85) : 0.0; });
    const CptParts parts = cpt_parts(d, curved);
    worst_curved = std::max({worst_curved, std::abs(parts.v_plus - eu_plus) / std::max(eu_plus, 1e-300),
                             std::abs(parts.v_minus - eu_minus) / std::max(eu_minus, 1e-300)});
  }
  v.detail << " 500 laws, |V - E X| / E|X| <= " << worst_linear << ", power u relative error " << worst_curved;
  v.require(worst_linear <= 1e-12 && worst_curved <= 1e-12, "relative error above 1e-12");
}

void emm_construction(Check& v) {
  const ScenarioTree ud = updown_tree();
  const MartingaleDensity q = construct_q(ud);
  const double q_up = q.q_branch[static_cast<std::size_t>(ud.leaves()[0])];
  const double ud_res = verify_martingale(ud, q);
  v.detail << " Q(up) = " << q_up << " residual " << ud_res;
  v.require(std::abs(q_up - 1.0 / 3.0) <= 1e-8, "Q(up) != 1/3");
  v.require(ud_res <= 1e-8, "up-down residual above 1e-8");

  double binomial_dev = 0.0;
  for (int periods : {1, 2, 3}) {
    for (double r : construct_q(reference_binomial(periods)).rho) binomial_dev = std::max(binomial_dev, std::abs(r - 1.0));
  }
  v.detail << ", symmetric |rho - 1| <= " << binomial_dev;
  v.require(binomial_dev <= 1e-8, "symmetric binomial rho != 1");

  double worst = 0.0;
  double min_rho = INFINITY;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const int horizon = 1 + static_cast<int>(seed % 3);
    const int dim = 1 + static_cast<int>((seed / 3) % 2);
    const ScenarioTree tree = random_na_tree(seed + 30'000, horizon, dim, 3);
    const MartingaleDensity m = construct_q(tree);
    worst = std::max(worst, verify_martingale(tree, m));
    min_rho = std::min(min_rho, m.min_rho());
  }
  v.detail << ", 50 trees residual <= " << worst << " min rho = " << min_rho;
  v.require(worst <= 1e-8, "martingale residual above 1e-8");
  v.require(min_rho > 0.0, "non-positive density");
}

void martingale_identity(Check& v) {
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const ScenarioTree tree = random_na_tree(k / 4 + 40'000, 1 + static_cast<int>(k % 3), 1 + static_cast<int>((k / 2) % 2));
    const MartingaleDensity q = construct_q(tree);
    const Strategy theta = random_strategy(tree, k, 5.0);
    const double z = -2.0 + 0.04 * static_cast<double>(k);
    const MomentReport m = moment_diagnostics(tree, q, z, theta, 1.5);
    worst = std::max(worst, m.martingale_identity_error);
  }
  v.detail << " 100 (tree, theta) pairs, max_t |E_Q X_t - z| = " << worst;
  v.require(worst <= 1e-8, "identity error above 1e-8");
}

void gate_grid(Check& v) {
  const double grid[] = {0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  int checked = 0;
  int mismatches = 0;
  int counts[4] = {0, 0, 0, 0};
  for (double a : grid)
    for (double b : grid)
      for (double g : grid)
        for (double d : grid) {
          const DirectVerdict ref = direct_verdict(a, b, g, d);
          const Verdict expected = !ref.necessary ? Verdict::IllPosedNecessary
                                   : ref.a        ? Verdict::WellPosedA
                                   : ref.b        ? Verdict::WellPosedB
                                                  : Verdict::Indeterminate;
          const ParameterVerdict got = classify(a, b, g, d);
          ++checked;
          ++counts[static_cast<int>(got.tag)];
          if (got.tag != expected || got.necessary != ref.necessary || got.assumption_a != ref.a ||
              got.assumption_b != ref.b) {
            ++mismatches;
          }
        }
  v.detail << " " << checked << " tuples, " << mismatches << " mismatches (A " << counts[0] << ", B " << counts[1]
           << ", ill " << counts[2] << ", indeterminate " << counts[3] << ")";
  v.require(checked == 4096 && mismatches == 0, "classification disagrees with ratio form");
}

void ray_probe_criterion(Check& v) {
  const ScenarioTree tree = reference_binomial(2);
  const auto dirs = default_directions(tree, 2024);
  const auto lambdas = geometric_lambdas();
  const RayProbeReport ill = ray_probe(tree, CptSpec::power_family(0.9, 0.8, 1.0, 1.0), 0.0, dirs, lambdas);
  double lo = INFINITY, hi = -INFINITY;
  bool all_divergent = true;
  for (const RayResult& r : ill.rays) {
    lo = std::min(lo, r.net_slope);
    hi = std::max(hi, r.net_slope);
    all_divergent = all_divergent && r.divergent;
  }
  v.detail << " ill-posed: " << ill.rays.size() << " rays, slope in [" << lo << ", " << hi << "]";
  v.require(all_divergent, "a ray was not flagged divergent");
  v.require(lo >= 0.88 && hi <= 0.92, "slope outside 0.9 +- 0.02");

  const RayProbeReport ok = ray_probe(tree, CptSpec::power_family(0.5, 0.9, 0.6, 0.8), 0.0, dirs, lambdas);
  v.detail << "; well-posed divergent rays: " << std::count_if(ok.rays.begin(), ok.rays.end(), [](const RayResult& r) {
    return r.divergent;
  });
  v.require(!ok.any_divergent, "well-posed parameters flagged divergent");
}

double grid_max_1d(const ScenarioTree& tree, const CptSpec& spec, double z, double lo, double hi, double step,
                   double* arg) {
  double best = -INFINITY;
  for (double t = lo; t <= hi + 1e-12; t += step) {
    Strategy s = Strategy::zero(tree);
    s.at(0)[0] = t;
    const double val = evaluate_strategy(tree, spec, z, s).v;
    if (val > best) {
      best = val;
      *arg = t;
    }
  }
  return best;
}

void optimizer_criterion(Check& v) {
  // Frozen reference for the grid below, from an independent evaluation.
  constexpr double kFixtureGridMax = 1.1489124974057716;
  const ScenarioTree ud = updown_tree();
  const CptSpec fixture = CptSpec::power_family(0.5, 0.9, 1.0, 1.0, 1.0, 2.0);
  double arg = 0.0;
  const double grid = grid_max_1d(ud, fixture, 1.0, -50.0, 50.0, 1e-3, &arg);
  v.detail << " grid max " << grid << " at " << arg;
  v.require(std::abs(grid - kFixtureGridMax) <= 1e-12, "grid oracle differs from its frozen value");

  OptimizeConfig cfg;
  cfg.seed = 5;
  const OptimizeResult r = maximize_cpt(ud, fixture, 1.0, cfg);
  const double gap = std::abs(r.v_star - grid);
  v.detail << "; V* = " << r.v_star << " gap " << gap;
  v.require(gap <= 1e-4, "gap above 1e-4");

  const OptimizeResult again = maximize_cpt(ud, fixture, 1.0, cfg);
  OptimizeConfig threaded = cfg;
  threaded.threads = 2;
  const OptimizeResult par = maximize_cpt(ud, fixture, 1.0, threaded);
  const ScenarioTree tree = random_na_tree(77, 2, 1);
  const CptSpec spec = CptSpec::power_family(0.5, 0.9, 0.6, 0.8, 1.0, 2.25);
  const OptimizeResult a = maximize_cpt(tree, spec, 1.0, cfg);
  const OptimizeResult b = maximize_cpt(tree, spec, 1.0, cfg);
  const bool same = r.theta_star == again.theta_star && r.v_star == again.v_star && r.trace.size() == again.trace.size() &&
                    r.theta_star == par.theta_star && a.theta_star == b.theta_star && a.v_star == b.v_star;
  v.detail << "; repeated runs identical: " << (same ? "yes" : "no");
  v.require(same, "optimizer not deterministic");
  v.require(r.converged, "compass search did not converge");
}

void diagnostics_criterion(Check& v) {
  std::vector<ScenarioTree> suite{updown_tree(), reference_binomial(2), reference_binomial(3)};
  for (std::uint64_t s = 0; s < 6; ++s) suite.push_back(random_na_tree(s + 50'000, 1 + static_cast<int>(s % 3), 1 + static_cast<int>(s % 2)));
  const CptSpec spec = CptSpec::power_family(0.5, 0.9, 0.6, 0.8, 1.0, 2.25);
  std::size_t iterates = 0;
  bool holding = true;
  bool gains = true;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const MartingaleDensity q = construct_q(suite[i]);
    OptimizeConfig cfg;
    cfg.seed = i;
    cfg.budget = 40000;
    const OptimizeResult r = maximize_cpt(suite[i], spec, 1.0, cfg, &q);
    iterates += r.trace.size();
    holding = holding && r.holding_bounds_ok;
    gains = gains && r.increment_bounds_ok;
  }
  v.detail << " " << suite.size() << " trees, " << iterates << " iterates, holding bound "
           << (holding ? "held" : "violated") << ", gain bound " << (gains ? "held" : "violated");
  v.require(holding, "holding moment bound violated");
  v.require(gains, "pointwise gain bound violated");
}

void lemma_criterion(Check& v) {
  StressFamily fam;
  fam.seed = 123;
  const InequalityReport suti = check_suti(fam, 0.8, 1.2, 1.0);
  v.detail << " suti D = " << suti.max_ratio << " slope " << suti.trend_slope;
  v.require(suti.nonincreasing_trend && suti.passed, "suti max ratios not non-increasing");

  const InequalityReport moz2 = check_moz2(fam, 0.5, 1.5, 0.5);
  v.detail << "; moz2 slope " << moz2.trend_slope;
  v.require(moz2.nonincreasing_trend && moz2.passed, "moz2 max ratios not non-increasing");

  StressFamily single = fam;
  single.shape = FamilyShape::SingleAtom;
  const double zeta = check_moz2(single, 0.5, 1.5, 0.5).exponent.value_or(NAN);
  v.detail << "; single-atom zeta = " << zeta;
  v.require(std::abs(zeta - 1.0 / 3.0) <= 0.01, "zeta not within 0.01 of a/b");

  const ScenarioTree tree = random_na_tree(60'000, 2, 1);
  const MartingaleDensity q = construct_q(tree);
  StressFamily two = fam;
  two.shape = FamilyShape::TwoPoint;
  const InequalityReport moz1 = check_moz1(two, q, 0.5, 0.9, 0.6, 0.8, 0.0);
  const double eta = moz1.exponent.value_or(NAN);
  v.detail << "; two-point eta = " << eta << " in (" << moz1.exponent_lower << ", " << moz1.exponent_upper << ")";
  v.require(eta > 0.8 && eta < 0.9 && moz1.passed, "eta infeasible");
}

void rosenblatt_criterion(Check& v) {
  const GaussianParams g{{0.0, 0.0}, {1.0, 0.5, 0.5, 1.0}};
  const JointDensity density = JointDensity::correlated_normal(g.mean, g.cov);
  const auto samples = sample_gaussian(g, 10000, 99);
  const auto blocks = independentize(density, 1, 2, samples);
  std::vector<double> u0, u1;
  for (const auto& b : blocks) {
    u0.push_back(b[0][0]);
    u1.push_back(b[0][1]);
  }
  const double ks = std::max(ks_uniform_deviation(u0), ks_uniform_deviation(u1));
  const double corr = sample_correlation(u0, u1);
  const double chi = chi_square_4x4(u0, u1);
  v.detail << " N = 10000 KS " << ks << " corr " << corr << " chi2 " << chi;
  v.require(ks < 0.02, "KS above 0.02");
  v.require(std::abs(corr) < 0.05, "|corr| above 0.05");

  // x_1 | x_2 in closed form.
  const double s1 = 1.0, s2 = 1.0, rho = 0.5;
  double cdf_err = 0.0;
  for (double x1 : {-1.5, 0.0, 0.5, 2.0}) {
    for (double x2 : {-3.0, -1.0, 0.2, 1.0}) {
      const double m = g.mean[0] + rho * s1 / s2 * (x2 - g.mean[1]);
      const double exact = normal_cdf((x1 - m) / (s1 * std::sqrt(1.0 - rho * rho)));
      const double p[] = {x1, x2};
      cdf_err = std::max(cdf_err, std::abs(conditional_cdf(density, p) - exact));
    }
  }
  v.detail << "; conditional CDF error " << cdf_err;
  v.require(cdf_err <= 1e-4, "conditional CDF error above 1e-4");

  // Factorized: every stage must reproduce the one-dimensional CDF of its
  // axis, whatever the other coordinate is.
  const JointDensity product = JointDensity::product_normal(2);
  const TransformChain chain = TransformChain::build(product);
  JointDensity axis;
  axis.dim = 1;
  axis.nodes = product.nodes;
  axis.lower = {product.lower[0]};
  axis.upper = {product.upper[0]};
  axis.f = [](std::span<const double> x) { return std::exp(-0.5 * x[0] * x[0]) / std::sqrt(2.0 * std::numbers::pi); };
  const double h = (product.upper[0] - product.lower[0]) / (product.nodes - 1);
  double node_err = 0.0;
  double phi_err = 0.0;
  for (int k = 0; k < product.nodes; ++k) {
    const double x = product.lower[0] + k * h;
    const double y = product.lower[1] + ((7 * k) % product.nodes) * h;
    const double pt[] = {x, y};
    const auto u = rosenblatt(chain, pt);
    const double px[] = {x};
    const double py[] = {y};
    node_err = std::max({node_err, std::abs(u[0] - conditional_cdf(axis, px)), std::abs(u[1] - conditional_cdf(axis, py))});
    phi_err = std::max(phi_err, std::abs(u[0] - normal_cdf(x)));
  }
  v.detail << "; factorized node deviation " << node_err << " (vs Phi " << phi_err << ")";
  v.require(node_err == 0.0, "factorized stage differs from the marginal CDF at a node");
}

void na_criterion(Check& v) {
  const NaCertificate cert = check_robust_na(updown_tree());
  const double kappa = cert.nodes.empty() ? NAN : cert.nodes[0].kappa;
  const double beta = cert.nodes.empty() ? NAN : cert.nodes[0].beta;
  v.detail << " {+2, -1}: kappa = " << kappa << " beta = " << beta;
  v.require(cert.passed && cert.exact && kappa == 1.0 && beta == 0.4, "certificate is not (1, 0.4)");

  const ScenarioTree bad = one_step_tree({0.0}, {{0.5, {1.0}}, {0.5, {3.0}}});
  const NaCertificate fail = check_robust_na(bad);
  const bool reported = !fail.passed && fail.failure && fail.failure->node == 0 && fail.failure->direction.size() == 1 &&
                        fail.failure->direction[0] == 1.0;
  v.detail << "; one-signed node " << (reported ? "rejected with direction +1" : "not rejected correctly");
  v.require(reported, "one-signed node not rejected with its direction");
  bool refused = false;
  try {
    construct_q(bad);
  } catch (const ArbitrageError&) {
    refused = true;
  }
  v.require(refused, "construct_q accepted an arbitrage");
}

}  // namespace

int main() {
  criterion(1, "exact Choquet sum vs brute Riemann sum", brute_choquet);
  criterion(2, "identity distortions reduce to the expectation", identity_reduction);
  criterion(3, "martingale measure construction", emm_construction);
  criterion(4, "E_Q X_t = z along wealth paths", martingale_identity);
  criterion(5, "parameter gate over the 4096-tuple grid", gate_grid);
  criterion(6, "ray probe divergence detection", ray_probe_criterion);
  criterion(7, "optimizer vs dense grid and determinism", optimizer_criterion);
  criterion(8, "holding and gain bounds on every iterate", diagnostics_criterion);
  criterion(9, "distorted-moment inequality harnesses", lemma_criterion);
  criterion(10, "innovation transform evidence", rosenblatt_criterion);
  criterion(11, "robust no-arbitrage certificate", na_criterion);
  std::printf("%s: %d of 11 criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
