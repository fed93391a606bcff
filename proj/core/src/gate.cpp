#include "cptlab/gate.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "cptlab/errors.hpp"
#include "cptlab/parallel.hpp"
#include "cptlab/rng.hpp"

namespace cptlab {

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::WellPosedA:
      return "WellPosedA";
    case Verdict::WellPosedB:
      return "WellPosedB";
    case Verdict::IllPosedNecessary:
      return "IllPosedNecessary";
    case Verdict::Indeterminate:
      return "Indeterminate";
  }
  return "?";
}

std::string_view to_string(BenchmarkMode m) noexcept { return m == BenchmarkMode::Ba ? "Ba" : "Bb"; }

Verdict parse_verdict(std::string_view text) {
  for (Verdict v : {Verdict::WellPosedA, Verdict::WellPosedB, Verdict::IllPosedNecessary, Verdict::Indeterminate}) {
    if (to_string(v) == text) return v;
  }
  throw ConfigError("unknown verdict: " + std::string(text));
}

BenchmarkMode parse_benchmark_mode(std::string_view text) {
  if (text == "Ba") return BenchmarkMode::Ba;
  if (text == "Bb") return BenchmarkMode::Bb;
  throw ConfigError("benchmark mode must be \"Ba\" or \"Bb\", got \"" + std::string(text) + "\"");
}

ParameterVerdict classify(double alpha, double beta, double gamma, double delta, BenchmarkMode benchmark_mode) {
  for (double v : {alpha, beta, gamma, delta}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("classify: parameters must be positive and finite");
  }
  ParameterVerdict out;
  const bool exponent_order = alpha < beta;
  const bool ratio_order = alpha * delta <= beta * gamma;  // alpha/gamma <= beta/delta
  out.necessary = exponent_order && ratio_order;
  out.assumption_a = exponent_order && alpha < gamma && delta < beta;
  out.assumption_b = delta <= 1.0 && exponent_order && alpha < beta * gamma;
  out.both_hold = out.assumption_a && out.assumption_b;

  std::ostringstream w;
  w.precision(6);
  const double ag = alpha / gamma;
  const double bd = beta / delta;
  if (!out.necessary) {
    out.tag = Verdict::IllPosedNecessary;
    if (!exponent_order) {
      w << "alpha=" << alpha << " >= beta=" << beta;
    } else {
      w << "alpha/gamma=" << ag << " > beta/delta=" << bd;
    }
  } else if (out.assumption_a) {
    out.tag = Verdict::WellPosedA;
    out.required_benchmark = BenchmarkMode::Ba;
    w << "alpha=" << alpha << " < beta=" << beta << "; alpha/gamma=" << ag << " < 1 < beta/delta=" << bd;
    if (out.both_hold) w << " (B also holds: delta=" << delta << " <= 1, alpha/gamma < beta)";
  } else if (out.assumption_b) {
    out.tag = Verdict::WellPosedB;
    out.required_benchmark = BenchmarkMode::Bb;
    w << "delta=" << delta << " <= 1; alpha=" << alpha << " < beta=" << beta << "; alpha/gamma=" << ag
      << " < beta=" << beta;
  } else {
    out.tag = Verdict::Indeterminate;
    w << "necessary conditions hold (alpha < beta, alpha/gamma=" << ag << " <= beta/delta=" << bd
      << ") but neither sufficient set does";
  }
  out.witness = w.str();
  out.benchmark_compatible =
      (out.assumption_a && benchmark_mode == BenchmarkMode::Ba) || (out.assumption_b && benchmark_mode == BenchmarkMode::Bb);
  return out;
}

std::vector<double> geometric_lambdas(int k_min, int k_max, double base) {
  if (k_max < k_min) throw DomainError("geometric_lambdas: empty schedule");
  if (!(base > 1.0)) throw DomainError("geometric_lambdas: base must exceed 1");
  std::vector<double> out;
  for (int k = k_min; k <= k_max; ++k) out.push_back(std::pow(base, k));
  return out;
}

std::vector<Strategy> default_directions(const ScenarioTree& tree, std::uint64_t seed, int random_count) {
  std::vector<Strategy> dirs;
  for (int i = 0; i < tree.dim(); ++i) {
    for (double sign : {1.0, -1.0}) {
      Strategy s = Strategy::zero(tree);
      s.at(0)[static_cast<std::size_t>(i)] = sign;
      dirs.push_back(std::move(s));
    }
  }
  CounterRng rng(seed, 0x7a7ULL);
  for (int k = 0; k < random_count; ++k) {
    Strategy s = Strategy::zero(tree);
    for (int node : tree.decision_nodes()) {
      for (double& v : s.at(node)) {
        const double u1 = 1.0 - rng.uniform();
        const double u2 = rng.uniform();
        v = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
      }
    }
    dirs.push_back(std::move(s));
  }
  return dirs;
}

namespace {

double log_or_neg_inf(double v) { return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity(); }

// Least-squares slope of ys on xs; zero when any y is not finite.
double fitted_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const auto n = static_cast<double>(xs.size());
  if (xs.size() < 2) return 0.0;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(ys[i])) return 0.0;
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

ProbePoint probe_point(const ScenarioTree& tree, const CptSpec& spec, double z, const Strategy& dir, double lambda) {
  const DiscreteDistribution law = terminal_distribution(tree, z, dir.scaled(lambda));
  ProbePoint pt;
  pt.lambda = lambda;
  const CptParts parts = cpt_parts(law, spec);
  pt.v_plus = parts.v_plus;
  pt.v_minus = parts.v_minus;
  pt.v = parts.v;
  const bool finite = std::isfinite(parts.v_plus) && std::isfinite(parts.v_minus);
  if (finite || !spec.power) {
    pt.log_v_plus = log_or_neg_inf(parts.v_plus);
    pt.log_v_minus = log_or_neg_inf(parts.v_minus);
  } else {
    const LogCptParts logs = log_cpt_parts(law, spec);
    pt.log_v_plus = logs.log_v_plus;
    pt.log_v_minus = logs.log_v_minus;
  }
  if (finite) {
    pt.sign = parts.v > 0.0 ? 1 : (parts.v < 0.0 ? -1 : 0);
    pt.log_abs_v = log_or_neg_inf(std::abs(parts.v));
    return pt;
  }
  // Overflow: combine the two parts in log space.
  const double lp = pt.log_v_plus;
  const double lm = pt.log_v_minus;
  if (lp == lm) {
    pt.sign = 0;
    pt.log_abs_v = -std::numeric_limits<double>::infinity();
    pt.v = 0.0;
  } else if (lp > lm) {
    pt.sign = 1;
    pt.log_abs_v = lp + std::log1p(-std::exp(lm - lp));
    pt.v = std::numeric_limits<double>::infinity();
  } else {
    pt.sign = -1;
    pt.log_abs_v = lm + std::log1p(-std::exp(lp - lm));
    pt.v = -std::numeric_limits<double>::infinity();
  }
  return pt;
}

}  // namespace

RayProbeReport ray_probe(const ScenarioTree& tree, const CptSpec& spec, double z,
                         const std::vector<Strategy>& directions, const std::vector<double>& lambdas,
                         const ProbeOptions& options, int threads) {
  if (directions.empty()) throw PreconditionError("ray_probe: no directions");
  if (lambdas.size() < 2) throw PreconditionError("ray_probe: need at least two lambdas");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0) || (i > 0 && !(lambdas[i] > lambdas[i - 1]))) {
      throw PreconditionError("ray_probe: lambdas must be positive and strictly increasing");
    }
  }
  if (options.window < 1) throw PreconditionError("ray_probe: window must be positive");
  for (std::size_t k = 0; k < directions.size(); ++k) {
    if (directions[k].dim() != tree.dim() || directions[k].node_count() != tree.size()) {
      throw ConfigError("ray_probe: direction " + std::to_string(k) + " does not match the tree");
    }
    if (directions[k].is_zero()) throw PreconditionError("ray_probe: direction " + std::to_string(k) + " is zero");
  }

  RayProbeReport report;
  report.rays.resize(directions.size());
  parallel_for(directions.size(), threads, [&](std::size_t k) {
    RayResult ray;
    ray.direction_id = static_cast<int>(k);
    for (double lambda : lambdas) ray.points.push_back(probe_point(tree, spec, z, directions[k], lambda));

    const std::size_t window = std::min<std::size_t>(static_cast<std::size_t>(options.window), ray.points.size() - 1);
    const std::size_t first = ray.points.size() - 1 - window;
    std::vector<double> xs;
    std::vector<double> lp;
    std::vector<double> lm;
    std::vector<double> lv;
    bool constant_sign = true;
    bool increasing = true;
    bool nonincreasing = true;
    for (std::size_t i = first; i < ray.points.size(); ++i) {
      const ProbePoint& p = ray.points[i];
      xs.push_back(std::log(p.lambda));
      lp.push_back(p.log_v_plus);
      lm.push_back(p.log_v_minus);
      lv.push_back(p.log_abs_v);
      if (p.sign != ray.points[first].sign) constant_sign = false;
      if (i > first) {
        const ProbePoint& q = ray.points[i - 1];
        // Compare through the log magnitudes so overflowed points still order.
        const double cur = p.sign * std::exp(std::min(p.log_abs_v, 700.0));
        const double prev = q.sign * std::exp(std::min(q.log_abs_v, 700.0));
        const bool up = p.sign > 0 && q.sign > 0 ? p.log_abs_v > q.log_abs_v : cur > prev;
        const bool down = p.sign < 0 && q.sign < 0 ? p.log_abs_v >= q.log_abs_v : cur <= prev;
        if (!up) increasing = false;
        if (!down) nonincreasing = false;
      }
    }
    ray.slope_plus = fitted_slope(xs, lp);
    ray.slope_minus = fitted_slope(xs, lm);
    ray.net_slope = constant_sign ? fitted_slope(xs, lv) : 0.0;
    const ProbePoint& last = ray.points.back();
    const bool above = last.sign > 0 && last.log_abs_v > std::log(options.divergence_threshold);
    ray.divergent = above && increasing && constant_sign && ray.net_slope > 0.0;
    ray.bounded = nonincreasing;
    report.rays[k] = std::move(ray);
  });
  report.certified_bounded = true;
  for (const RayResult& r : report.rays) {
    report.any_divergent = report.any_divergent || r.divergent;
    report.certified_bounded = report.certified_bounded && r.bounded;
  }
  return report;
}

}  // namespace cptlab
