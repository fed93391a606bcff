#include "cptlab/cpt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "cptlab/errors.hpp"

namespace cptlab {

namespace {

// Slack allowed when checking monotonicity of w at floating-point level.
constexpr double kMonotoneSlack = 1e-14;

struct Level {
  double value;
  double prob;
};

// (u-value, mass) pairs with positive u-value, sorted descending with ties
// merged. The full (value, mass) ordering makes the result independent of
// the input atom order.
std::vector<Level> tail_levels(const DiscreteDistribution& dist, const RealFn& u, bool negate) {
  std::vector<Level> levels;
  levels.reserve(dist.size());
  for (const Atom& a : dist.atoms()) {
    const double x = negate ? std::max(-a.value, 0.0) : std::max(a.value, 0.0);
    const double v = x > 0.0 ? u(x) : u(0.0);
    if (!(v >= 0.0) || std::isnan(v)) {
      std::ostringstream msg;
      msg << "utility returned " << v << " at " << x << "; utilities must map R+ to R+";
      throw SpecError(msg.str());
    }
    if (v > 0.0) levels.push_back({v, a.probability});
  }
  std::sort(levels.begin(), levels.end(), [](const Level& a, const Level& b) {
    return a.value > b.value || (a.value == b.value && a.prob > b.prob);
  });
  std::vector<Level> merged;
  merged.reserve(levels.size());
  for (const Level& l : levels) {
    if (!merged.empty() && merged.back().value == l.value) {
      merged.back().prob += l.prob;
    } else {
      merged.push_back(l);
    }
  }
  return merged;
}

double sum_levels(const std::vector<Level>& levels, const RealFn& w) {
  double total = 0.0;
  double cumulative = 0.0;
  double previous_w = 0.0;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    cumulative += levels[k].prob;
    const double wk = w(std::min(cumulative, 1.0));
    if (wk < previous_w - kMonotoneSlack) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "distortion is decreasing: w(" << cumulative << ") = " << wk << " < " << previous_w;
      throw SpecError(msg.str());
    }
    previous_w = wk;
    const double next = k + 1 < levels.size() ? levels[k + 1].value : 0.0;
    total += (levels[k].value - next) * wk;
  }
  return total;
}

double log_part(const DiscreteDistribution& dist, bool negate, double exponent, double scale, double distortion) {
  struct LogLevel {
    double x;
    double prob;
  };
  std::vector<LogLevel> levels;
  for (const Atom& a : dist.atoms()) {
    const double x = negate ? -a.value : a.value;
    if (x > 0.0) levels.push_back({x, a.probability});
  }
  if (levels.empty()) return -std::numeric_limits<double>::infinity();
  std::sort(levels.begin(), levels.end(), [](const LogLevel& a, const LogLevel& b) {
    return a.x > b.x || (a.x == b.x && a.prob > b.prob);
  });
  std::vector<LogLevel> merged;
  for (const LogLevel& l : levels) {
    if (!merged.empty() && merged.back().x == l.x) {
      merged.back().prob += l.prob;
    } else {
      merged.push_back(l);
    }
  }
  // log of (v_k - v_{k+1}) w(P_k), with v = scale * x^exponent.
  const double log_scale = std::log(scale);
  std::vector<double> terms;
  double cumulative = 0.0;
  for (std::size_t k = 0; k < merged.size(); ++k) {
    cumulative += merged[k].prob;
    const double log_v = log_scale + exponent * std::log(merged[k].x);
    double log_gap = log_v;
    if (k + 1 < merged.size()) {
      const double ratio_log = exponent * (std::log(merged[k + 1].x) - std::log(merged[k].x));
      log_gap += std::log1p(-std::exp(ratio_log));
    }
    terms.push_back(log_gap + distortion * std::log(std::min(cumulative, 1.0)));
  }
  const double top = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - top);
  return top + std::log(acc);
}

}  // namespace

double tk_weight(double p, double c) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  const double a = std::pow(p, c);
  return a / std::pow(a + std::pow(1.0 - p, c), 1.0 / c);
}

CptSpec CptSpec::power_family(double alpha, double beta, double gamma, double delta, double k_plus,
                              double k_minus) {
  for (double v : {alpha, beta, gamma, delta, k_plus, k_minus}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("power-family parameters must be positive");
  }
  CptSpec spec;
  spec.u_plus = [alpha, k_plus](double x) { return k_plus * std::pow(x, alpha); };
  spec.u_minus = [beta, k_minus](double x) { return k_minus * std::pow(x, beta); };
  spec.w_plus = [gamma](double p) { return std::pow(p, gamma); };
  spec.w_minus = [delta](double p) { return std::pow(p, delta); };
  spec.alpha = alpha;
  spec.beta = beta;
  spec.gamma = gamma;
  spec.delta = delta;
  spec.k_plus = k_plus;
  spec.k_minus = k_minus;
  spec.g_plus = 1.0;
  spec.g_minus = 1.0;
  spec.power = PowerParams{alpha, beta, gamma, delta, k_plus, k_minus};
  spec.name = "power";
  return spec;
}

CptSpec CptSpec::preset(std::string_view name) {
  if (name == "linear") {
    CptSpec spec = power_family(1.0, 1.0, 1.0, 1.0);
    spec.name = "linear";
    return spec;
  }
  if (name == "tk92") {
    constexpr double a = 0.88;
    constexpr double loss_aversion = 2.25;
    constexpr double c_plus = 0.61;
    constexpr double c_minus = 0.69;
    CptSpec spec;
    spec.u_plus = [](double x) { return std::pow(x, a); };
    spec.u_minus = [](double x) { return loss_aversion * std::pow(x, a); };
    spec.w_plus = [](double p) { return tk_weight(p, c_plus); };
    spec.w_minus = [](double p) { return tk_weight(p, c_minus); };
    spec.alpha = a;
    spec.beta = a;
    spec.gamma = c_plus;
    spec.delta = c_minus;
    spec.k_plus = 1.0;
    spec.k_minus = loss_aversion;
    // w(p) / p^c = (p^c + (1-p)^c)^(-1/c) lies in [2^(-(1-c)/c), 1] for c < 1.
    spec.g_plus = 1.0;
    spec.g_minus = std::pow(2.0, -(1.0 - c_minus) / c_minus);
    spec.name = "tk92";
    return spec;
  }
  throw ConfigError("unknown CPT preset: " + std::string(name));
}

SpecCheck check_spec(const CptSpec& spec, int grid, double x_max) {
  auto fail = [](const std::string& m) { return SpecCheck{false, m}; };
  if (!spec.u_plus || !spec.u_minus || !spec.w_plus || !spec.w_minus) return fail("missing function slot");
  for (double c : {spec.alpha, spec.beta, spec.gamma, spec.delta, spec.k_plus, spec.k_minus, spec.g_plus,
                   spec.g_minus}) {
    if (!(c > 0.0)) return fail("envelope constants must be positive");
  }
  if (spec.u_plus(0.0) != 0.0) return fail("u+(0) != 0");
  if (spec.u_minus(0.0) != 0.0) return fail("u-(0) != 0");
  if (spec.w_plus(0.0) != 0.0) return fail("w+(0) != 0");
  if (spec.w_minus(0.0) != 0.0) return fail("w-(0) != 0");
  if (std::abs(spec.w_plus(1.0) - 1.0) > 1e-15) return fail("w+(1) != 1");
  if (std::abs(spec.w_minus(1.0) - 1.0) > 1e-15) return fail("w-(1) != 1");
  if (grid < 2) return fail("grid must have at least two points");

  constexpr double slack = 1e-12;
  double prev_plus = 0.0;
  double prev_minus = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double p = static_cast<double>(i) / (grid - 1);
    const double wp = spec.w_plus(p);
    const double wm = spec.w_minus(p);
    if (wp < prev_plus - kMonotoneSlack) return fail("w+ is not nondecreasing at p=" + std::to_string(p));
    if (wm < prev_minus - kMonotoneSlack) return fail("w- is not nondecreasing at p=" + std::to_string(p));
    prev_plus = wp;
    prev_minus = wm;
    if (wp < 0.0 || wp > 1.0 || wm < 0.0 || wm > 1.0) return fail("distortion leaves [0, 1]");
    if (wp > spec.g_plus * std::pow(p, spec.gamma) * (1.0 + slack) + slack) {
      return fail("w+(p) <= g+ p^gamma violated at p=" + std::to_string(p));
    }
    if (wm < spec.g_minus * std::pow(p, spec.delta) * (1.0 - slack) - slack) {
      return fail("w-(p) >= g- p^delta violated at p=" + std::to_string(p));
    }
    const double x = x_max * p;
    const double up = spec.u_plus(x);
    const double um = spec.u_minus(x);
    if (up < 0.0 || um < 0.0) return fail("utilities must be nonnegative");
    if (up > spec.k_plus * (std::pow(x, spec.alpha) + 1.0) * (1.0 + slack)) {
      return fail("u+(x) <= k+ (x^alpha + 1) violated at x=" + std::to_string(x));
    }
    if (um < spec.k_minus * (std::pow(x, spec.beta) - 1.0) * (1.0 + slack) - slack) {
      return fail("u-(x) >= k- (x^beta - 1) violated at x=" + std::to_string(x));
    }
  }
  return {};
}

void validate_spec(const CptSpec& spec, int grid, double x_max) {
  const SpecCheck check = check_spec(spec, grid, x_max);
  if (!check.ok) throw SpecError(check.message);
}

double distorted_integral(const DiscreteDistribution& dist, const RealFn& u, const RealFn& w) {
  return sum_levels(tail_levels(dist, u, false), w);
}

double choquet_plus(const DiscreteDistribution& dist, const CptSpec& spec) {
  return sum_levels(tail_levels(dist, spec.u_plus, false), spec.w_plus);
}

double choquet_minus(const DiscreteDistribution& dist, const CptSpec& spec) {
  return sum_levels(tail_levels(dist, spec.u_minus, true), spec.w_minus);
}

double cpt_value(const DiscreteDistribution& dist, const CptSpec& spec) {
  return choquet_plus(dist, spec) - choquet_minus(dist, spec);
}

CptParts cpt_parts(const DiscreteDistribution& dist, const CptSpec& spec) {
  CptParts parts;
  parts.v_plus = choquet_plus(dist, spec);
  parts.v_minus = choquet_minus(dist, spec);
  parts.v = parts.v_plus - parts.v_minus;
  return parts;
}

LogCptParts log_cpt_parts(const DiscreteDistribution& dist, const CptSpec& spec) {
  if (!spec.power) throw SpecError("log-domain evaluation needs the built-in power family");
  const PowerParams& p = *spec.power;
  return {log_part(dist, false, p.alpha, p.k_plus, p.gamma), log_part(dist, true, p.beta, p.k_minus, p.delta)};
}

double choquet_brute(const DiscreteDistribution& dist, const RealFn& u, const RealFn& w, double step,
                     double cutoff) {
  if (!(step > 0.0)) throw DomainError("oracle step must be positive");
  std::vector<Level> levels;
  double top = 0.0;
  for (const Atom& a : dist.atoms()) {
    const double v = u(a.value);
    top = std::max(top, v);
    levels.push_back({v, a.probability});
  }
  if (cutoff < top) {
    std::ostringstream msg;
    msg << "oracle cutoff " << cutoff << " below the largest u-value " << top;
    throw DomainError(msg.str());
  }
  std::sort(levels.begin(), levels.end(), [](const Level& a, const Level& b) { return a.value < b.value; });

  // The grid point y_j = j*step sees mass P(u > y_j). Atom i stops counting
  // from the first j with j*step >= v_i, i.e. j_i = ceil(v_i / step).
  const auto n_grid = static_cast<long long>(std::ceil(cutoff / step));
  double tail = 0.0;
  for (const Level& l : levels) tail += l.prob;

  double total = 0.0;
  long long j = 0;
  std::size_t i = 0;
  // Drop every atom that is no longer strictly above y_j.
  auto drop_settled = [&] {
    while (i < levels.size() && !(levels[i].value > static_cast<double>(j) * step)) {
      tail -= levels[i].prob;
      ++i;
    }
  };
  drop_settled();
  while (j < n_grid && i < levels.size()) {
    const double boundary = std::ceil(levels[i].value / step);
    const long long j_next = std::min<long long>(n_grid, std::max<long long>(j + 1, static_cast<long long>(boundary)));
    total += static_cast<double>(j_next - j) * step * w(std::clamp(tail, 0.0, 1.0));
    j = j_next;
    drop_settled();
  }
  return total;
}

double choquet_brute_error_bound(const DiscreteDistribution& dist, const RealFn& u, const RealFn& w, double step) {
  std::vector<Level> levels;
  for (const Atom& a : dist.atoms()) levels.push_back({u(a.value), a.probability});
  std::sort(levels.begin(), levels.end(), [](const Level& a, const Level& b) { return a.value > b.value; });
  double cumulative = 0.0;
  double prev = 0.0;
  double max_jump = 0.0;
  std::size_t jumps = 0;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    cumulative += levels[k].prob;
    if (k + 1 < levels.size() && levels[k + 1].value == levels[k].value) continue;
    const double wk = w(std::min(cumulative, 1.0));
    max_jump = std::max(max_jump, wk - prev);
    prev = wk;
    ++jumps;
  }
  return step * static_cast<double>(jumps) * max_jump;
}

}  // namespace cptlab
