#include "cptlab/lemmas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cptlab/cpt.hpp"
#include "cptlab/errors.hpp"
#include "cptlab/parallel.hpp"
#include "cptlab/rng.hpp"

namespace cptlab {

namespace {

constexpr int kScaleCount = 11;  // 2^0 .. 2^10
constexpr int kEtaGrid = 64;
constexpr int kCrosscheckMembers = 5;
constexpr double kCrosscheckStep = 1e-6;

std::vector<double> scale_ladder() {
  std::vector<double> out;
  for (int k = 0; k < kScaleCount; ++k) out.push_back(std::ldexp(1.0, k));
  return out;
}

double draw(CounterRng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

std::vector<double> random_weights(CounterRng& rng, int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  double total = 0.0;
  for (double& x : w) {
    x = 1.0 - rng.uniform();  // (0, 1]
    total += x;
  }
  for (double& x : w) x /= total;
  return w;
}

RealFn power(double e) {
  return [e](double x) { return x > 0.0 ? std::pow(x, e) : 0.0; };
}

double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys, double* max_residual) {
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
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
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  if (max_residual != nullptr) {
    *max_residual = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double fit = my + slope * (xs[i] - mx);
      *max_residual = std::max(*max_residual, std::abs(ys[i] - fit));
    }
  }
  return slope;
}

// Sets the trend fields from max_ratio_by_scale. A flat sequence passes;
// the tolerance is relative to the ratio level.
void fill_trend(InequalityReport& report) {
  std::vector<double> idx;
  double level = 0.0;
  for (std::size_t k = 0; k < report.max_ratio_by_scale.size(); ++k) {
    idx.push_back(static_cast<double>(k));
    level = std::max(level, std::abs(report.max_ratio_by_scale[k]));
  }
  report.trend_slope = least_squares_slope(idx, report.max_ratio_by_scale, nullptr);
  report.nonincreasing_trend = report.trend_slope <= 1e-9 * (1.0 + level);
}

void require_nonnegative(const std::vector<DiscreteDistribution>& members, const char* who) {
  for (const DiscreteDistribution& m : members) {
    for (const Atom& a : m.atoms()) {
      if (a.value < 0.0) throw DomainError(std::string(who) + ": family members must be non-negative");
    }
  }
}

// Exact step sum against the Riemann oracle on the first few members.
void crosscheck(InequalityReport& report, const std::vector<DiscreteDistribution>& members, const RealFn& u,
                const RealFn& w) {
  double worst = 0.0;
  const std::size_t n = std::min<std::size_t>(members.size(), kCrosscheckMembers);
  for (std::size_t i = 0; i < n; ++i) {
    double top = 0.0;
    for (const Atom& a : members[i].atoms()) top = std::max(top, u(std::max(a.value, 0.0)));
    const double exact = distorted_integral(members[i], u, w);
    const RealFn u_plus = [&u](double x) { return u(std::max(x, 0.0)); };
    const double brute = choquet_brute(members[i], u_plus, w, kCrosscheckStep, top + 1.0);
    worst = std::max(worst, std::abs(exact - brute));
  }
  report.brute_crosscheck_error = worst;
  report.brute_crosscheck_ok = worst <= 10.0 * kCrosscheckStep;
}

DiscreteDistribution negated(const DiscreteDistribution& d) { return d.scaled(-1.0); }

DiscreteDistribution rescaled_about(const DiscreteDistribution& d, double m, double c) {
  std::vector<Atom> atoms(d.atoms().begin(), d.atoms().end());
  for (Atom& a : atoms) a.value = m + c * (a.value - m);
  return DiscreteDistribution(std::move(atoms));
}

}  // namespace

FamilyShape parse_family_shape(const std::string& text) {
  if (text == "random") return FamilyShape::Random;
  if (text == "single_atom") return FamilyShape::SingleAtom;
  if (text == "two_point") return FamilyShape::TwoPoint;
  throw ConfigError("family shape must be random, single_atom or two_point, got \"" + text + "\"");
}

std::vector<DiscreteDistribution> StressFamily::generate() const {
  if (count < 1) throw ConfigError("family.count must be >= 1");
  if (min_atoms < 1 || max_atoms < min_atoms) throw ConfigError("family atom range is empty");
  if (!(value_max >= value_min)) throw ConfigError("family value range is empty");
  std::vector<DiscreteDistribution> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    CounterRng rng(seed, static_cast<std::uint64_t>(k));
    std::vector<Atom> atoms;
    switch (shape) {
      case FamilyShape::SingleAtom:
        atoms.push_back({draw(rng, value_min, value_max), 1.0});
        break;
      case FamilyShape::TwoPoint: {
        const double p = 0.05 + 0.9 * rng.uniform();
        atoms.push_back({draw(rng, value_min, value_max), p});
        atoms.push_back({draw(rng, value_min, value_max), 1.0 - p});
        break;
      }
      case FamilyShape::Random: {
        const int n = min_atoms + static_cast<int>(rng() % static_cast<std::uint64_t>(max_atoms - min_atoms + 1));
        const std::vector<double> w = random_weights(rng, n);
        for (int i = 0; i < n; ++i) atoms.push_back({draw(rng, value_min, value_max), w[static_cast<std::size_t>(i)]});
        break;
      }
    }
    out.emplace_back(std::move(atoms));
  }
  return out;
}

std::vector<DiscreteDistribution> StressFamily::generate(const MartingaleDensity& density) const {
  if (count < 1) throw ConfigError("family.count must be >= 1");
  if (!(value_max >= value_min)) throw ConfigError("family value range is empty");
  const std::size_t leaves = density.leaf_p.size();
  if (leaves == 0 || density.rho.size() != leaves) throw ConfigError("family: density has no leaves");
  if (shape == FamilyShape::TwoPoint && leaves < 2) throw ConfigError("two-point family needs at least two leaves");
  const double m = q_mean.value_or(0.0);
  std::vector<DiscreteDistribution> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    CounterRng rng(seed, static_cast<std::uint64_t>(k));
    std::vector<double> x(leaves, 0.0);
    switch (shape) {
      case FamilyShape::SingleAtom:
        break;  // the shift below makes X = m
      case FamilyShape::TwoPoint: {
        const double tau = draw(rng, value_min, value_max);
        for (std::size_t i = 0; i < leaves; ++i) x[i] = i < (leaves + 1) / 2 ? tau : -tau;
        break;
      }
      case FamilyShape::Random:
        for (double& v : x) v = draw(rng, value_min, value_max);
        break;
    }
    double eq = 0.0;
    for (std::size_t i = 0; i < leaves; ++i) eq += density.leaf_p[i] * density.rho[i] * x[i];
    std::vector<Atom> atoms;
    double check = 0.0;
    for (std::size_t i = 0; i < leaves; ++i) {
      atoms.push_back({x[i] + (m - eq), density.leaf_p[i]});
      check += density.leaf_p[i] * density.rho[i] * atoms.back().value;
    }
    if (std::abs(check - m) > 1e-10) throw ConfigError("family: Q-mean constraint could not be met");
    out.emplace_back(std::move(atoms));
  }
  return out;
}

InequalityReport check_suti(const StressFamily& family, double a, double b, double s, int threads) {
  if (!(a > 0.0 && b > 0.0 && s > 0.0)) throw DomainError("check_suti: a, b, s must be positive");
  if (!(b > s * a)) throw DomainError("check_suti: requires b / (s a) > 1");
  const std::vector<DiscreteDistribution> members = family.generate();
  require_nonnegative(members, "check_suti");
  const RealFn u = power(b);
  const RealFn w = power(a);

  InequalityReport report;
  report.lemma = "suti";
  report.scales = scale_ladder();
  report.rows.resize(members.size() * kScaleCount);
  parallel_for(members.size(), threads, [&](std::size_t i) {
    for (int k = 0; k < kScaleCount; ++k) {
      const DiscreteDistribution x = members[i].scaled(report.scales[static_cast<std::size_t>(k)]);
      MemberRow row{static_cast<int>(i), report.scales[static_cast<std::size_t>(k)], 0.0, 0.0, 0.0};
      row.lhs = std::max(x.expectation([s](double v) { return std::pow(v, s); }) - 1.0, 0.0);
      row.rhs = std::pow(distorted_integral(x, u, w), 1.0 / a);
      row.ratio = row.rhs > 0.0 ? row.lhs / row.rhs : 0.0;
      report.rows[i * kScaleCount + static_cast<std::size_t>(k)] = row;
    }
  });
  report.max_ratio_by_scale.assign(kScaleCount, 0.0);
  for (const MemberRow& r : report.rows) {
    const auto k = static_cast<std::size_t>(std::lround(std::log2(r.scale)));
    report.max_ratio_by_scale[k] = std::max(report.max_ratio_by_scale[k], r.ratio);
    report.max_ratio = std::max(report.max_ratio, r.ratio);
  }
  fill_trend(report);
  crosscheck(report, members, u, w);
  report.passed = std::isfinite(report.max_ratio) && report.nonincreasing_trend && report.brute_crosscheck_ok;
  return report;
}

InequalityReport check_moz2(const StressFamily& family, double a, double b, double s, int threads) {
  if (!(a > 0.0 && b > 0.0 && s > 0.0)) throw DomainError("check_moz2: a, b, s must be positive");
  if (!(s <= a && a < b && s <= 1.0)) throw DomainError("check_moz2: requires s <= a < b and s <= 1");
  const std::vector<DiscreteDistribution> members = family.generate();
  require_nonnegative(members, "check_moz2");
  const RealFn ua = power(a);
  const RealFn ub = power(b);
  const RealFn w = power(s);

  InequalityReport report;
  report.lemma = "moz2";
  report.scales = scale_ladder();
  report.rows.resize(members.size() * kScaleCount);
  parallel_for(members.size(), threads, [&](std::size_t i) {
    for (int k = 0; k < kScaleCount; ++k) {
      const double c = report.scales[static_cast<std::size_t>(k)];
      const DiscreteDistribution x = members[i].scaled(c);
      report.rows[i * kScaleCount + static_cast<std::size_t>(k)] =
          MemberRow{static_cast<int>(i), c, distorted_integral(x, ua, w), distorted_integral(x, ub, w), 0.0};
    }
  });

  double zeta = 0.0;
  double residual = 0.0;
  bool fitted = false;
  for (std::size_t i = 0; i < members.size(); ++i) {
    std::vector<double> lx;
    std::vector<double> ly;
    for (int k = 0; k < kScaleCount; ++k) {
      const MemberRow& r = report.rows[i * kScaleCount + static_cast<std::size_t>(k)];
      if (r.lhs > 0.0 && r.rhs > 0.0) {
        lx.push_back(std::log(r.rhs));
        ly.push_back(std::log(r.lhs));
      }
    }
    if (lx.size() < 2) continue;
    double res = 0.0;
    const double slope = least_squares_slope(lx, ly, &res);
    zeta = fitted ? std::max(zeta, slope) : slope;
    residual = std::max(residual, res);
    fitted = true;
  }
  if (fitted) {
    report.exponent = zeta;
    report.exponent_residual = residual;
  } else {
    report.inconclusive = true;  // every member vanishes
  }

  report.max_ratio_by_scale.assign(kScaleCount, 0.0);
  for (MemberRow& r : report.rows) {
    r.ratio = r.rhs > 0.0 ? r.lhs / std::pow(r.rhs, zeta) : 0.0;
    const auto k = static_cast<std::size_t>(std::lround(std::log2(r.scale)));
    report.max_ratio_by_scale[k] = std::max(report.max_ratio_by_scale[k], r.ratio);
    report.max_ratio = std::max(report.max_ratio, r.ratio);
  }
  fill_trend(report);
  crosscheck(report, members, ua, w);
  report.passed = !report.inconclusive && zeta < 1.0 - 1e-6 && std::isfinite(report.max_ratio) &&
                  report.nonincreasing_trend && report.brute_crosscheck_ok;
  return report;
}

namespace {

struct Moz1Fit {
  double eta = 0.0;
  double l1 = 0.0;
  double l2 = std::numeric_limits<double>::infinity();
};

Moz1Fit fit_constants(double eta, const std::vector<double>& pos, const std::vector<DiscreteDistribution>& losses,
                      double delta) {
  Moz1Fit fit;
  fit.eta = eta;
  const RealFn u = power(eta);
  const RealFn w = power(delta);
  std::vector<double> neg(losses.size());
  fit.l1 = 0.0;
  for (std::size_t r = 0; r < losses.size(); ++r) {
    neg[r] = distorted_integral(losses[r], u, w);
    if (neg[r] <= 1.0) fit.l1 = std::max(fit.l1, pos[r]);
  }
  fit.l2 = 0.0;
  for (std::size_t r = 0; r < losses.size(); ++r) {
    if (neg[r] > 1.0) fit.l2 = std::max(fit.l2, std::max(pos[r] - fit.l1, 0.0) / neg[r]);
  }
  return fit;
}

}  // namespace

InequalityReport check_moz1(const StressFamily& family, const MartingaleDensity& density, double alpha, double beta,
                            double gamma, double delta, double m, int threads) {
  for (double v : {alpha, beta, gamma, delta}) {
    if (!(v > 0.0)) throw DomainError("check_moz1: exponents must be positive");
  }
  if (!(alpha < beta && alpha < gamma && delta < beta)) {
    throw DomainError("check_moz1: requires alpha < beta and alpha/gamma < 1 < beta/delta");
  }
  const double lo = std::max(alpha, delta);
  const double hi = beta;
  if (!(lo < hi)) throw DomainError("check_moz1: empty eta interval");

  StressFamily constrained = family;
  constrained.q_mean = m;
  const std::vector<DiscreteDistribution> members = constrained.generate(density);

  InequalityReport report;
  report.lemma = "moz1";
  report.scales = scale_ladder();
  report.exponent_lower = lo;
  report.exponent_upper = hi;

  // Rows are (member, scale); the positive side does not depend on eta.
  const std::size_t n_rows = members.size() * kScaleCount;
  std::vector<DiscreteDistribution> losses(n_rows);
  std::vector<double> pos(n_rows);
  const RealFn u_plus = power(alpha);
  const RealFn w_plus = power(gamma);
  parallel_for(members.size(), threads, [&](std::size_t i) {
    for (int k = 0; k < kScaleCount; ++k) {
      const std::size_t r = i * kScaleCount + static_cast<std::size_t>(k);
      const DiscreteDistribution x = rescaled_about(members[i], m, report.scales[static_cast<std::size_t>(k)]);
      pos[r] = distorted_integral(x, u_plus, w_plus);
      losses[r] = negated(x);
    }
  });

  auto better = [](const Moz1Fit& a, const Moz1Fit& b) { return a.l2 < b.l2; };
  std::vector<double> grid(kEtaGrid);
  for (int j = 0; j < kEtaGrid; ++j) grid[static_cast<std::size_t>(j)] = lo + (hi - lo) * (j + 1) / (kEtaGrid + 1.0);
  std::vector<Moz1Fit> fits(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t j) { fits[j] = fit_constants(grid[j], pos, losses, delta); });
  std::size_t best = 0;
  for (std::size_t j = 1; j < fits.size(); ++j) {
    if (better(fits[j], fits[best])) best = j;
  }
  // One refinement pass over the neighbouring cells.
  const double cell_lo = best == 0 ? lo : grid[best - 1];
  const double cell_hi = best + 1 == grid.size() ? hi : grid[best + 1];
  std::vector<double> fine(kEtaGrid);
  for (int j = 0; j < kEtaGrid; ++j) {
    fine[static_cast<std::size_t>(j)] = cell_lo + (cell_hi - cell_lo) * (j + 1) / (kEtaGrid + 1.0);
  }
  std::vector<Moz1Fit> fine_fits(fine.size());
  parallel_for(fine.size(), threads, [&](std::size_t j) { fine_fits[j] = fit_constants(fine[j], pos, losses, delta); });
  Moz1Fit chosen = fits[best];
  for (const Moz1Fit& f : fine_fits) {
    if (better(f, chosen)) chosen = f;
  }

  report.exponent = chosen.eta;
  report.intercept = chosen.l1;
  report.max_ratio = chosen.l2;
  report.inconclusive = !(chosen.eta > lo && chosen.eta < hi) || !std::isfinite(chosen.l2);

  const RealFn u_minus = power(chosen.eta);
  const RealFn w_minus = power(delta);
  report.rows.resize(n_rows);
  report.max_ratio_by_scale.assign(kScaleCount, 0.0);
  for (std::size_t r = 0; r < n_rows; ++r) {
    const double neg = distorted_integral(losses[r], u_minus, w_minus);
    MemberRow row{static_cast<int>(r / kScaleCount), report.scales[r % kScaleCount], pos[r], neg, 0.0};
    row.ratio = neg > 1.0 ? std::max(pos[r] - chosen.l1, 0.0) / neg : 0.0;
    report.rows[r] = row;
    // The trend uses the plain ratio, which scales like c^(alpha - eta).
    if (neg > 0.0) {
      report.max_ratio_by_scale[r % kScaleCount] = std::max(report.max_ratio_by_scale[r % kScaleCount], pos[r] / neg);
    }
  }
  fill_trend(report);

  std::vector<DiscreteDistribution> sample;
  for (std::size_t i = 0; i < std::min<std::size_t>(members.size(), kCrosscheckMembers); ++i) sample.push_back(members[i]);
  crosscheck(report, sample, u_plus, w_plus);
  report.passed = !report.inconclusive && report.nonincreasing_trend && report.brute_crosscheck_ok;
  return report;
}

}  // namespace cptlab
