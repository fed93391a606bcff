#include "cptlab/innovations.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>

#include "cptlab/errors.hpp"
#include "cptlab/parallel.hpp"
#include "cptlab/rng.hpp"

namespace cptlab {

namespace {

constexpr double kDenominatorGuard = 1e-300;
constexpr double kCheckBudget = 2e6;

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// Composite Simpson of g over [a, b] with a step close to h. An odd number
// of intervals ends with a 3/8 panel; an interval count that lands exactly
// on the node grid reproduces the node spacing.
template <class G>
double simpson(const G& g, double a, double b, double h) {
  if (!(b > a)) return 0.0;
  int n = static_cast<int>(std::ceil((b - a) / h - 1e-9));
  n = std::max(n, 2);
  const double step = (b - a) / n;
  const int simpson_intervals = n % 2 == 0 ? n : n - 3;
  double total = 0.0;
  if (simpson_intervals > 0) {
    double acc = g(a) + g(a + simpson_intervals * step);
    for (int i = 1; i < simpson_intervals; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * g(a + i * step);
    total += acc * step / 3.0;
  }
  if (simpson_intervals != n) {
    const double x0 = a + simpson_intervals * step;
    total += 3.0 * step / 8.0 * (g(x0) + 3.0 * g(x0 + step) + 3.0 * g(x0 + 2.0 * step) + g(b));
  }
  return total;
}

// 1-D Simpson weights for an odd node count.
std::vector<double> simpson_weights(int n, double h) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] = (i == 0 || i == n - 1 ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0)) * h / 3.0;
  }
  return w;
}

int thinned_nodes(int nodes, int dims) {
  if (dims <= 0) return 1;
  int n = nodes;
  if (dims > 2) n = std::min(nodes, static_cast<int>(std::floor(std::pow(kCheckBudget, 1.0 / dims))));
  if (n % 2 == 0) --n;
  return std::max(n, 3);
}

// Sum over a tensor Simpson grid on `axes` of fn(point); the remaining
// coordinates of `point` are left untouched.
template <class Fn>
double tensor_simpson(std::vector<double>& point, const std::vector<int>& axes, const std::vector<double>& lo,
                      const std::vector<double>& hi, int per_axis, Fn&& fn) {
  const std::size_t k = axes.size();
  std::vector<std::vector<double>> weights(k);
  std::vector<double> steps(k);
  for (std::size_t a = 0; a < k; ++a) {
    steps[a] = (hi[a] - lo[a]) / (per_axis - 1);
    weights[a] = simpson_weights(per_axis, steps[a]);
  }
  std::vector<int> idx(k, 0);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t a = 0; a < k; ++a) {
      point[static_cast<std::size_t>(axes[a])] = lo[a] + idx[a] * steps[a];
      w *= weights[a][static_cast<std::size_t>(idx[a])];
    }
    total += w * fn(point);
    std::size_t a = 0;
    while (a < k && ++idx[a] == per_axis) idx[a++] = 0;
    if (a == k) break;
  }
  return total;
}

struct GaussianEval {
  std::vector<double> mean;
  std::vector<double> precision;  // row-major
  double log_norm = 0.0;

  explicit GaussianEval(const GaussianParams& p) : mean(p.mean) {
    const auto d = static_cast<Eigen::Index>(p.mean.size());
    Eigen::MatrixXd cov(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) cov(i, j) = p.cov[static_cast<std::size_t>(i * d + j)];
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw ConfigError("covariance is not positive definite");
    const Eigen::MatrixXd prec = llt.solve(Eigen::MatrixXd::Identity(d, d));
    precision.resize(static_cast<std::size_t>(d * d));
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) precision[static_cast<std::size_t>(i * d + j)] = prec(i, j);
    }
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
    log_norm = -0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + log_det);
  }

  double operator()(std::span<const double> x) const {
    const std::size_t d = mean.size();
    double q = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double di = x[i] - mean[i];
      double row = 0.0;
      for (std::size_t j = 0; j < d; ++j) row += precision[i * d + j] * (x[j] - mean[j]);
      q += di * row;
    }
    return std::exp(log_norm - 0.5 * q);
  }
};

void require_box(const JointDensity& d) {
  if (d.dim < 1) throw ConfigError("density dimension must be >= 1");
  if (static_cast<int>(d.lower.size()) != d.dim || static_cast<int>(d.upper.size()) != d.dim) {
    throw ConfigError("density box does not match the dimension");
  }
  for (int i = 0; i < d.dim; ++i) {
    if (!(d.upper[static_cast<std::size_t>(i)] > d.lower[static_cast<std::size_t>(i)])) {
      throw ConfigError("density box is empty on axis " + std::to_string(i));
    }
  }
  if (d.nodes < 3) throw ConfigError("density.nodes must be >= 3");
  if (!d.f) throw ConfigError("density has no evaluator");
}

}  // namespace

JointDensity JointDensity::product_normal(int dim, double half_width) {
  if (dim < 1) throw ConfigError("product_normal: dimension must be >= 1");
  if (!(half_width > 0.0)) throw ConfigError("product_normal: half width must be positive");
  JointDensity d;
  d.dim = dim;
  d.name = "product_normal";
  d.lower.assign(static_cast<std::size_t>(dim), -half_width);
  d.upper.assign(static_cast<std::size_t>(dim), half_width);
  d.factorized = true;
  d.axis_density.assign(static_cast<std::size_t>(dim), normal_pdf);
  d.f = [](std::span<const double> x) {
    double v = 1.0;
    for (double xi : x) v *= normal_pdf(xi);
    return v;
  };
  GaussianParams g;
  g.mean.assign(static_cast<std::size_t>(dim), 0.0);
  g.cov.assign(static_cast<std::size_t>(dim * dim), 0.0);
  for (int i = 0; i < dim; ++i) g.cov[static_cast<std::size_t>(i * dim + i)] = 1.0;
  d.gaussian = std::move(g);
  return d;
}

JointDensity JointDensity::correlated_normal(std::vector<double> mean, std::vector<double> cov, double half_width) {
  const std::size_t dim = mean.size();
  if (dim == 0) throw ConfigError("correlated_normal: empty mean");
  if (cov.size() != dim * dim) throw ConfigError("correlated_normal: covariance must be dim x dim");
  if (!(half_width > 0.0)) throw ConfigError("correlated_normal: half width must be positive");
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      if (cov[i * dim + j] != cov[j * dim + i]) throw ConfigError("correlated_normal: covariance is not symmetric");
    }
  }
  GaussianParams g{std::move(mean), std::move(cov)};
  auto eval = std::make_shared<const GaussianEval>(g);
  JointDensity d;
  d.dim = static_cast<int>(dim);
  d.name = "correlated_normal";
  for (std::size_t i = 0; i < dim; ++i) {
    const double sd = std::sqrt(g.cov[i * dim + i]);
    d.lower.push_back(g.mean[i] - half_width * sd);
    d.upper.push_back(g.mean[i] + half_width * sd);
  }
  d.f = [eval](std::span<const double> x) { return (*eval)(x); };
  d.gaussian = std::move(g);
  return d;
}

JointDensity JointDensity::from_grid(std::vector<double> lower, std::vector<double> upper, std::vector<int> counts,
                                     std::vector<double> values) {
  const std::size_t dim = lower.size();
  if (dim == 0 || upper.size() != dim || counts.size() != dim) throw ConfigError("grid density: inconsistent axes");
  std::size_t total = 1;
  for (int c : counts) {
    if (c < 2) throw ConfigError("grid density: every axis needs at least two points");
    total *= static_cast<std::size_t>(c);
  }
  if (values.size() != total) {
    throw ConfigError("grid density: expected " + std::to_string(total) + " values, got " + std::to_string(values.size()));
  }
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("grid density: values must be positive and finite");
  }
  struct Grid {
    std::vector<double> lower, upper;
    std::vector<int> counts;
    std::vector<double> values;
  };
  auto grid = std::make_shared<const Grid>(Grid{lower, upper, counts, std::move(values)});
  JointDensity d;
  d.dim = static_cast<int>(dim);
  d.name = "grid";
  d.lower = std::move(lower);
  d.upper = std::move(upper);
  d.f = [grid](std::span<const double> x) {
    const std::size_t k = grid->counts.size();
    std::vector<std::size_t> base(k);
    std::vector<double> frac(k);
    for (std::size_t a = 0; a < k; ++a) {
      const double h = (grid->upper[a] - grid->lower[a]) / (grid->counts[a] - 1);
      const double t = std::clamp((x[a] - grid->lower[a]) / h, 0.0, static_cast<double>(grid->counts[a] - 1));
      base[a] = std::min(static_cast<std::size_t>(t), static_cast<std::size_t>(grid->counts[a] - 2));
      frac[a] = t - static_cast<double>(base[a]);
    }
    double acc = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << k); ++corner) {
      double w = 1.0;
      std::size_t flat = 0;
      for (std::size_t a = 0; a < k; ++a) {
        const bool up = ((corner >> a) & 1U) != 0;
        w *= up ? frac[a] : 1.0 - frac[a];
        flat = flat * static_cast<std::size_t>(grid->counts[a]) + base[a] + (up ? 1 : 0);
      }
      if (w != 0.0) acc += w * grid->values[flat];
    }
    return acc;
  };
  return d;
}

JointDensity JointDensity::from_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open grid file " + path);
  int dim = 0;
  std::vector<double> lower, upper, values;
  std::vector<int> counts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "dim") {
      ls >> dim;
    } else if (key == "lower") {
      for (double v; ls >> v;) lower.push_back(v);
    } else if (key == "upper") {
      for (double v; ls >> v;) upper.push_back(v);
    } else if (key == "counts") {
      for (int v; ls >> v;) counts.push_back(v);
    } else {
      std::istringstream vs(line);
      double v = 0.0;
      if (!(vs >> v)) throw ConfigError("grid file " + path + ": unreadable line \"" + line + "\"");
      values.push_back(v);
    }
  }
  if (dim < 1 || static_cast<int>(lower.size()) != dim) throw ConfigError("grid file " + path + ": bad header");
  JointDensity d = from_grid(std::move(lower), std::move(upper), std::move(counts), std::move(values));
  d.name = "grid:" + path;
  return d;
}

JointDensity JointDensity::leading_marginal(int l) const {
  require_box(*this);
  if (l < 1 || l > dim) throw ConfigError("leading_marginal: l out of range");
  if (l == dim) return *this;
  JointDensity m;
  m.dim = l;
  m.nodes = nodes;
  m.name = name + "[:" + std::to_string(l) + "]";
  m.lower.assign(lower.begin(), lower.begin() + l);
  m.upper.assign(upper.begin(), upper.begin() + l);
  if (factorized) {
    m.factorized = true;
    m.axis_density.assign(axis_density.begin(), axis_density.begin() + l);
  }
  if (gaussian) {
    GaussianParams g;
    g.mean.assign(gaussian->mean.begin(), gaussian->mean.begin() + l);
    for (int i = 0; i < l; ++i) {
      for (int j = 0; j < l; ++j) g.cov.push_back(gaussian->cov[static_cast<std::size_t>(i * dim + j)]);
    }
    auto eval = std::make_shared<const GaussianEval>(g);
    m.f = [eval](std::span<const double> x) { return (*eval)(x); };
    m.gaussian = std::move(g);
    return m;
  }
  auto parent = std::make_shared<const JointDensity>(*this);
  const int per_axis = thinned_nodes(nodes, dim - l);
  m.f = [parent, l, per_axis](std::span<const double> x) {
    std::vector<double> point(static_cast<std::size_t>(parent->dim), 0.0);
    std::copy(x.begin(), x.begin() + l, point.begin());
    std::vector<int> axes;
    for (int a = l; a < parent->dim; ++a) axes.push_back(a);
    const std::vector<double> lo(parent->lower.begin() + l, parent->lower.end());
    const std::vector<double> hi(parent->upper.begin() + l, parent->upper.end());
    return tensor_simpson(point, axes, lo, hi, per_axis,
                          [&](const std::vector<double>& p) { return parent->f(p); });
  };
  return m;
}

DensityCheck check_density(const JointDensity& density) {
  require_box(density);
  DensityCheck out;
  const int per_axis = thinned_nodes(density.nodes, density.dim);
  std::vector<int> axes;
  for (int a = 0; a < density.dim; ++a) axes.push_back(a);
  std::vector<double> point(static_cast<std::size_t>(density.dim), 0.0);
  out.min_value = std::numeric_limits<double>::infinity();
  out.mass = tensor_simpson(point, axes, density.lower, density.upper, per_axis, [&](const std::vector<double>& p) {
    const double v = density.f(p);
    out.min_value = std::min(out.min_value, v);
    return v;
  });
  if (!(out.min_value > 0.0)) {
    out.ok = false;
    out.message = "density is not positive on every quadrature node";
  } else if (std::abs(out.mass - 1.0) > kMassTolerance) {
    out.ok = false;
    std::ostringstream msg;
    msg << "box mass " << out.mass << " differs from 1 by more than " << kMassTolerance;
    out.message = msg.str();
  }
  return out;
}

void validate_density(const JointDensity& density) {
  const DensityCheck c = check_density(density);
  if (!c.ok) throw ConfigError(density.name + ": " + c.message);
}

double conditional_cdf(const JointDensity& density, std::span<const double> point) {
  if (static_cast<int>(point.size()) != density.dim) throw DomainError("conditional_cdf: point has the wrong dimension");
  for (int a = 0; a < density.dim; ++a) {
    const double x = point[static_cast<std::size_t>(a)];
    const double lo = density.lower[static_cast<std::size_t>(a)];
    const double hi = density.upper[static_cast<std::size_t>(a)];
    const double slack = 1e-12 * (hi - lo);
    if (!(x >= lo - slack && x <= hi + slack)) throw DomainError("conditional_cdf: point outside the box");
  }
  std::vector<double> buf(point.begin(), point.end());
  auto g = [&](double z) {
    buf[0] = z;
    return density.f(buf);
  };
  const double lo = density.lower[0];
  const double hi = density.upper[0];
  const double h = (hi - lo) / (density.nodes - 1);
  const double den = simpson(g, lo, hi, h);
  if (!(den >= kDenominatorGuard)) throw DomainError("conditional_cdf: conditional mass below 1e-300 (density support)");
  const double x = std::clamp(point[0], lo, hi);
  return std::clamp(simpson(g, lo, x, h) / den, 0.0, 1.0);
}

TransformChain TransformChain::build(const JointDensity& density) {
  require_box(density);
  if (density.factorized && static_cast<int>(density.axis_density.size()) != density.dim) {
    throw ConfigError("factorized density needs one axis density per coordinate");
  }
  TransformChain chain;
  chain.dim = density.dim;
  chain.lower = density.lower;
  chain.upper = density.upper;
  for (int l = 0; l < density.dim; ++l) {
    ChainStage stage;
    stage.coordinate = l;
    const auto ul = static_cast<std::size_t>(l);
    if (density.factorized) {
      JointDensity axis;
      axis.dim = 1;
      axis.nodes = density.nodes;
      axis.name = density.name + "#" + std::to_string(l);
      axis.lower = {density.lower[ul]};
      axis.upper = {density.upper[ul]};
      const AxisFn fl = density.axis_density[ul];
      axis.f = [fl](std::span<const double> x) { return fl(x[0]); };
      stage.density = std::move(axis);
    } else {
      const JointDensity marginal = density.leading_marginal(l + 1);
      JointDensity s;
      s.dim = l + 1;
      s.nodes = density.nodes;
      s.name = marginal.name + "|lead";
      s.lower.push_back(marginal.lower[ul]);
      s.upper.push_back(marginal.upper[ul]);
      for (int a = 0; a < l; ++a) {
        s.lower.push_back(marginal.lower[static_cast<std::size_t>(a)]);
        s.upper.push_back(marginal.upper[static_cast<std::size_t>(a)]);
      }
      const DensityFn mf = marginal.f;
      s.f = [mf, l](std::span<const double> y) {
        // y = (x_l, x_0, ..., x_{l-1}) back to natural order.
        std::vector<double> x(static_cast<std::size_t>(l + 1));
        for (int a = 0; a < l; ++a) x[static_cast<std::size_t>(a)] = y[static_cast<std::size_t>(a + 1)];
        x[static_cast<std::size_t>(l)] = y[0];
        return mf(x);
      };
      stage.density = std::move(s);
    }
    chain.stages.push_back(std::move(stage));
  }
  return chain;
}

namespace {

std::vector<double> stage_point(const ChainStage& stage, std::span<const double> x, double lead) {
  std::vector<double> p;
  p.push_back(lead);
  if (stage.density.dim > 1) {
    for (int a = 0; a < stage.coordinate; ++a) p.push_back(x[static_cast<std::size_t>(a)]);
  }
  return p;
}

}  // namespace

bool TransformChain::strictly_monotone(int grid) const {
  if (grid < 2) throw ConfigError("strictly_monotone: grid must be >= 2");
  constexpr int kPredecessorPoints = 5;
  constexpr std::size_t kMaxCombos = 256;
  for (const ChainStage& stage : stages) {
    const int l = stage.coordinate;
    const int preds = stage.density.dim > 1 ? l : 0;
    std::vector<int> idx(static_cast<std::size_t>(preds), 0);
    std::vector<double> x(static_cast<std::size_t>(dim), 0.0);
    for (std::size_t combo = 0; combo < kMaxCombos; ++combo) {
      for (int a = 0; a < preds; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const double t = (idx[ua] + 1.0) / (kPredecessorPoints + 1.0);
        x[ua] = lower[ua] + t * (upper[ua] - lower[ua]);
      }
      // F(x_j) - F(x_{j-1}) is the cell mass over the conditional mass, so
      // strict increase is positivity of every cell integral. Comparing the
      // CDF values themselves fails where they round to 1 in the far tail.
      const auto ul = static_cast<std::size_t>(l);
      std::vector<double> buf = stage_point(stage, x, lower[ul]);
      auto g = [&](double z) {
        buf[0] = z;
        return stage.density.f(buf);
      };
      const double h = (upper[ul] - lower[ul]) / (stage.density.nodes - 1);
      for (int j = 1; j < grid; ++j) {
        const double a0 = lower[ul] + (upper[ul] - lower[ul]) * (j - 1) / (grid - 1);
        const double a1 = lower[ul] + (upper[ul] - lower[ul]) * j / (grid - 1);
        if (!(simpson(g, a0, a1, h) > 0.0)) return false;
      }
      int a = 0;
      while (a < preds && ++idx[static_cast<std::size_t>(a)] == kPredecessorPoints) idx[static_cast<std::size_t>(a++)] = 0;
      if (a == preds) break;
    }
  }
  return true;
}

std::vector<double> rosenblatt(const TransformChain& chain, std::span<const double> sample) {
  if (static_cast<int>(sample.size()) != chain.dim) throw ConfigError("rosenblatt: sample has the wrong dimension");
  std::vector<double> out(sample.size());
  for (const ChainStage& stage : chain.stages) {
    out[static_cast<std::size_t>(stage.coordinate)] =
        conditional_cdf(stage.density, stage_point(stage, sample, sample[static_cast<std::size_t>(stage.coordinate)]));
  }
  return out;
}

std::vector<double> inverse_rosenblatt(const TransformChain& chain, std::span<const double> u, double tol) {
  if (static_cast<int>(u.size()) != chain.dim) throw ConfigError("inverse_rosenblatt: wrong dimension");
  std::vector<double> x(u.size(), 0.0);
  for (const ChainStage& stage : chain.stages) {
    const auto l = static_cast<std::size_t>(stage.coordinate);
    const double target = u[l];
    if (!(target >= 0.0 && target <= 1.0)) throw DomainError("inverse_rosenblatt: u outside [0, 1]");
    double lo = chain.lower[l];
    double hi = chain.upper[l];
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (conditional_cdf(stage.density, stage_point(stage, x, mid)) < target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    x[l] = 0.5 * (lo + hi);
  }
  return x;
}

std::vector<std::vector<std::vector<double>>> independentize(const JointDensity& density, int T, int N,
                                                             const std::vector<std::vector<double>>& samples,
                                                             int threads) {
  if (T < 1 || N < 1) throw ConfigError("independentize: T and N must be positive");
  if (density.dim != T * N) {
    throw ConfigError("independentize: density dimension " + std::to_string(density.dim) + " differs from T*N = " +
                      std::to_string(T * N));
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (static_cast<int>(samples[i].size()) != T * N) {
      throw ConfigError("independentize: sample " + std::to_string(i) + " has the wrong dimension");
    }
  }
  const TransformChain chain = TransformChain::build(density);
  std::vector<std::vector<std::vector<double>>> out(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    const std::vector<double> w = rosenblatt(chain, samples[i]);
    out[i].resize(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
      out[i][static_cast<std::size_t>(t)].assign(w.begin() + t * N, w.begin() + (t + 1) * N);
    }
  });
  return out;
}

std::vector<std::vector<double>> sample_gaussian(const GaussianParams& params, std::size_t n, std::uint64_t seed) {
  const auto d = static_cast<Eigen::Index>(params.mean.size());
  if (d == 0 || params.cov.size() != static_cast<std::size_t>(d * d)) throw ConfigError("sample_gaussian: bad shape");
  Eigen::MatrixXd cov(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) cov(i, j) = params.cov[static_cast<std::size_t>(i * d + j)];
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw ConfigError("sample_gaussian: covariance is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  std::vector<std::vector<double>> out(n);
  for (std::size_t s = 0; s < n; ++s) {
    CounterRng rng(seed, s);
    Eigen::VectorXd z(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double u1 = 1.0 - rng.uniform();
      const double u2 = rng.uniform();
      z(i) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    const Eigen::VectorXd x = L * z;
    out[s].resize(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) out[s][static_cast<std::size_t>(i)] = params.mean[static_cast<std::size_t>(i)] + x(i);
  }
  return out;
}

double ks_uniform_deviation(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double u = std::clamp(values[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
  }
  return d;
}

double sample_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("sample_correlation: need two equal-length samples");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

double chi_square_4x4(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size() || u.empty()) throw ConfigError("chi_square_4x4: need two equal-length samples");
  double counts[4][4] = {};
  auto bin = [](double x) { return std::clamp(static_cast<int>(std::floor(4.0 * x)), 0, 3); };
  for (std::size_t i = 0; i < u.size(); ++i) counts[bin(u[i])][bin(v[i])] += 1.0;
  const double expected = static_cast<double>(u.size()) / 16.0;
  double stat = 0.0;
  for (const auto& row : counts) {
    for (double c : row) stat += (c - expected) * (c - expected) / expected;
  }
  return stat;
}

}  // namespace cptlab
