#include "cptlab_cli/app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cptlab/dual.hpp"
#include "cptlab/gate.hpp"
#include "cptlab/innovations.hpp"
#include "cptlab/lemmas.hpp"
#include "cptlab/optimize.hpp"
#include "cptlab_cli/schema.hpp"

#ifndef CPTLAB_VERSION
#define CPTLAB_VERSION "unknown"
#endif

namespace cptlab::cli {

namespace fs = std::filesystem;

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"gate",     "construct-q", "na-check", "evaluate",
                                                 "optimize", "probe",       "lemmas",   "rosenblatt"};
  return names;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// json cannot hold inf/nan; encode them as strings.
json num(double v) {
  if (std::isfinite(v)) return v;
  return fmt(v);
}

json nums(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(num(x));
  return out;
}

class Summary {
 public:
  void row(const std::string& key, const std::string& value) { rows_.emplace_back(key, value); }
  void row(const std::string& key, double value) { row(key, fmt(value)); }
  void row(const std::string& key, bool value) { row(key, std::string(value ? "yes" : "no")); }

  std::string str(const std::string& title) const {
    std::size_t width = 0;
    for (const auto& [k, v] : rows_) width = std::max(width, k.size());
    std::ostringstream out;
    out << title << "\n";
    for (const auto& [k, v] : rows_) out << "  " << std::left << std::setw(static_cast<int>(width) + 2) << k << v << "\n";
    return out.str();
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

ScenarioTree tree_from(Fields& f) { return parse_tree(f.raw("tree"), f.path() + ".tree"); }

json certificate_json(const NaCertificate& cert) {
  json nodes = json::array();
  for (const NodeCertificate& n : cert.nodes) {
    nodes.push_back({{"node", n.node}, {"kappa", num(n.kappa)}, {"beta", num(n.beta)}, {"worst_direction", nums(n.worst_direction)}});
  }
  json out{{"passed", cert.passed}, {"exact", cert.exact}, {"nodes", nodes}};
  if (cert.failure) {
    out["failure"] = {{"node", cert.failure->node}, {"direction", nums(cert.failure->direction)}, {"reason", cert.failure->reason}};
  } else {
    out["failure"] = nullptr;
  }
  return out;
}

json density_json(const ScenarioTree& tree, const MartingaleDensity& q) {
  json leaves = json::array();
  const auto ids = tree.leaves();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    leaves.push_back({{"node", ids[i]}, {"p", num(q.leaf_p[i])}, {"rho", num(q.rho[i])}, {"q", num(q.leaf_p[i] * q.rho[i])}});
  }
  return json{{"q_branch", nums(q.q_branch)},
              {"leaves", leaves},
              {"rho_t", nums(q.rho_t)},
              {"phi_star", strategy_to_json(tree, q.phi_star)},
              {"min_rho", num(q.min_rho())},
              {"max_rho", num(q.max_rho())},
              {"martingale_residual", num(verify_martingale(tree, q))},
              {"iterations", q.trace.iterations},
              {"gradient_norms", nums(q.trace.gradient_norms)},
              {"converged", q.trace.converged}};
}

Outcome cmd_gate(Fields& f) {
  const double alpha = f.number("alpha");
  const double beta = f.number("beta");
  const double gamma = f.number("gamma");
  const double delta = f.number("delta");
  BenchmarkMode mode = BenchmarkMode::Ba;
  try {
    mode = parse_benchmark_mode(f.string("benchmark_mode", "Ba"));
  } catch (const ConfigError& e) {
    throw SchemaError(f.path() + ".benchmark_mode", e.what());
  }
  f.finish();
  for (double v : {alpha, beta, gamma, delta}) {
    if (!(v > 0.0)) throw SchemaError(f.path(), "alpha, beta, gamma, delta must be positive");
  }
  const ParameterVerdict v = classify(alpha, beta, gamma, delta, mode);
  Outcome out;
  out.result = {{"verdict", std::string(to_string(v.tag))},
                {"witness", v.witness},
                {"assumption_a", v.assumption_a},
                {"assumption_b", v.assumption_b},
                {"necessary", v.necessary},
                {"both_hold", v.both_hold},
                {"benchmark_mode", std::string(to_string(mode))},
                {"benchmark_compatible", v.benchmark_compatible},
                {"required_benchmark", v.required_benchmark ? json(std::string(to_string(*v.required_benchmark))) : json(nullptr)}};
  Summary s;
  s.row("verdict", std::string(to_string(v.tag)));
  s.row("witness", v.witness);
  s.row("assumption A", v.assumption_a);
  s.row("assumption B", v.assumption_b);
  s.row("benchmark compatible", v.benchmark_compatible);
  out.summary = s.str("gate");
  return out;
}

ConstructQOptions q_options(Fields& f) {
  ConstructQOptions o;
  o.tol = f.number("tol", o.tol);
  o.max_iter = static_cast<int>(f.integer("max_iter", o.max_iter));
  o.direction_grid = static_cast<int>(f.integer("direction_grid", o.direction_grid));
  if (!(o.tol > 0.0)) throw SchemaError(f.path() + ".tol", "must be positive");
  if (o.max_iter < 1) throw SchemaError(f.path() + ".max_iter", "must be >= 1");
  if (o.direction_grid < 4) throw SchemaError(f.path() + ".direction_grid", "must be >= 4");
  return o;
}

Outcome cmd_construct_q(Fields& f) {
  const ScenarioTree tree = tree_from(f);
  const ConstructQOptions o = q_options(f);
  f.finish();
  const MartingaleDensity q = construct_q(tree, o);
  Outcome out;
  out.result = density_json(tree, q);
  CsvTable leaves{{"leaf", "node", "p", "rho", "q"}, {}};
  const auto ids = tree.leaves();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    leaves.rows.push_back({std::to_string(i), std::to_string(ids[i]), fmt(q.leaf_p[i]), fmt(q.rho[i]), fmt(q.leaf_p[i] * q.rho[i])});
  }
  out.csv["leaves.csv"] = std::move(leaves);
  CsvTable trace{{"iteration", "gradient_norm"}, {}};
  for (std::size_t i = 0; i < q.trace.gradient_norms.size(); ++i) {
    trace.rows.push_back({std::to_string(i), fmt(q.trace.gradient_norms[i])});
  }
  out.csv["newton_trace.csv"] = std::move(trace);
  Summary s;
  s.row("leaves", std::to_string(ids.size()));
  s.row("iterations", std::to_string(q.trace.iterations));
  s.row("martingale residual", verify_martingale(tree, q));
  s.row("min rho", q.min_rho());
  s.row("max rho", q.max_rho());
  if (tree.horizon() == 1 && tree.node(0).children.size() == 2) s.row("Q(first branch)", q.q_branch[static_cast<std::size_t>(tree.node(0).children[0])]);
  out.summary = s.str("construct-q");
  return out;
}

Outcome cmd_na_check(Fields& f) {
  const ScenarioTree tree = tree_from(f);
  const int grid = static_cast<int>(f.integer("direction_grid", 64));
  const double beta_min = f.number("beta_min", 1e-6);
  f.finish();
  if (grid < 4) throw SchemaError(f.path() + ".direction_grid", "must be >= 4");
  if (!(beta_min > 0.0 && beta_min < 1.0)) throw SchemaError(f.path() + ".beta_min", "must lie in (0, 1)");
  const NaCertificate cert = check_robust_na(tree, grid, beta_min);
  Outcome out;
  out.result = certificate_json(cert);
  CsvTable t{{"node", "kappa", "beta"}, {}};
  for (const NodeCertificate& n : cert.nodes) t.rows.push_back({std::to_string(n.node), fmt(n.kappa), fmt(n.beta)});
  out.csv["certificate.csv"] = std::move(t);
  Summary s;
  s.row("passed", cert.passed);
  s.row("exact", cert.exact);
  if (cert.failure) {
    s.row("failing node", std::to_string(cert.failure->node));
    s.row("reason", cert.failure->reason);
  } else if (!cert.nodes.empty()) {
    double kmin = cert.nodes.front().kappa;
    double bmin = cert.nodes.front().beta;
    for (const NodeCertificate& n : cert.nodes) {
      kmin = std::min(kmin, n.kappa);
      bmin = std::min(bmin, n.beta);
    }
    s.row("min kappa", kmin);
    s.row("min beta", bmin);
  }
  out.summary = s.str("na-check");
  return out;
}

Outcome cmd_evaluate(Fields& f) {
  const ScenarioTree tree = tree_from(f);
  const CptSpec spec = parse_spec(f.raw("spec"), f.path() + ".spec");
  const double z = f.number("z");
  const Strategy theta = parse_strategy(f.raw("theta"), tree, f.path() + ".theta");
  f.finish();
  const Evaluation e = evaluate_strategy(tree, spec, z, theta);
  const WealthProcess w = wealth(tree, z, theta);
  Outcome out;
  out.result = {{"v", num(e.v)}, {"v_plus", num(e.v_plus)}, {"v_minus", num(e.v_minus)}, {"spec", spec.name}};
  CsvTable t{{"leaf", "node", "p", "wealth", "benchmark", "net"}, {}};
  const auto ids = tree.leaves();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double x = w.values[static_cast<std::size_t>(ids[i])];
    const double b = tree.node(ids[i]).benchmark;
    t.rows.push_back({std::to_string(i), std::to_string(ids[i]), fmt(tree.path_probability(ids[i])), fmt(x), fmt(b), fmt(x - b)});
  }
  out.csv["terminal.csv"] = std::move(t);
  Summary s;
  s.row("V", e.v);
  s.row("V+", e.v_plus);
  s.row("V-", e.v_minus);
  out.summary = s.str("evaluate");
  return out;
}

Outcome cmd_optimize(Fields& f, std::uint64_t seed, int threads) {
  const ScenarioTree tree = tree_from(f);
  const CptSpec spec = parse_spec(f.raw("spec"), f.path() + ".spec");
  const double z = f.number("z");
  OptimizeConfig config = f.has("optimize") ? parse_optimize_config(f.raw("optimize"), f.path() + ".optimize") : OptimizeConfig{};
  const bool with_density = f.boolean("diagnostics", true);
  f.finish();
  config.seed = seed;
  config.threads = threads;
  std::optional<MartingaleDensity> q;
  if (with_density) q = construct_q(tree, ConstructQOptions{1e-10, 500, config.direction_grid});
  const OptimizeResult r = maximize_cpt(tree, spec, z, config, q ? &*q : nullptr);

  Outcome out;
  out.result = {{"theta_star", strategy_to_json(tree, r.theta_star)},
                {"v_star", num(r.v_star)},
                {"v_plus", num(r.v_plus)},
                {"v_minus", num(r.v_minus)},
                {"winner_start", r.winner_start},
                {"evaluations", r.evaluations},
                {"converged", r.converged},
                {"accepted_iterates", r.trace.size()},
                {"sup_v_minus", num(r.sup_v_minus)},
                {"max_eq_theta_half", nums(r.max_eq_theta_half)},
                {"holding_bounds_ok", r.holding_bounds_ok},
                {"increment_bounds_ok", r.increment_bounds_ok},
                {"global_optimality_claimed", false},
                {"strategy_class", "deterministic predictable (no randomization)"}};
  CsvTable t{{"start", "iteration", "evaluations", "step", "v", "v_plus", "v_minus", "best_so_far", "eq_theta_half",
              "holding_ok", "increment_bound_ok"},
             {}};
  for (const IterateRecord& rec : r.trace) {
    std::string half;
    for (std::size_t i = 0; i < rec.eq_theta_half.size(); ++i) half += (i ? ";" : "") + fmt(rec.eq_theta_half[i]);
    t.rows.push_back({std::to_string(rec.start), std::to_string(rec.iteration), std::to_string(rec.evaluations),
                      fmt(rec.step), fmt(rec.v), fmt(rec.v_plus), fmt(rec.v_minus), fmt(rec.best_so_far), half,
                      rec.holding_ok ? "1" : "0", rec.increment_bound_ok ? "1" : "0"});
  }
  out.csv["trace.csv"] = std::move(t);
  Summary s;
  s.row("V*", r.v_star);
  s.row("V+ / V-", fmt(r.v_plus) + " / " + fmt(r.v_minus));
  s.row("winner start", std::to_string(r.winner_start));
  s.row("evaluations", std::to_string(r.evaluations));
  s.row("converged", r.converged);
  s.row("sup V- over iterates", r.sup_v_minus);
  if (q) {
    s.row("holding bounds hold", r.holding_bounds_ok);
    s.row("gain bounds hold", r.increment_bounds_ok);
  }
  s.row("note", std::string("local search; no global optimality claim"));
  out.summary = s.str("optimize");
  if (!r.converged) out.exit_code = kExitNonConvergence;
  return out;
}

Outcome cmd_probe(Fields& f, std::uint64_t seed, int threads) {
  const ScenarioTree tree = tree_from(f);
  const CptSpec spec = parse_spec(f.raw("spec"), f.path() + ".spec");
  const double z = f.number("z", 0.0);
  int k_min = 0;
  int k_max = 60;
  double base = 2.0;
  if (f.has("lambdas")) {
    Fields l = f.object("lambdas");
    k_min = static_cast<int>(l.integer("k_min", k_min));
    k_max = static_cast<int>(l.integer("k_max", k_max));
    base = l.number("base", base);
    l.finish();
    if (k_max <= k_min) throw SchemaError(l.path(), "k_max must exceed k_min");
    if (!(base > 1.0)) throw SchemaError(l.path() + ".base", "must exceed 1");
  }
  const int random_count = static_cast<int>(f.integer("random_directions", 8));
  ProbeOptions opts;
  opts.divergence_threshold = f.number("threshold", opts.divergence_threshold);
  opts.window = static_cast<int>(f.integer("window", opts.window));
  f.finish();
  if (random_count < 0) throw SchemaError(f.path() + ".random_directions", "must be >= 0");
  if (opts.window < 1) throw SchemaError(f.path() + ".window", "must be >= 1");

  const RayProbeReport rep =
      ray_probe(tree, spec, z, default_directions(tree, seed, random_count), geometric_lambdas(k_min, k_max, base), opts, threads);
  const ParameterVerdict verdict = classify(spec.alpha, spec.beta, spec.gamma, spec.delta);
  Outcome out;
  json rays = json::array();
  CsvTable t{{"direction", "lambda", "v_plus", "v_minus", "v", "log_v_plus", "log_v_minus", "log_abs_v", "sign"}, {}};
  for (const RayResult& r : rep.rays) {
    rays.push_back({{"direction", r.direction_id},
                    {"slope_plus", num(r.slope_plus)},
                    {"slope_minus", num(r.slope_minus)},
                    {"net_slope", num(r.net_slope)},
                    {"divergent", r.divergent},
                    {"bounded", r.bounded}});
    for (const ProbePoint& p : r.points) {
      t.rows.push_back({std::to_string(r.direction_id), fmt(p.lambda), fmt(p.v_plus), fmt(p.v_minus), fmt(p.v),
                        fmt(p.log_v_plus), fmt(p.log_v_minus), fmt(p.log_abs_v), std::to_string(p.sign)});
    }
  }
  out.result = {{"rays", rays},
                {"any_divergent", rep.any_divergent},
                {"certified_bounded", rep.certified_bounded},
                {"classification", std::string(to_string(verdict.tag))}};
  out.csv["probe.csv"] = std::move(t);
  Summary s;
  s.row("rays", std::to_string(rep.rays.size()));
  s.row("any divergent", rep.any_divergent);
  s.row("all eventually nonincreasing", rep.certified_bounded);
  s.row("classification", std::string(to_string(verdict.tag)));
  for (const RayResult& r : rep.rays) {
    s.row("ray " + std::to_string(r.direction_id), "net slope " + fmt(r.net_slope) + (r.divergent ? "  DIVERGENT" : ""));
  }
  out.summary = s.str("probe");
  return out;
}

Outcome cmd_lemmas(Fields& f, std::uint64_t seed, int threads) {
  const std::string lemma = f.string("lemma");
  StressFamily fam = f.has("family") ? parse_family(f.raw("family"), f.path() + ".family") : StressFamily{};
  fam.seed = seed;
  InequalityReport rep;
  if (lemma == "suti" || lemma == "moz2") {
    const double a = f.number("a");
    const double b = f.number("b");
    const double s = f.number("s");
    f.finish();
    rep = lemma == "suti" ? check_suti(fam, a, b, s, threads) : check_moz2(fam, a, b, s, threads);
  } else if (lemma == "moz1") {
    const ScenarioTree tree = tree_from(f);
    const double alpha = f.number("alpha");
    const double beta = f.number("beta");
    const double gamma = f.number("gamma");
    const double delta = f.number("delta");
    const double m = f.number("m", 0.0);
    f.finish();
    const MartingaleDensity q = construct_q(tree);
    rep = check_moz1(fam, q, alpha, beta, gamma, delta, m, threads);
  } else {
    throw SchemaError(f.path() + ".lemma", "expected suti, moz1 or moz2");
  }
  Outcome out;
  out.result = {{"lemma", rep.lemma},
                {"members", fam.count},
                {"scales", nums(rep.scales)},
                {"max_ratio_by_scale", nums(rep.max_ratio_by_scale)},
                {"max_ratio", num(rep.max_ratio)},
                {"intercept", num(rep.intercept)},
                {"trend_slope", num(rep.trend_slope)},
                {"nonincreasing_trend", rep.nonincreasing_trend},
                {"exponent", rep.exponent ? num(*rep.exponent) : json(nullptr)},
                {"exponent_residual", num(rep.exponent_residual)},
                {"inconclusive", rep.inconclusive},
                {"brute_crosscheck_error", num(rep.brute_crosscheck_error)},
                {"brute_crosscheck_ok", rep.brute_crosscheck_ok},
                {"passed", rep.passed}};
  if (rep.lemma == "moz1") out.result["eta_interval"] = {num(rep.exponent_lower), num(rep.exponent_upper)};
  CsvTable t{{"member", "scale", "lhs", "rhs", "ratio"}, {}};
  for (const MemberRow& r : rep.rows) t.rows.push_back({std::to_string(r.member), fmt(r.scale), fmt(r.lhs), fmt(r.rhs), fmt(r.ratio)});
  out.csv["members.csv"] = std::move(t);
  Summary s;
  s.row("lemma", rep.lemma);
  s.row("empirical constant", rep.max_ratio);
  if (rep.exponent) s.row(rep.lemma == "moz1" ? "eta" : "zeta", *rep.exponent);
  if (rep.lemma == "moz1") s.row("L1", rep.intercept);
  s.row("trend slope", rep.trend_slope);
  s.row("inconclusive", rep.inconclusive);
  s.row("passed", rep.passed);
  out.summary = s.str("lemmas");
  return out;
}

std::vector<std::vector<double>> read_samples(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) throw SchemaError("config.samples_file", "cannot open " + path);
  std::vector<std::vector<double>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::vector<double> row;
    for (double v; ls >> v;) row.push_back(v);
    if (static_cast<int>(row.size()) != dim) {
      throw SchemaError("config.samples_file", "row " + std::to_string(out.size()) + " has " + std::to_string(row.size()) +
                                                   " values, expected " + std::to_string(dim));
    }
    out.push_back(std::move(row));
  }
  return out;
}

Outcome cmd_rosenblatt(Fields& f, std::uint64_t seed, int threads) {
  const JointDensity density = parse_density(f.raw("density"), f.path() + ".density");
  int T = density.dim;
  int N = 1;
  if (f.has("blocks")) {
    Fields b = f.object("blocks");
    T = static_cast<int>(b.integer("T"));
    N = static_cast<int>(b.integer("N"));
    b.finish();
  }
  std::vector<std::vector<double>> samples;
  if (f.has("samples_file")) {
    samples = read_samples(f.string("samples_file"), density.dim);
  } else {
    const std::int64_t n = f.integer("samples", 10000);
    if (n < 2) throw SchemaError(f.path() + ".samples", "must be >= 2");
    if (!density.gaussian) throw SchemaError(f.path() + ".samples", "only Gaussian presets can be sampled; supply samples_file");
    samples = sample_gaussian(*density.gaussian, static_cast<std::size_t>(n), seed);
  }
  f.finish();
  if (T * N != density.dim) throw SchemaError(f.path() + ".blocks", "T * N must equal the density dimension");
  const DensityCheck check = check_density(density);
  if (!check.ok) throw SchemaError(f.path() + ".density", check.message);

  const auto blocks = independentize(density, T, N, samples, threads);
  const TransformChain chain = TransformChain::build(density);
  const auto dim = static_cast<std::size_t>(density.dim);
  std::vector<std::vector<double>> coords(dim, std::vector<double>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (int t = 0; t < T; ++t) {
      for (int n = 0; n < N; ++n) coords[static_cast<std::size_t>(t * N + n)][i] = blocks[i][static_cast<std::size_t>(t)][static_cast<std::size_t>(n)];
    }
  }
  std::vector<double> ks;
  for (const auto& c : coords) ks.push_back(ks_uniform_deviation(c));
  json pairs = json::array();
  double max_corr = 0.0;
  double max_chi = 0.0;
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = a + 1; b < dim; ++b) {
      const double r = sample_correlation(coords[a], coords[b]);
      const double chi = chi_square_4x4(coords[a], coords[b]);
      max_corr = std::max(max_corr, std::abs(r));
      max_chi = std::max(max_chi, chi);
      pairs.push_back({{"i", a}, {"j", b}, {"correlation", num(r)}, {"chi_square", num(chi)}});
    }
  }
  const bool monotone = chain.strictly_monotone();
  const double max_ks = ks.empty() ? 0.0 : *std::max_element(ks.begin(), ks.end());
  Outcome out;
  out.result = {{"density", density.name},
                {"samples", samples.size()},
                {"box_mass", num(check.mass)},
                {"ks_deviation", nums(ks)},
                {"pairs", pairs},
                {"max_abs_correlation", num(max_corr)},
                {"max_chi_square", num(max_chi)},
                {"chi_square_critical", kChiSquare4x4Critical},
                {"strictly_monotone", monotone},
                {"uniformity_ok", max_ks < 0.02},
                {"independence_ok", max_corr < 0.05 && max_chi < kChiSquare4x4Critical},
                {"blocks", {{"T", T}, {"N", N}}}};
  CsvTable t;
  t.header.push_back("sample");
  for (int tt = 0; tt < T; ++tt) {
    for (int n = 0; n < N; ++n) t.header.push_back("z" + std::to_string(tt + 1) + "_" + std::to_string(n + 1));
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (std::size_t c = 0; c < dim; ++c) row.push_back(fmt(coords[c][i]));
    t.rows.push_back(std::move(row));
  }
  out.csv["innovations.csv"] = std::move(t);
  Summary s;
  s.row("density", density.name);
  s.row("samples", std::to_string(samples.size()));
  s.row("box mass", check.mass);
  s.row("max KS deviation", max_ks);
  s.row("max |correlation|", max_corr);
  s.row("max chi-square", max_chi);
  s.row("stages strictly increasing", monotone);
  out.summary = s.str("rosenblatt");
  return out;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_csv(const fs::path& path, const CsvTable& table) {
  std::ofstream out(path);
  for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
  if (!out) throw Error("failed to write " + path.string());
}

}  // namespace

Outcome execute(const std::string& subcommand, const json& config, std::uint64_t seed, int threads) {
  Fields f(config, "config");
  f.integer("seed", 0);  // consumed here; the effective seed is passed in
  if (subcommand == "gate") return cmd_gate(f);
  if (subcommand == "construct-q") return cmd_construct_q(f);
  if (subcommand == "na-check") return cmd_na_check(f);
  if (subcommand == "evaluate") return cmd_evaluate(f);
  if (subcommand == "optimize") return cmd_optimize(f, seed, threads);
  if (subcommand == "probe") return cmd_probe(f, seed, threads);
  if (subcommand == "lemmas") return cmd_lemmas(f, seed, threads);
  if (subcommand == "rosenblatt") return cmd_rosenblatt(f, seed, threads);
  throw SchemaError("subcommand", "unknown subcommand " + subcommand);
}

std::string run_id(const std::string& subcommand, const json& config, std::uint64_t seed) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(subcommand + "\n" + config.dump() + "\n" + std::to_string(seed))));
  return buf;
}

RunReport run(const std::string& subcommand, const std::string& config_path, const RunOptions& options) {
  RunReport report;
  if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end()) {
    report.exit_code = kExitUsage;
    report.message = "unknown subcommand: " + subcommand;
    return report;
  }
  json config;
  std::uint64_t seed = 0;
  Outcome outcome;
  try {
    std::ifstream in(config_path);
    if (!in) throw SchemaError(config_path, "cannot open config file");
    try {
      config = json::parse(in);
    } catch (const json::parse_error& e) {
      throw SchemaError(config_path, std::string("malformed JSON: ") + e.what());
    }
    if (!config.is_object()) throw SchemaError("config", "expected a JSON object");
    if (config.contains("seed")) {
      if (!config["seed"].is_number_unsigned()) throw SchemaError("config.seed", "expected a non-negative integer");
      seed = config["seed"].get<std::uint64_t>();
    }
    if (options.seed) seed = *options.seed;
    outcome = execute(subcommand, config, seed, options.threads);
  } catch (const ConvergenceError& e) {
    report.exit_code = kExitNonConvergence;
    report.message = e.what();
    return report;
  } catch (const Error& e) {
    report.exit_code = kExitValidation;
    report.message = e.what();
    return report;
  }

  const std::string id = run_id(subcommand, config, seed);
  const fs::path dir = fs::path(options.out_dir) / id;
  fs::create_directories(dir);
  std::vector<std::string> files = {"manifest.json", "result.json"};
  for (const auto& [name, table] : outcome.csv) {
    write_csv(dir / name, table);
    files.push_back(name);
  }
  {
    std::ofstream out(dir / "result.json");
    out << outcome.result.dump(2) << "\n";
  }
  const json manifest = {{"run_id", id},
                         {"timestamp", utc_timestamp()},
                         {"subcommand", subcommand},
                         {"seed", seed},
                         {"threads", options.threads},
                         {"config", config},
                         {"versions", {{"cptlab", CPTLAB_VERSION}, {"nlohmann_json", "3.11.3"}}},
                         {"outputs", files},
                         {"exit_code", outcome.exit_code}};
  {
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << "\n";
  }
  std::cout << outcome.summary << "  run directory  " << dir.string() << "\n";
  report.exit_code = outcome.exit_code;
  report.run_dir = dir.string();
  return report;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"cptlab: behavioural portfolio tools on finite scenario trees"};
  app.require_subcommand(1);
  app.fallthrough();
  std::int64_t seed = -1;
  RunOptions options;
  app.add_option("--seed", seed, "64-bit seed overriding the config's \"seed\"")->check(CLI::NonNegativeNumber);
  app.add_option("--out-dir", options.out_dir, "directory receiving run directories")->capture_default_str();
  app.add_option("--threads", options.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  std::string config_path;
  for (const std::string& name : subcommands()) {
    CLI::App* sub = app.add_subcommand(name, "run " + name + " on a JSON config");
    sub->add_option("config", config_path, "JSON config path")->required();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (seed >= 0) options.seed = static_cast<std::uint64_t>(seed);
  const std::string name = app.get_subcommands().front()->get_name();
  const RunReport report = run(name, config_path, options);
  if (!report.message.empty()) std::cerr << "cptlab " << name << ": " << report.message << "\n";
  return report.exit_code;
}

}  // namespace cptlab::cli
