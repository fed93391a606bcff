#include <benchmark/benchmark.h>

#include "cptlab/cpt.hpp"
#include "cptlab/dual.hpp"
#include "cptlab/gate.hpp"
#include "cptlab/innovations.hpp"
#include "fixtures.hpp"

using namespace cptlab;

static void BM_ChoquetValue(benchmark::State& state) {
  const auto d = testing::random_law(1, static_cast<int>(state.range(0)), -10.0, 10.0);
  const CptSpec spec = CptSpec::preset("tk92");
  for (auto _ : state) benchmark::DoNotOptimize(cpt_value(d, spec));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ChoquetValue)->RangeMultiplier(4)->Range(4, 4096)->Complexity();

static void BM_LogParts(benchmark::State& state) {
  const auto d = testing::random_law(2, 256, -10.0, 10.0);
  const CptSpec spec = CptSpec::power_family(0.5, 0.9, 0.6, 0.8);
  for (auto _ : state) benchmark::DoNotOptimize(log_cpt_parts(d, spec));
}
BENCHMARK(BM_LogParts);

static void BM_ConstructQ(benchmark::State& state) {
  const ScenarioTree tree = testing::random_na_tree(3, static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(construct_q(tree).rho.data());
  state.counters["leaves"] = static_cast<double>(tree.leaves().size());
}
BENCHMARK(BM_ConstructQ)->DenseRange(1, 4)->Unit(benchmark::kMillisecond);

static void BM_RayProbe(benchmark::State& state) {
  const ScenarioTree tree = testing::reference_binomial(static_cast<int>(state.range(0)));
  const CptSpec spec = CptSpec::power_family(0.9, 0.8, 0.6, 0.8);
  const auto dirs = default_directions(tree, 1);
  const auto lambdas = geometric_lambdas();
  for (auto _ : state) benchmark::DoNotOptimize(ray_probe(tree, spec, 0.0, dirs, lambdas).any_divergent);
}
BENCHMARK(BM_RayProbe)->DenseRange(1, 5)->Unit(benchmark::kMillisecond);

static void BM_Rosenblatt(benchmark::State& state) {
  const GaussianParams g{{0.0, 0.0}, {1.0, 0.6, 0.6, 1.0}};
  JointDensity d = JointDensity::correlated_normal(g.mean, g.cov);
  d.nodes = static_cast<int>(state.range(0));
  const TransformChain chain = TransformChain::build(d);
  const double x[] = {0.3, -0.4};
  for (auto _ : state) benchmark::DoNotOptimize(rosenblatt(chain, x).data());
}
BENCHMARK(BM_Rosenblatt)->Arg(129)->Arg(513)->Arg(2049);
BENCHMARK_MAIN();
