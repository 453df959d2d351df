// Serial reference vs OpenMP path for the parallel kernels.

#include <benchmark/benchmark.h>

#include "rwspatial/gaussian_model.hpp"
#include "rwspatial/ident.hpp"
#include "rwspatial/io.hpp"
#include "rwspatial/popsim.hpp"

using namespace rwspatial;

namespace {

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::Serial : Execution::Parallel;
}

void label(benchmark::State& state) { state.SetLabel(state.range(0) == 0 ? "serial" : "parallel"); }

void BM_ConvergenceGap(benchmark::State& state) {
  const GeneratorMatrix q(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 0, 1.0}});
  const DemographyRates demo{Eigen::Vector4d(1.0, 0.5, 0.0, 0.5), Eigen::Vector4d::Constant(0.5)};
  ConvergenceOptions opt;
  opt.execution = mode(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(convergence_gap(q, demo, Eigen::Vector4d::Ones(), 2.0, {100, 1000}, 16, 1, opt));
  }
  label(state);
}

void BM_SearchConfounder(benchmark::State& state) {
  const GeneratorMatrix q(5, {{0, 1, 1.0}, {1, 2, 0.5}, {2, 3, 2.0}, {3, 4, 1.0}, {4, 0, 1.5}, {2, 0, 0.7}});
  ConfounderSearchOptions opt;
  opt.trials = 16;
  opt.seed = 1;
  opt.execution = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(search_confounder(q, opt));
  label(state);
}

void BM_GaussianChains(benchmark::State& state) {
  const ColumbusData data = columbus_fixture();
  const GaussianModel model({data.crime, data.home_values, GaussianVariant::SpatialRandomEffect, data.graph,
                             RateParams{}, true, PriorSpec{}});
  McmcConfig cfg;
  cfg.iterations = 2000;
  cfg.burn_in = 500;
  cfg.seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(fit_gaussian_chains(model, cfg, 4, mode(state)));
  label(state);
}

}  // namespace

BENCHMARK(BM_ConvergenceGap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SearchConfounder)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GaussianChains)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
