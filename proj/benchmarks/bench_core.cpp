#include <benchmark/benchmark.h>

#include "drsr/consensus.hpp"
#include "drsr/dataset.hpp"
#include "drsr/local_solvers.hpp"
#include "drsr/matops.hpp"
#include "generators.hpp"

namespace {

using namespace drsr;

void BM_LyapunovFreshCoefficient(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  testing::Rng rng(1);
  const SymMatrix x = testing::random_spd(rng, dim, 1e3);
  const SymMatrix b = testing::random_symmetric(rng, dim);
  for (auto _ : state) benchmark::DoNotOptimize(solve_lyapunov(x, b));
  state.SetComplexityN(dim);
}
BENCHMARK(BM_LyapunovFreshCoefficient)->RangeMultiplier(2)->Range(8, 128)->Complexity(benchmark::oNCubed);

// Reusing the eigendecomposition leaves two basis changes per solve.
void BM_LyapunovReusedCoefficient(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  testing::Rng rng(2);
  const LyapunovSolver solver(testing::random_spd(rng, dim, 1e3));
  const SymMatrix a = testing::random_traceless(rng, dim);
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve_trace_one(a));
}
BENCHMARK(BM_LyapunovReusedCoefficient)->RangeMultiplier(2)->Range(8, 128);

SyntheticData desk_data(int nodes, int dim) {
  SyntheticConfig cfg;
  cfg.nodes = nodes;
  cfg.inliers = 20 * nodes;
  cfg.outliers = 200 * nodes;
  cfg.ambient_dim = dim;
  cfg.sigma = 0.1;
  cfg.seed = 3;
  return generate_synthetic(cfg);
}

void BM_GmsLocalSolve(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const LocalDataset data(desk_data(1, dim).data.blocks.front());
  GmsParams params;
  params.t_gms = 30;
  for (auto _ : state) benchmark::DoNotOptimize(gms_local_solve(data, SymMatrix::zero(dim), params));
}
BENCHMARK(BM_GmsLocalSolve)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

// Ten supersteps of CBGA-GMS on ten nodes; range(1) is the worker count.
void BM_CbgaSupersteps(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const SyntheticData s = desk_data(10, dim);
  const std::vector<LocalDataset> datasets = to_local_datasets(s.data);
  const NetworkGraph graph = canned_topology(TopologyKind::kPaperRandom, 10, 3);
  ConsensusConfig cfg;
  cfg.step_size = practical_step_size(datasets, graph, 1, 1e-10);
  cfg.t_outer = 10;
  cfg.workers = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(cbga_gms_run(datasets, graph, cfg, GmsParams{}));
  state.counters["supersteps/s"] =
      benchmark::Counter(static_cast<double>(cfg.t_outer), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_CbgaSupersteps)->Args({20, 1})->Args({20, 4})->Args({50, 1})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
