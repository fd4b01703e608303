// Serial reference kernels against their OpenMP versions.
#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "blockrg/cluster.hpp"
#include "blockrg/flow.hpp"
#include "blockrg/gaussian_flow.hpp"
#include "blockrg/kernels.hpp"

using namespace blockrg;

namespace {

std::vector<Rule1D> grid(int dims) { return std::vector<Rule1D>(static_cast<std::size_t>(dims), gauss_legendre(5)); }

auto make_eval(int dims) {
  return [dims] {
    return [dims](const double* x) {
      double s = 0.0;
      for (int i = 0; i < dims; ++i) s += x[i] * x[i];
      return std::exp(-0.1 * s) * std::cos(x[0]);
    };
  };
}

void BM_TensorSumSerial(benchmark::State& st) {
  const int dims = static_cast<int>(st.range(0));
  const auto rules = grid(dims);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::tensor_sum_serial(rules, make_eval(dims)));
  st.SetItemsProcessed(st.iterations() * kernels::grid_size(rules));
}

void BM_TensorSumParallel(benchmark::State& st) {
  const int dims = static_cast<int>(st.range(0));
  const auto rules = grid(dims);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::tensor_sum_parallel(rules, make_eval(dims)));
  st.SetItemsProcessed(st.iterations() * kernels::grid_size(rules));
}

struct BlockTable {
  Matrix G;
  std::vector<std::vector<Index>> blocks;
  explicit BlockTable(Index unit_side) {
    GaussParams p;
    GaussianLevel g(TorusLattice(1, 3, -1, 3 * unit_side), p);
    G = g.G();
    for (Index b = 0; b < g.unit().size(); ++b) blocks.push_back(g.Qk().sites_of(b));
  }
};

void BM_BlockNormSerial(benchmark::State& st) {
  BlockTable t(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::block_norm_table_serial(t.G, t.blocks, t.blocks));
}

void BM_BlockNormParallel(benchmark::State& st) {
  BlockTable t(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::block_norm_table_parallel(t.G, t.blocks, t.blocks));
}

ClusterInstance chain_instance(int cells) {
  ClusterInstance inst;
  for (int c = 0; c < cells; ++c) inst.cell_sites.push_back({2 * c, 2 * c + 1});
  inst.n_sites = 2 * cells;
  inst.measure = UltralocalMeasure::truncated_gaussian(3, 3.0);
  for (int c = 0; c + 1 < cells; ++c) {
    const CellMask m = (CellMask{3}) << c;
    const std::vector<int> sites = inst.sites_of(m);
    inst.polymers.push_back({m, [sites](const double* W) {
                               double s = 0.0;
                               for (int x : sites) s += W[x] * W[x];
                               return 0.01 * s;
                             }});
  }
  return inst;
}

void BM_ClusterIntegrate(benchmark::State& st) {
  const ClusterInstance inst = chain_instance(5);
  const auto K = mayer_amplitudes(inst);
  const bool parallel = st.range(0) != 0;
  for (auto _ : st) benchmark::DoNotOptimize(integrate_amplitudes(inst, K, {}, parallel));
}

void BM_FlowApplyT(benchmark::State& st) {
  FlowParams p;
  p.K = 200;
  const StepMaps m = surrogate_maps(SurrogateParams{});
  const FlowSequence s = FlowSequence::zero(p, m.n_E);
  const bool parallel = st.range(0) != 0;
  for (auto _ : st) benchmark::DoNotOptimize(apply_T(s, m, p, parallel));
}

}  // namespace

BENCHMARK(BM_TensorSumSerial)->Arg(4)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TensorSumParallel)->Arg(4)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BlockNormSerial)->Arg(27)->Arg(81)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BlockNormParallel)->Arg(27)->Arg(81)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClusterIntegrate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FlowApplyT)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
