#include <random>

#include <benchmark/benchmark.h>

#include "structmap/sampler.hpp"
#include "structmap/structeval.hpp"
#include "structmap/sylinear.hpp"
#include "structmap/synthgen.hpp"

using namespace structmap;

namespace {

Eigen::MatrixXd gaussian(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

std::vector<std::int64_t> distinct_groups(int b) {
  std::vector<std::int64_t> g(static_cast<std::size_t>(b));
  for (int i = 0; i < b; ++i) g[static_cast<std::size_t>(i)] = i % (b / 2);
  return g;
}

const Dataset& synth() {
  static const Dataset d = [] {
    SynthConfig c;
    c.n_groups = 500;
    return generate_synthetic(c);
  }();
  return d;
}

}  // namespace

static void BM_MineHardNegatives(benchmark::State& state) {
  const int b = static_cast<int>(state.range(0));
  const auto anchors = gaussian(75, b, 1);
  const auto groups = distinct_groups(b);
  for (auto _ : state) benchmark::DoNotOptimize(mine_hard_negatives(anchors, groups));
  state.SetItemsProcessed(state.iterations() * b);
}
BENCHMARK(BM_MineHardNegatives)->Arg(128)->Arg(1000);

static void BM_BatchLossGrad(benchmark::State& state) {
  const int b = static_cast<int>(state.range(0));
  const int n = static_cast<int>(state.range(1));
  LinearMap f = init_map(n, 75, 2);
  const auto xa = gaussian(n, b, 3), xp = gaussian(n, b, 4);
  const auto neg = mine_hard_negatives(f.weights * xa, distinct_groups(b));
  for (auto _ : state) benchmark::DoNotOptimize(batch_loss_grad(f, xa, xp, neg));
  state.SetItemsProcessed(state.iterations() * b);
}
BENCHMARK(BM_BatchLossGrad)->Args({128, 128})->Args({1000, 2048});

static void BM_NNSearch(benchmark::State& state) {
  const auto& d = synth();
  const auto rep = represent(d, std::nullopt);
  EvalConfig cfg;
  cfg.n_queries = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(nn_search(d, rep, cfg));
  state.SetItemsProcessed(state.iterations() * cfg.n_queries);
}
BENCHMARK(BM_NNSearch)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
