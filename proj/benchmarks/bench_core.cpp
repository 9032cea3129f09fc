#include <benchmark/benchmark.h>

#include "smile/clustering.hpp"
#include "smile/dataset.hpp"
#include "smile/metrics.hpp"
#include "smile/network.hpp"
#include "smile/objective.hpp"
#include "smile/random.hpp"

using namespace smile;

namespace {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  RngStream rng(seed, 0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

void BM_KMeans(benchmark::State& state) {
  const Matrix z = gaussian(state.range(0), 32, 1);
  KMeansOptions opts;
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(z, 4, opts).inertia);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KMeans)->Arg(1000)->Arg(4000);

void BM_SoftAssign(benchmark::State& state) {
  const Matrix z = gaussian(state.range(0), 32, 2);
  const Matrix u = normalize_rows(gaussian(10, 32, 3));
  for (auto _ : state) benchmark::DoNotOptimize(soft_assign(z, u, 0.1).sum());
}
BENCHMARK(BM_SoftAssign)->Arg(256)->Arg(4096);

/// Forward plus reverse pass of the full objective on one default-sized batch.
void BM_ObjectiveStep(benchmark::State& state) {
  SyntheticSpec spec;
  spec.n = 512;
  spec.map_correlation = 0.7;
  const MultiViewDataset ds = corrupt(make_synthetic(spec), {0.2, 0.3, std::nullopt, 1});
  NetworkSpec net;
  net.view_dims = ds.view_dims();
  const Model model(net, 1);
  std::vector<std::size_t> ids(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  const InstanceBatch batch = make_batch(ds, ids);
  ObjectiveOptions opts;
  opts.centers = normalize_rows(gaussian(4, 32, 4));
  Vector grad(static_cast<Eigen::Index>(model.num_params()));
  for (auto _ : state) {
    grad.setZero();
    benchmark::DoNotOptimize(evaluate_objective(model, batch, opts, &grad).report.total);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ObjectiveStep)->Arg(64)->Arg(256);

void BM_Hungarian(benchmark::State& state) {
  const Matrix cost = gaussian(state.range(0), state.range(0), 5);
  for (auto _ : state) benchmark::DoNotOptimize(hungarian(cost).front());
}
BENCHMARK(BM_Hungarian)->Arg(10)->Arg(100);

void BM_Accuracy(benchmark::State& state) {
  RngStream rng(6, 0);
  std::vector<int> pred(static_cast<std::size_t>(state.range(0))), truth(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = static_cast<int>(rng.below(10));
    truth[i] = static_cast<int>(rng.below(10));
  }
  for (auto _ : state) benchmark::DoNotOptimize(clustering_accuracy(pred, truth));
}
BENCHMARK(BM_Accuracy)->Arg(2000)->Arg(30000);

}  // namespace
BENCHMARK_MAIN();
