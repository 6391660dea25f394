#include <benchmark/benchmark.h>

#include "ceskd/curriculum.hpp"
#include "ceskd/losses.hpp"
#include "ceskd/model.hpp"

using namespace ceskd;

namespace {

ModelSpec dense_spec(std::size_t in, std::size_t hidden, std::size_t k) {
  ModelSpec spec;
  spec.input_shape = {in};
  spec.layers = {LayerSpec::dense(in, hidden), LayerSpec::relu(), LayerSpec::dense(hidden, k)};
  return spec;
}

ModelSpec conv_spec() {
  ModelSpec spec;
  spec.input_shape = {3, 32, 32};
  spec.layers = {LayerSpec::conv2d(3, 8, 3, 1, 1), LayerSpec::relu(), LayerSpec::maxpool2d(2, 2),
                 LayerSpec::flatten(), LayerSpec::dense(8 * 16 * 16, 10)};
  return spec;
}

Tensor random_batch(std::vector<std::size_t> shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor x(std::move(shape));
  for (auto& v : x.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return x;
}

void BM_dense_forward(benchmark::State& state) {
  const std::size_t batch = static_cast<std::size_t>(state.range(0));
  const Model m = init_weights(dense_spec(64, 128, 10), 1);
  const Tensor x = random_batch({batch, 64}, 2);
  ForwardTrace<float> trace;
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(m, x, trace));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(batch));
}
BENCHMARK(BM_dense_forward)->Arg(32)->Arg(128);

void BM_dense_backward(benchmark::State& state) {
  const std::size_t batch = static_cast<std::size_t>(state.range(0));
  const Model m = init_weights(dense_spec(64, 128, 10), 1);
  const Tensor x = random_batch({batch, 64}, 2);
  const Tensor g = random_batch({batch, 10}, 3);
  ForwardTrace<float> trace;
  forward(m, x, trace);
  for (auto _ : state) {
    benchmark::DoNotOptimize(backward(m, trace, g));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(batch));
}
BENCHMARK(BM_dense_backward)->Arg(32)->Arg(128);

void BM_conv_forward(benchmark::State& state) {
  const Model m = init_weights(conv_spec(), 1);
  const Tensor x = random_batch({8, 3, 32, 32}, 2);
  ForwardTrace<float> trace;
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(m, x, trace));
  }
}
BENCHMARK(BM_conv_forward);

void BM_total_loss(benchmark::State& state) {
  const std::size_t batch = static_cast<std::size_t>(state.range(0));
  const Tensor z_s = random_batch({batch, 10}, 4);
  const Tensor z_e = random_batch({batch, 10}, 5);
  std::vector<int> labels(batch);
  for (std::size_t i = 0; i < batch; ++i) labels[i] = static_cast<int>(i % 10);
  const Tensor y = one_hot<float>(labels, 10);
  const KDHyperparams hp;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ceskd_total_loss(z_s, z_e, y, hp));
  }
}
BENCHMARK(BM_total_loss)->Arg(32)->Arg(128);

void BM_bucketize(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(9);
  std::vector<ScoredSample> scored;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    labels.push_back(static_cast<int>(i % 10));
    scored.push_back({i, labels.back(), rng.uniform(0.0, 10.0)});
  }
  const RankedDataset ranked = rank(scored);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bucketize(ranked, labels, 4, true));
  }
}
BENCHMARK(BM_bucketize)->Arg(2000)->Arg(50000);

void BM_epoch_batches(benchmark::State& state) {
  const std::size_t n = 10000;
  Rng rng(9);
  std::vector<ScoredSample> scored;
  std::vector<int> labels(n, 0);
  for (std::size_t i = 0; i < n; ++i) scored.push_back({i, 0, rng.uniform(0.0, 10.0)});
  const RankedDataset ranked = rank(scored);
  const BucketPlan plan = bucketize(ranked, labels, 4, false);
  int epoch = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(epoch_batches(plan, 128, 7, epoch++));
  }
}
BENCHMARK(BM_epoch_batches);

}  // namespace

BENCHMARK_MAIN();
