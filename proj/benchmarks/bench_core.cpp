#include <benchmark/benchmark.h>

#include <vector>

#include "class2simi/losses.hpp"
#include "class2simi/mlp.hpp"
#include "class2simi/pairing.hpp"
#include "class2simi/rng.hpp"
#include "class2simi/transition.hpp"

using namespace c2s;

namespace {

Matrix random_input(int n, int d, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Matrix x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rng.next_normal();
  return x;
}

std::vector<int> cyclic_labels(int n, int c) {
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i % c;
  return labels;
}

void BM_transform(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const ClassTransitionMatrix tc = make_symmetric(c, 0.4);
  const ClassPrior prior = ClassPrior::uniform(c);
  for (auto _ : state) {
    benchmark::DoNotOptimize(class2simi(tc, prior));
  }
}
BENCHMARK(BM_transform)->Arg(10)->Arg(50)->Arg(200);

void BM_enumerate_pairs(benchmark::State& state) {
  const int b = static_cast<int>(state.range(0));
  const std::vector<int> labels = cyclic_labels(b, 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(enumerate_pairs(labels));
  }
}
BENCHMARK(BM_enumerate_pairs)->Arg(64)->Arg(256);

void BM_forward(benchmark::State& state) {
  const int b = static_cast<int>(state.range(0));
  const MlpModel model = MlpModel::init({8, 32, 10}, 1);
  const Matrix x = random_input(b, 8, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(model, x));
  }
}
BENCHMARK(BM_forward)->Arg(64)->Arg(1024);

void BM_loss_and_grad(benchmark::State& state) {
  const LossKind kind = static_cast<LossKind>(state.range(0));
  const int b = 64;
  const MlpModel model = MlpModel::init({8, 32, 10}, 3);
  const Matrix x = random_input(b, 8, 4);
  const std::vector<int> labels = cyclic_labels(b, 10);
  const ClassTransitionMatrix tc = make_symmetric(10, 0.4);
  const SimilarityTransitionMatrix ts = class2simi(tc, ClassPrior::uniform(10));
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_and_grad(kind, model, x, labels, &tc, &ts, 1e-7));
  }
}
BENCHMARK(BM_loss_and_grad)
    ->Arg(static_cast<int>(LossKind::ce))
    ->Arg(static_cast<int>(LossKind::forward_pointwise))
    ->Arg(static_cast<int>(LossKind::f_class2simi))
    ->Arg(static_cast<int>(LossKind::r_class2simi));

}  // namespace

BENCHMARK_MAIN();
