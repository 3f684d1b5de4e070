#include <benchmark/benchmark.h>

#include <cstdint>

#include "lfmgan/adam.hpp"
#include "lfmgan/config.hpp"
#include "lfmgan/eval.hpp"
#include "lfmgan/latent.hpp"
#include "lfmgan/nets.hpp"
#include "lfmgan/ops.hpp"
#include "lfmgan/rng.hpp"
#include "lfmgan/train.hpp"

using namespace lfmgan;

namespace {

template <typename T>
Tensor<T> random_tensor(Rng& rng, const Shape& shape, bool grad = false) {
  Tensor<T> t(shape, grad);
  for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = static_cast<T>(rng.normal());
  return t;
}

void BM_Conv2dForward(benchmark::State& state) {
  const int64_t c = state.range(0);
  Rng rng(1);
  Tensor<float> x = random_tensor<float>(rng, {16, c, 16, 16});
  Tensor<float> w = random_tensor<float>(rng, {c, c, 4, 4});
  for (auto _ : state) {
    Tensor<float> y = ops::conv2d<float>(nullptr, x, w, nullptr, 2, 1);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * x.numel());
}
BENCHMARK(BM_Conv2dForward)->Arg(16)->Arg(64);

void BM_Conv2dBackward(benchmark::State& state) {
  const int64_t c = state.range(0);
  Rng rng(2);
  Tensor<float> x = random_tensor<float>(rng, {16, c, 16, 16}, true);
  Tensor<float> w = random_tensor<float>(rng, {c, c, 4, 4}, true);
  for (auto _ : state) {
    x.zero_grad();
    w.zero_grad();
    Tape<float> tape;
    Tensor<float> y = ops::conv2d<float>(&tape, x, w, nullptr, 2, 1);
    Tensor<float> loss = ops::sum(&tape, y);
    tape.backward(loss);
    benchmark::DoNotOptimize(w.grad());
  }
  state.SetItemsProcessed(state.iterations() * x.numel());
}
BENCHMARK(BM_Conv2dBackward)->Arg(16)->Arg(64);

void BM_OrthogonalPairs(benchmark::State& state) {
  const int64_t z = state.range(0);
  Rng rng(3);
  for (auto _ : state) {
    LatentBatch batch = orthogonal_pairs(128, z, PairVariant::Abs, rng);
    benchmark::DoNotOptimize(batch.values.data());
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_OrthogonalPairs)->Arg(16)->Arg(100);

void BM_MlpTrainStep(benchmark::State& state) {
  TrainConfig cfg;
  cfg.dataset = DatasetKind::Ring;
  cfg.precision = Precision::F32;
  cfg.lfm_mode = state.range(0) == 0 ? LfmMode::Off : LfmMode::Full;
  cfg.lambda_d = 1.0;
  cfg.lambda_g = 1.0;
  cfg.z_dim = 16;
  cfg.batch_size = 64;
  cfg.mlp_hidden = 64;
  cfg.feature_dim = 16;
  cfg.c_max = 16.0;
  cfg.ring_n = 4096;
  cfg.eval_every = 0;
  cfg.iterations = 1;
  cfg.seed = 4;
  TrainSession<float, MlpModel<float>> session(cfg);
  for (auto _ : state) {
    StepMetrics m = session.step();
    benchmark::DoNotOptimize(m.loss_d);
  }
  state.SetLabel(state.range(0) == 0 ? "off" : "full");
}
BENCHMARK(BM_MlpTrainStep)->Arg(0)->Arg(1);

void BM_FrechetDistance(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(5);
  auto make = [&] {
    GaussianStats s;
    s.mean = Eigen::VectorXd(d);
    for (int i = 0; i < d; ++i) s.mean(i) = rng.normal();
    Eigen::MatrixXd r(d, d);
    for (int i = 0; i < d * d; ++i) r.data()[i] = rng.normal();
    s.cov = r * r.transpose() / d + 0.05 * Eigen::MatrixXd::Identity(d, d);
    s.n = 2 * d;
    return s;
  };
  const GaussianStats a = make(), b = make();
  for (auto _ : state) {
    benchmark::DoNotOptimize(frechet_distance(a, b));
  }
}
BENCHMARK(BM_FrechetDistance)->Arg(16)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
