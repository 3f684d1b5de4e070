#include "testutil.hpp"

#include <lfmgan/adam.hpp>
#include <lfmgan/ops.hpp>
#include <lfmgan/rng.hpp>
#include <lfmgan/tape.hpp>
#include <lfmgan/tensor.hpp>

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

using lfmgan::Rng;
using lfmgan::Shape;
using lfmgan::Tape;
using lfmgan::Tensor;
namespace ops = lfmgan::ops;
using testutil::gradcheck;
using testutil::random_signed;
using testutil::random_tensor;

TEST_CASE("autograd: elementwise and reduction gradients") {
  Rng rng(101);
  auto a = random_tensor(rng, {3, 4});
  auto b = random_tensor(rng, {3, 4});

  gradcheck([&](Tape<double>* t) { return ops::sum(t, ops::add(t, a, b)); }, {a, b});
  gradcheck([&](Tape<double>* t) { return ops::sum(t, ops::mul(t, a, b)); }, {a, b});
  gradcheck([&](Tape<double>* t) { return ops::mean(t, ops::scale(t, a, -1.7)); }, {a});
  gradcheck([&](Tape<double>* t) { return ops::sum(t, ops::add_scalar(t, a, 0.3)); }, {a});
  gradcheck([&](Tape<double>* t) { return ops::dot(t, a, b); }, {a, b});
  gradcheck([&](Tape<double>* t) { return ops::dot(t, a, a); }, {a});
}

TEST_CASE("autograd: nonlinearity gradients away from kinks") {
  Rng rng(102);
  auto a = random_signed(rng, {4, 4});

  gradcheck([&](Tape<double>* t) { return ops::sum(t, ops::abs(t, a)); }, {a});
  gradcheck([&](Tape<double>* t) { return ops::sum(t, ops::relu(t, a)); }, {a});
  gradcheck([&](Tape<double>* t) { return ops::sum(t, ops::leaky_relu(t, a, 0.2)); }, {a});
  gradcheck([&](Tape<double>* t) { return ops::sum(t, ops::tanh(t, a)); }, {a});
  gradcheck([&](Tape<double>* t) { return ops::sum(t, ops::sigmoid(t, a)); }, {a});
}

TEST_CASE("autograd: bce gradient") {
  Rng rng(103);
  Tensor<double> pred({6}, true);
  Tensor<double> target({6});
  for (int64_t i = 0; i < 6; ++i) {
    pred.data()[i] = 0.1 + 0.8 * rng.uniform();
    target.data()[i] = i % 2 ? 1.0 : 0.0;
  }
  gradcheck([&](Tape<double>* t) { return ops::bce(t, pred, target); }, {pred});
  gradcheck([&](Tape<double>* t) { return ops::bce_const(t, pred, 1.0); }, {pred});
  gradcheck([&](Tape<double>* t) { return ops::bce_const(t, pred, 0.0); }, {pred});
}

TEST_CASE("autograd: reshape and slice_rows gradients") {
  Rng rng(104);
  auto a = random_tensor(rng, {4, 3});
  gradcheck([&](Tape<double>* t) { return ops::dot(t, ops::reshape(t, a, {3, 4}), ops::reshape(t, a, {12})); },
            {a});
  auto b = random_tensor(rng, {4, 3});
  gradcheck(
      [&](Tape<double>* t) {
        auto top = ops::slice_rows(t, a, 0, 2);
        auto bottom = ops::slice_rows(t, a, 2, 4);
        return ops::add(t, ops::dot(t, top, bottom), ops::sum(t, ops::slice_rows(t, b, 1, 3)));
      },
      {a, b});
}

TEST_CASE("autograd: linear gradients") {
  Rng rng(105);
  auto x = random_tensor(rng, {3, 4});
  auto w = random_tensor(rng, {2, 4});
  auto b = random_tensor(rng, {2});
  gradcheck([&](Tape<double>* t) { return ops::sum(t, ops::tanh(t, ops::linear(t, x, w, &b))); }, {x, w, b});
  gradcheck([&](Tape<double>* t) { return ops::sum(t, ops::linear<double>(t, x, w, nullptr)); }, {x, w});
}

TEST_CASE("autograd: conv2d gradients") {
  Rng rng(106);
  auto x = random_tensor(rng, {2, 2, 5, 5});
  auto w = random_tensor(rng, {3, 2, 3, 3});
  auto b = random_tensor(rng, {3});
  gradcheck([&](Tape<double>* t) { return ops::sum(t, ops::conv2d(t, x, w, &b, 2, 1)); }, {x, w, b});
  auto w1 = random_tensor(rng, {1, 2, 2, 2});
  gradcheck([&](Tape<double>* t) { return ops::sum(t, ops::tanh(t, ops::conv2d<double>(t, x, w1, nullptr, 1, 0))); },
            {x, w1});
}

TEST_CASE("autograd: conv_transpose2d gradients") {
  Rng rng(107);
  auto x = random_tensor(rng, {2, 3, 2, 2});
  auto w = random_tensor(rng, {3, 2, 4, 4});
  auto b = random_tensor(rng, {2});
  gradcheck([&](Tape<double>* t) { return ops::sum(t, ops::tanh(t, ops::conv_transpose2d(t, x, w, &b, 2, 1))); },
            {x, w, b});
  auto w1 = random_tensor(rng, {3, 1, 3, 3});
  gradcheck([&](Tape<double>* t) { return ops::sum(t, ops::conv_transpose2d<double>(t, x, w1, nullptr, 1, 0)); }, {x, w1});
}

TEST_CASE("autograd: batchnorm2d gradients in batch-stats modes") {
  Rng rng(108);
  auto x = random_tensor(rng, {3, 2, 2, 2});
  auto gamma = random_tensor(rng, {2}, 0.5, 1.5);
  auto beta = random_tensor(rng, {2}, -0.5, 0.5);
  auto weight = random_tensor(rng, {3, 2, 2, 2}, -1, 1, false);

  auto loss = [&](Tape<double>* t, lfmgan::ops::BnMode mode) {
    auto rm = Tensor<double>::from({2}, {0, 0});
    auto rv = Tensor<double>::from({2}, {1, 1});
    auto y = ops::batchnorm2d(t, x, gamma, beta, rm, rv, mode);
    return ops::dot(t, y, weight);
  };
  gradcheck([&](Tape<double>* t) { return loss(t, lfmgan::ops::BnMode::Train); }, {x, gamma, beta});
  gradcheck([&](Tape<double>* t) { return loss(t, lfmgan::ops::BnMode::EvalBatch); }, {x, gamma, beta});

  // running-stats mode is an affine map of x, so its gradient is exact
  auto rm = random_tensor(rng, {2}, -0.2, 0.2, false);
  auto rv = random_tensor(rng, {2}, 0.5, 1.5, false);
  gradcheck(
      [&](Tape<double>* t) {
        auto y = ops::batchnorm2d(t, x, gamma, beta, rm, rv, lfmgan::ops::BnMode::EvalRunning);
        return ops::dot(t, y, weight);
      },
      {x, gamma, beta});
}

TEST_CASE("autograd: composite expression reusing one tensor twice") {
  Rng rng(109);
  auto a = random_tensor(rng, {5});
  auto b = random_tensor(rng, {5});
  gradcheck(
      [&](Tape<double>* t) {
        auto prod = ops::mul(t, a, ops::tanh(t, a));
        return ops::add(t, ops::sum(t, prod), ops::dot(t, a, b));
      },
      {a, b});
}

TEST_CASE("autograd: gradients accumulate until zeroed") {
  auto a = Tensor<double>::from({2}, {3, -1});
  a.set_requires_grad(true);
  for (int round = 0; round < 2; ++round) {
    Tape<double> tape;
    auto loss = ops::sum(&tape, ops::mul(&tape, a, a));
    tape.backward(loss);
  }
  CHECK(a.grad()[0] == doctest::Approx(2 * 2.0 * 3.0));
  CHECK(a.grad()[1] == doctest::Approx(2 * 2.0 * -1.0));
  a.zero_grad();
  CHECK(a.grad()[0] == 0.0);
}

TEST_CASE("autograd: backward requires a scalar") {
  Tape<double> tape;
  auto a = Tensor<double>::from({2}, {1, 2});
  a.set_requires_grad(true);
  auto y = ops::scale(&tape, a, 2.0);
  CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);
}

TEST_CASE("autograd: conv2d/conv_transpose2d adjointness over random shapes") {
  Rng rng(42);
  int checked = 0;
  while (checked < 120) {
    const int64_t n = 1 + static_cast<int64_t>(rng.uniform() * 2);
    const int64_t ci = 1 + static_cast<int64_t>(rng.uniform() * 3);
    const int64_t co = 1 + static_cast<int64_t>(rng.uniform() * 3);
    const int64_t k = 1 + static_cast<int64_t>(rng.uniform() * 4);
    const int64_t s = 1 + static_cast<int64_t>(rng.uniform() * 3);
    const int64_t p = static_cast<int64_t>(rng.uniform() * static_cast<double>(k));
    const int64_t oh = 1 + static_cast<int64_t>(rng.uniform() * 4);
    const int64_t in_h = (oh - 1) * s + k - 2 * p;
    if (in_h < 1 || in_h + 2 * p < k) continue;

    auto x = random_tensor(rng, {n, ci, in_h, in_h}, -1, 1, false);
    auto w = random_tensor(rng, {co, ci, k, k}, -1, 1, false);
    auto u = random_tensor(rng, {n, co, oh, oh}, -1, 1, false);

    auto cx = ops::conv2d<double>(nullptr, x, w, nullptr, s, p);
    REQUIRE(cx.shape() == Shape{n, co, oh, oh});
    auto ctu = ops::conv_transpose2d<double>(nullptr, u, w, nullptr, s, p);
    REQUIRE(ctu.shape() == x.shape());

    const double lhs = ops::dot<double>(nullptr, cx, u).item();
    const double rhs = ops::dot<double>(nullptr, x, ctu).item();
    INFO("n=" << n << " ci=" << ci << " co=" << co << " k=" << k << " s=" << s << " p=" << p << " oh=" << oh);
    CHECK(std::fabs(lhs - rhs) <= 1e-6 * std::max(1.0, std::fabs(lhs)));
    ++checked;
  }
  CHECK(checked >= 100);
}

TEST_CASE("adam: first step matches the closed form") {
  auto p = Tensor<double>::from({3}, {1.0, -2.0, 0.5});
  p.set_requires_grad(true);
  lfmgan::AdamConfig cfg;
  cfg.lr = 0.1;
  cfg.eps = 1e-8;
  lfmgan::Adam<double> opt({p}, cfg);

  const std::vector<double> g = {0.3, -1.2, 4.0};
  for (int64_t i = 0; i < 3; ++i) p.grad()[i] = g[static_cast<size_t>(i)];
  opt.step();

  // with zero moments, bias correction cancels and the update is
  // lr * g / (|g| + eps) regardless of beta values
  for (int64_t i = 0; i < 3; ++i) {
    const double gi = g[static_cast<size_t>(i)];
    const double want = (i == 0 ? 1.0 : i == 1 ? -2.0 : 0.5) - 0.1 * gi / (std::fabs(gi) + 1e-8);
    CHECK(p.at(i) == doctest::Approx(want).epsilon(1e-12));
  }
  CHECK(opt.step_count() == 1);
}

TEST_CASE("adam: two steps with constant gradient keep moving the same way") {
  auto p = Tensor<double>::scalar(0.0);
  p.set_requires_grad(true);
  lfmgan::AdamConfig cfg;
  cfg.lr = 0.01;
  lfmgan::Adam<double> opt({p}, cfg);
  double prev = 0.0;
  for (int i = 0; i < 5; ++i) {
    p.grad()[0] = 1.0;
    opt.step();
    CHECK(p.item() < prev);
    prev = p.item();
    opt.zero_grad();
    CHECK(p.grad()[0] == 0.0);
  }
}

TEST_CASE("adam: converges on a quadratic") {
  auto p = Tensor<double>::from({2}, {4.0, -3.0});
  p.set_requires_grad(true);
  lfmgan::AdamConfig cfg;
  cfg.lr = 0.05;
  cfg.beta1 = 0.9;
  lfmgan::Adam<double> opt({p}, cfg);
  for (int i = 0; i < 2000; ++i) {
    opt.zero_grad();
    Tape<double> tape;
    auto loss = ops::dot(&tape, p, p);
    tape.backward(loss);
    opt.step();
  }
  CHECK(std::fabs(p.at(0)) < 1e-3);
  CHECK(std::fabs(p.at(1)) < 1e-3);
}

TEST_CASE("adam: rejects parameters without gradient buffers") {
  auto p = Tensor<double>::scalar(1.0);
  CHECK_THROWS_AS(lfmgan::Adam<double>({p}), std::invalid_argument);
}

TEST_CASE("rng: deterministic streams and moments") {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());

  Rng c(lfmgan::derive_seed(7, 1));
  Rng d(7);
  bool differs = false;
  for (int i = 0; i < 10; ++i) differs = differs || (c.uniform() != d.uniform());
  CHECK(differs);

  Rng e(12345);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double v = e.normal();
    sum += v;
    sq += v * v;
  }
  CHECK(std::fabs(sum / n) < 0.01);
  CHECK(std::fabs(sq / n - 1.0) < 0.02);

  Rng f(9);
  for (int i = 0; i < 10000; ++i) {
    double u = f.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    double v = f.uniform_open();
    CHECK(v > 0.0);
  }
}

TEST_CASE("rng: state round-trips through text serialization") {
  Rng a(99);
  for (int i = 0; i < 17; ++i) a.normal();
  Rng b = Rng::deserialize(a.serialize());
  CHECK(a == b);
  for (int i = 0; i < 50; ++i) CHECK(a.normal() == b.normal());
  CHECK_THROWS_AS(Rng::deserialize("not a state"), std::runtime_error);
}
