#pragma once

#include <cstdint>
#include <vector>

#include "lfmgan/rng.hpp"
#include "lfmgan/tensor.hpp"

namespace lfmgan {

// Abs keeps a candidate pair when |last solved coordinate| <= 1;
// NoAbs keeps it when the signed value is <= 1.
enum class PairVariant { Abs, NoAbs };

// Latent vectors are always generated in double precision; training casts
// down at the point of use so 32- and 64-bit runs consume identical streams.
struct LatentBatch {
  enum class Kind { PlainRandom, Paired };

  int64_t batch = 0;
  int64_t z_dim = 0;
  Kind kind = Kind::PlainRandom;
  PairVariant variant = PairVariant::Abs;
  std::vector<double> values;  // row-major batch x z_dim

  template <typename T>
  Tensor<T> to_tensor() const {
    Tensor<T> t(Shape{batch, z_dim});
    T* p = t.data();
    for (size_t i = 0; i < values.size(); ++i) p[i] = static_cast<T>(values[i]);
    return t;
  }

  // As (batch, z_dim, 1, 1) for convolutional generators.
  template <typename T>
  Tensor<T> to_tensor_4d() const {
    Tensor<T> t(Shape{batch, z_dim, 1, 1});
    T* p = t.data();
    for (size_t i = 0; i < values.size(); ++i) p[i] = static_cast<T>(values[i]);
    return t;
  }

  const double* row(int64_t r) const { return values.data() + r * z_dim; }
};

LatentBatch sample_gaussian(int64_t batch, int64_t z_dim, Rng& rng);

// Batch of exactly orthogonal latent pairs: pair j occupies rows j and
// j + batch/2. Each pair draws two Gaussian vectors, solves the last
// coordinate of the second for a zero dot product, and retries until the
// variant's acceptance bound holds. batch must be even, z_dim >= 2.
LatentBatch orthogonal_pairs(int64_t batch, int64_t z_dim, PairVariant variant, Rng& rng);

struct RejectionEstimate {
  double rate = 0.0;       // rejected / trials
  double ci95_half = 0.0;  // half-width of the normal-approximation 95% interval
  int64_t trials = 0;
};

// Monte-Carlo estimate of the candidate rejection rate of orthogonal_pairs.
RejectionEstimate rejection_rate(PairVariant variant, int64_t z_dim, int64_t trials, Rng& rng);

}  // namespace lfmgan
