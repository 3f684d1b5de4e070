#pragma once

#include <stdexcept>

#include "lfmgan/ops.hpp"

namespace lfmgan {

// Full: regularizer on both sides plus the trainable F map on features.
// GOnly: generator-side term only, no F map.
// Off: plain GAN.
enum class LfmMode { Full, GOnly, Off };

enum class LossSide { Generator, Discriminator };

struct LfmConfig {
  LfmMode mode = LfmMode::Full;
  double lambda_d = 1.0;
  double lambda_g = 1.0;
  // Offset that keeps the discriminator-side term positive. The base value
  // is bounded by feature_dim / 2, so any c_max at or above that works; the
  // offset never reaches the gradients.
  double c_max = 100.0;
  int64_t feature_dim = 100;

  void validate() const {
    if (lambda_d < 0.0 || lambda_g < 0.0) throw std::invalid_argument("LfmConfig: lambdas must be >= 0");
    if (feature_dim < 1) throw std::invalid_argument("LfmConfig: feature_dim must be positive");
    if (c_max < static_cast<double>(feature_dim) / 2.0) {
      throw std::invalid_argument("LfmConfig: c_max below the feature-pair bound feature_dim/2");
    }
  }
};

// Mean absolute feature alignment over paired rows: with rows f_0..f_{B-1}
// and half = B/2,
//   base = | sum_j <f_j, f_{j+half}> / half | / 2.
// Row j and row j+half hold the generator outputs of one orthogonal latent
// pair. Features of any rank are flattened per row. Range: [0, f_dim/2]
// when every entry lies in [-1, 1].
template <typename T>
Tensor<T> lfm_base(Tape<T>* tape, const Tensor<T>& features) {
  if (features.rank() < 2) {
    throw std::invalid_argument("lfm_base: expected at least rank-2 features, got " + shape_str(features.shape()));
  }
  const int64_t b = features.dim(0);
  if (b < 2 || b % 2 != 0) throw std::invalid_argument("lfm_base: batch must be even and >= 2");
  const int64_t half = b / 2;
  Tensor<T> first = ops::slice_rows(tape, features, 0, half);
  Tensor<T> second = ops::slice_rows(tape, features, half, b);
  Tensor<T> d = ops::dot(tape, first, second);
  Tensor<T> scaled = ops::scale(tape, d, T(1) / static_cast<T>(half * 2));
  return ops::abs(tape, scaled);
}

// Side-specific regularizer value. The generator minimizes the base value;
// the discriminator minimizes c_max - base, i.e. maximizes the base.
template <typename T>
Tensor<T> lfm_loss(Tape<T>* tape, const Tensor<T>& features, LossSide side, const LfmConfig& cfg) {
  Tensor<T> base = lfm_base(tape, features);
  if (side == LossSide::Generator) {
    return ops::scale(tape, base, static_cast<T>(cfg.lambda_g));
  }
  Tensor<T> neg = ops::scale(tape, base, T(-1));
  Tensor<T> shifted = ops::add_scalar(tape, neg, static_cast<T>(cfg.c_max));
  return ops::scale(tape, shifted, static_cast<T>(cfg.lambda_d));
}

// Discriminator objective: bce(real scores, 1) + bce(fake scores, 0), plus
// the discriminator-side regularizer on fake features when mode is Full.
// feature_f_fake must be defined exactly when that term is active.
template <typename T>
Tensor<T> d_total_loss(Tape<T>* tape, const Tensor<T>& score_real, const Tensor<T>& score_fake,
                       const Tensor<T>& feature_f_fake, const LfmConfig& cfg) {
  Tensor<T> loss = ops::add(tape, ops::bce_const(tape, score_real, T(1)), ops::bce_const(tape, score_fake, T(0)));
  if (cfg.mode == LfmMode::Full && cfg.lambda_d > 0.0) {
    if (!feature_f_fake.defined()) throw std::invalid_argument("d_total_loss: features required in Full mode");
    loss = ops::add(tape, loss, lfm_loss(tape, feature_f_fake, LossSide::Discriminator, cfg));
  }
  return loss;
}

// Generator objective: non-saturating bce(fake scores, 1) by default, or the
// saturating form -bce(fake scores, 0), plus the generator-side regularizer
// on fake features when mode is Full or GOnly.
template <typename T>
Tensor<T> g_total_loss(Tape<T>* tape, const Tensor<T>& score_fake, const Tensor<T>& feature_fake,
                       const LfmConfig& cfg, bool saturating = false) {
  Tensor<T> loss;
  if (saturating) {
    loss = ops::scale(tape, ops::bce_const(tape, score_fake, T(0)), T(-1));
  } else {
    loss = ops::bce_const(tape, score_fake, T(1));
  }
  if (cfg.mode != LfmMode::Off && cfg.lambda_g > 0.0) {
    if (!feature_fake.defined()) throw std::invalid_argument("g_total_loss: features required when the regularizer is on");
    loss = ops::add(tape, loss, lfm_loss(tape, feature_fake, LossSide::Generator, cfg));
  }
  return loss;
}

}  // namespace lfmgan
