#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lfmgan/lfm.hpp"
#include "lfmgan/ops.hpp"
#include "lfmgan/rng.hpp"

namespace lfmgan {

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
  bool is_param = true;  // false for running statistics
};

namespace layers {

template <typename T>
struct Conv2d {
  Tensor<T> w;  // (Cout, Cin, K, K)
  Tensor<T> b;  // undefined when the conv feeds a batchnorm
  int64_t stride = 1;
  int64_t pad = 0;

  Tensor<T> forward(Tape<T>* tape, const Tensor<T>& x) const {
    return ops::conv2d(tape, x, w, b.defined() ? &b : nullptr, stride, pad);
  }
};

template <typename T>
struct ConvTranspose2d {
  Tensor<T> w;  // (Cin, Cout, K, K)
  Tensor<T> b;
  int64_t stride = 1;
  int64_t pad = 0;

  Tensor<T> forward(Tape<T>* tape, const Tensor<T>& x) const {
    return ops::conv_transpose2d(tape, x, w, b.defined() ? &b : nullptr, stride, pad);
  }
};

template <typename T>
struct BatchNorm2d {
  Tensor<T> gamma, beta;
  Tensor<T> running_mean, running_var;

  Tensor<T> forward(Tape<T>* tape, const Tensor<T>& x, ops::BnMode mode) {
    return ops::batchnorm2d(tape, x, gamma, beta, running_mean, running_var, mode);
  }
};

template <typename T>
struct Linear {
  Tensor<T> w;  // (out, in)
  Tensor<T> b;  // (out)

  Tensor<T> forward(Tape<T>* tape, const Tensor<T>& x) const {
    return ops::linear(tape, x, w, b.defined() ? &b : nullptr);
  }
};

}  // namespace layers

namespace detail {

inline int64_t upsample_stages(int64_t image_size) {
  switch (image_size) {
    case 16: return 2;
    case 32: return 3;
    case 64: return 4;
    default: throw std::invalid_argument("image_size must be 16, 32 or 64, got " + std::to_string(image_size));
  }
}

// Channel ladder below the 4x4 stem: 8b, 4b, 2b, b at 64; smaller sizes
// drop entries from the narrow end.
inline std::vector<int64_t> channel_ladder(int64_t image_size, int64_t base_channels) {
  const int64_t stages = upsample_stages(image_size);
  std::vector<int64_t> ch;
  for (int64_t i = 0; i < stages; ++i) ch.push_back(base_channels << (3 - i));
  return ch;
}

template <typename T>
layers::BatchNorm2d<T> make_bn(int64_t channels) {
  layers::BatchNorm2d<T> bn;
  bn.gamma = Tensor<T>(Shape{channels}, true);
  bn.beta = Tensor<T>(Shape{channels}, true);
  bn.running_mean = Tensor<T>(Shape{channels});
  bn.running_var = Tensor<T>(Shape{channels});
  for (int64_t i = 0; i < channels; ++i) bn.running_var.data()[i] = T(1);
  return bn;
}

template <typename T>
void fill_normal(Tensor<T>& t, double mean, double stddev, Rng& rng) {
  T* p = t.data();
  const int64_t n = t.numel();
  for (int64_t i = 0; i < n; ++i) p[i] = static_cast<T>(mean + stddev * rng.normal());
}

}  // namespace detail

// Transposed-conv generator: z (B, z_dim, 1, 1) -> image (B, 3, S, S) in
// [-1, 1]. A 4x4 stem is followed by stride-2 doubling stages, batchnorm and
// ReLU on every block except the final tanh conv.
template <typename T>
struct GeneratorNet {
  int64_t z_dim = 0;
  int64_t image_size = 0;
  int64_t base_channels = 0;
  std::vector<layers::ConvTranspose2d<T>> convs;  // stages + 1 entries
  std::vector<layers::BatchNorm2d<T>> bns;        // one per non-final conv

  Tensor<T> forward(Tape<T>* tape, const Tensor<T>& z, ops::BnMode bn_mode) {
    if (z.rank() != 4 || z.dim(1) != z_dim || z.dim(2) != 1 || z.dim(3) != 1) {
      throw std::invalid_argument("GeneratorNet: expected (B," + std::to_string(z_dim) + ",1,1), got " +
                                  shape_str(z.shape()));
    }
    Tensor<T> h = z;
    for (size_t i = 0; i < bns.size(); ++i) {
      h = convs[i].forward(tape, h);
      h = bns[i].forward(tape, h, bn_mode);
      h = ops::relu(tape, h);
    }
    h = convs.back().forward(tape, h);
    return ops::tanh(tape, h);
  }

  std::vector<NamedTensor<T>> named_tensors() const {
    std::vector<NamedTensor<T>> out;
    for (size_t i = 0; i < convs.size(); ++i) {
      const std::string cn = "conv" + std::to_string(i);
      out.push_back({cn + ".w", convs[i].w, true});
      if (convs[i].b.defined()) out.push_back({cn + ".b", convs[i].b, true});
      if (i < bns.size()) {
        const std::string bn = "bn" + std::to_string(i);
        out.push_back({bn + ".gamma", bns[i].gamma, true});
        out.push_back({bn + ".beta", bns[i].beta, true});
        out.push_back({bn + ".running_mean", bns[i].running_mean, false});
        out.push_back({bn + ".running_var", bns[i].running_var, false});
      }
    }
    return out;
  }

  std::vector<Tensor<T>> parameters() const {
    std::vector<Tensor<T>> out;
    for (const NamedTensor<T>& nt : named_tensors()) {
      if (nt.is_param) out.push_back(nt.tensor);
    }
    return out;
  }
};

// Shared-backbone discriminator with two conv heads on the 4x4 feature map:
// a sigmoid score and a tanh feature vector, plus a trainable 1x1 map F on
// the features in Full mode.
template <typename T>
struct DiscriminatorNet {
  int64_t image_size = 0;
  int64_t feature_dim = 0;
  int64_t base_channels = 0;
  LfmMode mode = LfmMode::Full;
  std::vector<layers::Conv2d<T>> convs;     // downsampling backbone
  std::vector<layers::BatchNorm2d<T>> bns;  // one per conv after the first
  layers::Conv2d<T> head_c;                 // -> (B, 1, 1, 1)
  layers::Conv2d<T> head_f;                 // -> (B, feature_dim, 1, 1)
  layers::Conv2d<T> f_map;                  // defined only in Full mode

  struct Output {
    Tensor<T> score;        // (B, 1, 1, 1), sigmoid
    Tensor<T> feature_raw;  // (B, feature_dim, 1, 1), tanh head output
    Tensor<T> feature_f;    // same shape; F applied in Full mode, else feature_raw
  };

  Tensor<T> backbone(Tape<T>* tape, const Tensor<T>& x, ops::BnMode bn_mode) {
    if (x.rank() != 4 || x.dim(1) != 3 || x.dim(2) != image_size || x.dim(3) != image_size) {
      throw std::invalid_argument("DiscriminatorNet: expected (B,3," + std::to_string(image_size) + "," +
                                  std::to_string(image_size) + "), got " + shape_str(x.shape()));
    }
    Tensor<T> h = convs[0].forward(tape, x);
    h = ops::leaky_relu(tape, h, T(0.2));
    for (size_t i = 1; i < convs.size(); ++i) {
      h = convs[i].forward(tape, h);
      h = bns[i - 1].forward(tape, h, bn_mode);
      h = ops::leaky_relu(tape, h, T(0.2));
    }
    return h;
  }

  Tensor<T> score_from(Tape<T>* tape, const Tensor<T>& h) const {
    return ops::sigmoid(tape, head_c.forward(tape, h));
  }

  Tensor<T> feature_from(Tape<T>* tape, const Tensor<T>& h) const {
    return ops::tanh(tape, head_f.forward(tape, h));
  }

  // Trainable feature map on (B, feature_dim, 1, 1); identity outside Full mode.
  Tensor<T> apply_f(Tape<T>* tape, const Tensor<T>& feature) const {
    if (mode != LfmMode::Full) return feature;
    return ops::tanh(tape, f_map.forward(tape, feature));
  }

  Tensor<T> forward_score(Tape<T>* tape, const Tensor<T>& x, ops::BnMode bn_mode) {
    return score_from(tape, backbone(tape, x, bn_mode));
  }

  Output forward(Tape<T>* tape, const Tensor<T>& x, ops::BnMode bn_mode) {
    Output out;
    Tensor<T> h = backbone(tape, x, bn_mode);
    out.score = score_from(tape, h);
    out.feature_raw = feature_from(tape, h);
    out.feature_f = apply_f(tape, out.feature_raw);
    return out;
  }

  std::vector<NamedTensor<T>> named_tensors() const {
    std::vector<NamedTensor<T>> out;
    for (size_t i = 0; i < convs.size(); ++i) {
      const std::string cn = "conv" + std::to_string(i);
      out.push_back({cn + ".w", convs[i].w, true});
      if (convs[i].b.defined()) out.push_back({cn + ".b", convs[i].b, true});
      if (i >= 1) {
        const std::string bn = "bn" + std::to_string(i);
        out.push_back({bn + ".gamma", bns[i - 1].gamma, true});
        out.push_back({bn + ".beta", bns[i - 1].beta, true});
        out.push_back({bn + ".running_mean", bns[i - 1].running_mean, false});
        out.push_back({bn + ".running_var", bns[i - 1].running_var, false});
      }
    }
    out.push_back({"head_c.w", head_c.w, true});
    out.push_back({"head_c.b", head_c.b, true});
    out.push_back({"head_f.w", head_f.w, true});
    out.push_back({"head_f.b", head_f.b, true});
    if (mode == LfmMode::Full) {
      out.push_back({"f.w", f_map.w, true});
      out.push_back({"f.b", f_map.b, true});
    }
    return out;
  }

  std::vector<Tensor<T>> parameters() const {
    std::vector<Tensor<T>> out;
    for (const NamedTensor<T>& nt : named_tensors()) {
      if (nt.is_param) out.push_back(nt.tensor);
    }
    return out;
  }
};

template <typename T>
GeneratorNet<T> build_generator(int64_t z_dim, int64_t image_size, int64_t base_channels = 64) {
  if (z_dim < 1 || base_channels < 1) throw std::invalid_argument("build_generator: bad dimensions");
  const std::vector<int64_t> ch = detail::channel_ladder(image_size, base_channels);
  GeneratorNet<T> g;
  g.z_dim = z_dim;
  g.image_size = image_size;
  g.base_channels = base_channels;
  int64_t in_ch = z_dim;
  for (size_t i = 0; i < ch.size(); ++i) {
    layers::ConvTranspose2d<T> conv;
    conv.w = Tensor<T>(Shape{in_ch, ch[i], 4, 4}, true);
    conv.stride = i == 0 ? 1 : 2;
    conv.pad = i == 0 ? 0 : 1;
    g.convs.push_back(conv);
    g.bns.push_back(detail::make_bn<T>(ch[i]));
    in_ch = ch[i];
  }
  layers::ConvTranspose2d<T> final_conv;
  final_conv.w = Tensor<T>(Shape{in_ch, 3, 4, 4}, true);
  final_conv.b = Tensor<T>(Shape{3}, true);
  final_conv.stride = 2;
  final_conv.pad = 1;
  g.convs.push_back(final_conv);
  return g;
}

template <typename T>
DiscriminatorNet<T> build_discriminator(int64_t image_size, int64_t feature_dim, LfmMode mode,
                                        int64_t base_channels = 64) {
  if (feature_dim < 1 || base_channels < 1) throw std::invalid_argument("build_discriminator: bad dimensions");
  std::vector<int64_t> ch = detail::channel_ladder(image_size, base_channels);
  std::reverse(ch.begin(), ch.end());  // widen on the way down to 4x4
  DiscriminatorNet<T> d;
  d.image_size = image_size;
  d.feature_dim = feature_dim;
  d.base_channels = base_channels;
  d.mode = mode;
  int64_t in_ch = 3;
  for (size_t i = 0; i < ch.size(); ++i) {
    layers::Conv2d<T> conv;
    conv.w = Tensor<T>(Shape{ch[i], in_ch, 4, 4}, true);
    if (i == 0) conv.b = Tensor<T>(Shape{ch[i]}, true);  // no batchnorm on the first block
    conv.stride = 2;
    conv.pad = 1;
    d.convs.push_back(conv);
    if (i >= 1) d.bns.push_back(detail::make_bn<T>(ch[i]));
    in_ch = ch[i];
  }
  d.head_c.w = Tensor<T>(Shape{1, in_ch, 4, 4}, true);
  d.head_c.b = Tensor<T>(Shape{1}, true);
  d.head_f.w = Tensor<T>(Shape{feature_dim, in_ch, 4, 4}, true);
  d.head_f.b = Tensor<T>(Shape{feature_dim}, true);
  if (mode == LfmMode::Full) {
    d.f_map.w = Tensor<T>(Shape{feature_dim, feature_dim, 1, 1}, true);
    d.f_map.b = Tensor<T>(Shape{feature_dim}, true);
  }
  return d;
}

// Conv and transposed-conv weights ~ N(0, 0.02); batchnorm gains ~ N(1, 0.02)
// with zero shifts; biases start at zero. Draw order follows named_tensors(),
// whose handles alias the net's storage.
template <typename Net>
void init_weights(Net& net, uint64_t seed) {
  Rng rng(seed);
  for (auto nt : net.named_tensors()) {
    if (!nt.is_param) continue;
    if (nt.name.ends_with(".w")) {
      detail::fill_normal(nt.tensor, 0.0, 0.02, rng);
    } else if (nt.name.ends_with(".gamma")) {
      detail::fill_normal(nt.tensor, 1.0, 0.02, rng);
    }
    // .b and .beta stay zero
  }
}

template <typename T>
int64_t count_parameters(const std::vector<Tensor<T>>& params) {
  int64_t n = 0;
  for (const Tensor<T>& p : params) n += p.numel();
  return n;
}

// Two-hidden-layer MLP generator for 2-D toy data: z -> (B, 2).
template <typename T>
struct MlpGenerator {
  int64_t z_dim = 0;
  int64_t hidden = 0;
  layers::Linear<T> l1, l2, out;

  Tensor<T> forward(Tape<T>* tape, const Tensor<T>& z) const {
    Tensor<T> h = ops::relu(tape, l1.forward(tape, z));
    h = ops::relu(tape, l2.forward(tape, h));
    return out.forward(tape, h);
  }

  std::vector<NamedTensor<T>> named_tensors() const {
    return {
        {"l1.w", l1.w, true},   {"l1.b", l1.b, true},  {"l2.w", l2.w, true},
        {"l2.b", l2.b, true},   {"out.w", out.w, true}, {"out.b", out.b, true},
    };
  }

  std::vector<Tensor<T>> parameters() const {
    std::vector<Tensor<T>> out_v;
    for (const NamedTensor<T>& nt : named_tensors()) out_v.push_back(nt.tensor);
    return out_v;
  }
};

// MLP discriminator with the same split-head layout as the conv net.
template <typename T>
struct MlpDiscriminator {
  int64_t in_dim = 2;
  int64_t hidden = 0;
  int64_t feature_dim = 0;
  LfmMode mode = LfmMode::Full;
  layers::Linear<T> l1, l2, score_head, feature_head, f_map;

  struct Output {
    Tensor<T> score;
    Tensor<T> feature_raw;
    Tensor<T> feature_f;
  };

  Tensor<T> backbone(Tape<T>* tape, const Tensor<T>& x) const {
    Tensor<T> h = ops::leaky_relu(tape, l1.forward(tape, x), T(0.2));
    return ops::leaky_relu(tape, l2.forward(tape, h), T(0.2));
  }

  Tensor<T> score_from(Tape<T>* tape, const Tensor<T>& h) const {
    return ops::sigmoid(tape, score_head.forward(tape, h));
  }

  Tensor<T> feature_from(Tape<T>* tape, const Tensor<T>& h) const {
    return ops::tanh(tape, feature_head.forward(tape, h));
  }

  Tensor<T> apply_f(Tape<T>* tape, const Tensor<T>& feature) const {
    if (mode != LfmMode::Full) return feature;
    return ops::tanh(tape, f_map.forward(tape, feature));
  }

  Tensor<T> forward_score(Tape<T>* tape, const Tensor<T>& x) const {
    return score_from(tape, backbone(tape, x));
  }

  Output forward(Tape<T>* tape, const Tensor<T>& x) const {
    Output o;
    Tensor<T> h = backbone(tape, x);
    o.score = score_from(tape, h);
    o.feature_raw = feature_from(tape, h);
    o.feature_f = apply_f(tape, o.feature_raw);
    return o;
  }

  std::vector<NamedTensor<T>> named_tensors() const {
    std::vector<NamedTensor<T>> out{
        {"l1.w", l1.w, true},     {"l1.b", l1.b, true},     {"l2.w", l2.w, true},     {"l2.b", l2.b, true},
        {"score.w", score_head.w, true}, {"score.b", score_head.b, true},
        {"feat.w", feature_head.w, true}, {"feat.b", feature_head.b, true},
    };
    if (mode == LfmMode::Full) {
      out.push_back({"f.w", f_map.w, true});
      out.push_back({"f.b", f_map.b, true});
    }
    return out;
  }

  std::vector<Tensor<T>> parameters() const {
    std::vector<Tensor<T>> out_v;
    for (const NamedTensor<T>& nt : named_tensors()) out_v.push_back(nt.tensor);
    return out_v;
  }
};

template <typename T>
struct MlpGanPair {
  MlpGenerator<T> g;
  MlpDiscriminator<T> d;
};

// Builds and initializes the toy pair. Linear weights ~ N(0, 1/sqrt(fan_in)),
// biases zero; draw order follows named_tensors() of G then D.
template <typename T>
MlpGanPair<T> build_mlp_gan(int64_t z_dim, int64_t hidden, int64_t feature_dim, LfmMode mode, uint64_t seed) {
  if (z_dim < 1 || hidden < 1 || feature_dim < 1) throw std::invalid_argument("build_mlp_gan: bad dimensions");
  MlpGanPair<T> pair;
  auto make_linear = [](int64_t out_dim, int64_t in_dim) {
    layers::Linear<T> l;
    l.w = Tensor<T>(Shape{out_dim, in_dim}, true);
    l.b = Tensor<T>(Shape{out_dim}, true);
    return l;
  };
  pair.g.z_dim = z_dim;
  pair.g.hidden = hidden;
  pair.g.l1 = make_linear(hidden, z_dim);
  pair.g.l2 = make_linear(hidden, hidden);
  pair.g.out = make_linear(2, hidden);
  pair.d.hidden = hidden;
  pair.d.feature_dim = feature_dim;
  pair.d.mode = mode;
  pair.d.l1 = make_linear(hidden, pair.d.in_dim);
  pair.d.l2 = make_linear(hidden, hidden);
  pair.d.score_head = make_linear(1, hidden);
  pair.d.feature_head = make_linear(feature_dim, hidden);
  if (mode == LfmMode::Full) pair.d.f_map = make_linear(feature_dim, feature_dim);

  Rng rng(seed);
  auto init_linear_weights = [&rng](const std::vector<NamedTensor<T>>& named) {
    for (NamedTensor<T> nt : named) {
      if (nt.name.ends_with(".w")) {
        const double stddev = 1.0 / std::sqrt(static_cast<double>(nt.tensor.dim(1)));
        detail::fill_normal(nt.tensor, 0.0, stddev, rng);
      }
    }
  };
  init_linear_weights(pair.g.named_tensors());
  init_linear_weights(pair.d.named_tensors());
  return pair;
}

}  // namespace lfmgan
