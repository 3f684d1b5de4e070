#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lfmgan/tensor.hpp"

namespace lfmgan {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias-corrected moments: p -= lr * m_hat / (sqrt(v_hat) + eps).
// Moment buffers follow the parameter order given at construction, which is
// also the serialization order.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>> params, AdamConfig cfg = {}) : cfg_(cfg), params_(std::move(params)) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Tensor<T>& p : params_) {
      if (!p.requires_grad()) throw std::invalid_argument("Adam: parameter without gradient buffer");
      m_.emplace_back(static_cast<size_t>(p.numel()), T(0));
      v_.emplace_back(static_cast<size_t>(p.numel()), T(0));
    }
  }

  void step() {
    ++t_;
    const T bc1 = T(1) - static_cast<T>(std::pow(cfg_.beta1, static_cast<double>(t_)));
    const T bc2 = T(1) - static_cast<T>(std::pow(cfg_.beta2, static_cast<double>(t_)));
    const T b1 = static_cast<T>(cfg_.beta1);
    const T b2 = static_cast<T>(cfg_.beta2);
    const T lr = static_cast<T>(cfg_.lr);
    const T eps = static_cast<T>(cfg_.eps);
    for (size_t pi = 0; pi < params_.size(); ++pi) {
      Tensor<T>& p = params_[pi];
      const T* g = p.grad();
      T* pd = p.data();
      T* m = m_[pi].data();
      T* v = v_[pi].data();
      const int64_t n = p.numel();
      for (int64_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (T(1) - b1) * g[i];
        v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
        const T m_hat = m[i] / bc1;
        const T v_hat = v[i] / bc2;
        pd[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
      }
    }
  }

  void zero_grad() {
    for (Tensor<T>& p : params_) p.zero_grad();
  }

  const AdamConfig& config() const { return cfg_; }
  int64_t step_count() const { return t_; }
  void set_step_count(int64_t t) { t_ = t; }
  size_t size() const { return params_.size(); }
  std::vector<T>& moment1(size_t i) { return m_.at(i); }
  std::vector<T>& moment2(size_t i) { return v_.at(i); }
  const std::vector<T>& moment1(size_t i) const { return m_.at(i); }
  const std::vector<T>& moment2(size_t i) const { return v_.at(i); }

 private:
  AdamConfig cfg_;
  std::vector<Tensor<T>> params_;
  std::vector<std::vector<T>> m_, v_;
  int64_t t_ = 0;
};

}  // namespace lfmgan
