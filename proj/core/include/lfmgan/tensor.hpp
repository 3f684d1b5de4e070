#pragma once

#include <cstdint>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lfmgan {

using Shape = std::vector<int64_t>;

inline int64_t numel_of(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

// Shared-storage tensor handle. Copies alias the same buffer, so backward
// closures that capture a Tensor by value see gradients written later.
// The grad buffer exists only while requires_grad is set.
template <typename T>
class Tensor {
  static_assert(std::is_floating_point_v<T>, "Tensor element type must be float or double");

 public:
  Tensor() = default;

  explicit Tensor(Shape shape, bool requires_grad = false)
      : impl_(std::make_shared<Impl>()) {
    for (int64_t d : shape) {
      if (d < 0) throw std::invalid_argument("Tensor: negative extent in " + shape_str(shape));
    }
    impl_->shape = std::move(shape);
    impl_->data.assign(numel_of(impl_->shape), T(0));
    if (requires_grad) set_requires_grad(true);
  }

  static Tensor from(Shape shape, std::vector<T> values) {
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    if (numel_of(shape) != static_cast<int64_t>(values.size())) {
      throw std::invalid_argument("Tensor::from: value count does not match " + shape_str(shape));
    }
    t.impl_->shape = std::move(shape);
    t.impl_->data = std::move(values);
    return t;
  }

  static Tensor full(Shape shape, T value) {
    Tensor t(std::move(shape));
    for (T& v : t.impl_->data) v = value;
    return t;
  }

  static Tensor scalar(T value) { return full({}, value); }

  bool defined() const { return impl_ != nullptr; }

  const Shape& shape() const { return check().shape; }
  int rank() const { return static_cast<int>(check().shape.size()); }
  int64_t dim(int i) const { return check().shape.at(static_cast<size_t>(i)); }
  int64_t numel() const { return static_cast<int64_t>(check().data.size()); }

  T* data() { return check().data.data(); }
  const T* data() const { return check().data.data(); }
  T& at(int64_t i) { return check().data.at(static_cast<size_t>(i)); }
  T at(int64_t i) const { return check().data.at(static_cast<size_t>(i)); }

  T item() const {
    if (numel() != 1) throw std::invalid_argument("Tensor::item: tensor has " + std::to_string(numel()) + " elements");
    return check().data[0];
  }

  bool requires_grad() const { return check().requires_grad; }

  void set_requires_grad(bool on) {
    Impl& im = check();
    im.requires_grad = on;
    if (on) {
      im.grad.assign(im.data.size(), T(0));
    } else {
      im.grad.clear();
      im.grad.shrink_to_fit();
    }
  }

  // Null when requires_grad is off.
  T* grad() { return check().requires_grad ? check().grad.data() : nullptr; }
  const T* grad() const { return check().requires_grad ? check().grad.data() : nullptr; }

  void zero_grad() {
    Impl& im = check();
    for (T& g : im.grad) g = T(0);
  }

  // Deep copy of the values; the copy never carries gradient state.
  Tensor detach() const {
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    t.impl_->shape = check().shape;
    t.impl_->data = check().data;
    return t;
  }

 private:
  struct Impl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool requires_grad = false;
  };

  Impl& check() {
    if (!impl_) throw std::runtime_error("Tensor: use of default-constructed handle");
    return *impl_;
  }
  const Impl& check() const {
    if (!impl_) throw std::runtime_error("Tensor: use of default-constructed handle");
    return *impl_;
  }

  std::shared_ptr<Impl> impl_;
};

}  // namespace lfmgan
