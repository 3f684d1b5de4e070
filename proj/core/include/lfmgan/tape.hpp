#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "lfmgan/tensor.hpp"

namespace lfmgan {

// Records one backward closure per differentiable op, in forward order.
// backward() seeds d(loss)/d(loss) = 1 and replays the closures in reverse;
// each closure accumulates into its inputs' grad buffers with +=. Gradients
// therefore add up across backward calls until the caller zeroes them.
// A tape is single-use per forward pass: clear() before recording a new one.
template <typename T>
class Tape {
 public:
  void record(std::function<void()> backward_op) {
    ops_.push_back(std::move(backward_op));
  }

  size_t size() const { return ops_.size(); }

  void backward(const Tensor<T>& loss) {
    if (loss.numel() != 1) {
      throw std::invalid_argument("Tape::backward: loss must be a scalar, got " + shape_str(loss.shape()));
    }
    if (!loss.requires_grad()) {
      throw std::invalid_argument("Tape::backward: loss was not recorded on a tape");
    }
    Tensor<T> seed = loss;  // handles share storage, so this writes through
    seed.grad()[0] += T(1);
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
  }

  void clear() { ops_.clear(); }

 private:
  std::vector<std::function<void()>> ops_;
};

}  // namespace lfmgan
