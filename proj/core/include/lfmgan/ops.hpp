#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lfmgan/tape.hpp"
#include "lfmgan/tensor.hpp"

namespace lfmgan::ops {

namespace detail {

template <typename T>
inline bool rec(Tape<T>* tape, const Tensor<T>& a) {
  return tape != nullptr && a.requires_grad();
}
template <typename T>
inline bool rec(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  return tape != nullptr && (a.requires_grad() || b.requires_grad());
}

template <typename T>
inline void require_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
}

}  // namespace detail

template <typename T>
Tensor<T> add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape("add", a, b);
  Tensor<T> out(a.shape(), detail::rec(tape, a, b));
  const int64_t n = a.numel();
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
  if (out.requires_grad()) {
    tape->record([a = a, b = b, out]() mutable {
      const T* g = out.grad();
      const int64_t m = out.numel();
      if (a.requires_grad()) {
        T* ga = a.grad();
        for (int64_t i = 0; i < m; ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        T* gb = b.grad();
        for (int64_t i = 0; i < m; ++i) gb[i] += g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape("mul", a, b);
  Tensor<T> out(a.shape(), detail::rec(tape, a, b));
  const int64_t n = a.numel();
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
  if (out.requires_grad()) {
    tape->record([a = a, b = b, out]() mutable {
      const T* g = out.grad();
      const int64_t m = out.numel();
      if (a.requires_grad()) {
        T* ga = a.grad();
        const T* pb2 = b.data();
        for (int64_t i = 0; i < m; ++i) ga[i] += g[i] * pb2[i];
      }
      if (b.requires_grad()) {
        T* gb = b.grad();
        const T* pa2 = a.data();
        for (int64_t i = 0; i < m; ++i) gb[i] += g[i] * pa2[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> scale(Tape<T>* tape, const Tensor<T>& a, T factor) {
  Tensor<T> out(a.shape(), detail::rec(tape, a));
  const int64_t n = a.numel();
  const T* pa = a.data();
  T* po = out.data();
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * factor;
  if (out.requires_grad()) {
    tape->record([a = a, out, factor]() mutable {
      const T* g = out.grad();
      T* ga = a.grad();
      const int64_t m = out.numel();
      for (int64_t i = 0; i < m; ++i) ga[i] += g[i] * factor;
    });
  }
  return out;
}

template <typename T>
Tensor<T> add_scalar(Tape<T>* tape, const Tensor<T>& a, T value) {
  Tensor<T> out(a.shape(), detail::rec(tape, a));
  const int64_t n = a.numel();
  const T* pa = a.data();
  T* po = out.data();
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + value;
  if (out.requires_grad()) {
    tape->record([a = a, out]() mutable {
      const T* g = out.grad();
      T* ga = a.grad();
      const int64_t m = out.numel();
      for (int64_t i = 0; i < m; ++i) ga[i] += g[i];
    });
  }
  return out;
}

// Inner product over flattened elements; shapes may differ as long as the
// element counts match.
template <typename T>
Tensor<T> dot(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.numel() != b.numel()) {
    throw std::invalid_argument("dot: element counts differ, " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
  Tensor<T> out(Shape{}, detail::rec(tape, a, b));
  const int64_t n = a.numel();
  const T* pa = a.data();
  const T* pb = b.data();
  T acc = T(0);
  for (int64_t i = 0; i < n; ++i) acc += pa[i] * pb[i];
  out.data()[0] = acc;
  if (out.requires_grad()) {
    tape->record([a = a, b = b, out]() mutable {
      const T g = out.grad()[0];
      const int64_t m = a.numel();
      if (a.requires_grad()) {
        T* ga = a.grad();
        const T* pb2 = b.data();
        for (int64_t i = 0; i < m; ++i) ga[i] += g * pb2[i];
      }
      if (b.requires_grad()) {
        T* gb = b.grad();
        const T* pa2 = a.data();
        for (int64_t i = 0; i < m; ++i) gb[i] += g * pa2[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> sum(Tape<T>* tape, const Tensor<T>& a) {
  Tensor<T> out(Shape{}, detail::rec(tape, a));
  const int64_t n = a.numel();
  const T* pa = a.data();
  T acc = T(0);
  for (int64_t i = 0; i < n; ++i) acc += pa[i];
  out.data()[0] = acc;
  if (out.requires_grad()) {
    tape->record([a = a, out]() mutable {
      const T g = out.grad()[0];
      T* ga = a.grad();
      const int64_t m = a.numel();
      for (int64_t i = 0; i < m; ++i) ga[i] += g;
    });
  }
  return out;
}

template <typename T>
Tensor<T> mean(Tape<T>* tape, const Tensor<T>& a) {
  if (a.numel() == 0) throw std::invalid_argument("mean: empty tensor");
  Tensor<T> s = sum(tape, a);
  return scale(tape, s, T(1) / static_cast<T>(a.numel()));
}

template <typename T>
Tensor<T> abs(Tape<T>* tape, const Tensor<T>& a) {
  Tensor<T> out(a.shape(), detail::rec(tape, a));
  const int64_t n = a.numel();
  const T* pa = a.data();
  T* po = out.data();
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] < T(0) ? -pa[i] : pa[i];
  if (out.requires_grad()) {
    tape->record([a = a, out]() mutable {
      const T* g = out.grad();
      const T* pa2 = a.data();
      T* ga = a.grad();
      const int64_t m = out.numel();
      for (int64_t i = 0; i < m; ++i) {
        if (pa2[i] > T(0)) ga[i] += g[i];
        else if (pa2[i] < T(0)) ga[i] -= g[i];
        // derivative at exactly zero is taken as zero
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> relu(Tape<T>* tape, const Tensor<T>& a) {
  Tensor<T> out(a.shape(), detail::rec(tape, a));
  const int64_t n = a.numel();
  const T* pa = a.data();
  T* po = out.data();
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] > T(0) ? pa[i] : T(0);
  if (out.requires_grad()) {
    tape->record([a = a, out]() mutable {
      const T* g = out.grad();
      const T* pa2 = a.data();
      T* ga = a.grad();
      const int64_t m = out.numel();
      for (int64_t i = 0; i < m; ++i) {
        if (pa2[i] > T(0)) ga[i] += g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> leaky_relu(Tape<T>* tape, const Tensor<T>& a, T negative_slope) {
  Tensor<T> out(a.shape(), detail::rec(tape, a));
  const int64_t n = a.numel();
  const T* pa = a.data();
  T* po = out.data();
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] > T(0) ? pa[i] : pa[i] * negative_slope;
  if (out.requires_grad()) {
    tape->record([a = a, out, negative_slope]() mutable {
      const T* g = out.grad();
      const T* pa2 = a.data();
      T* ga = a.grad();
      const int64_t m = out.numel();
      for (int64_t i = 0; i < m; ++i) ga[i] += g[i] * (pa2[i] > T(0) ? T(1) : negative_slope);
    });
  }
  return out;
}

template <typename T>
Tensor<T> tanh(Tape<T>* tape, const Tensor<T>& a) {
  Tensor<T> out(a.shape(), detail::rec(tape, a));
  const int64_t n = a.numel();
  const T* pa = a.data();
  T* po = out.data();
  for (int64_t i = 0; i < n; ++i) po[i] = std::tanh(pa[i]);
  if (out.requires_grad()) {
    tape->record([a = a, out]() mutable {
      const T* g = out.grad();
      const T* py = out.data();
      T* ga = a.grad();
      const int64_t m = out.numel();
      for (int64_t i = 0; i < m; ++i) ga[i] += g[i] * (T(1) - py[i] * py[i]);
    });
  }
  return out;
}

template <typename T>
Tensor<T> sigmoid(Tape<T>* tape, const Tensor<T>& a) {
  Tensor<T> out(a.shape(), detail::rec(tape, a));
  const int64_t n = a.numel();
  const T* pa = a.data();
  T* po = out.data();
  for (int64_t i = 0; i < n; ++i) po[i] = T(1) / (T(1) + std::exp(-pa[i]));
  if (out.requires_grad()) {
    tape->record([a = a, out]() mutable {
      const T* g = out.grad();
      const T* py = out.data();
      T* ga = a.grad();
      const int64_t m = out.numel();
      for (int64_t i = 0; i < m; ++i) ga[i] += g[i] * py[i] * (T(1) - py[i]);
    });
  }
  return out;
}

// Mean binary cross-entropy. Predictions are clamped to [eps, 1-eps] before
// the log; gradient flows only through unclamped entries. Targets must be
// exactly 0 or 1.
template <typename T>
Tensor<T> bce(Tape<T>* tape, const Tensor<T>& pred, const Tensor<T>& target) {
  detail::require_same_shape("bce", pred, target);
  const int64_t n = pred.numel();
  if (n == 0) throw std::invalid_argument("bce: empty tensor");
  const T* pt = target.data();
  for (int64_t i = 0; i < n; ++i) {
    if (pt[i] != T(0) && pt[i] != T(1)) throw std::invalid_argument("bce: targets must be 0 or 1");
  }
  const T eps = static_cast<T>(1e-7);
  const T lo = eps;
  const T hi = T(1) - eps;
  Tensor<T> out(Shape{}, detail::rec(tape, pred));
  const T* pp = pred.data();
  T acc = T(0);
  for (int64_t i = 0; i < n; ++i) {
    T p = pp[i] < lo ? lo : (pp[i] > hi ? hi : pp[i]);
    acc += pt[i] == T(1) ? -std::log(p) : -std::log(T(1) - p);
  }
  out.data()[0] = acc / static_cast<T>(n);
  if (out.requires_grad()) {
    tape->record([pred = pred, target = target, out, lo, hi]() mutable {
      const T g = out.grad()[0];
      const int64_t m = pred.numel();
      const T inv_n = T(1) / static_cast<T>(m);
      const T* pp2 = pred.data();
      const T* pt2 = target.data();
      T* gp = pred.grad();
      for (int64_t i = 0; i < m; ++i) {
        if (pp2[i] < lo || pp2[i] > hi) continue;
        const T p = pp2[i];
        gp[i] += g * inv_n * (pt2[i] == T(1) ? -T(1) / p : T(1) / (T(1) - p));
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> bce_const(Tape<T>* tape, const Tensor<T>& pred, T target01) {
  return bce(tape, pred, Tensor<T>::full(pred.shape(), target01));
}

template <typename T>
Tensor<T> reshape(Tape<T>* tape, const Tensor<T>& a, Shape shape) {
  if (numel_of(shape) != a.numel()) {
    throw std::invalid_argument("reshape: " + shape_str(shape) + " has wrong element count for " +
                                shape_str(a.shape()));
  }
  Tensor<T> out(shape, detail::rec(tape, a));
  const int64_t n = a.numel();
  const T* pa = a.data();
  T* po = out.data();
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i];
  if (out.requires_grad()) {
    tape->record([a = a, out]() mutable {
      const T* g = out.grad();
      T* ga = a.grad();
      const int64_t m = a.numel();
      for (int64_t i = 0; i < m; ++i) ga[i] += g[i];
    });
  }
  return out;
}

// Rows [row_begin, row_end) along the leading dimension.
template <typename T>
Tensor<T> slice_rows(Tape<T>* tape, const Tensor<T>& a, int64_t row_begin, int64_t row_end) {
  if (a.rank() < 1) throw std::invalid_argument("slice_rows: scalar input");
  const int64_t rows = a.dim(0);
  if (row_begin < 0 || row_end > rows || row_begin >= row_end) {
    throw std::invalid_argument("slice_rows: bad range [" + std::to_string(row_begin) + "," +
                                std::to_string(row_end) + ") for " + shape_str(a.shape()));
  }
  Shape out_shape = a.shape();
  out_shape[0] = row_end - row_begin;
  const int64_t row_size = a.numel() / rows;
  Tensor<T> out(out_shape, detail::rec(tape, a));
  const T* pa = a.data() + row_begin * row_size;
  T* po = out.data();
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i];
  if (out.requires_grad()) {
    tape->record([a = a, out, row_begin, row_size]() mutable {
      const T* g = out.grad();
      T* ga = a.grad() + row_begin * row_size;
      const int64_t m = out.numel();
      for (int64_t i = 0; i < m; ++i) ga[i] += g[i];
    });
  }
  return out;
}

// y = x w^T + b with x (N, in), w (out, in), b (out).
template <typename T>
Tensor<T> linear(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b) {
  if (x.rank() != 2 || w.rank() != 2) {
    throw std::invalid_argument("linear: expected rank-2 input and weight, got " + shape_str(x.shape()) + " and " +
                                shape_str(w.shape()));
  }
  const int64_t n = x.dim(0);
  const int64_t in = x.dim(1);
  const int64_t out_dim = w.dim(0);
  if (w.dim(1) != in) {
    throw std::invalid_argument("linear: weight " + shape_str(w.shape()) + " does not match input " +
                                shape_str(x.shape()));
  }
  if (b != nullptr && (b->rank() != 1 || b->dim(0) != out_dim)) {
    throw std::invalid_argument("linear: bias must be (" + std::to_string(out_dim) + ")");
  }
  bool needs = tape != nullptr && (x.requires_grad() || w.requires_grad() || (b && b->requires_grad()));
  Tensor<T> out(Shape{n, out_dim}, needs);
  const T* px = x.data();
  const T* pw = w.data();
  const T* pb = b ? b->data() : nullptr;
  T* po = out.data();
  for (int64_t r = 0; r < n; ++r) {
    for (int64_t o = 0; o < out_dim; ++o) {
      const T* xr = px + r * in;
      const T* wr = pw + o * in;
      T acc = pb ? pb[o] : T(0);
      for (int64_t i = 0; i < in; ++i) acc += xr[i] * wr[i];
      po[r * out_dim + o] = acc;
    }
  }
  if (out.requires_grad()) {
    Tensor<T> bias = b ? *b : Tensor<T>();
    tape->record([x = x, w = w, bias, out, n, in, out_dim]() mutable {
      const T* g = out.grad();
      if (x.requires_grad()) {
        T* gx = x.grad();
        const T* pw2 = w.data();
        for (int64_t r = 0; r < n; ++r) {
          for (int64_t o = 0; o < out_dim; ++o) {
            const T go = g[r * out_dim + o];
            const T* wr = pw2 + o * in;
            T* gxr = gx + r * in;
            for (int64_t i = 0; i < in; ++i) gxr[i] += go * wr[i];
          }
        }
      }
      if (w.requires_grad()) {
        T* gw = w.grad();
        const T* px2 = x.data();
        for (int64_t r = 0; r < n; ++r) {
          for (int64_t o = 0; o < out_dim; ++o) {
            const T go = g[r * out_dim + o];
            const T* xr = px2 + r * in;
            T* gwr = gw + o * in;
            for (int64_t i = 0; i < in; ++i) gwr[i] += go * xr[i];
          }
        }
      }
      if (bias.defined() && bias.requires_grad()) {
        T* gb = bias.grad();
        for (int64_t r = 0; r < n; ++r) {
          for (int64_t o = 0; o < out_dim; ++o) gb[o] += g[r * out_dim + o];
        }
      }
    });
  }
  return out;
}

// Cross-correlation with x (N, Cin, H, W), w (Cout, Cin, K, K).
// Output H' = (H + 2 pad - K) / stride + 1, floored.
template <typename T>
Tensor<T> conv2d(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b, int64_t stride,
                 int64_t pad) {
  if (x.rank() != 4 || w.rank() != 4) {
    throw std::invalid_argument("conv2d: expected rank-4 input and weight, got " + shape_str(x.shape()) + " and " +
                                shape_str(w.shape()));
  }
  if (stride < 1 || pad < 0) throw std::invalid_argument("conv2d: stride must be >= 1 and pad >= 0");
  const int64_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int64_t cout = w.dim(0), k = w.dim(2);
  if (w.dim(1) != cin) {
    throw std::invalid_argument("conv2d: weight " + shape_str(w.shape()) + " does not match input channels " +
                                std::to_string(cin));
  }
  if (w.dim(3) != k) throw std::invalid_argument("conv2d: kernel must be square, got " + shape_str(w.shape()));
  if (h + 2 * pad < k || wd + 2 * pad < k) {
    throw std::invalid_argument("conv2d: kernel larger than padded input");
  }
  if (b != nullptr && (b->rank() != 1 || b->dim(0) != cout)) {
    throw std::invalid_argument("conv2d: bias must be (" + std::to_string(cout) + ")");
  }
  const int64_t oh = (h + 2 * pad - k) / stride + 1;
  const int64_t ow = (wd + 2 * pad - k) / stride + 1;
  bool needs = tape != nullptr && (x.requires_grad() || w.requires_grad() || (b && b->requires_grad()));
  Tensor<T> out(Shape{n, cout, oh, ow}, needs);
  const T* px = x.data();
  const T* pw = w.data();
  const T* pb = b ? b->data() : nullptr;
  T* po = out.data();
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t co = 0; co < cout; ++co) {
      T* out_plane = po + (ni * cout + co) * oh * ow;
      if (pb) {
        for (int64_t i = 0; i < oh * ow; ++i) out_plane[i] = pb[co];
      }
      for (int64_t ci = 0; ci < cin; ++ci) {
        const T* in_plane = px + (ni * cin + ci) * h * wd;
        const T* ker = pw + (co * cin + ci) * k * k;
        for (int64_t y = 0; y < oh; ++y) {
          for (int64_t xo = 0; xo < ow; ++xo) {
            T acc = out_plane[y * ow + xo];
            const int64_t iy0 = y * stride - pad;
            const int64_t ix0 = xo * stride - pad;
            for (int64_t ky = 0; ky < k; ++ky) {
              const int64_t iy = iy0 + ky;
              if (iy < 0 || iy >= h) continue;
              for (int64_t kx = 0; kx < k; ++kx) {
                const int64_t ix = ix0 + kx;
                if (ix < 0 || ix >= wd) continue;
                acc += in_plane[iy * wd + ix] * ker[ky * k + kx];
              }
            }
            out_plane[y * ow + xo] = acc;
          }
        }
      }
    }
  }
  if (out.requires_grad()) {
    Tensor<T> bias = b ? *b : Tensor<T>();
    tape->record([x = x, w = w, bias, out, n, cin, cout, h, wd, k, oh, ow, stride, pad]() mutable {
      const T* g = out.grad();
      const T* px2 = x.data();
      const T* pw2 = w.data();
      T* gx = x.requires_grad() ? x.grad() : nullptr;
      T* gw = w.requires_grad() ? w.grad() : nullptr;
      for (int64_t ni = 0; ni < n; ++ni) {
        for (int64_t co = 0; co < cout; ++co) {
          const T* g_plane = g + (ni * cout + co) * oh * ow;
          for (int64_t ci = 0; ci < cin; ++ci) {
            const T* in_plane = px2 + (ni * cin + ci) * h * wd;
            const T* ker = pw2 + (co * cin + ci) * k * k;
            T* gin_plane = gx ? gx + (ni * cin + ci) * h * wd : nullptr;
            T* gker = gw ? gw + (co * cin + ci) * k * k : nullptr;
            for (int64_t y = 0; y < oh; ++y) {
              for (int64_t xo = 0; xo < ow; ++xo) {
                const T go = g_plane[y * ow + xo];
                if (go == T(0)) continue;
                const int64_t iy0 = y * stride - pad;
                const int64_t ix0 = xo * stride - pad;
                for (int64_t ky = 0; ky < k; ++ky) {
                  const int64_t iy = iy0 + ky;
                  if (iy < 0 || iy >= h) continue;
                  for (int64_t kx = 0; kx < k; ++kx) {
                    const int64_t ix = ix0 + kx;
                    if (ix < 0 || ix >= wd) continue;
                    if (gin_plane) gin_plane[iy * wd + ix] += go * ker[ky * k + kx];
                    if (gker) gker[ky * k + kx] += go * in_plane[iy * wd + ix];
                  }
                }
              }
            }
          }
        }
      }
      if (bias.defined() && bias.requires_grad()) {
        T* gb = bias.grad();
        for (int64_t ni = 0; ni < n; ++ni) {
          for (int64_t co = 0; co < cout; ++co) {
            const T* g_plane = g + (ni * cout + co) * oh * ow;
            T acc = T(0);
            for (int64_t i = 0; i < oh * ow; ++i) acc += g_plane[i];
            gb[co] += acc;
          }
        }
      }
    });
  }
  return out;
}

// Transposed convolution (adjoint of conv2d in its input) with
// x (N, Cin, H, W), w (Cin, Cout, K, K). Output H' = (H-1) stride - 2 pad + K.
template <typename T>
Tensor<T> conv_transpose2d(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b,
                           int64_t stride, int64_t pad) {
  if (x.rank() != 4 || w.rank() != 4) {
    throw std::invalid_argument("conv_transpose2d: expected rank-4 input and weight, got " + shape_str(x.shape()) +
                                " and " + shape_str(w.shape()));
  }
  if (stride < 1 || pad < 0) throw std::invalid_argument("conv_transpose2d: stride must be >= 1 and pad >= 0");
  const int64_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int64_t cout = w.dim(1), k = w.dim(2);
  if (w.dim(0) != cin) {
    throw std::invalid_argument("conv_transpose2d: weight " + shape_str(w.shape()) +
                                " does not match input channels " + std::to_string(cin));
  }
  if (w.dim(3) != k) {
    throw std::invalid_argument("conv_transpose2d: kernel must be square, got " + shape_str(w.shape()));
  }
  const int64_t oh = (h - 1) * stride - 2 * pad + k;
  const int64_t ow = (wd - 1) * stride - 2 * pad + k;
  if (oh < 1 || ow < 1) throw std::invalid_argument("conv_transpose2d: empty output");
  if (b != nullptr && (b->rank() != 1 || b->dim(0) != cout)) {
    throw std::invalid_argument("conv_transpose2d: bias must be (" + std::to_string(cout) + ")");
  }
  bool needs = tape != nullptr && (x.requires_grad() || w.requires_grad() || (b && b->requires_grad()));
  Tensor<T> out(Shape{n, cout, oh, ow}, needs);
  const T* px = x.data();
  const T* pw = w.data();
  const T* pb = b ? b->data() : nullptr;
  T* po = out.data();
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t co = 0; co < cout; ++co) {
      if (pb) {
        T* out_plane = po + (ni * cout + co) * oh * ow;
        for (int64_t i = 0; i < oh * ow; ++i) out_plane[i] = pb[co];
      }
    }
    for (int64_t ci = 0; ci < cin; ++ci) {
      const T* in_plane = px + (ni * cin + ci) * h * wd;
      for (int64_t co = 0; co < cout; ++co) {
        const T* ker = pw + (ci * cout + co) * k * k;
        T* out_plane = po + (ni * cout + co) * oh * ow;
        for (int64_t y = 0; y < h; ++y) {
          for (int64_t xi = 0; xi < wd; ++xi) {
            const T v = in_plane[y * wd + xi];
            if (v == T(0)) continue;
            const int64_t oy0 = y * stride - pad;
            const int64_t ox0 = xi * stride - pad;
            for (int64_t ky = 0; ky < k; ++ky) {
              const int64_t oy = oy0 + ky;
              if (oy < 0 || oy >= oh) continue;
              for (int64_t kx = 0; kx < k; ++kx) {
                const int64_t ox = ox0 + kx;
                if (ox < 0 || ox >= ow) continue;
                out_plane[oy * ow + ox] += v * ker[ky * k + kx];
              }
            }
          }
        }
      }
    }
  }
  if (out.requires_grad()) {
    Tensor<T> bias = b ? *b : Tensor<T>();
    tape->record([x = x, w = w, bias, out, n, cin, cout, h, wd, k, oh, ow, stride, pad]() mutable {
      const T* g = out.grad();
      const T* px2 = x.data();
      const T* pw2 = w.data();
      T* gx = x.requires_grad() ? x.grad() : nullptr;
      T* gw = w.requires_grad() ? w.grad() : nullptr;
      for (int64_t ni = 0; ni < n; ++ni) {
        for (int64_t ci = 0; ci < cin; ++ci) {
          const T* in_plane = px2 + (ni * cin + ci) * h * wd;
          T* gin_plane = gx ? gx + (ni * cin + ci) * h * wd : nullptr;
          for (int64_t co = 0; co < cout; ++co) {
            const T* ker = pw2 + (ci * cout + co) * k * k;
            T* gker = gw ? gw + (ci * cout + co) * k * k : nullptr;
            const T* g_plane = g + (ni * cout + co) * oh * ow;
            for (int64_t y = 0; y < h; ++y) {
              for (int64_t xi = 0; xi < wd; ++xi) {
                const int64_t oy0 = y * stride - pad;
                const int64_t ox0 = xi * stride - pad;
                T gin_acc = T(0);
                const T v = in_plane[y * wd + xi];
                for (int64_t ky = 0; ky < k; ++ky) {
                  const int64_t oy = oy0 + ky;
                  if (oy < 0 || oy >= oh) continue;
                  for (int64_t kx = 0; kx < k; ++kx) {
                    const int64_t ox = ox0 + kx;
                    if (ox < 0 || ox >= ow) continue;
                    const T go = g_plane[oy * ow + ox];
                    gin_acc += go * ker[ky * k + kx];
                    if (gker) gker[ky * k + kx] += go * v;
                  }
                }
                if (gin_plane) gin_plane[y * wd + xi] += gin_acc;
              }
            }
          }
        }
      }
      if (bias.defined() && bias.requires_grad()) {
        T* gb = bias.grad();
        for (int64_t ni = 0; ni < n; ++ni) {
          for (int64_t co = 0; co < cout; ++co) {
            const T* g_plane = g + (ni * cout + co) * oh * ow;
            T acc = T(0);
            for (int64_t i = 0; i < oh * ow; ++i) acc += g_plane[i];
            gb[co] += acc;
          }
        }
      }
    });
  }
  return out;
}

enum class BnMode {
  Train,        // batch stats, running stats updated
  EvalBatch,    // batch stats, running stats untouched
  EvalRunning,  // running stats
};

// Per-channel batch normalization over (N, C, H, W). Batch variance is the
// biased estimate; the running variance update uses the unbiased one.
template <typename T>
Tensor<T> batchnorm2d(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                      Tensor<T>& running_mean, Tensor<T>& running_var, BnMode mode, T eps = static_cast<T>(1e-5),
                      T momentum = static_cast<T>(0.1)) {
  if (x.rank() != 4) throw std::invalid_argument("batchnorm2d: expected rank-4 input, got " + shape_str(x.shape()));
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int64_t m = n * h * wd;
  auto check_param = [&](const char* what, const Tensor<T>& p) {
    if (p.rank() != 1 || p.dim(0) != c) {
      throw std::invalid_argument(std::string("batchnorm2d: ") + what + " must be (" + std::to_string(c) + ")");
    }
  };
  check_param("gamma", gamma);
  check_param("beta", beta);
  check_param("running_mean", running_mean);
  check_param("running_var", running_var);
  const bool batch_stats = mode != BnMode::EvalRunning;
  if (batch_stats && m < 2) {
    throw std::invalid_argument("batchnorm2d: batch statistics need at least 2 values per channel");
  }

  std::vector<T> mu(static_cast<size_t>(c)), ivar(static_cast<size_t>(c));
  const T* px = x.data();
  if (batch_stats) {
    for (int64_t ci = 0; ci < c; ++ci) {
      T s = T(0);
      for (int64_t ni = 0; ni < n; ++ni) {
        const T* plane = px + (ni * c + ci) * h * wd;
        for (int64_t i = 0; i < h * wd; ++i) s += plane[i];
      }
      const T mean_c = s / static_cast<T>(m);
      T v = T(0);
      for (int64_t ni = 0; ni < n; ++ni) {
        const T* plane = px + (ni * c + ci) * h * wd;
        for (int64_t i = 0; i < h * wd; ++i) {
          const T d = plane[i] - mean_c;
          v += d * d;
        }
      }
      const T var_c = v / static_cast<T>(m);
      mu[static_cast<size_t>(ci)] = mean_c;
      ivar[static_cast<size_t>(ci)] = T(1) / std::sqrt(var_c + eps);
      if (mode == BnMode::Train) {
        const T unbiased = v / static_cast<T>(m - 1);
        running_mean.data()[ci] = (T(1) - momentum) * running_mean.data()[ci] + momentum * mean_c;
        running_var.data()[ci] = (T(1) - momentum) * running_var.data()[ci] + momentum * unbiased;
      }
    }
  } else {
    for (int64_t ci = 0; ci < c; ++ci) {
      mu[static_cast<size_t>(ci)] = running_mean.data()[ci];
      ivar[static_cast<size_t>(ci)] = T(1) / std::sqrt(running_var.data()[ci] + eps);
    }
  }

  bool needs = tape != nullptr && (x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
  Tensor<T> out(x.shape(), needs);
  T* po = out.data();
  const T* pg = gamma.data();
  const T* pbta = beta.data();
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t ci = 0; ci < c; ++ci) {
      const T* in_plane = px + (ni * c + ci) * h * wd;
      T* out_plane = po + (ni * c + ci) * h * wd;
      const T mc = mu[static_cast<size_t>(ci)];
      const T vc = ivar[static_cast<size_t>(ci)];
      const T gc = pg[ci];
      const T bc = pbta[ci];
      for (int64_t i = 0; i < h * wd; ++i) out_plane[i] = (in_plane[i] - mc) * vc * gc + bc;
    }
  }

  if (out.requires_grad()) {
    tape->record([x = x, gamma = gamma, beta = beta, out, mu = std::move(mu), ivar = std::move(ivar), n, c, h, wd, m,
                  batch_stats]() mutable {
      const T* g = out.grad();
      const T* px2 = x.data();
      const T* pg2 = gamma.data();
      const int64_t plane_sz = h * wd;
      for (int64_t ci = 0; ci < c; ++ci) {
        const T mc = mu[static_cast<size_t>(ci)];
        const T vc = ivar[static_cast<size_t>(ci)];
        // per-channel reductions over the batch
        T sum_g = T(0), sum_gx = T(0);
        for (int64_t ni = 0; ni < n; ++ni) {
          const T* gp = g + (ni * c + ci) * plane_sz;
          const T* xp = px2 + (ni * c + ci) * plane_sz;
          for (int64_t i = 0; i < plane_sz; ++i) {
            sum_g += gp[i];
            sum_gx += gp[i] * (xp[i] - mc) * vc;
          }
        }
        if (gamma.requires_grad()) gamma.grad()[ci] += sum_gx;
        if (beta.requires_grad()) beta.grad()[ci] += sum_g;
        if (x.requires_grad()) {
          T* gx = x.grad();
          const T gc = pg2[ci];
          if (batch_stats) {
            const T inv_m = T(1) / static_cast<T>(m);
            for (int64_t ni = 0; ni < n; ++ni) {
              const T* gp = g + (ni * c + ci) * plane_sz;
              const T* xp = px2 + (ni * c + ci) * plane_sz;
              T* gxp = gx + (ni * c + ci) * plane_sz;
              for (int64_t i = 0; i < plane_sz; ++i) {
                const T xhat = (xp[i] - mc) * vc;
                gxp[i] += gc * vc * (gp[i] - inv_m * sum_g - xhat * inv_m * sum_gx);
              }
            }
          } else {
            for (int64_t ni = 0; ni < n; ++ni) {
              const T* gp = g + (ni * c + ci) * plane_sz;
              T* gxp = gx + (ni * c + ci) * plane_sz;
              for (int64_t i = 0; i < plane_sz; ++i) gxp[i] += gc * vc * gp[i];
            }
          }
        }
      }
    });
  }
  return out;
}

}  // namespace lfmgan::ops
