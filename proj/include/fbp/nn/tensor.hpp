#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace fbp::nn {

/// Dense NCHW tensor.
template <typename T>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, T fill = T{})
      : n(n_), c(c_), h(h_), w(w_), v(static_cast<size_t>(n_) * c_ * h_ * w_, fill) {}

  /// Reshape without clearing: callers either overwrite every element or
  /// call zero() first when they accumulate.
  void resize(int n_, int c_, int h_, int w_) {
    n = n_;
    c = c_;
    h = h_;
    w = w_;
    v.resize(static_cast<size_t>(n_) * c_ * h_ * w_);
  }

  void zero() { std::fill(v.begin(), v.end(), T{}); }

  size_t size() const { return v.size(); }
  size_t plane_size() const { return static_cast<size_t>(h) * w; }
  size_t item_size() const { return static_cast<size_t>(c) * h * w; }

  T* item(int in) { return v.data() + static_cast<size_t>(in) * item_size(); }
  const T* item(int in) const { return v.data() + static_cast<size_t>(in) * item_size(); }

  T* plane(int in, int ic) { return item(in) + static_cast<size_t>(ic) * plane_size(); }
  const T* plane(int in, int ic) const { return item(in) + static_cast<size_t>(ic) * plane_size(); }

  T& at(int in, int ic, int iy, int ix) {
    assert(in < n && ic < c && iy < h && ix < w);
    return v[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
  }
  const T& at(int in, int ic, int iy, int ix) const {
    assert(in < n && ic < c && iy < h && ix < w);
    return v[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
  }

  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
};

}  // namespace fbp::nn
