#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fbp/nn/tensor.hpp"
#include "fbp/rng.hpp"

// Building blocks of the segmentation network, templated on the scalar so
// tests can run the whole stack in double precision. Convolutions are im2col
// + GEMM; every layer caches what its backward pass needs, which makes a
// layer object single-user (share parameters across instances for concurrent
// inference, not the instances themselves).

namespace fbp::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using MatMap = Eigen::Map<Mat<T>>;
template <typename T>
using CMatMap = Eigen::Map<const Mat<T>>;

/// A trainable parameter array paired with its gradient accumulator.
template <typename T>
struct ParamSlice {
  T* value = nullptr;
  T* grad = nullptr;
  size_t count = 0;
};

/// Named view of a parameter or buffer tensor, for checkpoints.
template <typename T>
struct NamedTensorRef {
  std::string name;
  std::vector<int> shape;
  std::vector<T>* data = nullptr;
  bool trainable = true;
};

// ---------------------------------------------------------------------------
// im2col / col2im for odd-kernel same-padding convolutions, stride 1.
//
// Patch matrix layout: (npix rows, c*k*k columns), column-major, so each
// (ci, ky, kx) slice is one contiguous run of npix values and fills with
// shifted row copies. GEMMs then read it without any transposition:
//   Y(npix, oc) = Cols(npix, c*k*k) * W(c*k*k, oc).

template <typename T>
void im2col(const T* src, int c, int h, int w, int k, T* cols) {
  const int pad = (k - 1) / 2;
  const size_t npix = static_cast<size_t>(h) * w;
#pragma omp parallel for schedule(static) if (c * k * k >= 8)
  for (int col = 0; col < c * k * k; ++col) {
    const int ci = col / (k * k);
    const int ky = (col / k) % k;
    const int kx = col % k;
    const T* plane = src + static_cast<size_t>(ci) * npix;
    T* dst = cols + static_cast<size_t>(col) * npix;
    const int x_lo = std::max(0, pad - kx);            // first valid output x
    const int x_hi = w - std::max(0, kx - pad);        // one past the last
    for (int y = 0; y < h; ++y, dst += w) {
      const int sy = y + ky - pad;
      if (sy < 0 || sy >= h) {
        std::fill(dst, dst + w, T(0));
        continue;
      }
      const T* row = plane + static_cast<size_t>(sy) * w + (kx - pad);
      if (x_lo > 0) std::fill(dst, dst + x_lo, T(0));
      std::copy(row + x_lo, row + x_hi, dst + x_lo);
      if (x_hi < w) std::fill(dst + x_hi, dst + w, T(0));
    }
  }
}

template <typename T>
void col2im_accumulate(const T* cols, int c, int h, int w, int k, T* dst) {
  const int pad = (k - 1) / 2;
  const size_t npix = static_cast<size_t>(h) * w;
#pragma omp parallel for schedule(static) if (c >= 2)
  for (int ci = 0; ci < c; ++ci) {
    T* plane = dst + static_cast<size_t>(ci) * npix;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const int col = (ci * k + ky) * k + kx;
        const T* srcc = cols + static_cast<size_t>(col) * npix;
        const int x_lo = std::max(0, pad - kx);
        const int x_hi = w - std::max(0, kx - pad);
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= h) continue;
          T* row = plane + static_cast<size_t>(sy) * w + (kx - pad);
          const T* s = srcc + static_cast<size_t>(y) * w;
          for (int x = x_lo; x < x_hi; ++x) row[x] += s[x];
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------

/// 2-D convolution, odd kernel, same padding, stride 1.
///
/// In training mode the patch matrix built by the forward pass is kept and
/// reused by backward; batch items are processed in parallel with a
/// deterministic per-item gradient reduction.
template <typename T>
struct Conv2d {
  int in_ch = 0, out_ch = 0, k = 3;
  std::vector<T> weight;  // (out_ch, in_ch, k, k)
  std::vector<T> bias;    // (out_ch)
  std::vector<T> dweight, dbias;

  Tensor<T> cached_input;        // k == 1 only
  int cached_n = 0, cached_h = 0, cached_w = 0;
  bool cols_valid_ = false;
  std::vector<T> cols_, dcols_;  // (npix x rows) per batch item

  void init(int in, int out, int kernel, Rng& rng) {
    in_ch = in;
    out_ch = out;
    k = kernel;
    if (k % 2 == 0) throw std::invalid_argument("Conv2d: kernel size must be odd");
    weight.resize(static_cast<size_t>(out) * in * k * k);
    bias.assign(out, T(0));
    dweight.assign(weight.size(), T(0));
    dbias.assign(out, T(0));
    // He-style fan-in-scaled uniform init.
    const double bound = std::sqrt(6.0 / (static_cast<double>(in) * k * k));
    for (auto& x : weight) x = static_cast<T>(rng.uniform(-bound, bound));
  }

  void forward(const Tensor<T>& x, Tensor<T>& y, bool cache) {
    if (x.c != in_ch) throw std::invalid_argument("Conv2d: channel mismatch");
    y.resize(x.n, out_ch, x.h, x.w);
    const int rows = in_ch * k * k;
    const size_t npix = x.plane_size();
    cached_n = x.n;
    cached_h = x.h;
    cached_w = x.w;
    if (cache && k == 1) cached_input = x;

    CMatMap<T> W(weight.data(), rows, out_ch);  // column co = kernel of output channel co
    if (k == 1) {
      for (int in = 0; in < x.n; ++in) {
        MatMap<T> Y(y.item(in), npix, out_ch);
        CMatMap<T> X(x.item(in), npix, in_ch);
        Y.noalias() = X * W;
        for (int co = 0; co < out_ch; ++co) Y.col(co).array() += bias[co];
      }
      return;
    }

    const size_t slice = static_cast<size_t>(rows) * npix;
    if (cols_.size() < slice * x.n) cols_.resize(slice * x.n);  // grow-only scratch
    cols_valid_ = cache;
    auto item = [&](int in) {
      im2col(x.item(in), in_ch, x.h, x.w, k, cols_.data() + slice * in);
      MatMap<T> Y(y.item(in), npix, out_ch);
      CMatMap<T> C(cols_.data() + slice * in, npix, rows);
      Y.noalias() = C * W;
      for (int co = 0; co < out_ch; ++co) Y.col(co).array() += bias[co];
    };
    if (x.n > 1) {
#pragma omp parallel for schedule(static)
      for (int in = 0; in < x.n; ++in) item(in);
    } else {
      item(0);
    }
  }

  /// Requires a preceding forward(..., cache = true) on the same input.
  void backward(const Tensor<T>& dy, Tensor<T>& dx) {
    dx.resize(cached_n, in_ch, cached_h, cached_w);
    const int rows = in_ch * k * k;
    const size_t npix = static_cast<size_t>(cached_h) * cached_w;

    CMatMap<T> W(weight.data(), rows, out_ch);
    MatMap<T> dW(dweight.data(), rows, out_ch);
    if (k == 1) {
      for (int in = 0; in < cached_n; ++in) {
        CMatMap<T> dY(dy.item(in), npix, out_ch);
        for (int co = 0; co < out_ch; ++co) dbias[co] += dY.col(co).sum();
        CMatMap<T> X(cached_input.item(in), npix, in_ch);
        dW.noalias() += X.transpose() * dY;
        MatMap<T> dX(dx.item(in), npix, in_ch);
        dX.noalias() = dY * W.transpose();
      }
      return;
    }

    const size_t slice = static_cast<size_t>(rows) * npix;
    if (!cols_valid_ || cols_.size() < slice * cached_n)
      throw std::logic_error("Conv2d::backward without a cached training forward");
    if (dcols_.size() < slice * cached_n) dcols_.resize(slice * cached_n);
    std::vector<Mat<T>> dW_item(cached_n);
    std::vector<std::vector<T>> db_item(cached_n);

    auto item = [&](int in) {
      CMatMap<T> dY(dy.item(in), npix, out_ch);
      db_item[in].resize(out_ch);
      for (int co = 0; co < out_ch; ++co) db_item[in][co] = dY.col(co).sum();
      CMatMap<T> C(cols_.data() + slice * in, npix, rows);
      dW_item[in].noalias() = C.transpose() * dY;
      MatMap<T> dC(dcols_.data() + slice * in, npix, rows);
      dC.noalias() = dY * W.transpose();
      T* dst = dx.item(in);
      std::fill(dst, dst + dx.item_size(), T(0));
      col2im_accumulate(dcols_.data() + slice * in, in_ch, cached_h, cached_w, k, dst);
    };
    if (cached_n > 1) {
#pragma omp parallel for schedule(static)
      for (int in = 0; in < cached_n; ++in) item(in);
    } else {
      item(0);
    }
    for (int in = 0; in < cached_n; ++in) {  // fixed order, deterministic sums
      dW.noalias() += dW_item[in];
      for (int co = 0; co < out_ch; ++co) dbias[co] += db_item[in][co];
    }
  }

  void zero_grad() {
    std::fill(dweight.begin(), dweight.end(), T(0));
    std::fill(dbias.begin(), dbias.end(), T(0));
  }

  void collect(std::vector<ParamSlice<T>>& out) {
    out.push_back({weight.data(), dweight.data(), weight.size()});
    out.push_back({bias.data(), dbias.data(), bias.size()});
  }

  void name_tensors(const std::string& prefix, std::vector<NamedTensorRef<T>>& out) {
    out.push_back({prefix + ".weight", {out_ch, in_ch, k, k}, &weight, true});
    out.push_back({prefix + ".bias", {out_ch}, &bias, true});
  }
};

/// Transposed convolution with kernel 2, stride 2 (the "unpooling" variant
/// selectable in the decoder).
template <typename T>
struct ConvTranspose2x2 {
  int in_ch = 0, out_ch = 0;
  std::vector<T> weight;  // (in_ch, out_ch, 2, 2)
  std::vector<T> bias;
  std::vector<T> dweight, dbias;
  Tensor<T> cached_input;

  void init(int in, int out, Rng& rng) {
    in_ch = in;
    out_ch = out;
    weight.resize(static_cast<size_t>(in) * out * 4);
    bias.assign(out, T(0));
    dweight.assign(weight.size(), T(0));
    dbias.assign(out, T(0));
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    for (auto& x : weight) x = static_cast<T>(rng.uniform(-bound, bound));
  }

  void forward(const Tensor<T>& x, Tensor<T>& y, bool cache) {
    if (x.c != in_ch) throw std::invalid_argument("ConvTranspose2x2: channel mismatch");
    y.resize(x.n, out_ch, x.h * 2, x.w * 2);
    if (cache) cached_input = x;
    const size_t npix = x.plane_size();
    CMatMap<T> W(weight.data(), out_ch * 4, in_ch);  // column ci = that input channel's kernels
    for (int in = 0; in < x.n; ++in) {
      CMatMap<T> X(x.item(in), npix, in_ch);
      Mat<T> cols = X * W.transpose();  // (npix, out_ch*4)
      for (int co = 0; co < out_ch; ++co) {
        T* out_plane = y.plane(in, co);
        for (int iy = 0; iy < x.h; ++iy)
          for (int ix = 0; ix < x.w; ++ix) {
            const size_t p = static_cast<size_t>(iy) * x.w + ix;
            for (int dy2 = 0; dy2 < 2; ++dy2)
              for (int dx2 = 0; dx2 < 2; ++dx2)
                out_plane[static_cast<size_t>(iy * 2 + dy2) * (x.w * 2) + (ix * 2 + dx2)] =
                    cols(p, co * 4 + dy2 * 2 + dx2) + bias[co];
          }
      }
    }
  }

  void backward(const Tensor<T>& dy, Tensor<T>& dx) {
    const Tensor<T>& x = cached_input;
    dx.resize(x.n, x.c, x.h, x.w);
    const size_t npix = x.plane_size();
    CMatMap<T> W(weight.data(), out_ch * 4, in_ch);
    MatMap<T> dW(dweight.data(), out_ch * 4, in_ch);
    for (int in = 0; in < x.n; ++in) {
      Mat<T> dcols(npix, out_ch * 4);
      for (int co = 0; co < out_ch; ++co) {
        const T* dplane = dy.plane(in, co);
        double bsum = 0.0;
        for (int iy = 0; iy < x.h; ++iy)
          for (int ix = 0; ix < x.w; ++ix) {
            const size_t p = static_cast<size_t>(iy) * x.w + ix;
            for (int dy2 = 0; dy2 < 2; ++dy2)
              for (int dx2 = 0; dx2 < 2; ++dx2) {
                T g = dplane[static_cast<size_t>(iy * 2 + dy2) * (x.w * 2) + (ix * 2 + dx2)];
                dcols(p, co * 4 + dy2 * 2 + dx2) = g;
                bsum += static_cast<double>(g);
              }
          }
        dbias[co] += static_cast<T>(bsum);
      }
      CMatMap<T> X(x.item(in), npix, in_ch);
      dW.noalias() += dcols.transpose() * X;
      MatMap<T> dX(dx.item(in), npix, in_ch);
      dX.noalias() = dcols * W;
    }
  }

  void zero_grad() {
    std::fill(dweight.begin(), dweight.end(), T(0));
    std::fill(dbias.begin(), dbias.end(), T(0));
  }

  void collect(std::vector<ParamSlice<T>>& out) {
    out.push_back({weight.data(), dweight.data(), weight.size()});
    out.push_back({bias.data(), dbias.data(), bias.size()});
  }

  void name_tensors(const std::string& prefix, std::vector<NamedTensorRef<T>>& out) {
    out.push_back({prefix + ".weight", {in_ch, out_ch, 2, 2}, &weight, true});
    out.push_back({prefix + ".bias", {out_ch}, &bias, true});
  }
};

/// Batch normalization over (N, H, W) per channel. Training uses batch
/// statistics and updates running statistics with momentum 0.9; eval uses the
/// running statistics.
template <typename T>
struct BatchNorm {
  int ch = 0;
  double momentum = 0.9;
  double eps = 1e-5;
  std::vector<T> gamma, beta;
  std::vector<T> running_mean, running_var;
  std::vector<T> dgamma, dbeta;

  // training-pass caches
  std::vector<T> xhat_;
  std::vector<T> invstd_;
  int cached_n = 0, cached_h = 0, cached_w = 0;

  void init(int channels) {
    ch = channels;
    gamma.assign(ch, T(1));
    beta.assign(ch, T(0));
    running_mean.assign(ch, T(0));
    running_var.assign(ch, T(1));
    dgamma.assign(ch, T(0));
    dbeta.assign(ch, T(0));
  }

  void forward(const Tensor<T>& x, Tensor<T>& y, bool training) {
    if (x.c != ch) throw std::invalid_argument("BatchNorm: channel mismatch");
    y.resize(x.n, x.c, x.h, x.w);
    const size_t plane = x.plane_size();
    const size_t m = static_cast<size_t>(x.n) * plane;

    if (training) {
      xhat_.resize(x.size());
      invstd_.resize(ch);
      cached_n = x.n;
      cached_h = x.h;
      cached_w = x.w;
    }

#pragma omp parallel for schedule(static) if (ch >= 2)
    for (int c = 0; c < ch; ++c) {
      double mean, var;
      if (training) {
        double s = 0.0, s2 = 0.0;
        for (int in = 0; in < x.n; ++in) {
          const T* p = x.plane(in, c);
          for (size_t i = 0; i < plane; ++i) {
            s += p[i];
            s2 += static_cast<double>(p[i]) * p[i];
          }
        }
        mean = s / static_cast<double>(m);
        var = std::max(0.0, s2 / static_cast<double>(m) - mean * mean);
        running_mean[c] = static_cast<T>(momentum * running_mean[c] + (1.0 - momentum) * mean);
        running_var[c] = static_cast<T>(momentum * running_var[c] + (1.0 - momentum) * var);
      } else {
        mean = running_mean[c];
        var = running_var[c];
      }
      const T inv = static_cast<T>(1.0 / std::sqrt(var + eps));
      if (training) invstd_[c] = inv;
      const T g = gamma[c], b = beta[c], mu = static_cast<T>(mean);
      for (int in = 0; in < x.n; ++in) {
        const T* px = x.plane(in, c);
        T* py = y.plane(in, c);
        T* ph = training ? xhat_.data() + (static_cast<size_t>(in) * ch + c) * plane : nullptr;
        for (size_t i = 0; i < plane; ++i) {
          const T xh = (px[i] - mu) * inv;
          if (training) ph[i] = xh;
          py[i] = g * xh + b;
        }
      }
    }
  }

  void backward(const Tensor<T>& dy, Tensor<T>& dx) {
    dx.resize(cached_n, ch, cached_h, cached_w);
    const size_t plane = static_cast<size_t>(cached_h) * cached_w;
    const double m = static_cast<double>(cached_n) * plane;

#pragma omp parallel for schedule(static) if (ch >= 2)
    for (int c = 0; c < ch; ++c) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (int in = 0; in < cached_n; ++in) {
        const T* pdy = dy.plane(in, c);
        const T* ph = xhat_.data() + (static_cast<size_t>(in) * ch + c) * plane;
        for (size_t i = 0; i < plane; ++i) {
          sum_dy += pdy[i];
          sum_dy_xhat += static_cast<double>(pdy[i]) * ph[i];
        }
      }
      dgamma[c] += static_cast<T>(sum_dy_xhat);
      dbeta[c] += static_cast<T>(sum_dy);
      const double g = gamma[c], inv = invstd_[c];
      for (int in = 0; in < cached_n; ++in) {
        const T* pdy = dy.plane(in, c);
        const T* ph = xhat_.data() + (static_cast<size_t>(in) * ch + c) * plane;
        T* pdx = dx.plane(in, c);
        for (size_t i = 0; i < plane; ++i) {
          pdx[i] = static_cast<T>(g * inv / m *
                                  (m * pdy[i] - sum_dy - static_cast<double>(ph[i]) * sum_dy_xhat));
        }
      }
    }
  }

  void zero_grad() {
    std::fill(dgamma.begin(), dgamma.end(), T(0));
    std::fill(dbeta.begin(), dbeta.end(), T(0));
  }

  void collect(std::vector<ParamSlice<T>>& out) {
    out.push_back({gamma.data(), dgamma.data(), gamma.size()});
    out.push_back({beta.data(), dbeta.data(), beta.size()});
  }

  void name_tensors(const std::string& prefix, std::vector<NamedTensorRef<T>>& out) {
    out.push_back({prefix + ".gamma", {ch}, &gamma, true});
    out.push_back({prefix + ".beta", {ch}, &beta, true});
    out.push_back({prefix + ".running_mean", {ch}, &running_mean, false});
    out.push_back({prefix + ".running_var", {ch}, &running_var, false});
  }
};

template <typename T>
struct Relu {
  Tensor<T> cached_out;

  void forward(const Tensor<T>& x, Tensor<T>& y, bool cache) {
    y.resize(x.n, x.c, x.h, x.w);
    const long long n = static_cast<long long>(x.size());
#pragma omp parallel for schedule(static) if (n > 16384)
    for (long long i = 0; i < n; ++i) y.v[i] = x.v[i] > T(0) ? x.v[i] : T(0);
    if (cache) cached_out = y;
  }

  void backward(const Tensor<T>& dy, Tensor<T>& dx) {
    dx.resize(dy.n, dy.c, dy.h, dy.w);
    const long long n = static_cast<long long>(dy.size());
#pragma omp parallel for schedule(static) if (n > 16384)
    for (long long i = 0; i < n; ++i) dx.v[i] = cached_out.v[i] > T(0) ? dy.v[i] : T(0);
  }
};

/// 2x2 max pooling, stride 2. Input dims must be even (the network pads the
/// image to a multiple of the downsampling factor up front).
template <typename T>
struct MaxPool2 {
  std::vector<int32_t> argmax_;  // flat input index per output element
  int in_h = 0, in_w = 0;

  void forward(const Tensor<T>& x, Tensor<T>& y, bool cache) {
    if (x.h % 2 || x.w % 2) throw std::invalid_argument("MaxPool2: odd spatial dims");
    y.resize(x.n, x.c, x.h / 2, x.w / 2);
    in_h = x.h;
    in_w = x.w;
    if (cache) argmax_.resize(y.size());
    const int planes = x.n * x.c;
    const size_t out_plane = y.plane_size();
#pragma omp parallel for schedule(static) if (planes >= 2)
    for (int pl = 0; pl < planes; ++pl) {
      const T* p = x.v.data() + static_cast<size_t>(pl) * x.plane_size();
      size_t o = static_cast<size_t>(pl) * out_plane;
      for (int iy = 0; iy < y.h; ++iy)
        for (int ix = 0; ix < y.w; ++ix, ++o) {
          int best = (iy * 2) * x.w + ix * 2;
          T bv = p[best];
          const int cand[3] = {(iy * 2) * x.w + ix * 2 + 1, (iy * 2 + 1) * x.w + ix * 2,
                               (iy * 2 + 1) * x.w + ix * 2 + 1};
          for (int idx : cand)
            if (p[idx] > bv) {
              bv = p[idx];
              best = idx;
            }
          y.v[o] = bv;
          if (cache) argmax_[o] = best;
        }
    }
  }

  void backward(const Tensor<T>& dy, Tensor<T>& dx) {
    dx.resize(dy.n, dy.c, in_h, in_w);
    dx.zero();
    const int planes = dy.n * dy.c;
    const size_t out_plane = dy.plane_size();
    const size_t in_plane = static_cast<size_t>(in_h) * in_w;
#pragma omp parallel for schedule(static) if (planes >= 2)
    for (int pl = 0; pl < planes; ++pl) {
      T* pdx = dx.v.data() + static_cast<size_t>(pl) * in_plane;
      size_t o = static_cast<size_t>(pl) * out_plane;
      for (size_t i = 0; i < out_plane; ++i, ++o) pdx[argmax_[o]] += dy.v[o];
    }
  }
};

/// Nearest-neighbor 2x upsampling.
template <typename T>
struct UpsampleNearest2 {
  void forward(const Tensor<T>& x, Tensor<T>& y) {
    y.resize(x.n, x.c, x.h * 2, x.w * 2);
    for (int in = 0; in < x.n; ++in)
      for (int c = 0; c < x.c; ++c) {
        const T* p = x.plane(in, c);
        T* q = y.plane(in, c);
        for (int iy = 0; iy < y.h; ++iy) {
          const T* row = p + static_cast<size_t>(iy / 2) * x.w;
          T* out = q + static_cast<size_t>(iy) * y.w;
          for (int ix = 0; ix < y.w; ++ix) out[ix] = row[ix / 2];
        }
      }
  }

  void backward(const Tensor<T>& dy, Tensor<T>& dx) {
    dx.resize(dy.n, dy.c, dy.h / 2, dy.w / 2);
    dx.zero();
    for (int in = 0; in < dy.n; ++in)
      for (int c = 0; c < dy.c; ++c) {
        const T* q = dy.plane(in, c);
        T* p = dx.plane(in, c);
        for (int iy = 0; iy < dy.h; ++iy) {
          const T* row = q + static_cast<size_t>(iy) * dy.w;
          T* out = p + static_cast<size_t>(iy / 2) * dx.w;
          for (int ix = 0; ix < dy.w; ++ix) out[ix / 2] += row[ix];
        }
      }
  }
};

/// Channel concatenation [a ; b] and its backward split.
template <typename T>
void concat_channels(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& y) {
  if (a.n != b.n || a.h != b.h || a.w != b.w)
    throw std::invalid_argument("concat_channels: spatial shape mismatch");
  y.resize(a.n, a.c + b.c, a.h, a.w);
  for (int in = 0; in < a.n; ++in) {
    std::copy(a.item(in), a.item(in) + a.item_size(), y.item(in));
    std::copy(b.item(in), b.item(in) + b.item_size(), y.item(in) + a.item_size());
  }
}

template <typename T>
void split_channels(const Tensor<T>& dy, int c_a, Tensor<T>& da, Tensor<T>& db) {
  da.resize(dy.n, c_a, dy.h, dy.w);
  db.resize(dy.n, dy.c - c_a, dy.h, dy.w);
  for (int in = 0; in < dy.n; ++in) {
    std::copy(dy.item(in), dy.item(in) + da.item_size(), da.item(in));
    std::copy(dy.item(in) + da.item_size(), dy.item(in) + dy.item_size(), db.item(in));
  }
}

/// Reflect-pad on the bottom/right edges (101-style, no duplicated border
/// sample) and the matching gradient fold-back.
template <typename T>
void reflect_pad_bottom_right(const Tensor<T>& x, int pad_h, int pad_w, Tensor<T>& y) {
  if (pad_h >= x.h || pad_w >= x.w)
    throw std::invalid_argument("reflect_pad: pad exceeds image size");
  y.resize(x.n, x.c, x.h + pad_h, x.w + pad_w);
  for (int in = 0; in < x.n; ++in)
    for (int c = 0; c < x.c; ++c) {
      const T* p = x.plane(in, c);
      T* q = y.plane(in, c);
      for (int iy = 0; iy < y.h; ++iy) {
        const int sy = iy < x.h ? iy : 2 * x.h - 2 - iy;
        for (int ix = 0; ix < y.w; ++ix) {
          const int sx = ix < x.w ? ix : 2 * x.w - 2 - ix;
          q[static_cast<size_t>(iy) * y.w + ix] = p[static_cast<size_t>(sy) * x.w + sx];
        }
      }
    }
}

template <typename T>
void reflect_pad_backward(const Tensor<T>& dy, int orig_h, int orig_w, Tensor<T>& dx) {
  dx.resize(dy.n, dy.c, orig_h, orig_w);
  dx.zero();
  for (int in = 0; in < dy.n; ++in)
    for (int c = 0; c < dy.c; ++c) {
      const T* q = dy.plane(in, c);
      T* p = dx.plane(in, c);
      for (int iy = 0; iy < dy.h; ++iy) {
        const int sy = iy < orig_h ? iy : 2 * orig_h - 2 - iy;
        for (int ix = 0; ix < dy.w; ++ix) {
          const int sx = ix < orig_w ? ix : 2 * orig_w - 2 - ix;
          p[static_cast<size_t>(sy) * orig_w + sx] += q[static_cast<size_t>(iy) * dy.w + ix];
        }
      }
    }
}

}  // namespace fbp::nn
