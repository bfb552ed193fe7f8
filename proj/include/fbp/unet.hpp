#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbp/nn/layers.hpp"
#include "fbp/nn/tensor.hpp"
#include "fbp/rng.hpp"
#include "fbp/types.hpp"

// The 5-block encoder-decoder: a contracting path of `depth` double-conv
// blocks (the last one acting as the bridge), a symmetric expansive path with
// channel-concatenation skip connections, and a 1x1 projection to 2 classes.
// Inputs of any size are handled by reflect-padding to a multiple of the
// downsampling factor and cropping the scores back.

namespace fbp {

struct UnetConfig {
  int base_channels = 32;
  int depth = 3;  // encoder blocks; downsampling factor is 2^(depth-1)
  int kernel_size = 3;
  int num_classes = 2;
  int in_channels = 1;
  enum class Upsample { nearest_conv, transposed_conv };
  Upsample upsample = Upsample::nearest_conv;

  void validate() const {
    if (base_channels < 1) throw std::invalid_argument("UnetConfig: base_channels < 1");
    if (depth < 2) throw std::invalid_argument("UnetConfig: depth < 2");
    if (kernel_size % 2 == 0) throw std::invalid_argument("UnetConfig: kernel size must be odd");
    if (num_classes != 2) throw std::invalid_argument("UnetConfig: this pipeline is 2-class");
    if (in_channels < 1) throw std::invalid_argument("UnetConfig: in_channels < 1");
  }

  int downsample_factor() const { return 1 << (depth - 1); }

  /// Channel counts along the U: encoder levels, bridge, decoder levels.
  std::vector<int> ladder() const {
    std::vector<int> l;
    for (int i = 0; i < depth; ++i) l.push_back(base_channels << i);
    for (int i = depth - 2; i >= 0; --i) l.push_back(base_channels << i);
    return l;
  }
};

inline const char* to_string(UnetConfig::Upsample u) {
  return u == UnetConfig::Upsample::nearest_conv ? "nearest+conv" : "transposed-conv";
}

inline UnetConfig::Upsample upsample_from_string(const std::string& s) {
  if (s == "nearest+conv") return UnetConfig::Upsample::nearest_conv;
  if (s == "transposed-conv") return UnetConfig::Upsample::transposed_conv;
  throw std::invalid_argument("unknown upsample mode: " + s);
}

/// All network tensors (kernels, biases, batch-norm parameters and running
/// statistics), keyed by layer name. The float32 exchange type used by
/// checkpoints regardless of the compute scalar.
struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> data;
};

struct ModelParams {
  UnetConfig config;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return &t;
    return nullptr;
  }
};

namespace detail {

template <typename T>
struct ConvBnRelu {
  nn::Conv2d<T> conv;
  nn::BatchNorm<T> bn;
  nn::Relu<T> relu;
  nn::Tensor<T> t_conv_, t_bn_;

  void init(int in, int out, int k, Rng& rng) {
    conv.init(in, out, k, rng);
    bn.init(out);
  }

  void forward(const nn::Tensor<T>& x, nn::Tensor<T>& y, bool training) {
    conv.forward(x, t_conv_, training);
    bn.forward(t_conv_, t_bn_, training);
    relu.forward(t_bn_, y, training);
  }

  void backward(const nn::Tensor<T>& dy, nn::Tensor<T>& dx) {
    nn::Tensor<T> d1, d2;
    relu.backward(dy, d1);
    bn.backward(d1, d2);
    conv.backward(d2, dx);
  }

  void zero_grad() {
    conv.zero_grad();
    bn.zero_grad();
  }
  void collect(std::vector<nn::ParamSlice<T>>& out) {
    conv.collect(out);
    bn.collect(out);
  }
  void name_tensors(const std::string& p, std::vector<nn::NamedTensorRef<T>>& out) {
    conv.name_tensors(p + ".conv", out);
    bn.name_tensors(p + ".bn", out);
  }
};

template <typename T>
struct DoubleConv {
  ConvBnRelu<T> a, b;
  nn::Tensor<T> t_mid_;

  void init(int in, int out, int k, Rng& rng) {
    a.init(in, out, k, rng);
    b.init(out, out, k, rng);
  }
  void forward(const nn::Tensor<T>& x, nn::Tensor<T>& y, bool training) {
    a.forward(x, t_mid_, training);
    b.forward(t_mid_, y, training);
  }
  void backward(const nn::Tensor<T>& dy, nn::Tensor<T>& dx) {
    nn::Tensor<T> d;
    b.backward(dy, d);
    a.backward(d, dx);
  }
  void zero_grad() {
    a.zero_grad();
    b.zero_grad();
  }
  void collect(std::vector<nn::ParamSlice<T>>& out) {
    a.collect(out);
    b.collect(out);
  }
  void name_tensors(const std::string& p, std::vector<nn::NamedTensorRef<T>>& out) {
    a.name_tensors(p + "1", out);
    b.name_tensors(p + "2", out);
  }
};

}  // namespace detail

template <typename T>
class Unet {
 public:
  Unet(const UnetConfig& cfg, uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    enc_.resize(cfg_.depth);
    pools_.resize(cfg_.depth - 1);
    int in = cfg_.in_channels;
    for (int i = 0; i < cfg_.depth; ++i) {
      const int out = cfg_.base_channels << i;
      enc_[i].init(in, out, cfg_.kernel_size, rng);
      in = out;
    }
    ups_.resize(cfg_.depth - 1);
    for (int j = cfg_.depth - 2; j >= 0; --j) {
      const int deep = cfg_.base_channels << (j + 1);
      const int out = cfg_.base_channels << j;
      auto& st = ups_[j];
      if (cfg_.upsample == UnetConfig::Upsample::nearest_conv)
        st.upconv.init(deep, out, cfg_.kernel_size, rng);
      else
        st.tconv.init(deep, out, rng);
      st.block.init(2 * out, out, cfg_.kernel_size, rng);
    }
    head_.init(cfg_.base_channels, cfg_.num_classes, 1, rng);
  }

  const UnetConfig& config() const { return cfg_; }

  /// Per-pixel class scores at the input's exact spatial size.
  nn::Tensor<T> forward(const nn::Tensor<T>& x, bool training) {
    const int f = cfg_.downsample_factor();
    if (x.h < f || x.w < f)
      throw std::invalid_argument("Unet::forward: spatial dims smaller than the downsampling factor (" +
                                  std::to_string(f) + ")");
    if (x.c != cfg_.in_channels) throw std::invalid_argument("Unet::forward: channel mismatch");

    orig_h_ = x.h;
    orig_w_ = x.w;
    pad_h_ = (f - x.h % f) % f;
    pad_w_ = (f - x.w % f) % f;

    nn::Tensor<T> cur;
    if (pad_h_ || pad_w_) {
      nn::reflect_pad_bottom_right(x, pad_h_, pad_w_, cur);
    } else {
      cur = x;
    }

    skips_.assign(cfg_.depth - 1, {});
    for (int i = 0; i < cfg_.depth - 1; ++i) {
      enc_[i].forward(cur, skips_[i], training);
      pools_[i].forward(skips_[i], cur, training);
    }
    nn::Tensor<T> deep;
    enc_[cfg_.depth - 1].forward(cur, deep, training);

    for (int j = cfg_.depth - 2; j >= 0; --j) {
      auto& st = ups_[j];
      nn::Tensor<T> up_out;
      if (cfg_.upsample == UnetConfig::Upsample::nearest_conv) {
        st.up.forward(deep, st.t_up_);
        st.upconv.forward(st.t_up_, up_out, training);
      } else {
        st.tconv.forward(deep, up_out, training);
      }
      nn::Tensor<T> cat;
      nn::concat_channels(up_out, skips_[j], cat);
      st.skip_channels = skips_[j].c;
      st.block.forward(cat, deep, training);
    }

    nn::Tensor<T> scores_padded;
    head_.forward(deep, scores_padded, training);

    if (pad_h_ == 0 && pad_w_ == 0) return scores_padded;
    nn::Tensor<T> scores(x.n, cfg_.num_classes, orig_h_, orig_w_);
    for (int in = 0; in < x.n; ++in)
      for (int c = 0; c < cfg_.num_classes; ++c)
        for (int iy = 0; iy < orig_h_; ++iy) {
          const T* src = scores_padded.plane(in, c) + static_cast<size_t>(iy) * scores_padded.w;
          std::copy(src, src + orig_w_, scores.plane(in, c) + static_cast<size_t>(iy) * orig_w_);
        }
    return scores;
  }

  /// Backpropagate d(loss)/d(scores); accumulates parameter gradients.
  void backward(const nn::Tensor<T>& dscores) {
    nn::Tensor<T> d;
    if (pad_h_ || pad_w_) {
      d.resize(dscores.n, dscores.c, orig_h_ + pad_h_, orig_w_ + pad_w_);
      d.zero();  // cropped-away scores receive no gradient
      for (int in = 0; in < dscores.n; ++in)
        for (int c = 0; c < dscores.c; ++c)
          for (int iy = 0; iy < orig_h_; ++iy) {
            const T* src = dscores.plane(in, c) + static_cast<size_t>(iy) * orig_w_;
            std::copy(src, src + orig_w_, d.plane(in, c) + static_cast<size_t>(iy) * d.w);
          }
    } else {
      d = dscores;
    }

    nn::Tensor<T> dd;
    head_.backward(d, dd);

    std::vector<nn::Tensor<T>> dskip(cfg_.depth - 1);
    for (int j = 0; j <= cfg_.depth - 2; ++j) {
      auto& st = ups_[j];
      nn::Tensor<T> dcat;
      st.block.backward(dd, dcat);
      nn::Tensor<T> dup;
      nn::split_channels(dcat, dcat.c - st.skip_channels, dup, dskip[j]);
      if (cfg_.upsample == UnetConfig::Upsample::nearest_conv) {
        nn::Tensor<T> dup2;
        st.upconv.backward(dup, dup2);
        st.up.backward(dup2, dd);
      } else {
        st.tconv.backward(dup, dd);
      }
    }

    nn::Tensor<T> dcur;
    enc_[cfg_.depth - 1].backward(dd, dcur);
    for (int i = cfg_.depth - 2; i >= 0; --i) {
      nn::Tensor<T> ds;
      pools_[i].backward(dcur, ds);
      for (size_t q = 0; q < ds.size(); ++q) ds.v[q] += dskip[i].v[q];
      enc_[i].backward(ds, dcur);
    }
    // dcur is d(loss)/d(padded input); nothing upstream needs it.
  }

  void zero_grad() {
    for (auto& e : enc_) e.zero_grad();
    for (auto& st : ups_) {
      st.upconv.zero_grad();
      st.tconv.zero_grad();
      st.block.zero_grad();
    }
    head_.zero_grad();
  }

  std::vector<nn::ParamSlice<T>> param_slices() {
    std::vector<nn::ParamSlice<T>> out;
    for (auto& e : enc_) e.collect(out);
    for (int j = cfg_.depth - 2; j >= 0; --j) {
      auto& st = ups_[j];
      if (cfg_.upsample == UnetConfig::Upsample::nearest_conv)
        st.upconv.collect(out);
      else
        st.tconv.collect(out);
      st.block.collect(out);
    }
    head_.collect(out);
    return out;
  }

  std::vector<nn::NamedTensorRef<T>> named_tensors() {
    std::vector<nn::NamedTensorRef<T>> out;
    for (size_t i = 0; i < enc_.size(); ++i) {
      const std::string p = i + 1 == enc_.size() ? "bridge" : "enc" + std::to_string(i + 1);
      enc_[i].name_tensors(p, out);
    }
    for (int j = static_cast<int>(ups_.size()) - 1; j >= 0; --j) {
      auto& st = ups_[j];
      const std::string p = "dec" + std::to_string(j + 1);
      if (cfg_.upsample == UnetConfig::Upsample::nearest_conv)
        st.upconv.name_tensors(p + ".up", out);
      else
        st.tconv.name_tensors(p + ".up", out);
      st.block.name_tensors(p, out);
    }
    head_.name_tensors("head", out);
    return out;
  }

  ModelParams export_params() {
    ModelParams mp;
    mp.config = cfg_;
    for (const auto& ref : named_tensors()) {
      NamedTensor t;
      t.name = ref.name;
      t.shape = ref.shape;
      t.data.resize(ref.data->size());
      for (size_t i = 0; i < t.data.size(); ++i) t.data[i] = static_cast<float>((*ref.data)[i]);
      mp.tensors.push_back(std::move(t));
    }
    return mp;
  }

  void import_params(const ModelParams& mp) {
    for (auto& ref : named_tensors()) {
      const NamedTensor* t = mp.find(ref.name);
      if (!t) throw std::runtime_error("import_params: missing tensor " + ref.name);
      if (t->data.size() != ref.data->size())
        throw std::runtime_error("import_params: size mismatch for " + ref.name);
      for (size_t i = 0; i < t->data.size(); ++i) (*ref.data)[i] = static_cast<T>(t->data[i]);
    }
  }

 private:
  struct UpStage {
    nn::UpsampleNearest2<T> up;
    nn::Conv2d<T> upconv;
    nn::ConvTranspose2x2<T> tconv;
    detail::DoubleConv<T> block;
    nn::Tensor<T> t_up_;
    int skip_channels = 0;
  };

  UnetConfig cfg_;
  std::vector<detail::DoubleConv<T>> enc_;
  std::vector<nn::MaxPool2<T>> pools_;
  std::vector<UpStage> ups_;
  nn::Conv2d<T> head_;
  std::vector<nn::Tensor<T>> skips_;
  int orig_h_ = 0, orig_w_ = 0, pad_h_ = 0, pad_w_ = 0;
};

/// Deterministic parameter initialization for a configuration: He-style
/// fan-in-scaled uniform kernels, zero biases, identity batch norm.
inline ModelParams init_params(const UnetConfig& cfg, uint64_t seed) {
  Unet<float> net(cfg, seed);
  return net.export_params();
}

/// Per-image standardization: subtract the mean, divide by the standard
/// deviation (floored at 1e-8, so constant images map to all zeros).
inline GatherImage normalize_image(const GatherImage& g) {
  GatherImage out = g;
  const size_t n = g.amplitudes.size();
  if (n == 0) return out;
  double s = 0.0;
  for (float x : g.amplitudes.v) s += x;
  const double mean = s / static_cast<double>(n);
  double s2 = 0.0;
  for (float x : g.amplitudes.v) s2 += (x - mean) * (x - mean);
  const double std = std::sqrt(s2 / static_cast<double>(n));
  const double inv = 1.0 / std::max(std, 1e-8);
  for (size_t i = 0; i < n; ++i)
    out.amplitudes.v[i] = static_cast<float>((g.amplitudes.v[i] - mean) * inv);
  return out;
}

/// Softmax over the class axis of a (1, 2, h, w) score tensor.
inline PredictionMap to_prediction_map(const nn::Tensor<float>& scores) {
  if (scores.n != 1 || scores.c != 2)
    throw std::invalid_argument("to_prediction_map: expected a (1,2,h,w) tensor");
  PredictionMap pm;
  pm.score0 = Array2D<float>(scores.h, scores.w);
  pm.score1 = Array2D<float>(scores.h, scores.w);
  pm.prob0 = Array2D<float>(scores.h, scores.w);
  pm.prob1 = Array2D<float>(scores.h, scores.w);
  const float* s0 = scores.plane(0, 0);
  const float* s1 = scores.plane(0, 1);
  for (size_t i = 0; i < pm.score0.size(); ++i) {
    pm.score0.v[i] = s0[i];
    pm.score1.v[i] = s1[i];
    const float m = std::max(s0[i], s1[i]);
    const float e0 = std::exp(s0[i] - m), e1 = std::exp(s1[i] - m);
    pm.prob0.v[i] = e0 / (e0 + e1);
    pm.prob1.v[i] = e1 / (e0 + e1);
  }
  return pm;
}

/// Per-pixel argmax; exact ties resolve to class 0 (non-signal).
inline SegmentationMask predict_mask(const PredictionMap& pm) {
  SegmentationMask m;
  m.classes = Array2D<uint8_t>(pm.height(), pm.width());
  for (size_t i = 0; i < m.classes.size(); ++i)
    m.classes.v[i] = pm.prob1.v[i] > pm.prob0.v[i] ? 1 : 0;
  return m;
}

/// Normalize a gather, run it through the network in eval mode and return the
/// per-pixel prediction map.
template <typename T>
PredictionMap predict_gather(Unet<T>& net, const GatherImage& gather) {
  const GatherImage norm = normalize_image(gather);
  nn::Tensor<T> x(1, 1, norm.height(), norm.width());
  for (size_t i = 0; i < norm.amplitudes.size(); ++i)
    x.v[i] = static_cast<T>(norm.amplitudes.v[i]);
  nn::Tensor<T> scores = net.forward(x, /*training=*/false);
  nn::Tensor<float> scores_f(scores.n, scores.c, scores.h, scores.w);
  for (size_t i = 0; i < scores.size(); ++i) scores_f.v[i] = static_cast<float>(scores.v[i]);
  return to_prediction_map(scores_f);
}

}  // namespace fbp
