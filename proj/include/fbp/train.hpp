#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbp/checkpoint.hpp"
#include "fbp/dataset.hpp"
#include "fbp/losses.hpp"
#include "fbp/metrics.hpp"
#include "fbp/nn/layers.hpp"
#include "fbp/rng.hpp"
#include "fbp/unet.hpp"

namespace fbp {

template <typename T>
class Adam {
 public:
  Adam(std::vector<nn::ParamSlice<T>> slices, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : slices_(std::move(slices)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.resize(slices_.size());
    v_.resize(slices_.size());
    for (size_t i = 0; i < slices_.size(); ++i) {
      m_[i].assign(slices_[i].count, T(0));
      v_[i].assign(slices_[i].count, T(0));
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < slices_.size(); ++i) {
      auto& s = slices_[i];
      for (size_t k = 0; k < s.count; ++k) {
        const double g = s.grad[k];
        m_[i][k] = static_cast<T>(beta1_ * m_[i][k] + (1.0 - beta1_) * g);
        v_[i][k] = static_cast<T>(beta2_ * v_[i][k] + (1.0 - beta2_) * g * g);
        const double mhat = m_[i][k] / bc1;
        const double vhat = v_[i][k] / bc2;
        s.value[k] -= static_cast<T>(lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

 private:
  std::vector<nn::ParamSlice<T>> slices_;
  std::vector<std::vector<T>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

/// Loss value and d(loss)/d(scores) for a score tensor (n, 2, h, w) against
/// per-item {0,1} label planes. Cross-entropy averages over all pixels in the
/// batch; the Lovasz hinge is evaluated per image on the class-score
/// difference s = F(1) - F(0) and averaged over the batch.
template <typename T>
double loss_and_gradient_on_scores(LossKind kind, const nn::Tensor<T>& scores,
                                   const std::vector<const Array2D<uint8_t>*>& labels,
                                   nn::Tensor<T>& dscores) {
  if (scores.c != 2) throw std::invalid_argument("loss_and_gradient_on_scores: need 2 classes");
  if (static_cast<int>(labels.size()) != scores.n)
    throw std::invalid_argument("loss_and_gradient_on_scores: label count mismatch");
  dscores.resize(scores.n, 2, scores.h, scores.w);
  const size_t npix = scores.plane_size();
  double loss = 0.0;

  if (kind == LossKind::cross_entropy) {
    const double n_total = static_cast<double>(scores.n) * npix;
    for (int in = 0; in < scores.n; ++in) {
      const T* s0 = scores.plane(in, 0);
      const T* s1 = scores.plane(in, 1);
      T* d0 = dscores.plane(in, 0);
      T* d1 = dscores.plane(in, 1);
      const uint8_t* y = labels[in]->data();
      for (size_t i = 0; i < npix; ++i) {
        T p0, p1;
        detail::softmax2(s0[i], s1[i], p0, p1);
        const double p_true = y[i] ? p1 : p0;
        loss -= std::log(std::max(p_true, kProbFloor));
        d0[i] = static_cast<T>((p0 - (y[i] == 0 ? 1 : 0)) / n_total);
        d1[i] = static_cast<T>((p1 - (y[i] == 1 ? 1 : 0)) / n_total);
      }
    }
    return loss / n_total;
  }

  // Lovasz hinge, per image, averaged over the batch.
  std::vector<T> s(npix);
  std::vector<int8_t> pm(npix);
  for (int in = 0; in < scores.n; ++in) {
    const T* s0 = scores.plane(in, 0);
    const T* s1 = scores.plane(in, 1);
    const uint8_t* y = labels[in]->data();
    for (size_t i = 0; i < npix; ++i) {
      s[i] = s1[i] - s0[i];
      pm[i] = static_cast<int8_t>(2 * y[i] - 1);
    }
    loss += static_cast<double>(lovasz_hinge<T>(s, pm));
    std::vector<T> g = lovasz_hinge_grad<T>(s, pm);
    T* d0 = dscores.plane(in, 0);
    T* d1 = dscores.plane(in, 1);
    const T inv_n = T(1) / static_cast<T>(scores.n);
    for (size_t i = 0; i < npix; ++i) {
      d1[i] = g[i] * inv_n;
      d0[i] = -g[i] * inv_n;
    }
  }
  return loss / static_cast<double>(scores.n);
}

struct TrainConfig {
  LossKind loss_kind = LossKind::lovasz;
  double learning_rate = 1e-3;
  int epochs = 50;
  int batch_size = 4;
  int crop_width = 600;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t seed = 1;
  std::string dataset_dir;
  std::string checkpoint_path;
  bool desk_scale = false;
  bool normalize_inputs = true;  // per-image standardization ablation hook
  UnetConfig net;

  /// CPU-feasible sizes; structure and algorithms unchanged.
  void apply_desk_scale() {
    epochs = 10;
    crop_width = 96;
    net.base_channels = 12;
  }

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (crop_width < net.downsample_factor())
      throw std::invalid_argument("TrainConfig: crop width below the downsampling factor");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: bad learning rate");
    net.validate();
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return nlohmann::json{{"loss_kind", to_string(c.loss_kind)},
                        {"learning_rate", c.learning_rate},
                        {"epochs", c.epochs},
                        {"batch_size", c.batch_size},
                        {"crop_width", c.crop_width},
                        {"adam_beta1", c.adam_beta1},
                        {"adam_beta2", c.adam_beta2},
                        {"adam_eps", c.adam_eps},
                        {"seed", c.seed},
                        {"dataset_dir", c.dataset_dir},
                        {"checkpoint_path", c.checkpoint_path},
                        {"desk_scale", c.desk_scale},
                        {"normalize_inputs", c.normalize_inputs},
                        {"net",
                         {{"base_channels", c.net.base_channels},
                          {"depth", c.net.depth},
                          {"kernel_size", c.net.kernel_size},
                          {"num_classes", c.net.num_classes},
                          {"in_channels", c.net.in_channels},
                          {"upsample", to_string(c.net.upsample)}}}};
}

inline void from_json_into(const nlohmann::json& j, TrainConfig& c) {
  if (j.contains("loss_kind")) c.loss_kind = loss_kind_from_string(j["loss_kind"]);
  if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"];
  if (j.contains("epochs")) c.epochs = j["epochs"];
  if (j.contains("batch_size")) c.batch_size = j["batch_size"];
  if (j.contains("crop_width")) c.crop_width = j["crop_width"];
  if (j.contains("adam_beta1")) c.adam_beta1 = j["adam_beta1"];
  if (j.contains("adam_beta2")) c.adam_beta2 = j["adam_beta2"];
  if (j.contains("adam_eps")) c.adam_eps = j["adam_eps"];
  if (j.contains("seed")) c.seed = j["seed"];
  if (j.contains("dataset_dir")) c.dataset_dir = j["dataset_dir"];
  if (j.contains("checkpoint_path")) c.checkpoint_path = j["checkpoint_path"];
  if (j.contains("desk_scale")) c.desk_scale = j["desk_scale"];
  if (j.contains("normalize_inputs")) c.normalize_inputs = j["normalize_inputs"];
  if (j.contains("net")) {
    const auto& n = j["net"];
    if (n.contains("base_channels")) c.net.base_channels = n["base_channels"];
    if (n.contains("depth")) c.net.depth = n["depth"];
    if (n.contains("kernel_size")) c.net.kernel_size = n["kernel_size"];
    if (n.contains("num_classes")) c.net.num_classes = n["num_classes"];
    if (n.contains("in_channels")) c.net.in_channels = n["in_channels"];
    if (n.contains("upsample")) c.net.upsample = upsample_from_string(n["upsample"]);
  }
}

struct TrainResult {
  double best_val_accuracy = -1.0;
  int best_epoch = -1;
  std::vector<double> step_losses;
  std::vector<double> epoch_train_loss;
  std::vector<double> epoch_val_accuracy;
  ModelParams best_params;
};

namespace detail {

struct LoadedRecord {
  GatherImage gather;
  SegmentationMask mask;
};

inline LoadedRecord load_record(const std::filesystem::path& dir, const DatasetRecord& rec,
                                double sample_rate_ms) {
  LoadedRecord lr;
  lr.gather = io::read_gather(dir / rec.gather_file, sample_rate_ms);
  lr.mask = io::read_mask(dir / rec.mask_file);
  return lr;
}

/// Standardize a full-height crop in place (mean 0, std 1, floor 1e-8).
template <typename T>
void standardize(T* data, size_t count) {
  double s = 0.0;
  for (size_t i = 0; i < count; ++i) s += data[i];
  const double mean = s / static_cast<double>(count);
  double s2 = 0.0;
  for (size_t i = 0; i < count; ++i) s2 += (data[i] - mean) * (data[i] - mean);
  const double inv = 1.0 / std::max(std::sqrt(s2 / static_cast<double>(count)), 1e-8);
  for (size_t i = 0; i < count; ++i) data[i] = static_cast<T>((data[i] - mean) * inv);
}

}  // namespace detail

/// Train the network under the configured loss. Each step stacks
/// `batch_size` random full-height, crop_width-wide windows; validation pixel
/// accuracy is logged per epoch and the best-validation parameters are kept
/// (and written to checkpoint_path when set). Deterministic given the seed up
/// to platform floating-point reduction order.
inline TrainResult train(const TrainConfig& cfg, std::ostream& log = std::cout) {
  cfg.validate();
  const DatasetManifest man = load_manifest(cfg.dataset_dir);
  const auto train_recs = man.split("train");
  const auto val_recs = man.split("val");
  if (train_recs.empty()) throw std::runtime_error("train: dataset has no train split");
  for (const auto* r : train_recs)
    if (cfg.crop_width > r->width)
      throw std::invalid_argument("train: crop width exceeds dataset width (record " + r->id + ")");

  // Keep everything in memory; the desk-scale datasets this trainer targets
  // are tens of MB.
  std::vector<detail::LoadedRecord> train_data, val_data;
  train_data.reserve(train_recs.size());
  for (const auto* r : train_recs)
    train_data.push_back(detail::load_record(cfg.dataset_dir, *r, man.sample_rate_ms));
  val_data.reserve(val_recs.size());
  for (const auto* r : val_recs)
    val_data.push_back(detail::load_record(cfg.dataset_dir, *r, man.sample_rate_ms));

  Unet<float> net(cfg.net, derive_seed(cfg.seed, 0xA11));
  Adam<float> opt(net.param_slices(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                  cfg.adam_eps);
  Rng rng(derive_seed(cfg.seed, 0xB22));

  TrainResult res;
  const int H = train_data[0].gather.height();
  const int cw = cfg.crop_width;

  std::vector<size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the run RNG.
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.uniform_int(0, static_cast<int>(i) - 1)]);

    double epoch_loss = 0.0;
    int steps = 0;
    for (size_t pos = 0; pos < order.size(); pos += cfg.batch_size) {
      const int bsz = static_cast<int>(std::min<size_t>(cfg.batch_size, order.size() - pos));
      nn::Tensor<float> x(bsz, 1, H, cw);
      std::vector<Array2D<uint8_t>> label_crops(bsz);
      std::vector<const Array2D<uint8_t>*> labels(bsz);
      for (int b = 0; b < bsz; ++b) {
        const auto& rec = train_data[order[pos + b]];
        const int W = rec.gather.width();
        const int off = cw < W ? rng.uniform_int(0, W - cw) : 0;
        float* dst = x.plane(b, 0);
        label_crops[b] = Array2D<uint8_t>(H, cw);
        for (int t = 0; t < H; ++t)
          for (int r = 0; r < cw; ++r) {
            dst[static_cast<size_t>(t) * cw + r] = rec.gather.amplitudes.at(t, off + r);
            label_crops[b].at(t, r) = rec.mask.classes.at(t, off + r);
          }
        if (cfg.normalize_inputs) detail::standardize(dst, static_cast<size_t>(H) * cw);
        labels[b] = &label_crops[b];
      }

      nn::Tensor<float> scores = net.forward(x, /*training=*/true);
      nn::Tensor<float> dscores;
      const double loss = loss_and_gradient_on_scores(cfg.loss_kind, scores, labels, dscores);
      if (!std::isfinite(loss))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", step " + std::to_string(steps) + " (loss = " +
                                 std::to_string(loss) + ")");
      net.zero_grad();
      net.backward(dscores);
      opt.step();
      res.step_losses.push_back(loss);
      epoch_loss += loss;
      ++steps;
    }
    epoch_loss /= std::max(1, steps);
    res.epoch_train_loss.push_back(epoch_loss);

    double val_acc = -1.0;
    if (!val_data.empty()) {
      long long correct = 0, total = 0;
      for (const auto& rec : val_data) {
        GatherImage in = rec.gather;
        if (!cfg.normalize_inputs) {
          nn::Tensor<float> xv(1, 1, in.height(), in.width());
          std::copy(in.amplitudes.v.begin(), in.amplitudes.v.end(), xv.v.begin());
          nn::Tensor<float> sc = net.forward(xv, false);
          PredictionMap pm = to_prediction_map(sc);
          SegmentationMask pred = predict_mask(pm);
          for (size_t i = 0; i < pred.classes.size(); ++i)
            correct += pred.classes.v[i] == rec.mask.classes.v[i];
          total += static_cast<long long>(pred.classes.size());
        } else {
          PredictionMap pm = predict_gather(net, in);
          SegmentationMask pred = predict_mask(pm);
          for (size_t i = 0; i < pred.classes.size(); ++i)
            correct += pred.classes.v[i] == rec.mask.classes.v[i];
          total += static_cast<long long>(pred.classes.size());
        }
      }
      val_acc = static_cast<double>(correct) / static_cast<double>(total);
    }
    res.epoch_val_accuracy.push_back(val_acc);

    log << "epoch " << epoch + 1 << "/" << cfg.epochs << "  loss " << epoch_loss << "  val_acc "
        << val_acc << "\n";

    if (val_data.empty() || val_acc > res.best_val_accuracy) {
      res.best_val_accuracy = val_acc;
      res.best_epoch = epoch;
      res.best_params = net.export_params();
      if (!cfg.checkpoint_path.empty()) save_checkpoint(cfg.checkpoint_path, res.best_params);
    }
  }
  return res;
}

}  // namespace fbp
