#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbp/types.hpp"

// Segmentation losses: the plain cross-entropy baseline and the Lovasz hinge,
// a piecewise-linear surrogate for the Jaccard (intersection-over-union) loss
// that is differentiable with respect to the network scores.

namespace fbp {

enum class LossKind { cross_entropy, lovasz };

inline LossKind loss_kind_from_string(const std::string& s) {
  if (s == "cross_entropy" || s == "ce") return LossKind::cross_entropy;
  if (s == "lovasz") return LossKind::lovasz;
  throw std::invalid_argument("unknown loss kind: " + s);
}

inline const char* to_string(LossKind k) {
  return k == LossKind::cross_entropy ? "cross_entropy" : "lovasz";
}

/// Probability floor inside the log; prevents -inf on saturated softmax.
inline constexpr double kProbFloor = 1e-12;

/// Mean negative log-probability of the true class.
/// `probs` is pixel-interleaved (p_class0, p_class1), labels in {0,1}.
template <class T>
T cross_entropy(std::span<const T> probs, std::span<const uint8_t> labels01) {
  if (probs.size() != 2 * labels01.size())
    throw std::invalid_argument("cross_entropy: probs/labels shape mismatch");
  if (labels01.empty()) throw std::invalid_argument("cross_entropy: empty batch");
  double acc = 0.0;
  for (size_t i = 0; i < labels01.size(); ++i) {
    double p = static_cast<double>(probs[2 * i + labels01[i]]);
    acc -= std::log(std::max(p, kProbFloor));
  }
  return static_cast<T>(acc / static_cast<double>(labels01.size()));
}

/// Intersection-over-union of {pred == cls} and {gt == cls}.
/// Returns 1 when both sets are empty (J(empty, empty) = 1 convention).
inline double jaccard(const SegmentationMask& pred, const SegmentationMask& gt, int cls) {
  if (!pred.classes.same_shape(gt.classes))
    throw std::invalid_argument("jaccard: mask shape mismatch");
  long inter = 0, uni = 0;
  for (size_t i = 0; i < pred.classes.size(); ++i) {
    bool a = pred.classes.v[i] == cls;
    bool b = gt.classes.v[i] == cls;
    inter += (a && b);
    uni += (a || b);
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Miss detection: 1 - jaccard.
inline double jaccard_loss(const SegmentationMask& pred, const SegmentationMask& gt, int cls) {
  return 1.0 - jaccard(pred, gt, cls);
}

/// Coefficients of the Lovasz extension of the Jaccard loss.
///
/// `gt_sorted` holds the {0,1} ground-truth labels ordered by decreasing
/// misprediction error. g[i] is the increase of the Jaccard loss when the
/// (i+1)-th pixel of that order joins the mispredicted set:
///   g[i] = Delta({pi_1..pi_{i+1}}) - Delta({pi_1..pi_i})
/// where Delta of a prefix flips exactly the prefix pixels and leaves the
/// rest correct. Empty-foreground inputs follow J(empty, empty) = 1, so
/// Delta(empty) = 0 and every nonempty prefix has Delta = 1: g = [1, 0, ...].
template <class T = double>
std::vector<T> lovasz_grad(std::span<const uint8_t> gt_sorted) {
  const size_t p = gt_sorted.size();
  if (p == 0) throw std::invalid_argument("lovasz_grad: empty input");
  long gts = 0;
  for (uint8_t g : gt_sorted) gts += g;

  std::vector<T> out(p);
  long fg_in_prefix = 0;  // foreground pixels among the first k
  double prev = 0.0;      // Delta of the empty prefix
  for (size_t k = 1; k <= p; ++k) {
    fg_in_prefix += gt_sorted[k - 1];
    long bg_in_prefix = static_cast<long>(k) - fg_in_prefix;
    long inter = gts - fg_in_prefix;
    long uni = gts + bg_in_prefix;
    double delta = (uni == 0) ? 0.0 : 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
    out[k - 1] = static_cast<T>(delta - prev);
    prev = delta;
  }
  return out;
}

/// Hinge mispredictions m_i = max(1 - s_i * y_i, 0) together with the
/// permutation `pi` sorting them in decreasing order. Ties are broken by
/// pixel index (stable sort) so the loss is deterministic.
template <class T>
struct ErrorVector {
  std::vector<T> m;     // m[pi[0]] >= m[pi[1]] >= ... >= 0
  std::vector<int> pi;  // permutation into the original pixel order
};

template <class T>
ErrorVector<T> hinge_errors(std::span<const T> scores, std::span<const int8_t> labels_pm) {
  if (scores.size() != labels_pm.size())
    throw std::invalid_argument("hinge_errors: scores/labels shape mismatch");
  ErrorVector<T> ev;
  ev.m.resize(scores.size());
  for (size_t i = 0; i < scores.size(); ++i)
    ev.m[i] = std::max(T(1) - scores[i] * static_cast<T>(labels_pm[i]), T(0));
  ev.pi.resize(scores.size());
  std::iota(ev.pi.begin(), ev.pi.end(), 0);
  std::stable_sort(ev.pi.begin(), ev.pi.end(), [&](int a, int b) { return ev.m[a] > ev.m[b]; });
  return ev;
}

/// Lovasz hinge: sum_i m_{pi_i} * g_i with m the hinge errors of the signed
/// scores against labels in {-1,+1} and g the Jaccard-loss coefficients of
/// the sorted order. Nonnegative; zero when every margin s*y >= 1.
template <class T>
T lovasz_hinge(std::span<const T> scores, std::span<const int8_t> labels_pm) {
  ErrorVector<T> ev = hinge_errors(scores, labels_pm);
  const size_t p = scores.size();
  std::vector<uint8_t> gt_sorted(p);
  for (size_t i = 0; i < p; ++i) gt_sorted[i] = labels_pm[ev.pi[i]] > 0 ? 1 : 0;
  std::vector<T> g = lovasz_grad<T>(gt_sorted);
  double acc = 0.0;
  for (size_t i = 0; i < p; ++i) acc += static_cast<double>(ev.m[ev.pi[i]]) * static_cast<double>(g[i]);
  return static_cast<T>(acc);
}

/// Gradient of lovasz_hinge with respect to the scores. The permutation (and
/// with it g) is treated as locally constant; the hinge uses the
/// right-derivative of max(., 0) at the kink, i.e. the slope is active
/// whenever 1 - s*y >= 0.
template <class T>
std::vector<T> lovasz_hinge_grad(std::span<const T> scores, std::span<const int8_t> labels_pm) {
  ErrorVector<T> ev = hinge_errors(scores, labels_pm);
  const size_t p = scores.size();
  std::vector<uint8_t> gt_sorted(p);
  for (size_t i = 0; i < p; ++i) gt_sorted[i] = labels_pm[ev.pi[i]] > 0 ? 1 : 0;
  std::vector<T> g = lovasz_grad<T>(gt_sorted);
  std::vector<T> grad(p, T(0));
  for (size_t i = 0; i < p; ++i) {
    int j = ev.pi[i];
    T y = static_cast<T>(labels_pm[j]);
    if (T(1) - scores[j] * y >= T(0)) grad[j] = -y * g[i];
  }
  return grad;
}

/// Labels in {0,1} plus their {-1,+1} mapping (labels_pm = 2*labels01 - 1).
template <class T>
struct LabeledBatch {
  std::vector<T> logits;
  std::vector<uint8_t> labels01;
  std::vector<int8_t> labels_pm;

  LabeledBatch(std::vector<T> logits_, std::vector<uint8_t> labels_)
      : logits(std::move(logits_)), labels01(std::move(labels_)) {
    labels_pm.resize(labels01.size());
    for (size_t i = 0; i < labels01.size(); ++i)
      labels_pm[i] = static_cast<int8_t>(2 * labels01[i] - 1);
  }
};

namespace detail {

/// Numerically stable per-pixel 2-class softmax of interleaved logits.
template <class T>
inline void softmax2(T s0, T s1, T& p0, T& p1) {
  T m = std::max(s0, s1);
  T e0 = std::exp(s0 - m), e1 = std::exp(s1 - m);
  T z = e0 + e1;
  p0 = e0 / z;
  p1 = e1 / z;
}

}  // namespace detail

/// Cross-entropy evaluated from interleaved 2-class logits.
template <class T>
T cross_entropy_from_logits(std::span<const T> logits, std::span<const uint8_t> labels01) {
  if (logits.size() != 2 * labels01.size())
    throw std::invalid_argument("cross_entropy_from_logits: shape mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < labels01.size(); ++i) {
    T p0, p1;
    detail::softmax2(logits[2 * i], logits[2 * i + 1], p0, p1);
    double p = static_cast<double>(labels01[i] ? p1 : p0);
    acc -= std::log(std::max(p, kProbFloor));
  }
  return static_cast<T>(acc / static_cast<double>(labels01.size()));
}

/// Analytic gradient of the selected loss with respect to the logits.
///
/// cross_entropy: `logits` is pixel-interleaved 2-class (size 2n), gradient is
/// the softmax-minus-onehot identity scaled by 1/n.
/// lovasz: `logits` is the flattened foreground score map (size n); labels are
/// mapped to {-1,+1} internally.
template <class T>
std::vector<T> loss_gradient(LossKind kind, std::span<const T> logits,
                             std::span<const uint8_t> labels01) {
  switch (kind) {
    case LossKind::cross_entropy: {
      if (logits.size() != 2 * labels01.size())
        throw std::invalid_argument("loss_gradient: logits/labels shape mismatch");
      const size_t n = labels01.size();
      std::vector<T> grad(2 * n);
      const T scale = T(1) / static_cast<T>(n);
      for (size_t i = 0; i < n; ++i) {
        T p0, p1;
        detail::softmax2(logits[2 * i], logits[2 * i + 1], p0, p1);
        grad[2 * i] = (p0 - (labels01[i] == 0 ? T(1) : T(0))) * scale;
        grad[2 * i + 1] = (p1 - (labels01[i] == 1 ? T(1) : T(0))) * scale;
      }
      return grad;
    }
    case LossKind::lovasz: {
      if (logits.size() != labels01.size())
        throw std::invalid_argument("loss_gradient: logits/labels shape mismatch");
      std::vector<int8_t> pm(labels01.size());
      for (size_t i = 0; i < labels01.size(); ++i) pm[i] = static_cast<int8_t>(2 * labels01[i] - 1);
      return lovasz_hinge_grad<T>(logits, pm);
    }
  }
  throw std::invalid_argument("loss_gradient: unknown loss kind");
}

}  // namespace fbp
