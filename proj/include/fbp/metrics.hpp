#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbp/types.hpp"

#include <json.hpp>

// Scoring of masks and pick lines: pixel accuracy, per-class IoU, and pick
// MAE in time steps / milliseconds.

namespace fbp {

/// Fraction of pixels where pred == gt, summed over all image pairs.
/// `pixel_weighted` sums over actual pixels (default); otherwise each image
/// contributes its own accuracy with equal weight.
inline double pixel_accuracy(const std::vector<SegmentationMask>& pred,
                             const std::vector<SegmentationMask>& gt,
                             bool pixel_weighted = true) {
  if (pred.size() != gt.size() || pred.empty())
    throw std::invalid_argument("pixel_accuracy: mismatched or empty mask lists");
  long long correct = 0, total = 0;
  double per_image_acc = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (!pred[i].classes.same_shape(gt[i].classes))
      throw std::invalid_argument("pixel_accuracy: shape mismatch in pair " + std::to_string(i));
    long long c = 0;
    for (size_t k = 0; k < pred[i].classes.size(); ++k)
      c += pred[i].classes.v[k] == gt[i].classes.v[k];
    correct += c;
    total += static_cast<long long>(pred[i].classes.size());
    per_image_acc += static_cast<double>(c) / static_cast<double>(pred[i].classes.size());
  }
  if (pixel_weighted) return static_cast<double>(correct) / static_cast<double>(total);
  return per_image_acc / static_cast<double>(pred.size());
}

/// Mean absolute pick error in time steps over a list of pick-line pairs.
/// Receivers whose ground truth is flagged invalid (dead traces) are included
/// by default; `include_invalid = false` drops them from the average.
inline double mae(const std::vector<PickLine>& pred, const std::vector<PickLine>& gt,
                  bool include_invalid = true, bool receiver_weighted = true) {
  if (pred.size() != gt.size() || pred.empty())
    throw std::invalid_argument("mae: mismatched or empty pick lists");
  long long counted = 0;
  double abs_sum = 0.0, per_image = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].times.size() != gt[i].times.size())
      throw std::invalid_argument("mae: receiver count mismatch in pair " + std::to_string(i));
    long long n = 0;
    double s = 0.0;
    for (size_t r = 0; r < gt[i].times.size(); ++r) {
      if (!include_invalid && !gt[i].valid[r]) continue;
      s += std::abs(static_cast<double>(pred[i].times[r]) - gt[i].times[r]);
      ++n;
    }
    abs_sum += s;
    counted += n;
    if (n > 0) per_image += s / static_cast<double>(n);
  }
  if (counted == 0) return 0.0;
  if (receiver_weighted) return abs_sum / static_cast<double>(counted);
  return per_image / static_cast<double>(pred.size());
}

/// Aggregate IoU of the signal class over all image pairs (pooled counts).
inline double iou_signal_pooled(const std::vector<SegmentationMask>& pred,
                                const std::vector<SegmentationMask>& gt) {
  long long inter = 0, uni = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    for (size_t k = 0; k < pred[i].classes.size(); ++k) {
      bool a = pred[i].classes.v[k] == 1;
      bool b = gt[i].classes.v[k] == 1;
      inter += (a && b);
      uni += (a || b);
    }
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

struct EvalReport {
  double pixel_accuracy = 0.0;
  double iou_signal = 0.0;
  double mae_ts = 0.0;
  double mae_ms = 0.0;
  double sample_rate_ms = 8.0;
  bool include_invalid = true;
  long long invalid_included = 0;  // dead receivers counted in the MAE
  long long invalid_excluded = 0;  // dead receivers dropped from the MAE

  struct PerImage {
    std::string id;
    double accuracy = 0.0;
    double iou_signal = 0.0;
    double mae_ts = 0.0;
    int invalid_receivers = 0;
  };
  std::vector<PerImage> images;
};

/// Full evaluation of predicted masks + picks against ground truth.
inline EvalReport build_report(const std::vector<SegmentationMask>& pred_masks,
                               const std::vector<PickLine>& pred_picks,
                               const std::vector<SegmentationMask>& gt_masks,
                               const std::vector<PickLine>& gt_picks, double sample_rate_ms,
                               bool include_invalid = true,
                               const std::vector<std::string>& ids = {}) {
  if (pred_masks.empty() || pred_masks.size() != gt_masks.size() ||
      pred_picks.size() != gt_picks.size() || pred_masks.size() != pred_picks.size())
    throw std::invalid_argument("build_report: empty or inconsistent dataset");

  EvalReport rep;
  rep.sample_rate_ms = sample_rate_ms;
  rep.include_invalid = include_invalid;
  rep.pixel_accuracy = pixel_accuracy(pred_masks, gt_masks);
  rep.iou_signal = iou_signal_pooled(pred_masks, gt_masks);
  rep.mae_ts = mae(pred_picks, gt_picks, include_invalid);
  rep.mae_ms = rep.mae_ts * sample_rate_ms;

  for (size_t i = 0; i < pred_masks.size(); ++i) {
    EvalReport::PerImage im;
    im.id = i < ids.size() ? ids[i] : std::to_string(i);
    im.accuracy = pixel_accuracy({pred_masks[i]}, {gt_masks[i]});
    im.iou_signal = iou_signal_pooled({pred_masks[i]}, {gt_masks[i]});
    im.mae_ts = mae({pred_picks[i]}, {gt_picks[i]}, include_invalid);
    for (uint8_t v : gt_picks[i].valid) im.invalid_receivers += v ? 0 : 1;
    rep.images.push_back(std::move(im));
    if (include_invalid)
      rep.invalid_included += rep.images.back().invalid_receivers;
    else
      rep.invalid_excluded += rep.images.back().invalid_receivers;
  }
  return rep;
}

inline nlohmann::json to_json(const EvalReport& rep) {
  nlohmann::json j;
  j["pixel_accuracy"] = rep.pixel_accuracy;
  j["iou_signal"] = rep.iou_signal;
  j["mae_ts"] = rep.mae_ts;
  j["mae_ms"] = rep.mae_ms;
  j["sample_rate_ms"] = rep.sample_rate_ms;
  j["include_invalid"] = rep.include_invalid;
  j["invalid_included"] = rep.invalid_included;
  j["invalid_excluded"] = rep.invalid_excluded;
  j["images"] = nlohmann::json::array();
  for (const auto& im : rep.images) {
    j["images"].push_back({{"id", im.id},
                           {"accuracy", im.accuracy},
                           {"iou_signal", im.iou_signal},
                           {"mae_ts", im.mae_ts},
                           {"invalid_receivers", im.invalid_receivers}});
  }
  return j;
}

/// Plain-text table for one evaluated cell, using the same row labels as the
/// comparison table ("Acc with <loss> loss", "MAE with <picker> (ts)").
inline std::string to_text_table(const EvalReport& rep, const std::string& loss_label,
                                 const std::string& picker_label) {
  std::ostringstream os;
  auto row = [&os](const std::string& k, const std::string& v) {
    os << "| " << std::left << std::setw(26) << k << " | " << std::right << std::setw(10) << v
       << " |\n";
  };
  std::string bar = "+----------------------------+------------+\n";
  auto fmt = [](double x, int prec) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(prec) << x;
    return s.str();
  };
  os << bar;
  row("Acc with " + loss_label + " loss", fmt(rep.pixel_accuracy * 100.0, 2) + "%");
  row("MAE with " + picker_label + " (ts)", fmt(rep.mae_ts, 2));
  row("MAE with " + picker_label + " (ms)", fmt(rep.mae_ms, 2));
  row("IoU (signal)", fmt(rep.iou_signal, 4));
  os << bar;
  return os.str();
}

}  // namespace fbp
