#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fbp/checkpoint.hpp"
#include "fbp/dataset.hpp"
#include "fbp/metrics.hpp"
#include "fbp/picking.hpp"
#include "fbp/train.hpp"
#include "fbp/unet.hpp"

// File-level orchestration behind the CLI subcommands. Every step talks to
// its neighbors only through the dataset/mask/pick files, so the picking
// stage never sees ground truth.

namespace fbp {

/// Run eval-mode inference on a dataset split and persist the argmax masks
/// plus class-1 probability maps (FBG1 container). An empty split is not an
/// error. When `expect` is set, the checkpoint architecture must match it.
inline void run_predict(const std::filesystem::path& dataset_dir, const std::string& split,
                        const std::filesystem::path& checkpoint_path,
                        const std::filesystem::path& out_dir,
                        const std::optional<UnetConfig>& expect = std::nullopt) {
  const DatasetManifest man = load_manifest(dataset_dir);
  const ModelParams mp = load_checkpoint(checkpoint_path);
  if (expect) {
    const UnetConfig& e = *expect;
    if (e.base_channels != mp.config.base_channels || e.depth != mp.config.depth ||
        e.kernel_size != mp.config.kernel_size || e.upsample != mp.config.upsample)
      throw std::runtime_error("run_predict: checkpoint architecture does not match the configuration");
  }
  Unet<float> net = make_unet<float>(mp);
  std::filesystem::create_directories(out_dir);

  for (const auto* rec : man.split(split)) {
    const GatherImage g = io::read_gather(dataset_dir / rec->gather_file, man.sample_rate_ms);
    const PredictionMap pm = predict_gather(net, g);
    const SegmentationMask mask = predict_mask(pm);
    io::write_mask(out_dir / ("mask_" + rec->id + ".bin"), mask);
    GatherImage prob;
    prob.sample_rate_ms = man.sample_rate_ms;
    prob.amplitudes = pm.prob1;
    io::write_gather(out_dir / ("prob_" + rec->id + ".bin"), prob);
  }
}

/// Convert every mask_<id>.bin under `masks_dir` into picks_<id>.bin + CSV.
/// An all-zero mask yields an all-invalid pick line with a warning instead of
/// failing.
inline void run_pick(const std::filesystem::path& masks_dir, PickMethod method,
                     const std::filesystem::path& out_dir, double sample_rate_ms,
                     std::ostream& log = std::cerr) {
  std::vector<std::filesystem::path> mask_files;
  for (const auto& e : std::filesystem::directory_iterator(masks_dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("mask_", 0) == 0 && e.path().extension() == ".bin")
      mask_files.push_back(e.path());
  }
  std::sort(mask_files.begin(), mask_files.end());
  std::filesystem::create_directories(out_dir);

  for (const auto& mf : mask_files) {
    const SegmentationMask mask = io::read_mask(mf);
    const std::string id = mf.filename().string().substr(5, mf.filename().string().size() - 9);
    PickLine picks;
    if (!candidates(mask).any()) {
      log << "warning: all-zero mask " << mf.string() << ", emitting an all-invalid pick line\n";
      picks.times.assign(mask.width(), 0);
      picks.valid.assign(mask.width(), 0);
    } else {
      picks = run_picker(mask, method);
    }
    io::write_picks(out_dir / ("picks_" + id + ".bin"), picks);
    io::write_picks_csv(out_dir / ("picks_" + id + ".csv"), picks, sample_rate_ms);
  }
}

/// Score predicted masks + picks against the dataset's ground truth and write
/// the JSON report (and optionally the text table).
inline EvalReport run_evaluate(const std::filesystem::path& dataset_dir, const std::string& split,
                               const std::filesystem::path& masks_dir,
                               const std::filesystem::path& picks_dir, bool include_invalid,
                               const std::filesystem::path& report_json_path = {},
                               const std::filesystem::path& table_path = {},
                               const std::string& loss_label = "-",
                               const std::string& picker_label = "-") {
  const DatasetManifest man = load_manifest(dataset_dir);
  std::vector<SegmentationMask> pred_masks, gt_masks;
  std::vector<PickLine> pred_picks, gt_picks;
  std::vector<std::string> ids;
  for (const auto* rec : man.split(split)) {
    const auto mask_path = masks_dir / ("mask_" + rec->id + ".bin");
    const auto picks_path = picks_dir / ("picks_" + rec->id + ".bin");
    if (!std::filesystem::exists(mask_path))
      throw std::runtime_error("run_evaluate: missing predicted mask " + mask_path.string());
    if (!std::filesystem::exists(picks_path))
      throw std::runtime_error("run_evaluate: missing predicted picks " + picks_path.string());
    pred_masks.push_back(io::read_mask(mask_path));
    pred_picks.push_back(io::read_picks(picks_path));
    gt_masks.push_back(io::read_mask(dataset_dir / rec->mask_file));
    gt_picks.push_back(io::read_picks(dataset_dir / rec->picks_file));
    ids.push_back(rec->id);
  }
  EvalReport rep = build_report(pred_masks, pred_picks, gt_masks, gt_picks, man.sample_rate_ms,
                                include_invalid, ids);
  if (!report_json_path.empty()) {
    std::ofstream os(report_json_path);
    if (!os) throw std::runtime_error("cannot write report: " + report_json_path.string());
    os << to_json(rep).dump(2) << '\n';
  }
  if (!table_path.empty()) {
    std::ofstream os(table_path);
    if (!os) throw std::runtime_error("cannot write table: " + table_path.string());
    os << to_text_table(rep, loss_label, picker_label);
  }
  return rep;
}

}  // namespace fbp
