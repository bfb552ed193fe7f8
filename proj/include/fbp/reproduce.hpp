#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbp/pipeline.hpp"
#include "fbp/plot.hpp"

// The end-to-end experiment: generate the synthetic variants, train one model
// per loss on the clean training split, run both pickers on every variant's
// test split and assemble the comparison table plus overlay figures. One
// failed cell marks itself in the table and leaves the others intact.

namespace fbp {

struct ExperimentSpec {
  std::vector<Variant> variants{Variant::clean, Variant::disconnected, Variant::noisy};
  std::vector<LossKind> losses{LossKind::cross_entropy, LossKind::lovasz};
  std::vector<PickMethod> pickers{PickMethod::fpp, PickMethod::npp};
  std::filesystem::path out_dir = "reproduce_out";
  bool desk_scale = true;
  uint64_t seed = 1;
  GenerateConfig gen;       // sizing template; variant and seeds are derived
  TrainConfig train_base;   // loss and dataset dir are filled per run
  bool emit_plots = true;
};

struct ReproduceResult {
  struct Cell {
    bool ok = false;
    std::string error;
    double accuracy = std::nan("");
    double iou_signal = std::nan("");
    double mae_ts = std::nan("");
    double mae_ms = std::nan("");
  };
  // key: "<variant>/<loss>/<picker>"
  std::map<std::string, Cell> cells;
  std::string table;
  std::filesystem::path clean_data_dir;
  std::map<std::string, std::filesystem::path> checkpoints;  // per loss name

  static std::string key(Variant v, LossKind l, PickMethod p) {
    return std::string(to_string(v)) + "/" + to_string(l) + "/" +
           (p == PickMethod::fpp ? "fpp" : "npp");
  }
  const Cell* find(Variant v, LossKind l, PickMethod p) const {
    auto it = cells.find(key(v, l, p));
    return it == cells.end() ? nullptr : &it->second;
  }
  double mae(Variant v, LossKind l, PickMethod p) const {
    const Cell* c = find(v, l, p);
    return c && c->ok ? c->mae_ts : std::nan("");
  }
  double accuracy(Variant v, LossKind l) const {
    for (PickMethod p : {PickMethod::fpp, PickMethod::npp}) {
      const Cell* c = find(v, l, p);
      if (c && c->ok) return c->accuracy;
    }
    return std::nan("");
  }
  bool all_ok() const {
    for (const auto& [k, c] : cells)
      if (!c.ok) return false;
    return !cells.empty();
  }
};

namespace detail {

inline std::string fmt2(double x) {
  if (std::isnan(x)) return "failed";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << x;
  return os.str();
}

inline std::string fmt_pct(double x) {
  if (std::isnan(x)) return "failed";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * x << "%";
  return os.str();
}

}  // namespace detail

inline ReproduceResult reproduce(const ExperimentSpec& spec, std::ostream& log = std::cout) {
  namespace fs = std::filesystem;
  ReproduceResult res;
  fs::create_directories(spec.out_dir);

  // --- generate -------------------------------------------------------------
  std::map<std::string, fs::path> data_dirs;
  std::map<std::string, std::string> variant_errors;
  std::vector<Variant> gen_variants = spec.variants;
  bool has_clean = false;
  for (Variant v : gen_variants) has_clean |= v == Variant::clean;
  if (!has_clean) gen_variants.insert(gen_variants.begin(), Variant::clean);  // training data

  for (size_t vi = 0; vi < gen_variants.size(); ++vi) {
    const Variant v = gen_variants[vi];
    GenerateConfig gc = spec.gen;
    if (spec.desk_scale) gc.apply_desk_scale();
    gc.variant = v;
    if (v != Variant::clean) {
      gc.num_train = 0;  // models are trained on clean data only
      gc.num_val = 0;
    }
    gc.seed = derive_seed(spec.seed, 100 + static_cast<uint64_t>(v));
    const fs::path dir = spec.out_dir / "data" / to_string(v);
    try {
      log << "[reproduce] generating " << to_string(v) << " dataset -> " << dir.string() << "\n";
      generate_dataset(gc, dir);
      data_dirs[to_string(v)] = dir;
    } catch (const std::exception& e) {
      variant_errors[to_string(v)] = std::string("generate failed: ") + e.what();
      log << "[reproduce] " << variant_errors[to_string(v)] << "\n";
    }
  }
  if (data_dirs.count("clean")) res.clean_data_dir = data_dirs["clean"];

  // --- train ----------------------------------------------------------------
  std::map<std::string, std::string> train_errors;
  for (size_t li = 0; li < spec.losses.size(); ++li) {
    const LossKind loss = spec.losses[li];
    if (!data_dirs.count("clean")) {
      train_errors[to_string(loss)] = "no clean training data";
      continue;
    }
    TrainConfig tc = spec.train_base;
    if (spec.desk_scale) tc.apply_desk_scale();
    tc.loss_kind = loss;
    tc.dataset_dir = data_dirs["clean"].string();
    fs::create_directories(spec.out_dir / "ckpt");
    tc.checkpoint_path = (spec.out_dir / "ckpt" / (std::string(to_string(loss)) + ".fbck")).string();
    // Same seed for every loss: identical init, shuffles and crops, so the
    // loss is the only difference between the compared models.
    tc.seed = derive_seed(spec.seed, 200);
    try {
      log << "[reproduce] training " << to_string(loss) << " model\n";
      train(tc, log);
      res.checkpoints[to_string(loss)] = tc.checkpoint_path;
    } catch (const std::exception& e) {
      train_errors[to_string(loss)] = std::string("train failed: ") + e.what();
      log << "[reproduce] " << train_errors[to_string(loss)] << "\n";
    }
  }

  // --- predict / pick / evaluate --------------------------------------------
  for (Variant v : spec.variants) {
    const std::string vs = to_string(v);
    for (LossKind loss : spec.losses) {
      const std::string ls = to_string(loss);
      auto fail_cells = [&](const std::string& why) {
        for (PickMethod p : spec.pickers) {
          auto& c = res.cells[ReproduceResult::key(v, loss, p)];
          c.ok = false;
          c.error = why;
        }
      };
      if (variant_errors.count(vs)) {
        fail_cells(variant_errors[vs]);
        continue;
      }
      if (train_errors.count(ls)) {
        fail_cells(train_errors[ls]);
        continue;
      }
      const fs::path pred_dir = spec.out_dir / "pred" / vs / ls;
      try {
        run_predict(data_dirs[vs], "test", res.checkpoints[ls], pred_dir);
      } catch (const std::exception& e) {
        fail_cells(std::string("predict failed: ") + e.what());
        continue;
      }
      const DatasetManifest man = load_manifest(data_dirs[vs]);
      for (PickMethod p : spec.pickers) {
        const std::string ps = p == PickMethod::fpp ? "fpp" : "npp";
        auto& cell = res.cells[ReproduceResult::key(v, loss, p)];
        try {
          const fs::path picks_dir = spec.out_dir / "picks" / vs / ls / ps;
          run_pick(pred_dir, p, picks_dir, man.sample_rate_ms, log);
          fs::create_directories(spec.out_dir / "reports");
          const EvalReport rep = run_evaluate(
              data_dirs[vs], "test", pred_dir, picks_dir, /*include_invalid=*/true,
              spec.out_dir / "reports" / (vs + "_" + ls + "_" + ps + ".json"),
              spec.out_dir / "reports" / (vs + "_" + ls + "_" + ps + ".txt"), ls, ps);
          cell.ok = true;
          cell.accuracy = rep.pixel_accuracy;
          cell.iou_signal = rep.iou_signal;
          cell.mae_ts = rep.mae_ts;
          cell.mae_ms = rep.mae_ms;
          log << "[reproduce] " << vs << "/" << ls << "/" << ps << "  acc "
              << detail::fmt_pct(rep.pixel_accuracy) << "  mae " << detail::fmt2(rep.mae_ts)
              << " ts\n";
        } catch (const std::exception& e) {
          cell.ok = false;
          cell.error = e.what();
          log << "[reproduce] cell " << vs << "/" << ls << "/" << ps << " failed: " << e.what()
              << "\n";
        }
        // Overlay figure: first test gather with ground truth + prediction.
        if (spec.emit_plots && cell.ok) {
          try {
            const auto test_recs = man.split("test");
            if (!test_recs.empty()) {
              const auto* rec = test_recs.front();
              const GatherImage g =
                  io::read_gather(data_dirs[vs] / rec->gather_file, man.sample_rate_ms);
              const PickLine gt = io::read_picks(data_dirs[vs] / rec->picks_file);
              const PickLine pl = io::read_picks(spec.out_dir / "picks" / vs / ls / ps /
                                                 ("picks_" + rec->id + ".bin"));
              fs::create_directories(spec.out_dir / "plots");
              plot::write_overlay_png(
                  spec.out_dir / "plots" / (vs + "_" + ls + "_" + ps + ".png"), g, &gt, &pl);
            }
          } catch (const std::exception& e) {
            log << "[reproduce] plot for " << vs << "/" << ls << "/" << ps
                << " failed: " << e.what() << "\n";
          }
        }
      }
    }
  }

  // --- table ----------------------------------------------------------------
  std::ostringstream tb;
  const int label_w = 26, col_w = 14;
  auto hline = [&] {
    tb << "+" << std::string(label_w + 2, '-');
    for (size_t i = 0; i < spec.variants.size(); ++i) tb << "+" << std::string(col_w + 2, '-');
    tb << "+\n";
  };
  auto row = [&](const std::string& label, const std::vector<std::string>& vals) {
    tb << "| " << std::left << std::setw(label_w) << label;
    for (const auto& v : vals) tb << " | " << std::right << std::setw(col_w) << v;
    tb << " |\n";
  };
  std::vector<std::string> heads;
  for (Variant v : spec.variants) heads.push_back(std::string("synthetic ") + to_string(v));
  hline();
  row("Datasets", heads);
  hline();
  {
    std::vector<std::string> trained(spec.variants.size(), "synthetic clean");
    row("Model trained on", trained);
    hline();
  }
  for (LossKind loss : spec.losses) {
    const std::string ln = loss == LossKind::cross_entropy ? "CE" : "Lovasz";
    std::vector<std::string> accs, fpps, npps;
    for (Variant v : spec.variants) {
      accs.push_back(detail::fmt_pct(res.accuracy(v, loss)));
      fpps.push_back(detail::fmt2(res.mae(v, loss, PickMethod::fpp)));
      npps.push_back(detail::fmt2(res.mae(v, loss, PickMethod::npp)));
    }
    row("Acc with " + ln + " loss", accs);
    hline();
    row("MAE with FPP (ts)", fpps);
    hline();
    row("MAE with NPP (ts)", npps);
    hline();
  }
  {
    std::vector<std::string> sizes;
    for (Variant v : spec.variants) {
      if (!data_dirs.count(to_string(v))) {
        sizes.push_back("failed");
        continue;
      }
      const DatasetManifest man = load_manifest(data_dirs[to_string(v)]);
      int h = 0, wmin = 1 << 30, wmax = 0;
      for (const auto& r : man.records) {
        if (r.split != "test") continue;
        h = r.height;
        wmin = std::min(wmin, r.width);
        wmax = std::max(wmax, r.width);
      }
      std::ostringstream s;
      if (wmin == wmax)
        s << h << " * " << wmax;
      else
        s << h << " * (" << wmin << "~" << wmax << ")";
      sizes.push_back(s.str());
    }
    row("Image size", sizes);
    hline();
  }
  res.table = tb.str();

  {
    std::ofstream os(spec.out_dir / "table.txt");
    os << res.table;
  }
  {
    nlohmann::json j;
    for (const auto& [k, c] : res.cells)
      j["cells"][k] = {{"ok", c.ok},        {"error", c.error},   {"accuracy", c.accuracy},
                       {"iou_signal", c.iou_signal}, {"mae_ts", c.mae_ts}, {"mae_ms", c.mae_ms}};
    j["seed"] = spec.seed;
    j["desk_scale"] = spec.desk_scale;
    std::ofstream os(spec.out_dir / "results.json");
    os << j.dump(2) << '\n';
  }
  log << res.table;
  return res;
}

}  // namespace fbp
