// fbpick: synthesize shot gathers, train the segmentation network, run
// inference and picking, evaluate, and reproduce the full comparison table.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <fbp/fbp.hpp>

namespace {

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  return nlohmann::json::parse(is);
}

struct GenerateArgs {
  std::string out, config, variant = "clean";
  int num_train = -1, num_val = -1, num_test = -1, height = -1, width = -1;
  double sample_rate = -1.0, noise_ratio = -1.0, noise_base_freq = -1.0;
  int noise_harmonics = -1;
  uint64_t seed = 0;
  bool seed_set = false, desk_scale = false;
};

struct TrainArgs {
  std::string data, config, loss, checkpoint, upsample;
  int epochs = -1, batch_size = -1, crop_width = -1, base_channels = -1, depth = -1;
  double lr = -1.0;
  uint64_t seed = 0;
  bool seed_set = false, desk_scale = false, no_normalize = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fbpick: first-arrival picking on synthetic shot gathers "
               "(segmentation network + boundary pickers)"};
  app.require_subcommand(1);

  // ------------------------------------------------------------------ generate
  auto* gen_cmd = app.add_subcommand("generate", "Synthesize a dataset of shot gathers");
  GenerateArgs ga;
  gen_cmd->add_option("--out", ga.out, "output dataset directory")
      ->envname("FBP_DATA_ROOT")
      ->required();
  gen_cmd->add_option("--config", ga.config, "JSON config file (CLI flags override it)");
  auto* g_variant = gen_cmd->add_option("--variant", ga.variant, "dataset variant")
                        ->check(CLI::IsMember({"clean", "disconnected", "noisy"}));
  auto* g_ntr = gen_cmd->add_option("--num-train", ga.num_train, "training gathers");
  auto* g_nva = gen_cmd->add_option("--num-val", ga.num_val, "validation gathers");
  auto* g_nte = gen_cmd->add_option("--num-test", ga.num_test, "test gathers");
  auto* g_h = gen_cmd->add_option("--height", ga.height, "time steps per gather");
  auto* g_w = gen_cmd->add_option("--width", ga.width, "receivers per gather");
  auto* g_sr = gen_cmd->add_option("--sample-rate", ga.sample_rate, "sample rate in ms");
  auto* g_nr = gen_cmd->add_option("--noise-ratio", ga.noise_ratio,
                                   "max |noise| / max |clean| for the noisy variant");
  auto* g_nb = gen_cmd->add_option("--noise-base-freq", ga.noise_base_freq,
                                   "harmonic base frequency in Hz");
  auto* g_nh = gen_cmd->add_option("--noise-harmonics", ga.noise_harmonics, "harmonic count");
  auto* g_seed = gen_cmd->add_option("--seed", ga.seed, "master seed");
  gen_cmd->add_flag("--desk-scale", ga.desk_scale, "small CPU-feasible sizes");

  gen_cmd->callback([&] {
    fbp::GenerateConfig cfg;
    if (!ga.config.empty()) fbp::from_json_into(load_json_file(ga.config), cfg);
    if (ga.desk_scale) cfg.apply_desk_scale();
    if (*g_variant) cfg.variant = fbp::variant_from_string(ga.variant);
    if (*g_ntr) cfg.num_train = ga.num_train;
    if (*g_nva) cfg.num_val = ga.num_val;
    if (*g_nte) cfg.num_test = ga.num_test;
    if (*g_h) cfg.height = ga.height;
    if (*g_w) cfg.width = ga.width;
    if (*g_sr) cfg.sample_rate_ms = ga.sample_rate;
    if (*g_nr) cfg.noise.amplitude_ratio = ga.noise_ratio;
    if (*g_nb) cfg.noise.base_frequency_hz = ga.noise_base_freq;
    if (*g_nh) cfg.noise.num_harmonics = ga.noise_harmonics;
    if (*g_seed) cfg.seed = ga.seed;
    fbp::generate_dataset(cfg, ga.out);
    std::cout << "wrote dataset to " << ga.out << "\n";
  });

  // --------------------------------------------------------------------- train
  auto* train_cmd = app.add_subcommand("train", "Train the segmentation network");
  TrainArgs ta;
  train_cmd->add_option("--data", ta.data, "dataset directory")
      ->envname("FBP_DATA_ROOT")
      ->required();
  train_cmd->add_option("--checkpoint", ta.checkpoint, "output checkpoint path")->required();
  train_cmd->add_option("--config", ta.config, "JSON config file (CLI flags override it)");
  auto* t_loss = train_cmd->add_option("--loss", ta.loss, "training loss")
                     ->check(CLI::IsMember({"ce", "cross_entropy", "lovasz"}));
  auto* t_ep = train_cmd->add_option("--epochs", ta.epochs, "training epochs");
  auto* t_bs = train_cmd->add_option("--batch-size", ta.batch_size, "crops per step");
  auto* t_cwd = train_cmd->add_option("--crop-width", ta.crop_width, "training crop width");
  auto* t_lr = train_cmd->add_option("--lr", ta.lr, "learning rate");
  auto* t_bc = train_cmd->add_option("--base-channels", ta.base_channels, "first-level channels");
  auto* t_dep = train_cmd->add_option("--depth", ta.depth, "encoder blocks");
  auto* t_up = train_cmd->add_option("--upsample", ta.upsample, "decoder upsampling")
                   ->check(CLI::IsMember({"nearest+conv", "transposed-conv"}));
  auto* t_seed = train_cmd->add_option("--seed", ta.seed, "training seed");
  train_cmd->add_flag("--desk-scale", ta.desk_scale, "small CPU-feasible sizes");
  train_cmd->add_flag("--no-normalize", ta.no_normalize,
                      "skip per-image standardization (ablation)");

  train_cmd->callback([&] {
    fbp::TrainConfig cfg;
    if (!ta.config.empty()) fbp::from_json_into(load_json_file(ta.config), cfg);
    if (ta.desk_scale) cfg.apply_desk_scale();
    cfg.dataset_dir = ta.data;
    cfg.checkpoint_path = ta.checkpoint;
    if (*t_loss) cfg.loss_kind = fbp::loss_kind_from_string(ta.loss);
    if (*t_ep) cfg.epochs = ta.epochs;
    if (*t_bs) cfg.batch_size = ta.batch_size;
    if (*t_cwd) cfg.crop_width = ta.crop_width;
    if (*t_lr) cfg.learning_rate = ta.lr;
    if (*t_bc) cfg.net.base_channels = ta.base_channels;
    if (*t_dep) cfg.net.depth = ta.depth;
    if (*t_up) cfg.net.upsample = fbp::upsample_from_string(ta.upsample);
    if (*t_seed) cfg.seed = ta.seed;
    if (ta.no_normalize) cfg.normalize_inputs = false;
    fbp::TrainResult res = fbp::train(cfg, std::cout);
    std::cout << "best val accuracy " << res.best_val_accuracy << " at epoch "
              << res.best_epoch + 1 << "; checkpoint: " << cfg.checkpoint_path << "\n";
  });

  // ------------------------------------------------------------------- predict
  auto* pred_cmd = app.add_subcommand("predict", "Segment gathers with a trained checkpoint");
  std::string p_data, p_split = "test", p_ckpt, p_out;
  int p_base_channels = -1, p_depth = -1;
  pred_cmd->add_option("--data", p_data, "dataset directory")
      ->envname("FBP_DATA_ROOT")
      ->required();
  pred_cmd->add_option("--split", p_split, "dataset split")
      ->check(CLI::IsMember({"train", "val", "test"}));
  pred_cmd->add_option("--checkpoint", p_ckpt, "checkpoint path")->required();
  pred_cmd->add_option("--out", p_out, "output directory for masks + probability maps")
      ->required();
  auto* p_bc = pred_cmd->add_option("--base-channels", p_base_channels,
                                    "expected architecture check");
  auto* p_dep = pred_cmd->add_option("--depth", p_depth, "expected architecture check");

  pred_cmd->callback([&] {
    std::optional<fbp::UnetConfig> expect;
    if (*p_bc || *p_dep) {
      fbp::UnetConfig e = fbp::load_checkpoint(p_ckpt).config;
      if (*p_bc) e.base_channels = p_base_channels;
      if (*p_dep) e.depth = p_depth;
      expect = e;
    }
    fbp::run_predict(p_data, p_split, p_ckpt, p_out, expect);
    std::cout << "wrote predictions to " << p_out << "\n";
  });

  // ---------------------------------------------------------------------- pick
  auto* pick_cmd = app.add_subcommand("pick", "Convert masks into pick lines");
  std::string k_masks, k_method = "npp", k_out;
  double k_sr = 8.0;
  pick_cmd->add_option("--masks", k_masks, "directory of mask_<id>.bin files")->required();
  pick_cmd->add_option("--method", k_method, "picking method")
      ->check(CLI::IsMember({"fpp", "npp"}));
  pick_cmd->add_option("--out", k_out, "output directory for picks")->required();
  pick_cmd->add_option("--sample-rate", k_sr, "sample rate in ms (for the CSV export)");

  pick_cmd->callback([&] {
    fbp::run_pick(k_masks, fbp::pick_method_from_string(k_method), k_out, k_sr);
    std::cout << "wrote picks to " << k_out << "\n";
  });

  // ------------------------------------------------------------------ evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Score picks + masks against ground truth");
  std::string e_data, e_split = "test", e_masks, e_picks, e_report, e_table;
  std::string e_loss_label = "-", e_picker_label = "-";
  bool e_exclude_invalid = false;
  eval_cmd->add_option("--data", e_data, "dataset directory")
      ->envname("FBP_DATA_ROOT")
      ->required();
  eval_cmd->add_option("--split", e_split, "dataset split")
      ->check(CLI::IsMember({"train", "val", "test"}));
  eval_cmd->add_option("--masks", e_masks, "predicted masks directory")->required();
  eval_cmd->add_option("--picks", e_picks, "predicted picks directory")->required();
  eval_cmd->add_option("--report", e_report, "output JSON report path");
  eval_cmd->add_option("--table", e_table, "output text table path");
  eval_cmd->add_option("--loss-label", e_loss_label, "loss name for the table rows");
  eval_cmd->add_option("--picker-label", e_picker_label, "picker name for the table rows");
  eval_cmd->add_flag("--exclude-invalid", e_exclude_invalid,
                     "drop dead-trace receivers from the MAE");

  eval_cmd->callback([&] {
    fbp::EvalReport rep = fbp::run_evaluate(e_data, e_split, e_masks, e_picks,
                                            !e_exclude_invalid, e_report, e_table, e_loss_label,
                                            e_picker_label);
    std::cout << fbp::to_text_table(rep, e_loss_label, e_picker_label);
  });

  // ----------------------------------------------------------------- reproduce
  auto* rep_cmd = app.add_subcommand(
      "reproduce", "Full experiment: generate, train both losses, pick, evaluate");
  std::string r_out = "reproduce_out";
  uint64_t r_seed = 1;
  bool r_full_scale = false, r_no_plots = false;
  int r_epochs = -1, r_num_train = -1, r_num_test = -1;
  rep_cmd->add_option("--out", r_out, "output directory");
  rep_cmd->add_option("--seed", r_seed, "master seed");
  rep_cmd->add_flag("--full-scale", r_full_scale, "paper-scale sizes instead of desk scale");
  rep_cmd->add_flag("--no-plots", r_no_plots, "skip overlay figures");
  auto* r_ep = rep_cmd->add_option("--epochs", r_epochs, "override training epochs");
  auto* r_ntr = rep_cmd->add_option("--num-train", r_num_train, "override training gathers");
  auto* r_nte = rep_cmd->add_option("--num-test", r_num_test, "override test gathers");

  rep_cmd->callback([&] {
    fbp::ExperimentSpec spec;
    spec.out_dir = r_out;
    spec.seed = r_seed;
    spec.desk_scale = !r_full_scale;
    spec.emit_plots = !r_no_plots;
    if (spec.desk_scale) {
      spec.gen.apply_desk_scale();
      spec.train_base.apply_desk_scale();
      spec.desk_scale = false;  // sizes are already applied; keep overrides below
    }
    if (*r_ep) spec.train_base.epochs = r_epochs;
    if (*r_ntr) spec.gen.num_train = r_num_train;
    if (*r_nte) spec.gen.num_test = r_num_test;
    fbp::ReproduceResult res = fbp::reproduce(spec, std::cout);
    if (!res.all_ok()) throw std::runtime_error("reproduce: one or more cells failed");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
