#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <fbp/dataset.hpp>
#include <fbp/pipeline.hpp>
#include <fbp/train.hpp>

using fbp::LossKind;
namespace fs = std::filesystem;

namespace {

fs::path make_tiny_dataset(const std::string& name, int n_train, int n_val, int n_test,
                           uint64_t seed, fbp::Variant variant = fbp::Variant::clean) {
  fbp::GenerateConfig cfg;
  cfg.num_train = n_train;
  cfg.num_val = n_val;
  cfg.num_test = n_test;
  cfg.height = 48;
  cfg.width = 64;
  cfg.variant = variant;
  cfg.seed = seed;
  const fs::path dir = fs::temp_directory_path() / ("fbp_pipe_" + name);
  fs::remove_all(dir);
  fbp::generate_dataset(cfg, dir);
  return dir;
}

fbp::TrainConfig tiny_train(const fs::path& data, LossKind loss, uint64_t seed) {
  fbp::TrainConfig tc;
  tc.loss_kind = loss;
  tc.epochs = 2;
  tc.batch_size = 2;
  tc.crop_width = 32;
  tc.seed = seed;
  tc.dataset_dir = data.string();
  tc.net.base_channels = 4;
  tc.net.depth = 2;
  return tc;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("config validation guards") {
  fbp::TrainConfig tc;
  tc.epochs = 0;
  CHECK_THROWS(tc.validate());
  tc.epochs = 1;
  tc.batch_size = 0;
  CHECK_THROWS(tc.validate());
  tc.batch_size = 1;
  tc.crop_width = 1;  // below the downsampling factor
  CHECK_THROWS(tc.validate());
}

TEST_CASE("training loss decreases on a tiny dataset for most seeds") {
  const fs::path data = make_tiny_dataset("smoke", 4, 0, 0, 31);
  int improved = 0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    auto tc = tiny_train(data, LossKind::lovasz, 1000 + seed);
    tc.batch_size = 1;  // several steps per epoch
    std::ostringstream sink;
    auto res = fbp::train(tc, sink);
    REQUIRE(res.step_losses.size() >= 4);
    improved += res.step_losses.back() < res.step_losses.front();
  }
  CHECK(improved >= 8);
}

TEST_CASE("cross-entropy training also runs and reports finite losses") {
  const fs::path data = make_tiny_dataset("smoke_ce", 4, 2, 0, 33);
  auto tc = tiny_train(data, LossKind::cross_entropy, 9);
  std::ostringstream sink;
  auto res = fbp::train(tc, sink);
  for (double l : res.step_losses) CHECK(std::isfinite(l));
  CHECK(res.best_epoch >= 0);
  CHECK(res.epoch_val_accuracy.back() > 0.0);
}

TEST_CASE("crop width larger than the dataset is rejected") {
  const fs::path data = make_tiny_dataset("cropguard", 2, 0, 0, 35);
  auto tc = tiny_train(data, LossKind::lovasz, 1);
  tc.crop_width = 65;
  std::ostringstream sink;
  CHECK_THROWS(fbp::train(tc, sink));
}

TEST_CASE("predict/pick/evaluate round trip through files") {
  const fs::path data = make_tiny_dataset("e2e", 6, 2, 3, 37);
  auto tc = tiny_train(data, LossKind::lovasz, 5);
  tc.checkpoint_path = (fs::temp_directory_path() / "fbp_pipe_e2e.fbck").string();
  std::ostringstream sink;
  fbp::train(tc, sink);

  const fs::path pred_a = fs::temp_directory_path() / "fbp_pipe_pred_a";
  const fs::path pred_b = fs::temp_directory_path() / "fbp_pipe_pred_b";
  fs::remove_all(pred_a);
  fs::remove_all(pred_b);
  fbp::run_predict(data, "test", tc.checkpoint_path, pred_a);
  fbp::run_predict(data, "test", tc.checkpoint_path, pred_b);

  const auto man = fbp::load_manifest(data);
  for (const auto* rec : man.split("test")) {
    CHECK(fs::exists(pred_a / ("mask_" + rec->id + ".bin")));
    CHECK(fs::exists(pred_a / ("prob_" + rec->id + ".bin")));
    // eval-mode inference is bit-identical run to run
    CHECK(slurp(pred_a / ("mask_" + rec->id + ".bin")) ==
          slurp(pred_b / ("mask_" + rec->id + ".bin")));
    CHECK(slurp(pred_a / ("prob_" + rec->id + ".bin")) ==
          slurp(pred_b / ("prob_" + rec->id + ".bin")));
  }

  // architecture mismatch between checkpoint and requested config
  fbp::UnetConfig other;
  other.base_channels = 8;
  other.depth = 2;
  CHECK_THROWS(fbp::run_predict(data, "test", tc.checkpoint_path, pred_b, other));

  const fs::path picks_dir = fs::temp_directory_path() / "fbp_pipe_picks";
  fs::remove_all(picks_dir);
  fbp::run_pick(pred_a, fbp::PickMethod::npp, picks_dir, man.sample_rate_ms);
  for (const auto* rec : man.split("test")) {
    CHECK(fs::exists(picks_dir / ("picks_" + rec->id + ".bin")));
    CHECK(fs::exists(picks_dir / ("picks_" + rec->id + ".csv")));
  }

  const fs::path report = fs::temp_directory_path() / "fbp_pipe_report.json";
  const fs::path table = fs::temp_directory_path() / "fbp_pipe_table.txt";
  auto rep = fbp::run_evaluate(data, "test", pred_a, picks_dir, true, report, table, "Lovasz",
                               "NPP");
  CHECK(fs::exists(report));
  const std::string table_text = slurp(table);
  CHECK(table_text.find("Acc with Lovasz loss") != std::string::npos);
  CHECK(table_text.find("MAE with NPP (ts)") != std::string::npos);

  // report fields are recomputable from the persisted artifacts
  auto rep2 = fbp::run_evaluate(data, "test", pred_a, picks_dir, true);
  CHECK(rep.pixel_accuracy == rep2.pixel_accuracy);
  CHECK(rep.mae_ts == rep2.mae_ts);
  CHECK(rep.mae_ms == doctest::Approx(rep.mae_ts * man.sample_rate_ms));

  // missing counterparts are named explicitly
  fs::remove(picks_dir / ("picks_" + man.split("test").front()->id + ".bin"));
  CHECK_THROWS_WITH_AS(fbp::run_evaluate(data, "test", pred_a, picks_dir, true),
                       doctest::Contains("picks_"), std::runtime_error);
}

TEST_CASE("picking ground-truth masks reproduces the dataset picks exactly") {
  const fs::path data = make_tiny_dataset("gtpick", 0, 0, 4, 39);
  const auto man = fbp::load_manifest(data);

  // stage the ground-truth masks as if they were predictions
  const fs::path masks = fs::temp_directory_path() / "fbp_pipe_gtmasks";
  fs::remove_all(masks);
  fs::create_directories(masks);
  for (const auto* rec : man.split("test"))
    fs::copy_file(data / rec->mask_file, masks / rec->mask_file);

  for (auto method : {fbp::PickMethod::fpp, fbp::PickMethod::npp}) {
    const fs::path picks = fs::temp_directory_path() / "fbp_pipe_gtpicks";
    fs::remove_all(picks);
    fbp::run_pick(masks, method, picks, man.sample_rate_ms);
    auto rep = fbp::run_evaluate(data, "test", masks, picks, true);
    CHECK(rep.mae_ts == 0.0);
    CHECK(rep.pixel_accuracy == 1.0);
    CHECK(rep.iou_signal == 1.0);
  }
}

TEST_CASE("all-zero masks produce an all-invalid pick line with a warning") {
  const fs::path masks = fs::temp_directory_path() / "fbp_pipe_zeromask";
  fs::remove_all(masks);
  fs::create_directories(masks);
  fbp::SegmentationMask zero;
  zero.classes = fbp::Array2D<uint8_t>(16, 12, 0);
  fbp::io::write_mask(masks / "mask_000000.bin", zero);

  const fs::path picks = fs::temp_directory_path() / "fbp_pipe_zeropicks";
  fs::remove_all(picks);
  std::ostringstream warnings;
  fbp::run_pick(masks, fbp::PickMethod::npp, picks, 8.0, warnings);
  CHECK(warnings.str().find("warning") != std::string::npos);
  auto p = fbp::io::read_picks(picks / "picks_000000.bin");
  CHECK(p.times.size() == 12);
  for (auto v : p.valid) CHECK(v == 0);
}

TEST_CASE("predict on an empty split writes nothing and succeeds") {
  const fs::path data = make_tiny_dataset("empty", 2, 0, 0, 41);
  auto tc = tiny_train(data, LossKind::lovasz, 5);
  tc.checkpoint_path = (fs::temp_directory_path() / "fbp_pipe_empty.fbck").string();
  std::ostringstream sink;
  fbp::train(tc, sink);
  const fs::path pred = fs::temp_directory_path() / "fbp_pipe_pred_empty";
  fs::remove_all(pred);
  CHECK_NOTHROW(fbp::run_predict(data, "test", tc.checkpoint_path, pred));
  int files = 0;
  for (auto it = fs::directory_iterator(pred); it != fs::directory_iterator(); ++it) ++files;
  CHECK(files == 0);
}

TEST_CASE("unknown pick method strings are usage errors") {
  CHECK_THROWS(fbp::pick_method_from_string("bogus"));
  CHECK_THROWS(fbp::variant_from_string("fielddata"));
  CHECK_THROWS(fbp::loss_kind_from_string("hinge2"));
}
