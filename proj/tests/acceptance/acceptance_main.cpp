// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code 0 only if all pass.
//
// Usage: fbp_acceptance [--out DIR] [--skip-e2e]
//   --out DIR    work directory for generated data, checkpoints and reports
//   --skip-e2e   run only the fast criteria (1-6, 10, 11); 7-9 are marked
//                skipped and the exit code ignores them. Intended for quick
//                local iteration, not for the real gate.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fbp/fbp.hpp>

#include "../oracles.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + p.string());
  return std::string(std::istreambuf_iterator<char>(is), {});
}

// --- criterion 1: Lovasz corner-point equivalence ---------------------------

Outcome criterion1() {
  const auto t0 = Clock::now();
  fbp::Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const int p = 1 + rng.uniform_int(0, 11);
    std::vector<uint8_t> gt(p), mis(p);
    std::vector<int8_t> pm(p);
    std::vector<double> s(p);
    for (int i = 0; i < p; ++i) {
      gt[i] = rng.uniform() < 0.5 ? 1 : 0;
      pm[i] = static_cast<int8_t>(2 * gt[i] - 1);
      mis[i] = rng.uniform() < 0.4 ? 1 : 0;
      s[i] = mis[i] ? 0.0 : 2.0 * pm[i];  // F*y in {0, 2} forces m in {1, 0}
    }
    worst = std::max(worst, std::abs(fbp::lovasz_hinge<double>(s, pm) - oracle::delta_jc(gt, mis)));
  }
  const double dt = seconds_since(t0);
  std::ostringstream os;
  os << "max |loss - delta| = " << worst << " over 500 instances in " << dt << " s";
  return {worst <= 1e-9 && dt < 10.0, os.str()};
}

// --- criterion 2: Lovasz gradient vs central finite differences -------------

Outcome criterion2() {
  const auto t0 = Clock::now();
  fbp::Rng rng(202);
  double worst_rel = 0.0;
  long checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 36;  // 6x6 logit map
    std::vector<double> s(n);
    std::vector<uint8_t> labels(n);
    std::vector<int8_t> pm(n);
    for (int i = 0; i < n; ++i) {
      s[i] = rng.normal() * 1.5;
      labels[i] = rng.uniform() < 0.5 ? 1 : 0;
      pm[i] = static_cast<int8_t>(2 * labels[i] - 1);
    }
    const auto grad = fbp::lovasz_hinge_grad<double>(s, pm);
    std::vector<double> m(n);
    for (int i = 0; i < n; ++i) m[i] = std::max(1.0 - s[i] * pm[i], 0.0);
    auto loss_fn = [&](const std::vector<double>& x) {
      return static_cast<double>(fbp::lovasz_hinge<double>(x, pm));
    };
    for (int i = 0; i < n; ++i) {
      if (std::abs(1.0 - s[i] * pm[i]) < 1e-4) continue;  // hinge kink
      bool tie = false;
      for (int j = 0; j < n; ++j)
        if (j != i && std::abs(m[i] - m[j]) < 1e-4) tie = true;
      if (tie) continue;  // sort tie
      const double fd = oracle::central_diff(loss_fn, s, i, 1e-5);
      const double denom = std::max(std::abs(grad[i]), std::abs(fd));
      if (denom < 1e-12) continue;
      worst_rel = std::max(worst_rel, std::abs(grad[i] - fd) / denom);
      ++checked;
    }
  }
  const double dt = seconds_since(t0);
  std::ostringstream os;
  os << "max relative error " << worst_rel << " over " << checked << " coordinates in " << dt
     << " s";
  return {worst_rel < 1e-3 && checked > 500 && dt < 30.0, os.str()};
}

// --- criterion 3: exhaustive g prefix-sum identity ---------------------------

Outcome criterion3() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  long patterns = 0;
  for (int p = 1; p <= 10; ++p) {
    for (unsigned bits = 0; bits < (1u << p); ++bits) {
      std::vector<uint8_t> gt(p);
      for (int i = 0; i < p; ++i) gt[i] = (bits >> i) & 1;
      const auto g = fbp::lovasz_grad<double>(gt);
      std::vector<uint8_t> mis(p, 0);
      double csum = 0.0;
      for (int i = 0; i < p; ++i) {
        csum += g[i];
        mis[i] = 1;
        worst = std::max(worst, std::abs(csum - oracle::delta_jc(gt, mis)));
      }
      ++patterns;
    }
  }
  const double dt = seconds_since(t0);
  std::ostringstream os;
  os << "max |cumsum(g) - delta| = " << worst << " over " << patterns << " patterns in " << dt
     << " s";
  return {worst <= 1e-12 && patterns == 2046 && dt < 60.0, os.str()};
}

// --- criterion 4: picking round-trips on monotone masks ---------------------

Outcome criterion4() {
  fbp::Rng rng(404);
  long failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int T = 8 + rng.uniform_int(0, 56);
    const int R = 4 + rng.uniform_int(0, 92);
    fbp::PickLine p;
    int t = rng.uniform_int(0, T - 1);
    for (int r = 0; r < R; ++r) {
      t = std::clamp(t + rng.uniform_int(-3, 3), 0, T - 1);
      p.times.push_back(t);
      p.valid.push_back(1);
    }
    const auto mask = fbp::make_mask(p, T);
    const auto cs = fbp::candidates(mask);
    const auto a = fbp::fpp(mask);
    const auto b = fbp::npp_directional(cs, fbp::Direction::left_to_right);
    const auto c = fbp::npp_directional(cs, fbp::Direction::right_to_left);
    const auto d = fbp::npp_bidirectional(mask);
    failures += a.times != p.times;
    failures += b.times != p.times;
    failures += c.times != p.times;
    failures += d.times != p.times;
  }
  std::ostringstream os;
  os << failures << " failures over 1000 masks x 4 pickers";
  return {failures == 0, os.str()};
}

// --- criterion 5: NPP beats FPP on adversarial blob masks --------------------

Outcome criterion5() {
  fbp::Rng rng(505);
  int wins = 0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    const int T = 48 + rng.uniform_int(0, 32);
    const int R = 48 + rng.uniform_int(0, 64);
    const int base = T / 2 + rng.uniform_int(0, T / 4);
    fbp::PickLine truth;
    int t = base;
    for (int r = 0; r < R; ++r) {
      t = std::clamp(t + rng.uniform_int(-1, 1), T / 2, T - 2);
      truth.times.push_back(t);
      truth.valid.push_back(1);
    }
    auto mask = fbp::make_mask(truth, T);
    // early spurious blob strictly above the boundary, well separated so the
    // blob candidates are farther from neighboring picks than true ones
    const int c0 = 10 + rng.uniform_int(0, R / 2 - 12);
    const int width = 8 + rng.uniform_int(0, 12);
    const int c1 = std::min(R - 4, c0 + width);
    const int b0 = 2 + rng.uniform_int(0, 5);
    const int b1 = b0 + 2 + rng.uniform_int(0, 3);
    for (int r = c0; r < c1; ++r)
      for (int tt = b0; tt < b1; ++tt) mask.classes.at(tt, r) = 1;

    const auto p_fpp = fbp::fpp(mask);
    const auto p_npp = fbp::npp_bidirectional(mask);
    const auto mae = [&](const fbp::PickLine& p) {
      double s = 0;
      for (int r = 0; r < R; ++r) s += std::abs(p.times[r] - truth.times[r]);
      return s / R;
    };
    if (mae(p_npp) < mae(p_fpp)) ++wins;
  }
  std::ostringstream os;
  os << wins << "/" << trials << " masks with MAE(NPP) < MAE(FPP)";
  return {wins == trials, os.str()};
}

// --- criterion 6: exact harmonic-noise scaling -------------------------------

Outcome criterion6() {
  fbp::Rng seeds(606);
  double worst_rel = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    fbp::VelocityModel m;
    m.layer_thicknesses_m = {40.0 + 40.0 * seeds.uniform()};
    m.layer_velocities_ms = {1500.0, 3000.0};
    m.receiver_spacing_m = 6.0;
    m.source_receiver_index = 24;
    auto s = fbp::synthesize_gather(m, 96, 48, 25.0, {}, seeds.next_u64());
    double max_clean = 0.0;
    for (float a : s.gather.amplitudes.v)
      max_clean = std::max(max_clean, std::abs(static_cast<double>(a)));
    fbp::NoiseConfig cfg;
    cfg.amplitude_ratio = 0.5;
    cfg.seed = seeds.next_u64();
    const auto noisy = fbp::add_harmonic_noise(s.gather, cfg);
    double max_noise = 0.0;
    for (size_t i = 0; i < noisy.amplitudes.v.size(); ++i)
      max_noise = std::max(max_noise, std::abs(static_cast<double>(noisy.amplitudes.v[i]) -
                                               s.gather.amplitudes.v[i]));
    worst_rel = std::max(worst_rel, std::abs(max_noise - 0.5 * max_clean) / max_clean);
  }
  std::ostringstream os;
  os << "max relative scaling error " << worst_rel << " over 50 gathers";
  return {worst_rel <= 1e-6, os.str()};
}

// --- criteria 8 + 9: desk-scale end-to-end and trend reproduction ------------

fbp::ReproduceResult run_reproduce(const fs::path& out, uint64_t seed) {
  fbp::ExperimentSpec spec;
  spec.out_dir = out;
  spec.seed = seed;
  spec.desk_scale = true;
  spec.emit_plots = true;
  std::cout << "  [e2e] reproduce with seed " << seed << " -> " << out.string() << std::endl;
  return fbp::reproduce(spec, std::cout);
}

bool trends_hold(const fbp::ReproduceResult& res, std::string& why) {
  using fbp::LossKind;
  using fbp::PickMethod;
  using fbp::Variant;
  std::ostringstream os;
  bool ok = true;
  for (Variant v : {Variant::clean, Variant::disconnected, Variant::noisy}) {
    const double lov_npp = res.mae(v, LossKind::lovasz, PickMethod::npp);
    const double ce_npp = res.mae(v, LossKind::cross_entropy, PickMethod::npp);
    const double ce_fpp = res.mae(v, LossKind::cross_entropy, PickMethod::fpp);
    if (std::isnan(lov_npp) || std::isnan(ce_npp) || std::isnan(ce_fpp)) {
      os << " [" << to_string(v) << ": missing cells]";
      ok = false;
      continue;
    }
    if (!(lov_npp <= ce_npp)) {
      os << " [" << to_string(v) << ": lovasz " << lov_npp << " > ce " << ce_npp << " (npp)]";
      ok = false;
    }
    if (!(ce_npp <= ce_fpp)) {
      os << " [" << to_string(v) << ": npp " << ce_npp << " > fpp " << ce_fpp << " (ce)]";
      ok = false;
    }
  }
  why = os.str();
  return ok;
}

// --- criterion 10: byte determinism ------------------------------------------

Outcome criterion10(const fs::path& work) {
  // generate twice with one seed
  fbp::GenerateConfig cfg;
  cfg.num_train = 4;
  cfg.num_val = 1;
  cfg.num_test = 2;
  cfg.height = 48;
  cfg.width = 64;
  cfg.seed = 1010;
  const fs::path da = work / "det_a", db = work / "det_b";
  fs::remove_all(da);
  fs::remove_all(db);
  const auto man = fbp::generate_dataset(cfg, da);
  fbp::generate_dataset(cfg, db);
  for (const auto& r : man.records) {
    for (const auto& f : {r.gather_file, r.mask_file, r.picks_file})
      if (slurp(da / f) != slurp(db / f)) return {false, "generate differs in " + f};
  }
  if (slurp(da / "manifest.json") != slurp(db / "manifest.json"))
    return {false, "manifests differ"};

  // predict / pick / evaluate twice on fixed inputs
  fbp::TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 2;
  tc.crop_width = 32;
  tc.net.base_channels = 4;
  tc.net.depth = 2;
  tc.seed = 7;
  tc.dataset_dir = da.string();
  tc.checkpoint_path = (work / "det.fbck").string();
  std::ostringstream sink;
  fbp::train(tc, sink);

  const fs::path pa = work / "det_pred_a", pb = work / "det_pred_b";
  fs::remove_all(pa);
  fs::remove_all(pb);
  fbp::run_predict(da, "test", tc.checkpoint_path, pa);
  fbp::run_predict(da, "test", tc.checkpoint_path, pb);
  for (const auto* rec : man.split("test")) {
    if (slurp(pa / ("mask_" + rec->id + ".bin")) != slurp(pb / ("mask_" + rec->id + ".bin")))
      return {false, "predict masks differ for " + rec->id};
    if (slurp(pa / ("prob_" + rec->id + ".bin")) != slurp(pb / ("prob_" + rec->id + ".bin")))
      return {false, "probability maps differ for " + rec->id};
  }

  const fs::path ka = work / "det_picks_a", kb = work / "det_picks_b";
  fs::remove_all(ka);
  fs::remove_all(kb);
  std::ostringstream warn;
  fbp::run_pick(pa, fbp::PickMethod::npp, ka, 8.0, warn);
  fbp::run_pick(pa, fbp::PickMethod::npp, kb, 8.0, warn);
  for (const auto* rec : man.split("test"))
    if (slurp(ka / ("picks_" + rec->id + ".bin")) != slurp(kb / ("picks_" + rec->id + ".bin")))
      return {false, "picks differ for " + rec->id};

  const fs::path ra = work / "det_rep_a.json", rb = work / "det_rep_b.json";
  fbp::run_evaluate(da, "test", pa, ka, true, ra);
  fbp::run_evaluate(da, "test", pa, ka, true, rb);
  if (slurp(ra) != slurp(rb)) return {false, "evaluation reports differ"};

  return {true, "generate, predict, pick and evaluate are byte-identical across runs"};
}

// --- criterion 11: ms conversion ---------------------------------------------

Outcome criterion11(const fbp::ReproduceResult* e2e) {
  // the paper's 0.60 ts at 8 ms equals 4.8 ms identity, as plain arithmetic
  if (0.60 * 8.0 != 4.8) return {false, "0.60 * 8 != 4.8 in double arithmetic"};

  // reported fields satisfy mae_ms = mae_ts * sample_rate exactly
  fbp::PickLine gt{{10, 20, 30}, {1, 1, 1}};
  fbp::PickLine pred{{11, 20, 29}, {1, 1, 1}};
  auto mask = fbp::make_mask(gt, 40);
  const auto rep = fbp::build_report({mask}, {pred}, {mask}, {gt}, 8.0);
  if (rep.mae_ms != rep.mae_ts * 8.0) return {false, "mae_ms != mae_ts * 8 on a report"};

  if (e2e) {
    for (const auto& [key, cell] : e2e->cells) {
      if (!cell.ok) continue;
      if (cell.mae_ms != cell.mae_ts * 8.0)
        return {false, "mae_ms != mae_ts * 8 in reproduce cell " + key};
    }
  }
  return {true, "mae_ms = mae_ts * 8 holds exactly (0.60 ts = 4.8 ms)"};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path out = "acceptance_out";
  bool skip_e2e = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc)
      out = argv[++i];
    else if (std::strcmp(argv[i], "--skip-e2e") == 0)
      skip_e2e = true;
    else {
      std::cerr << "usage: fbp_acceptance [--out DIR] [--skip-e2e]\n";
      return 2;
    }
  }
  fs::create_directories(out);

  std::map<int, Outcome> results;
  const auto suite_t0 = Clock::now();

  std::cout << "== fast criteria ==" << std::endl;
  results[1] = criterion1();
  results[2] = criterion2();
  results[3] = criterion3();
  results[4] = criterion4();
  results[5] = criterion5();
  results[6] = criterion6();
  results[10] = criterion10(out / "work");
  for (int k : {1, 2, 3, 4, 5, 6, 10})
    std::cout << (results[k].pass ? "[PASS]" : "[FAIL]") << " criterion " << k << ": "
              << results[k].detail << std::endl;

  fbp::ReproduceResult first_run;
  bool have_first_run = false;

  if (skip_e2e) {
    results[7] = {false, "skipped (--skip-e2e)"};
    results[8] = {false, "skipped (--skip-e2e)"};
    results[9] = {false, "skipped (--skip-e2e)"};
  } else {
    std::cout << "== desk-scale end-to-end ==" << std::endl;
    const auto t0 = Clock::now();
    first_run = run_reproduce(out / "e2e_seed1", 1);
    have_first_run = true;
    const double e2e_minutes = seconds_since(t0) / 60.0;

    // criterion 8
    {
      const double acc = first_run.accuracy(fbp::Variant::clean, fbp::LossKind::lovasz);
      const double mae = first_run.mae(fbp::Variant::clean, fbp::LossKind::lovasz,
                                       fbp::PickMethod::npp);
      std::ostringstream os;
      os << "clean/lovasz/npp: acc " << acc << " (need >= 0.97), mae " << mae
         << " ts (need <= 3.0), runtime " << e2e_minutes << " min";
      results[8] = {acc >= 0.97 && mae <= 3.0 && e2e_minutes <= 45.0, os.str()};
    }

    // criterion 9, with the 4-of-5-seeds fallback
    {
      std::string why;
      bool ok = trends_hold(first_run, why);
      if (ok) {
        results[9] = {true, "orderings hold on seed 1 (lovasz<=ce under npp; npp<=fpp under ce)"};
      } else {
        std::cout << "  [e2e] seed 1 violated trends:" << why << "; running 4 more seeds"
                  << std::endl;
        int holds = 1 - 1;  // seed 1 failed
        std::ostringstream detail;
        detail << "seed1: fail (" << why << ")";
        for (uint64_t seed = 2; seed <= 5; ++seed) {
          const auto res = run_reproduce(out / ("e2e_seed" + std::to_string(seed)), seed);
          std::string w2;
          const bool h = trends_hold(res, w2);
          holds += h;
          detail << "; seed" << seed << ": " << (h ? "hold" : "fail" + w2);
        }
        results[9] = {holds >= 4, detail.str() + " (" + std::to_string(holds) + "/5 held)"};
      }
    }

    // criterion 7: size agnosticism with the width-96-crop-trained model
    try {
      const auto ck = first_run.checkpoints.find("lovasz");
      if (ck == first_run.checkpoints.end()) throw std::runtime_error("no lovasz checkpoint");
      auto net = fbp::make_unet<float>(fbp::load_checkpoint(ck->second));
      fbp::Rng rng(707);
      bool ok = true;
      std::ostringstream os;
      for (int h : {63, 128})
        for (int w : {97, 256, 511}) {
          fbp::nn::Tensor<float> x(1, 1, h, w);
          for (auto& v : x.v) v = static_cast<float>(rng.normal());
          const auto s = net.forward(x, false);
          const bool good = s.h == h && s.w == w && s.c == 2;
          ok &= good;
          os << h << "x" << w << (good ? " ok; " : " WRONG; ");
        }
      results[7] = {ok, os.str()};
    } catch (const std::exception& e) {
      results[7] = {false, std::string("exception: ") + e.what()};
    }
  }

  results[11] = criterion11(have_first_run ? &first_run : nullptr);

  std::cout << "== summary ==" << std::endl;
  bool all = true;
  for (const auto& [k, o] : results) {
    const bool counted = !(skip_e2e && (k == 7 || k == 8 || k == 9));
    if (counted) all &= o.pass;
    std::cout << (o.pass ? "[PASS]" : (counted ? "[FAIL]" : "[SKIP]")) << " criterion " << k
              << ": " << o.detail << std::endl;
  }
  std::cout << "total runtime " << seconds_since(suite_t0) / 60.0 << " min" << std::endl;
  return all ? 0 : 1;
}
