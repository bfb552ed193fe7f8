#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbp/io.hpp"
#include "fbp/noise.hpp"
#include "fbp/rng.hpp"
#include "fbp/synth.hpp"
#include "fbp/types.hpp"
#include "fbp/velocity.hpp"

// Dataset generation and the on-disk manifest. A dataset directory holds
// manifest.json plus one FBG1/FBM1/FBP1 record triple per gather; everything
// is a pure function of (config, seed).

namespace fbp {

enum class Variant { clean, disconnected, noisy };

inline Variant variant_from_string(const std::string& s) {
  if (s == "clean") return Variant::clean;
  if (s == "disconnected") return Variant::disconnected;
  if (s == "noisy") return Variant::noisy;
  throw std::invalid_argument("unknown dataset variant: " + s);
}

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::clean: return "clean";
    case Variant::disconnected: return "disconnected";
    case Variant::noisy: return "noisy";
  }
  return "?";
}

struct GenerateConfig {
  int num_train = 1000;
  int num_val = 200;
  int num_test = 100;
  int height = 1250;
  int width = 2000;
  double sample_rate_ms = 8.0;
  Variant variant = Variant::clean;
  double wavelet_peak_freq_hz = 25.0;
  CodaConfig coda;
  NoiseConfig noise;            // per-record seeds are derived internally
  DisconnectConfig disconnect;
  int min_layers = 1;
  int max_layers = 3;
  uint64_t seed = 1;

  /// Sizes and noise/gap severities for CPU-feasible runs with models of
  /// desk-scale capacity; the algorithms are unchanged.
  void apply_desk_scale() {
    num_train = 128;
    num_val = 24;
    num_test = 48;
    height = 128;
    width = 256;
    noise.amplitude_ratio = 0.10;
    disconnect.num_dead_spans = 4;
    disconnect.min_span_width = 1;
    disconnect.max_span_width = 3;
  }

  void validate() const {
    if (num_train < 0 || num_val < 0 || num_test < 0)
      throw std::invalid_argument("GenerateConfig: negative split size");
    if (num_train + num_val + num_test < 1)
      throw std::invalid_argument("GenerateConfig: empty dataset");
    if (height < 8 || width < 16) throw std::invalid_argument("GenerateConfig: image too small");
    if (!(sample_rate_ms > 0.0)) throw std::invalid_argument("GenerateConfig: bad sample rate");
    if (min_layers < 1 || max_layers < min_layers)
      throw std::invalid_argument("GenerateConfig: bad layer range");
  }
};

inline nlohmann::json to_json(const GenerateConfig& c) {
  return nlohmann::json{
      {"num_train", c.num_train},
      {"num_val", c.num_val},
      {"num_test", c.num_test},
      {"height", c.height},
      {"width", c.width},
      {"sample_rate_ms", c.sample_rate_ms},
      {"variant", to_string(c.variant)},
      {"wavelet_peak_freq_hz", c.wavelet_peak_freq_hz},
      {"coda",
       {{"min_freq_hz", c.coda.min_freq_hz},
        {"max_freq_hz", c.coda.max_freq_hz},
        {"num_components", c.coda.num_components},
        {"rel_amplitude", c.coda.rel_amplitude},
        {"decay_fraction", c.coda.decay_fraction}}},
      {"noise",
       {{"base_frequency_hz", c.noise.base_frequency_hz},
        {"num_harmonics", c.noise.num_harmonics},
        {"gp_length_scale_traces", c.noise.gp_length_scale_traces},
        {"amplitude_ratio", c.noise.amplitude_ratio},
        {"phase_jitter_std_rad", c.noise.phase_jitter_std_rad}}},
      {"disconnect",
       {{"num_dead_spans", c.disconnect.num_dead_spans},
        {"min_span_width", c.disconnect.min_span_width},
        {"max_span_width", c.disconnect.max_span_width}}},
      {"min_layers", c.min_layers},
      {"max_layers", c.max_layers},
      {"seed", c.seed}};
}

inline void from_json_into(const nlohmann::json& j, GenerateConfig& c) {
  if (j.contains("num_train")) c.num_train = j["num_train"];
  if (j.contains("num_val")) c.num_val = j["num_val"];
  if (j.contains("num_test")) c.num_test = j["num_test"];
  if (j.contains("height")) c.height = j["height"];
  if (j.contains("width")) c.width = j["width"];
  if (j.contains("sample_rate_ms")) c.sample_rate_ms = j["sample_rate_ms"];
  if (j.contains("variant")) c.variant = variant_from_string(j["variant"]);
  if (j.contains("wavelet_peak_freq_hz")) c.wavelet_peak_freq_hz = j["wavelet_peak_freq_hz"];
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    if (n.contains("base_frequency_hz")) c.noise.base_frequency_hz = n["base_frequency_hz"];
    if (n.contains("num_harmonics")) c.noise.num_harmonics = n["num_harmonics"];
    if (n.contains("gp_length_scale_traces"))
      c.noise.gp_length_scale_traces = n["gp_length_scale_traces"];
    if (n.contains("amplitude_ratio")) c.noise.amplitude_ratio = n["amplitude_ratio"];
    if (n.contains("phase_jitter_std_rad")) c.noise.phase_jitter_std_rad = n["phase_jitter_std_rad"];
  }
  if (j.contains("disconnect")) {
    const auto& d = j["disconnect"];
    if (d.contains("num_dead_spans")) c.disconnect.num_dead_spans = d["num_dead_spans"];
    if (d.contains("min_span_width")) c.disconnect.min_span_width = d["min_span_width"];
    if (d.contains("max_span_width")) c.disconnect.max_span_width = d["max_span_width"];
  }
  if (j.contains("min_layers")) c.min_layers = j["min_layers"];
  if (j.contains("max_layers")) c.max_layers = j["max_layers"];
  if (j.contains("seed")) c.seed = j["seed"];
}

/// FNV-1a hash of the canonical config JSON, as a hex string.
inline std::string config_hash(const GenerateConfig& c) {
  const std::string s = to_json(c).dump();
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

struct DatasetRecord {
  std::string id;
  std::string split;  // train / val / test
  int height = 0;
  int width = 0;
  std::string gather_file, mask_file, picks_file;
};

struct DatasetManifest {
  int version = 1;
  double sample_rate_ms = 8.0;
  uint64_t seed = 0;
  std::string config_hash;
  std::string variant = "clean";
  std::vector<DatasetRecord> records;

  std::vector<const DatasetRecord*> split(const std::string& name) const {
    std::vector<const DatasetRecord*> out;
    for (const auto& r : records)
      if (r.split == name) out.push_back(&r);
    return out;
  }
};

namespace detail {

/// Layered model with strictly increasing velocities; the receiver spacing is
/// back-solved so the farthest direct arrival lands at ~82% of the image
/// height, which guarantees every arrival fits.
inline VelocityModel random_model(Rng& rng, int width, int height, double sample_rate_ms,
                                  int min_layers, int max_layers) {
  VelocityModel m;
  m.sample_rate_ms = sample_rate_ms;
  const int layers = rng.uniform_int(min_layers, max_layers);
  double v = rng.uniform(1300.0, 2400.0);
  m.layer_velocities_ms.push_back(v);
  for (int i = 1; i < layers; ++i) {
    v *= rng.uniform(1.35, 2.4);
    m.layer_velocities_ms.push_back(v);
  }
  for (int i = 0; i + 1 < layers; ++i)
    m.layer_thicknesses_m.push_back(rng.uniform(25.0, 140.0));
  m.source_receiver_index = rng.uniform_int(width / 6, 5 * width / 6);
  const double budget_s = rng.uniform(0.55, 0.85) * height * sample_rate_ms / 1000.0;
  int max_offset_traces = 0;
  for (int r : {0, width - 1})
    max_offset_traces = std::max(max_offset_traces, std::abs(r - m.source_receiver_index));
  m.receiver_spacing_m = budget_s * m.layer_velocities_ms[0] / std::max(1, max_offset_traces);
  return m;
}

inline GatherWithPicks generate_record(const GenerateConfig& cfg, uint64_t record_seed) {
  Rng rng(record_seed);
  const double f = cfg.wavelet_peak_freq_hz * rng.uniform(0.7, 1.3);
  CodaConfig coda = cfg.coda;

  auto synth_part = [&](int width) {
    VelocityModel m = random_model(rng, width, cfg.height, cfg.sample_rate_ms, cfg.min_layers,
                                   cfg.max_layers);
    SynthResult s = synthesize_gather(m, cfg.height, width, f, coda, rng.next_u64());
    return GatherWithPicks{std::move(s.gather), std::move(s.picks)};
  };

  GatherWithPicks gp;
  if (cfg.variant == Variant::disconnected) {
    // Two shots over the same earth spliced side by side (the pick line
    // jumps at the seam because the source moved), then dead spans.
    const int total = rng.uniform_int(std::max(16, cfg.width * 7 / 10), cfg.width);
    const int lo = std::max(8, total * 35 / 100);
    const int hi = std::min(total - 8, total * 65 / 100);
    const int w1 = rng.uniform_int(lo, std::max(lo, hi));
    VelocityModel earth = random_model(rng, total, cfg.height, cfg.sample_rate_ms, cfg.min_layers,
                                       cfg.max_layers);
    // Cap the spacing so the worst per-shot offset still lands inside the image.
    const double worst_offset = 5.0 * total / 6.0;
    earth.receiver_spacing_m =
        std::min(earth.receiver_spacing_m,
                 0.85 * cfg.height * cfg.sample_rate_ms / 1000.0 * earth.layer_velocities_ms[0] /
                     worst_offset);
    std::vector<GatherWithPicks> parts;
    for (int w : {w1, total - w1}) {
      VelocityModel shot = earth;
      shot.source_receiver_index = rng.uniform_int(w / 6, 5 * w / 6);
      SynthResult s = synthesize_gather(shot, cfg.height, w, f, coda, rng.next_u64());
      parts.push_back({std::move(s.gather), std::move(s.picks)});
    }
    gp = apply_disconnections(parts, cfg.disconnect, /*splice=*/true, rng.next_u64());
  } else {
    gp = synth_part(cfg.width);
    if (cfg.variant == Variant::noisy) {
      NoiseConfig nc = cfg.noise;
      nc.seed = rng.next_u64();
      gp.gather = add_harmonic_noise(gp.gather, nc);
    }
  }
  return gp;
}

}  // namespace detail

/// Generate a full dataset under `out_dir`. Byte-identical for a fixed
/// (config, seed); records are seeded individually so generation order does
/// not matter.
inline DatasetManifest generate_dataset(const GenerateConfig& cfg,
                                        const std::filesystem::path& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);

  DatasetManifest man;
  man.sample_rate_ms = cfg.sample_rate_ms;
  man.seed = cfg.seed;
  man.config_hash = config_hash(cfg);
  man.variant = to_string(cfg.variant);

  const int total = cfg.num_train + cfg.num_val + cfg.num_test;
  for (int i = 0; i < total; ++i) {
    std::ostringstream id;
    id << std::setw(6) << std::setfill('0') << i;

    GatherWithPicks gp = detail::generate_record(cfg, derive_seed(cfg.seed, i));
    SegmentationMask mask = make_mask(gp.picks, cfg.height);

    DatasetRecord rec;
    rec.id = id.str();
    rec.split = i < cfg.num_train ? "train" : (i < cfg.num_train + cfg.num_val ? "val" : "test");
    rec.height = gp.gather.height();
    rec.width = gp.gather.width();
    rec.gather_file = "gather_" + rec.id + ".bin";
    rec.mask_file = "mask_" + rec.id + ".bin";
    rec.picks_file = "picks_" + rec.id + ".bin";

    io::write_gather(out_dir / rec.gather_file, gp.gather);
    io::write_mask(out_dir / rec.mask_file, mask);
    io::write_picks(out_dir / rec.picks_file, gp.picks);
    man.records.push_back(std::move(rec));
  }

  nlohmann::json j;
  j["version"] = man.version;
  j["sample_rate_ms"] = man.sample_rate_ms;
  j["seed"] = man.seed;
  j["config_hash"] = man.config_hash;
  j["variant"] = man.variant;
  j["splits"] = {{"train", cfg.num_train}, {"val", cfg.num_val}, {"test", cfg.num_test}};
  j["records"] = nlohmann::json::array();
  for (const auto& r : man.records)
    j["records"].push_back({{"id", r.id},
                            {"split", r.split},
                            {"height", r.height},
                            {"width", r.width},
                            {"gather", r.gather_file},
                            {"mask", r.mask_file},
                            {"picks", r.picks_file}});

  const auto manifest_path = out_dir / "manifest.json";
  std::ofstream os(manifest_path);
  if (!os) throw std::runtime_error("cannot write manifest: " + manifest_path.string());
  os << j.dump(2) << '\n';
  if (!os) throw std::runtime_error("manifest write failed: " + manifest_path.string());
  return man;
}

inline DatasetManifest load_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open manifest: " + path.string());
  nlohmann::json j = nlohmann::json::parse(is);

  DatasetManifest man;
  man.version = j["version"];
  man.sample_rate_ms = j["sample_rate_ms"];
  man.seed = j["seed"];
  man.config_hash = j.value("config_hash", "");
  man.variant = j.value("variant", "clean");
  for (const auto& r : j["records"]) {
    DatasetRecord rec;
    rec.id = r["id"];
    rec.split = r["split"];
    rec.height = r["height"];
    rec.width = r["width"];
    rec.gather_file = r["gather"];
    rec.mask_file = r["mask"];
    rec.picks_file = r["picks"];
    man.records.push_back(std::move(rec));
  }
  return man;
}

}  // namespace fbp
