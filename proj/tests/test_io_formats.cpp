#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include <fbp/io.hpp>
#include <fbp/plot.hpp>
#include <fbp/rng.hpp>
#include <fbp/train.hpp>

using fbp::Rng;
namespace fs = std::filesystem;

namespace {

std::vector<uint8_t> slurp_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is);
  std::string s(std::istreambuf_iterator<char>(is), {});
  return std::vector<uint8_t>(s.begin(), s.end());
}

fs::path tmp(const std::string& name) { return fs::temp_directory_path() / name; }

}  // namespace

TEST_CASE("gather/mask/picks round trip over random contents") {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const int T = 1 + rng.uniform_int(0, 40);
    const int R = 1 + rng.uniform_int(0, 40);

    fbp::GatherImage g;
    g.sample_rate_ms = 8.0;
    g.amplitudes = fbp::Array2D<float>(T, R);
    for (auto& x : g.amplitudes.v) x = static_cast<float>(rng.normal());
    fbp::io::write_gather(tmp("t_g.bin"), g);
    auto g2 = fbp::io::read_gather(tmp("t_g.bin"), 8.0);
    CHECK(g2.amplitudes == g.amplitudes);

    fbp::SegmentationMask m;
    m.classes = fbp::Array2D<uint8_t>(T, R);
    for (auto& x : m.classes.v) x = rng.uniform() < 0.5;
    fbp::io::write_mask(tmp("t_m.bin"), m);
    CHECK(fbp::io::read_mask(tmp("t_m.bin")).classes == m.classes);

    fbp::PickLine p;
    for (int r = 0; r < R; ++r) {
      p.times.push_back(rng.uniform_int(0, T - 1));
      p.valid.push_back(rng.uniform() < 0.9);
    }
    fbp::io::write_picks(tmp("t_p.bin"), p);
    auto p2 = fbp::io::read_picks(tmp("t_p.bin"));
    CHECK(p2.times == p.times);
    CHECK(p2.valid == p.valid);
  }
}

TEST_CASE("exact byte layout: magic, little-endian header, payload order") {
  fbp::GatherImage g;
  g.amplitudes = fbp::Array2D<float>(2, 3);
  g.amplitudes.v = {0.0f, 1.0f, 2.0f, 3.0f, 4.0f, 5.0f};  // time-major
  fbp::io::write_gather(tmp("t_layout.bin"), g);
  auto b = slurp_bytes(tmp("t_layout.bin"));
  REQUIRE(b.size() == 4 + 4 + 4 + 6 * 4);
  CHECK(std::string(b.begin(), b.begin() + 4) == "FBG1");
  CHECK(b[4] == 2);  // T, little-endian
  CHECK(b[5] == 0);
  CHECK(b[8] == 3);  // R
  // 1.0f = 0x3F800000 little-endian starting at byte 16 (t=0, r=1)
  CHECK(b[16] == 0x00);
  CHECK(b[17] == 0x00);
  CHECK(b[18] == 0x80);
  CHECK(b[19] == 0x3F);

  fbp::PickLine p{{7, -1}, {1, 0}};
  fbp::io::write_picks(tmp("t_playout.bin"), p);
  auto pb = slurp_bytes(tmp("t_playout.bin"));
  REQUIRE(pb.size() == 4 + 4 + 2 * 4 + 2);
  CHECK(std::string(pb.begin(), pb.begin() + 4) == "FBP1");
  CHECK(pb[8] == 7);                      // times[0] LE
  CHECK(pb[12] == 0xFF);                  // -1 two's complement
  CHECK(pb[15] == 0xFF);
  CHECK(pb[16] == 1);                     // valid flags
  CHECK(pb[17] == 0);
}

TEST_CASE("corrupt magics and truncated files are rejected with the path in the message") {
  {
    std::ofstream os(tmp("t_bad.bin"), std::ios::binary);
    os << "NOPE123456789";
  }
  CHECK_THROWS_WITH_AS(fbp::io::read_gather(tmp("t_bad.bin"), 8.0), doctest::Contains("t_bad"),
                       std::runtime_error);
  CHECK_THROWS(fbp::io::read_mask(tmp("t_bad.bin")));
  CHECK_THROWS(fbp::io::read_picks(tmp("t_bad.bin")));
  CHECK_THROWS(fbp::io::read_gather(tmp("t_does_not_exist.bin"), 8.0));
}

TEST_CASE("pick CSV export") {
  fbp::PickLine p{{3, 5}, {1, 0}};
  fbp::io::write_picks_csv(tmp("t_picks.csv"), p, 8.0);
  std::ifstream is(tmp("t_picks.csv"));
  std::string line;
  std::getline(is, line);
  CHECK(line == "receiver_index,time_index,time_ms,valid");
  std::getline(is, line);
  CHECK(line == "0,3,24,1");
  std::getline(is, line);
  CHECK(line == "1,5,40,0");
}

TEST_CASE("train config JSON round trip is the identity") {
  fbp::TrainConfig a;
  a.loss_kind = fbp::LossKind::cross_entropy;
  a.learning_rate = 5e-4;
  a.epochs = 7;
  a.batch_size = 2;
  a.crop_width = 123;
  a.seed = 99;
  a.dataset_dir = "/somewhere";
  a.checkpoint_path = "ck.fbck";
  a.desk_scale = true;
  a.normalize_inputs = false;
  a.net.base_channels = 12;
  a.net.depth = 4;
  a.net.upsample = fbp::UnetConfig::Upsample::transposed_conv;

  auto j1 = fbp::to_json(a);
  fbp::TrainConfig b;
  fbp::from_json_into(j1, b);
  auto j2 = fbp::to_json(b);
  CHECK(j1 == j2);

  fbp::GenerateConfig ga;
  ga.variant = fbp::Variant::noisy;
  ga.noise.amplitude_ratio = 0.25;
  ga.num_test = 17;
  auto g1 = fbp::to_json(ga);
  fbp::GenerateConfig gb;
  fbp::from_json_into(g1, gb);
  CHECK(fbp::to_json(gb) == g1);
}

TEST_CASE("png writer emits a structurally valid file") {
  const int W = 21, H = 13;
  std::vector<uint8_t> rgb(W * H * 3);
  Rng rng(4);
  for (auto& x : rgb) x = static_cast<uint8_t>(rng.uniform_int(0, 255));
  fbp::plot::write_png_rgb(tmp("t_plot.png"), W, H, rgb);
  auto b = slurp_bytes(tmp("t_plot.png"));
  REQUIRE(b.size() > 50);
  const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  for (int i = 0; i < 8; ++i) CHECK(b[i] == sig[i]);
  CHECK(std::string(b.begin() + 12, b.begin() + 16) == "IHDR");
  // width and height, big-endian
  CHECK(b[19] == W);
  CHECK(b[23] == H);
  CHECK(std::string(b.end() - 8, b.end() - 4) == "IEND");

  // stored-deflate payload re-inflates to filter-prefixed scanlines
  size_t idat = 0;
  for (size_t i = 8; i + 8 < b.size();) {
    const size_t len = (size_t(b[i]) << 24) | (size_t(b[i + 1]) << 16) | (size_t(b[i + 2]) << 8) |
                       b[i + 3];
    const std::string type(b.begin() + i + 4, b.begin() + i + 8);
    if (type == "IDAT") idat = i + 8;
    i += 12 + len;
  }
  REQUIRE(idat != 0);
  size_t pos = idat + 2;  // skip the zlib header
  std::vector<uint8_t> raw;
  while (true) {
    const bool final = b[pos] & 1;
    const size_t len = b[pos + 1] | (size_t(b[pos + 2]) << 8);
    raw.insert(raw.end(), b.begin() + pos + 5, b.begin() + pos + 5 + len);
    pos += 5 + len;
    if (final) break;
  }
  REQUIRE(raw.size() == static_cast<size_t>(H) * (W * 3 + 1));
  for (int y = 0; y < H; ++y) {
    CHECK(raw[y * (W * 3 + 1)] == 0);  // filter byte
    for (int i = 0; i < W * 3; ++i)
      CHECK(raw[y * (W * 3 + 1) + 1 + i] == rgb[y * W * 3 + i]);
  }
}

TEST_CASE("overlay plot renders pick lines into the image") {
  fbp::GatherImage g;
  g.amplitudes = fbp::Array2D<float>(16, 10, 0.0f);
  g.amplitudes.at(8, 3) = 1.0f;
  fbp::PickLine gt{{4, 4, 4, 4, 4, 4, 4, 4, 4, 4}, std::vector<uint8_t>(10, 1)};
  CHECK_NOTHROW(fbp::plot::write_overlay_png(tmp("t_overlay.png"), g, &gt, nullptr));
  CHECK(fs::exists(tmp("t_overlay.png")));
}
