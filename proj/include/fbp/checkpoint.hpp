#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbp/io.hpp"
#include "fbp/unet.hpp"

// Checkpoint container: "FBCK", uint32 format version, uint32 header length,
// a JSON header (network config, channel ladder, tensor directory with
// offsets in float32 units), then the named tensors as float32 little-endian
// in directory order. See docs/FORMATS.md.

namespace fbp {

inline void save_checkpoint(const std::filesystem::path& path, const ModelParams& mp) {
  nlohmann::json header;
  header["config"] = {{"base_channels", mp.config.base_channels},
                      {"depth", mp.config.depth},
                      {"kernel_size", mp.config.kernel_size},
                      {"num_classes", mp.config.num_classes},
                      {"in_channels", mp.config.in_channels},
                      {"upsample", to_string(mp.config.upsample)}};
  header["ladder"] = mp.config.ladder();
  header["tensors"] = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& t : mp.tensors) {
    header["tensors"].push_back(
        {{"name", t.name}, {"shape", t.shape}, {"offset", offset}, {"count", t.data.size()}});
    offset += t.data.size();
  }
  const std::string hs = header.dump();

  auto os = io::detail::open_out(path);
  os.write("FBCK", 4);
  io::detail::put_u32(os, 1);
  io::detail::put_u32(os, static_cast<uint32_t>(hs.size()));
  os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  if (io::detail::host_is_little_endian()) {
    for (const auto& t : mp.tensors)
      os.write(reinterpret_cast<const char*>(t.data.data()),
               static_cast<std::streamsize>(t.data.size() * 4));
  } else {
    for (const auto& t : mp.tensors)
      for (float x : t.data) io::detail::put_f32(os, x);
  }
  if (!os) throw std::runtime_error("checkpoint write failed: " + path.string());
}

inline ModelParams load_checkpoint(const std::filesystem::path& path) {
  auto is = io::detail::open_in(path);
  io::detail::expect_magic(is, "FBCK", path);
  const uint32_t version = io::detail::get_u32(is);
  if (version != 1)
    throw std::runtime_error("unsupported checkpoint version in " + path.string());
  const uint32_t hlen = io::detail::get_u32(is);
  std::string hs(hlen, '\0');
  is.read(hs.data(), hlen);
  if (!is) throw std::runtime_error("truncated checkpoint header: " + path.string());
  nlohmann::json header = nlohmann::json::parse(hs);

  ModelParams mp;
  const auto& jc = header["config"];
  mp.config.base_channels = jc["base_channels"];
  mp.config.depth = jc["depth"];
  mp.config.kernel_size = jc["kernel_size"];
  mp.config.num_classes = jc["num_classes"];
  mp.config.in_channels = jc["in_channels"];
  mp.config.upsample = upsample_from_string(jc["upsample"]);

  for (const auto& jt : header["tensors"]) {
    NamedTensor t;
    t.name = jt["name"];
    t.shape = jt["shape"].get<std::vector<int>>();
    t.data.resize(jt["count"].get<size_t>());
    mp.tensors.push_back(std::move(t));
  }
  for (auto& t : mp.tensors) {
    if (io::detail::host_is_little_endian()) {
      is.read(reinterpret_cast<char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * 4));
    } else {
      for (auto& x : t.data) x = io::detail::get_f32(is);
    }
  }
  if (!is) throw std::runtime_error("truncated checkpoint payload: " + path.string());
  return mp;
}

/// Build an inference/training network from saved parameters.
template <typename T = float>
Unet<T> make_unet(const ModelParams& mp) {
  Unet<T> net(mp.config, /*seed=*/0);
  net.import_params(mp);
  return net;
}

}  // namespace fbp
