#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "fbp/types.hpp"

// Minimal PNG emission (truecolor 8-bit, stored-deflate blocks) for the
// gather / pick-line overlay figures. No external image library needed.

namespace fbp::plot {

namespace detail {

inline uint32_t crc32(const uint8_t* data, size_t len, uint32_t crc = 0xFFFFFFFFu) {
  static uint32_t table[256];
  static bool ready = false;
  if (!ready) {
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      table[i] = c;
    }
    ready = true;
  }
  for (size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
  return crc;
}

inline uint32_t adler32(const uint8_t* data, size_t len) {
  uint32_t a = 1, b = 0;
  for (size_t i = 0; i < len; ++i) {
    a = (a + data[i]) % 65521u;
    b = (b + a) % 65521u;
  }
  return (b << 16) | a;
}

inline void put_be32(std::vector<uint8_t>& v, uint32_t x) {
  v.push_back(static_cast<uint8_t>(x >> 24));
  v.push_back(static_cast<uint8_t>(x >> 16));
  v.push_back(static_cast<uint8_t>(x >> 8));
  v.push_back(static_cast<uint8_t>(x));
}

inline void write_chunk(std::ofstream& os, const char type[4], const std::vector<uint8_t>& data) {
  std::vector<uint8_t> head;
  put_be32(head, static_cast<uint32_t>(data.size()));
  os.write(reinterpret_cast<const char*>(head.data()), 4);
  std::vector<uint8_t> body(type, type + 4);
  body.insert(body.end(), data.begin(), data.end());
  os.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  uint32_t crc = crc32(body.data(), body.size()) ^ 0xFFFFFFFFu;
  std::vector<uint8_t> tail;
  put_be32(tail, crc);
  os.write(reinterpret_cast<const char*>(tail.data()), 4);
}

}  // namespace detail

/// Write an 8-bit RGB image (row-major, 3 bytes per pixel).
inline void write_png_rgb(const std::filesystem::path& path, int width, int height,
                          const std::vector<uint8_t>& rgb) {
  if (rgb.size() != static_cast<size_t>(width) * height * 3)
    throw std::invalid_argument("write_png_rgb: buffer size mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());

  const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  os.write(reinterpret_cast<const char*>(sig), 8);

  std::vector<uint8_t> ihdr;
  detail::put_be32(ihdr, static_cast<uint32_t>(width));
  detail::put_be32(ihdr, static_cast<uint32_t>(height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // no interlace
  detail::write_chunk(os, "IHDR", ihdr);

  // Raw scanlines with filter byte 0, wrapped in stored deflate blocks.
  std::vector<uint8_t> raw;
  raw.reserve(static_cast<size_t>(height) * (static_cast<size_t>(width) * 3 + 1));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    const uint8_t* row = rgb.data() + static_cast<size_t>(y) * width * 3;
    raw.insert(raw.end(), row, row + static_cast<size_t>(width) * 3);
  }

  std::vector<uint8_t> idat;
  idat.push_back(0x78);
  idat.push_back(0x01);
  size_t pos = 0;
  while (pos < raw.size()) {
    const size_t chunk = std::min<size_t>(65535, raw.size() - pos);
    const bool final = pos + chunk == raw.size();
    idat.push_back(final ? 1 : 0);
    idat.push_back(static_cast<uint8_t>(chunk & 0xFF));
    idat.push_back(static_cast<uint8_t>(chunk >> 8));
    idat.push_back(static_cast<uint8_t>(~chunk & 0xFF));
    idat.push_back(static_cast<uint8_t>((~chunk >> 8) & 0xFF));
    idat.insert(idat.end(), raw.begin() + pos, raw.begin() + pos + chunk);
    pos += chunk;
  }
  detail::put_be32(idat, detail::adler32(raw.data(), raw.size()));
  detail::write_chunk(os, "IDAT", idat);
  detail::write_chunk(os, "IEND", {});
  if (!os) throw std::runtime_error("png write failed: " + path.string());
}

/// Gather image in grayscale with optional pick lines: ground truth in red,
/// prediction in blue (rows = time, columns = receivers, as in the data).
inline void write_overlay_png(const std::filesystem::path& path, const GatherImage& gather,
                              const PickLine* gt, const PickLine* pred) {
  const int T = gather.height(), R = gather.width();
  double max_abs = 0.0;
  for (float a : gather.amplitudes.v) max_abs = std::max(max_abs, std::abs(static_cast<double>(a)));
  if (max_abs == 0.0) max_abs = 1.0;

  std::vector<uint8_t> rgb(static_cast<size_t>(T) * R * 3);
  for (int t = 0; t < T; ++t)
    for (int r = 0; r < R; ++r) {
      const double a = gather.amplitudes.at(t, r) / max_abs;
      const int v = std::clamp(static_cast<int>(128 + 127 * a), 0, 255);
      const size_t o = (static_cast<size_t>(t) * R + r) * 3;
      rgb[o] = rgb[o + 1] = rgb[o + 2] = static_cast<uint8_t>(v);
    }

  auto draw = [&](const PickLine& p, uint8_t cr, uint8_t cg, uint8_t cb) {
    for (int r = 0; r < std::min<int>(R, p.num_receivers()); ++r) {
      const int t = std::clamp<int>(p.times[r], 0, T - 1);
      const size_t o = (static_cast<size_t>(t) * R + r) * 3;
      rgb[o] = cr;
      rgb[o + 1] = cg;
      rgb[o + 2] = cb;
    }
  };
  if (gt) draw(*gt, 230, 40, 40);
  if (pred) draw(*pred, 40, 90, 230);
  write_png_rgb(path, R, T, rgb);
}

}  // namespace fbp::plot
