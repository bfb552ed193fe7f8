#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fbp/types.hpp"

// On-disk record formats. All multi-byte integers are little-endian:
//   gather_<id>.bin : "FBG1", uint32 T, uint32 R, T*R float32, time-major
//   mask_<id>.bin   : "FBM1", uint32 T, uint32 R, T*R uint8,   time-major
//   picks_<id>.bin  : "FBP1", uint32 R, int32 times[R], uint8 valid[R]

namespace fbp::io {

namespace detail {

inline void put_u32(std::ostream& os, uint32_t x) {
  unsigned char b[4] = {static_cast<unsigned char>(x), static_cast<unsigned char>(x >> 8),
                        static_cast<unsigned char>(x >> 16), static_cast<unsigned char>(x >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

inline void put_i32(std::ostream& os, int32_t x) { put_u32(os, static_cast<uint32_t>(x)); }
inline int32_t get_i32(std::istream& is) { return static_cast<int32_t>(get_u32(is)); }

inline void put_f32(std::ostream& os, float x) {
  uint32_t u;
  std::memcpy(&u, &x, 4);
  put_u32(os, u);
}

inline float get_f32(std::istream& is) {
  uint32_t u = get_u32(is);
  float x;
  std::memcpy(&x, &u, 4);
  return x;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  return os;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path.string());
  return is;
}

inline void expect_magic(std::istream& is, const char* magic, const std::filesystem::path& path) {
  char got[4];
  is.read(got, 4);
  if (!is || std::memcmp(got, magic, 4) != 0)
    throw std::runtime_error("bad magic in " + path.string() + " (expected " + magic + ")");
}

// Bulk float32 payloads are memcpy'd on little-endian hosts and converted
// element-wise otherwise.
inline bool host_is_little_endian() {
  const uint16_t probe = 1;
  unsigned char b;
  std::memcpy(&b, &probe, 1);
  return b == 1;
}

}  // namespace detail

inline void write_gather(const std::filesystem::path& path, const GatherImage& g) {
  auto os = detail::open_out(path);
  os.write("FBG1", 4);
  detail::put_u32(os, static_cast<uint32_t>(g.height()));
  detail::put_u32(os, static_cast<uint32_t>(g.width()));
  if (detail::host_is_little_endian()) {
    os.write(reinterpret_cast<const char*>(g.amplitudes.data()),
             static_cast<std::streamsize>(g.amplitudes.size() * 4));
  } else {
    for (float x : g.amplitudes.v) detail::put_f32(os, x);
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline GatherImage read_gather(const std::filesystem::path& path, double sample_rate_ms) {
  auto is = detail::open_in(path);
  detail::expect_magic(is, "FBG1", path);
  uint32_t T = detail::get_u32(is), R = detail::get_u32(is);
  GatherImage g;
  g.sample_rate_ms = sample_rate_ms;
  g.amplitudes = Array2D<float>(static_cast<int>(T), static_cast<int>(R));
  if (detail::host_is_little_endian()) {
    is.read(reinterpret_cast<char*>(g.amplitudes.data()),
            static_cast<std::streamsize>(g.amplitudes.size() * 4));
  } else {
    for (auto& x : g.amplitudes.v) x = detail::get_f32(is);
  }
  if (!is) throw std::runtime_error("truncated gather file: " + path.string());
  return g;
}

inline void write_mask(const std::filesystem::path& path, const SegmentationMask& m) {
  auto os = detail::open_out(path);
  os.write("FBM1", 4);
  detail::put_u32(os, static_cast<uint32_t>(m.height()));
  detail::put_u32(os, static_cast<uint32_t>(m.width()));
  os.write(reinterpret_cast<const char*>(m.classes.data()),
           static_cast<std::streamsize>(m.classes.size()));
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline SegmentationMask read_mask(const std::filesystem::path& path) {
  auto is = detail::open_in(path);
  detail::expect_magic(is, "FBM1", path);
  uint32_t T = detail::get_u32(is), R = detail::get_u32(is);
  SegmentationMask m;
  m.classes = Array2D<uint8_t>(static_cast<int>(T), static_cast<int>(R));
  is.read(reinterpret_cast<char*>(m.classes.data()),
          static_cast<std::streamsize>(m.classes.size()));
  if (!is) throw std::runtime_error("truncated mask file: " + path.string());
  return m;
}

inline void write_picks(const std::filesystem::path& path, const PickLine& p) {
  auto os = detail::open_out(path);
  os.write("FBP1", 4);
  detail::put_u32(os, static_cast<uint32_t>(p.times.size()));
  for (int32_t t : p.times) detail::put_i32(os, t);
  os.write(reinterpret_cast<const char*>(p.valid.data()),
           static_cast<std::streamsize>(p.valid.size()));
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline PickLine read_picks(const std::filesystem::path& path) {
  auto is = detail::open_in(path);
  detail::expect_magic(is, "FBP1", path);
  uint32_t R = detail::get_u32(is);
  PickLine p;
  p.times.resize(R);
  p.valid.resize(R);
  for (auto& t : p.times) t = detail::get_i32(is);
  is.read(reinterpret_cast<char*>(p.valid.data()), static_cast<std::streamsize>(R));
  if (!is) throw std::runtime_error("truncated picks file: " + path.string());
  return p;
}

/// CSV export of a pick line: receiver_index,time_index,time_ms,valid
inline void write_picks_csv(const std::filesystem::path& path, const PickLine& p,
                            double sample_rate_ms) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << "receiver_index,time_index,time_ms,valid\n";
  for (size_t r = 0; r < p.times.size(); ++r) {
    os << r << ',' << p.times[r] << ',' << static_cast<double>(p.times[r]) * sample_rate_ms << ','
       << (p.valid[r] ? 1 : 0) << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace fbp::io
