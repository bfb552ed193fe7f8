#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbp {

/// 1-D layered medium: L velocities (strictly increasing with depth, so head
/// waves exist) over L-1 thicknesses; the last layer is a half-space.
struct VelocityModel {
  std::vector<double> layer_thicknesses_m;  // length L-1
  std::vector<double> layer_velocities_ms;  // length L
  double receiver_spacing_m = 10.0;
  int source_receiver_index = 0;
  double sample_rate_ms = 8.0;

  int num_layers() const { return static_cast<int>(layer_velocities_ms.size()); }

  void validate() const {
    if (layer_velocities_ms.empty())
      throw std::invalid_argument("VelocityModel: no layers");
    if (layer_thicknesses_m.size() + 1 != layer_velocities_ms.size())
      throw std::invalid_argument("VelocityModel: need L velocities and L-1 thicknesses");
    for (double h : layer_thicknesses_m)
      if (!(h > 0.0)) throw std::invalid_argument("VelocityModel: thicknesses must be positive");
    for (size_t i = 0; i < layer_velocities_ms.size(); ++i) {
      if (!(layer_velocities_ms[i] > 0.0))
        throw std::invalid_argument("VelocityModel: velocities must be positive");
      if (i > 0 && !(layer_velocities_ms[i] > layer_velocities_ms[i - 1]))
        throw std::invalid_argument("VelocityModel: velocities must strictly increase with depth");
    }
    if (!(receiver_spacing_m > 0.0))
      throw std::invalid_argument("VelocityModel: receiver spacing must be positive");
    if (!(sample_rate_ms > 0.0))
      throw std::invalid_argument("VelocityModel: sample rate must be positive");
  }
};

/// First-arrival time in seconds at horizontal offset x >= 0: the minimum of
/// the direct wave x/v1 and each head-wave branch
///   t_j(x) = x/v_{j+1} + sum_{i<=j} 2 h_i sqrt(1/v_i^2 - 1/v_{j+1}^2).
/// Extending every branch down to x = 0 is harmless: below the crossover the
/// direct wave (or a shallower branch) is always faster, so the minimum is
/// unaffected.
inline double first_arrival_at_offset(const VelocityModel& m, double offset_m) {
  const auto& v = m.layer_velocities_ms;
  const auto& h = m.layer_thicknesses_m;
  double best = offset_m / v[0];
  for (size_t j = 0; j < h.size(); ++j) {
    const double vr = v[j + 1];  // refractor velocity
    double intercept = 0.0;
    for (size_t i = 0; i <= j; ++i)
      intercept += 2.0 * h[i] * std::sqrt(1.0 / (v[i] * v[i]) - 1.0 / (vr * vr));
    best = std::min(best, offset_m / vr + intercept);
  }
  return best;
}

/// Per-receiver first-arrival times (seconds) for `num_receivers` receivers
/// at offsets |r - source_receiver_index| * spacing.
inline std::vector<double> first_arrival_times(const VelocityModel& m, int num_receivers) {
  m.validate();
  if (num_receivers < 1) throw std::invalid_argument("first_arrival_times: need >= 1 receiver");
  std::vector<double> t(num_receivers);
  for (int r = 0; r < num_receivers; ++r) {
    double offset = std::abs(static_cast<double>(r - m.source_receiver_index)) * m.receiver_spacing_m;
    t[r] = first_arrival_at_offset(m, offset);
  }
  return t;
}

}  // namespace fbp
