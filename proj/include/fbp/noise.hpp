#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "fbp/rng.hpp"
#include "fbp/types.hpp"

// Multi-harmonic (power-line style) noise. Per harmonic, the amplitude varies
// smoothly across receivers as the absolute value of a Gaussian-process draw,
// the phase is shared across the gather with small per-trace jitter, and the
// summed field is rescaled so its maximum is an exact fraction of the clean
// signal maximum. Noise covers the whole trace, including before the arrival.

namespace fbp {

struct NoiseConfig {
  double base_frequency_hz = 50.0;
  int num_harmonics = 4;
  double gp_length_scale_traces = 20.0;
  double amplitude_ratio = 0.5;     // max |noise| / max |clean signal|
  double phase_jitter_std_rad = 0.3;
  uint64_t seed = 0;
};

namespace detail {

/// Smooth nonnegative amplitude profile across receivers: |L z| with
/// K = squared-exponential covariance (diagonal jitter 1e-8 for a stable
/// factorization).
inline std::vector<double> gp_amplitude_profile(int num_receivers, double length_scale, Rng& rng) {
  Eigen::MatrixXd K(num_receivers, num_receivers);
  const double inv2l2 = 1.0 / (2.0 * length_scale * length_scale);
  for (int i = 0; i < num_receivers; ++i)
    for (int j = 0; j <= i; ++j) {
      double d = static_cast<double>(i - j);
      double k = std::exp(-d * d * inv2l2);
      K(i, j) = k;
      K(j, i) = k;
    }
  K.diagonal().array() += 1e-8;

  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gp_amplitude_profile: covariance factorization failed");

  Eigen::VectorXd z(num_receivers);
  for (int i = 0; i < num_receivers; ++i) z(i) = rng.normal();
  Eigen::VectorXd a = llt.matrixL() * z;

  std::vector<double> out(num_receivers);
  for (int i = 0; i < num_receivers; ++i) out[i] = std::abs(a(i));
  return out;
}

}  // namespace detail

/// Harmonic frequencies k * base below the Nyquist frequency of the gather.
inline std::vector<double> surviving_harmonics(const NoiseConfig& cfg, double sample_rate_ms) {
  const double nyquist_hz = 1000.0 / (2.0 * sample_rate_ms);
  std::vector<double> f;
  for (int k = 1; k <= cfg.num_harmonics; ++k) {
    double fk = k * cfg.base_frequency_hz;
    if (fk < nyquist_hz) f.push_back(fk);
  }
  return f;
}

/// Add the noise field to a clean gather. The realized field satisfies
/// max |noise| = amplitude_ratio * max |clean| exactly (scale factor computed
/// in double). amplitude_ratio = 0 returns the input untouched.
inline GatherImage add_harmonic_noise(const GatherImage& gather, const NoiseConfig& cfg) {
  if (cfg.amplitude_ratio == 0.0) return gather;

  const int T = gather.height(), R = gather.width();
  double max_clean = 0.0;
  for (float a : gather.amplitudes.v) max_clean = std::max(max_clean, std::abs(static_cast<double>(a)));
  if (!(max_clean > 0.0))
    throw std::invalid_argument("add_harmonic_noise: clean gather has no signal");

  const std::vector<double> freqs = surviving_harmonics(cfg, gather.sample_rate_ms);
  if (freqs.empty())
    throw std::invalid_argument("add_harmonic_noise: all harmonics above the Nyquist frequency");

  const double dt_s = gather.sample_rate_ms / 1000.0;
  std::vector<double> noise(static_cast<size_t>(T) * R, 0.0);

  Rng rng(cfg.seed);
  for (double fk : freqs) {
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    const std::vector<double> amp = detail::gp_amplitude_profile(R, cfg.gp_length_scale_traces, rng);
    std::vector<double> jitter(R);
    for (int r = 0; r < R; ++r) jitter[r] = rng.normal(0.0, cfg.phase_jitter_std_rad);

    const double w = 2.0 * M_PI * fk * dt_s;
    for (int t = 0; t < T; ++t)
      for (int r = 0; r < R; ++r)
        noise[static_cast<size_t>(t) * R + r] += amp[r] * std::sin(w * t + phase + jitter[r]);
  }

  double max_noise = 0.0;
  for (double x : noise) max_noise = std::max(max_noise, std::abs(x));
  if (!(max_noise > 0.0))
    throw std::runtime_error("add_harmonic_noise: degenerate zero noise field");
  const double scale = cfg.amplitude_ratio * max_clean / max_noise;

  GatherImage out = gather;
  for (size_t i = 0; i < noise.size(); ++i)
    out.amplitudes.v[i] = static_cast<float>(static_cast<double>(gather.amplitudes.v[i]) +
                                             noise[i] * scale);
  return out;
}

}  // namespace fbp
