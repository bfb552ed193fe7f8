#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbp/rng.hpp"
#include "fbp/types.hpp"
#include "fbp/velocity.hpp"

// Synthetic shot gathers: a Ricker wavelet onset-aligned at the first-arrival
// time of a layered model, followed by a decaying pseudo-random coda, with
// optional splicing and dead-trace gaps to mimic disconnected pick lines.

namespace fbp {

/// Ricker wavelet, peak at t = 0.
inline double ricker(double t_s, double peak_freq_hz) {
  double a = M_PI * M_PI * peak_freq_hz * peak_freq_hz * t_s * t_s;
  return (1.0 - 2.0 * a) * std::exp(-a);
}

/// Band-limited random wavetrain after the onset, so the signal region has
/// visible texture instead of staying flat.
struct CodaConfig {
  double min_freq_hz = 8.0;
  double max_freq_hz = 35.0;
  int num_components = 3;
  double rel_amplitude = 0.75;    // relative to the wavelet peak
  double decay_fraction = 0.18;   // e-folding time as a fraction of the trace length
  double ramp_samples = 3.0;
  double offset_decay = 0.003;    // trace amplitude falloff per trace of offset
};

struct SynthResult {
  GatherImage gather;
  PickLine picks;
};

/// Synthesize one clean gather of T time steps by R receivers. Each trace
/// carries the wavelet placed causally: its first (tapered) sample sits at
/// t*_r = round(arrival / dt), so everything strictly above t*_r is zero.
/// Deterministic given the seed.
inline SynthResult synthesize_gather(const VelocityModel& model, int T, int R,
                                     double wavelet_peak_freq_hz, const CodaConfig& coda,
                                     uint64_t seed) {
  model.validate();
  if (T < 8 || R < 8) throw std::invalid_argument("synthesize_gather: T and R must be >= 8");
  if (!(wavelet_peak_freq_hz > 0.0))
    throw std::invalid_argument("synthesize_gather: wavelet frequency must be positive");

  const double dt_s = model.sample_rate_ms / 1000.0;
  const std::vector<double> arrivals = first_arrival_times(model, R);

  SynthResult out;
  out.gather.sample_rate_ms = model.sample_rate_ms;
  out.gather.amplitudes = Array2D<float>(T, R, 0.0f);
  out.picks.times.assign(R, 0);
  out.picks.valid.assign(R, 1);

  // Causal wavelet support [-0.5/f, +1.2/f] around the peak: the first
  // sample carries ~1/3 of the peak amplitude, so the labeled onset row is a
  // visible edge, and the right tail decays out naturally.
  const int lead = std::max(1, static_cast<int>(std::ceil(0.5 / (wavelet_peak_freq_hz * dt_s))));
  const int tail = std::max(2, static_cast<int>(std::ceil(1.2 / (wavelet_peak_freq_hz * dt_s))));

  for (int r = 0; r < R; ++r) {
    const int onset = static_cast<int>(std::lround(arrivals[r] / dt_s));
    if (onset > T - 1)
      throw std::invalid_argument("synthesize_gather: arrival beyond image height at receiver " +
                                  std::to_string(r) + " (t = " + std::to_string(onset) +
                                  ", T = " + std::to_string(T) + ")");
    out.picks.times[r] = onset;

    Rng rng(derive_seed(seed, static_cast<uint64_t>(r)));

    // Offset decay keeps far traces weaker; onsets there are genuinely faint.
    const double offset_traces = std::abs(static_cast<double>(r - model.source_receiver_index));
    const double amp = 1.0 / std::sqrt(1.0 + coda.offset_decay * offset_traces);

    for (int j = 0; j <= lead + tail; ++j) {
      int t = onset + j;
      if (t >= T) break;
      out.gather.amplitudes.at(t, r) +=
          static_cast<float>(amp * ricker((j - lead) * dt_s, wavelet_peak_freq_hz));
    }

    // Coda: sum of a few random sinusoids under a ramp-in / exponential-decay
    // envelope, starting one sample after the onset.
    std::vector<double> freqs(coda.num_components), phases(coda.num_components),
        weights(coda.num_components);
    for (int q = 0; q < coda.num_components; ++q) {
      freqs[q] = rng.uniform(coda.min_freq_hz, coda.max_freq_hz);
      phases[q] = rng.uniform(0.0, 2.0 * M_PI);
      weights[q] = 0.3 + 0.7 * rng.uniform();
    }
    const double tau = std::max(1.0, coda.decay_fraction * T * rng.uniform(0.6, 1.5));
    for (int t = onset + 1; t < T; ++t) {
      const double k = t - onset;
      const double env = (1.0 - std::exp(-k / coda.ramp_samples)) * std::exp(-k / tau);
      double s = 0.0;
      for (int q = 0; q < coda.num_components; ++q)
        s += weights[q] * std::sin(2.0 * M_PI * freqs[q] * (t * dt_s) + phases[q]);
      out.gather.amplitudes.at(t, r) +=
          static_cast<float>(amp * coda.rel_amplitude * env * s / coda.num_components);
    }
  }
  return out;
}

/// Ground-truth mask from a pick line: class 1 at and below times[r]. Dead
/// receivers keep their model-truth times, so the boundary persists across
/// gaps.
inline SegmentationMask make_mask(const PickLine& picks, int T) {
  picks.check(T);
  for (int32_t t : picks.times)
    if (t < 0 || t >= T) throw std::invalid_argument("make_mask: pick outside [0, T)");
  const int R = picks.num_receivers();
  SegmentationMask m;
  m.classes = Array2D<uint8_t>(T, R, 0);
  for (int r = 0; r < R; ++r)
    for (int t = picks.times[r]; t < T; ++t) m.classes.at(t, r) = 1;
  return m;
}

struct DisconnectConfig {
  int num_dead_spans = 2;
  int min_span_width = 3;
  int max_span_width = 12;
};

struct GatherWithPicks {
  GatherImage gather;
  PickLine picks;
};

/// Splice gathers along the receiver axis (pick line jumps at the seams) and
/// knock out random contiguous dead-trace spans: amplitudes zeroed, picks
/// flagged invalid but keeping the model truth.
inline GatherWithPicks apply_disconnections(const std::vector<GatherWithPicks>& parts,
                                            const DisconnectConfig& cfg, bool splice,
                                            uint64_t seed) {
  if (parts.empty()) throw std::invalid_argument("apply_disconnections: no gathers");
  const int T = parts[0].gather.height();
  const double dt = parts[0].gather.sample_rate_ms;
  for (const auto& p : parts)
    if (p.gather.height() != T || p.gather.sample_rate_ms != dt)
      throw std::invalid_argument("apply_disconnections: gathers must share T and sample rate");

  const size_t n_parts = splice ? parts.size() : 1;
  int R = 0;
  for (size_t i = 0; i < n_parts; ++i) R += parts[i].gather.width();

  GatherWithPicks out;
  out.gather.sample_rate_ms = dt;
  out.gather.amplitudes = Array2D<float>(T, R);
  out.picks.times.assign(R, 0);
  out.picks.valid.assign(R, 1);

  int col = 0;
  for (size_t i = 0; i < n_parts; ++i) {
    const auto& part = parts[i];
    for (int r = 0; r < part.gather.width(); ++r, ++col) {
      for (int t = 0; t < T; ++t)
        out.gather.amplitudes.at(t, col) = part.gather.amplitudes.at(t, r);
      out.picks.times[col] = part.picks.times[r];
      out.picks.valid[col] = part.picks.valid[r];
    }
  }

  Rng rng(seed);
  for (int s = 0; s < cfg.num_dead_spans; ++s) {
    const int width = rng.uniform_int(cfg.min_span_width, cfg.max_span_width);
    if (width > R)
      throw std::invalid_argument("apply_disconnections: dead span wider than the gather");
    const int start = rng.uniform_int(0, R - width);
    for (int r = start; r < start + width; ++r) {
      for (int t = 0; t < T; ++t) out.gather.amplitudes.at(t, r) = 0.0f;
      out.picks.valid[r] = 0;
    }
  }
  return out;
}

/// Zero out an explicit span [start, start+width); used by tests and by
/// callers that place gaps themselves.
inline void kill_span(GatherWithPicks& gp, int start, int width) {
  if (width > gp.gather.width())
    throw std::invalid_argument("kill_span: dead span wider than the gather");
  for (int r = start; r < start + width; ++r) {
    for (int t = 0; t < gp.gather.height(); ++t) gp.gather.amplitudes.at(t, r) = 0.0f;
    gp.picks.valid[r] = 0;
  }
}

}  // namespace fbp
