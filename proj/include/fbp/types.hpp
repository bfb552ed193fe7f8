#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fbp/array2d.hpp"

namespace fbp {

/// A shot gather: amplitudes are (time steps x receivers), one trace per
/// column.
struct GatherImage {
  Array2D<float> amplitudes;
  double sample_rate_ms = 8.0;

  int height() const { return amplitudes.rows; }
  int width() const { return amplitudes.cols; }
};

/// Per-receiver first-arrival time indices. `valid` is false on dead traces;
/// `times` still carries the model truth there so masks persist across gaps.
struct PickLine {
  std::vector<int32_t> times;
  std::vector<uint8_t> valid;

  int num_receivers() const { return static_cast<int>(times.size()); }

  void check(int T) const {
    if (times.size() != valid.size())
      throw std::invalid_argument("PickLine: times/valid length mismatch");
    for (size_t r = 0; r < times.size(); ++r)
      if (valid[r] && (times[r] < 0 || times[r] >= T))
        throw std::invalid_argument("PickLine: time index out of range at receiver " +
                                    std::to_string(r));
  }
};

/// Binary per-pixel class map: 0 = non-signal, 1 = signal.
struct SegmentationMask {
  Array2D<uint8_t> classes;

  int height() const { return classes.rows; }
  int width() const { return classes.cols; }
};

/// Per-pixel class scores (unnormalized logits) and softmax probabilities,
/// same spatial shape as the input image.
struct PredictionMap {
  Array2D<float> score0, score1;  // logits for class 0 / class 1
  Array2D<float> prob0, prob1;    // softmax probabilities

  int height() const { return score0.rows; }
  int width() const { return score0.cols; }
};

}  // namespace fbp
