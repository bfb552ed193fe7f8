#pragma once

// Independent oracles used by the test suites. Everything here recomputes
// expected values from first principles (set counting, Fermat-path grid
// search, finite differences) without touching the library's own formulas.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include <fbp/velocity.hpp>

namespace oracle {

/// Jaccard miss-detection of an explicit mispredicted set: flip `gt` on the
/// mispredicted pixels, count the class-1 intersection/union directly.
/// J(empty, empty) = 1, so the delta of an empty configuration is 0.
inline double delta_jc(const std::vector<uint8_t>& gt, const std::vector<uint8_t>& mispredicted) {
  long inter = 0, uni = 0;
  for (size_t i = 0; i < gt.size(); ++i) {
    const int pred = mispredicted[i] ? 1 - gt[i] : gt[i];
    inter += (pred == 1 && gt[i] == 1);
    uni += (pred == 1 || gt[i] == 1);
  }
  if (uni == 0) return 0.0;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

/// Head-wave travel time for a two-layer model by brute-force gridding of the
/// interface entry/exit points (no symmetry assumption), plus the direct wave.
inline double two_layer_grid_time(double h, double v1, double v2, double offset, int grid = 400) {
  double best = offset / v1;  // direct
  const double lo = -0.25 * (offset + h), hi = offset + 0.25 * (offset + h);
  const double step = (hi - lo) / grid;
  for (int ia = 0; ia <= grid; ++ia) {
    const double xa = lo + ia * step;
    const double down = std::hypot(xa, h) / v1;
    for (int ib = 0; ib <= grid; ++ib) {
      const double xb = lo + ib * step;
      if (xb < xa) continue;  // the refracted leg must run forward
      const double t = down + (xb - xa) / v2 + std::hypot(offset - xb, h) / v1;
      best = std::min(best, t);
    }
  }
  return best;
}

/// Fermat-path travel time for an arbitrary layered model: for each candidate
/// refractor, minimize the symmetric down/along/up path over the horizontal
/// run of each descending leg (golden-section coordinate descent on a convex
/// objective), and take the minimum over refractors and the direct wave.
inline double layered_path_time(const fbp::VelocityModel& m, double offset) {
  const auto& v = m.layer_velocities_ms;
  const auto& h = m.layer_thicknesses_m;
  double best = offset / v[0];

  for (size_t j = 0; j < h.size(); ++j) {
    const double vr = v[j + 1];
    // dx[i]: horizontal run of the descending leg through layer i (the
    // ascending side mirrors it).
    std::vector<double> dx(j + 1, 0.0);
    auto time_of = [&](const std::vector<double>& d) {
      double run = offset;
      double t = 0.0;
      for (size_t i = 0; i <= j; ++i) {
        t += 2.0 * std::hypot(d[i], h[i]) / v[i];
        run -= 2.0 * d[i];
      }
      if (run < 0.0) return std::numeric_limits<double>::infinity();
      return t + run / vr;
    };
    for (int sweep = 0; sweep < 8; ++sweep) {
      for (size_t i = 0; i <= j; ++i) {
        double lo = 0.0, hi = offset / 2.0 + h[i];
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
        std::vector<double> da = dx, db = dx;
        da[i] = a;
        db[i] = b;
        double fa = time_of(da), fb = time_of(db);
        for (int it = 0; it < 80; ++it) {
          if (fa < fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            da[i] = a;
            fa = time_of(da);
          } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            db[i] = b;
            fb = time_of(db);
          }
        }
        dx[i] = 0.5 * (lo + hi);
      }
    }
    best = std::min(best, time_of(dx));
  }
  return best;
}

/// Central finite difference of a scalar function at coordinate i.
inline double central_diff(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> x, size_t i, double h = 1e-5) {
  const double orig = x[i];
  x[i] = orig + h;
  const double fp = f(x);
  x[i] = orig - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

}  // namespace oracle
