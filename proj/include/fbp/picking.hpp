#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "fbp/types.hpp"

// Mask-to-pick-line conversion. FPP takes the first predicted signal pixel
// per trace; NPP tracks rising-edge candidates and follows the one nearest to
// the neighboring pick, run in both directions with gap-based conflict
// resolution between the two passes.

namespace fbp {

/// Rising-edge candidates per receiver: time indices t with mask(t,r) = 1 and
/// mask(t-1,r) = 0 (a virtual zero row above t = 0 makes a boundary at the
/// top row pickable). `run_lengths` holds the length of the run of 1s that
/// starts at each candidate, used by the directional initialization rule.
struct CandidateSet {
  int height = 0;
  std::vector<std::vector<int32_t>> per_receiver;
  std::vector<std::vector<int32_t>> run_lengths;

  int num_receivers() const { return static_cast<int>(per_receiver.size()); }
  bool any() const {
    for (const auto& c : per_receiver)
      if (!c.empty()) return true;
    return false;
  }
};

enum class Direction { left_to_right, right_to_left };
enum class PickMethod { fpp, npp };

inline PickMethod pick_method_from_string(const std::string& s) {
  if (s == "fpp") return PickMethod::fpp;
  if (s == "npp") return PickMethod::npp;
  throw std::invalid_argument("unknown pick method: " + s);
}

/// First point picking: times[r] = min{t : mask(t,r) = 1}. Receivers whose
/// column is all zero are marked invalid (times 0).
inline PickLine fpp(const SegmentationMask& mask) {
  const int T = mask.height(), R = mask.width();
  PickLine out;
  out.times.assign(R, 0);
  out.valid.assign(R, 0);
  for (int r = 0; r < R; ++r) {
    for (int t = 0; t < T; ++t) {
      if (mask.classes.at(t, r)) {
        out.times[r] = t;
        out.valid[r] = 1;
        break;
      }
    }
  }
  return out;
}

inline CandidateSet candidates(const SegmentationMask& mask) {
  const int T = mask.height(), R = mask.width();
  CandidateSet cs;
  cs.height = T;
  cs.per_receiver.resize(R);
  cs.run_lengths.resize(R);
  for (int r = 0; r < R; ++r) {
    uint8_t prev = 0;
    for (int t = 0; t < T; ++t) {
      uint8_t cur = mask.classes.at(t, r);
      if (cur == 1 && prev == 0) {
        int run = 0;
        while (t + run < T && mask.classes.at(t + run, r) == 1) ++run;
        cs.per_receiver[r].push_back(t);
        cs.run_lengths[r].push_back(run);
      }
      prev = cur;
    }
  }
  return cs;
}

namespace detail {

/// Candidate nearest to `target`; equidistant candidates resolve to the
/// earlier time. Candidates are stored sorted ascending.
inline int32_t nearest_candidate(const std::vector<int32_t>& cands, int32_t target) {
  int32_t best = cands.front();
  long best_d = std::labs(static_cast<long>(best) - target);
  for (int32_t c : cands) {
    long d = std::labs(static_cast<long>(c) - target);
    if (d < best_d) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

/// Initial pick of a directional pass: the candidate with the longest
/// following run of 1s; ties resolve to the earliest time.
inline int32_t initial_pick(const std::vector<int32_t>& cands, const std::vector<int32_t>& runs) {
  int best = 0;
  for (size_t i = 1; i < cands.size(); ++i)
    if (runs[i] > runs[best]) best = static_cast<int>(i);
  return cands[best];
}

}  // namespace detail

/// One greedy pass: the first column holding any candidate picks per the
/// initialization rule; every later column picks the candidate nearest the
/// previous pick. Empty-candidate columns carry the previous pick forward and
/// are marked invalid (columns before the first candidate column take the
/// initial pick's value, also invalid).
inline PickLine npp_directional(const CandidateSet& cands, Direction dir) {
  const int R = cands.num_receivers();
  if (!cands.any()) throw std::invalid_argument("npp_directional: no candidates in any column");

  PickLine out;
  out.times.assign(R, 0);
  out.valid.assign(R, 0);

  const int begin = dir == Direction::left_to_right ? 0 : R - 1;
  const int step = dir == Direction::left_to_right ? 1 : -1;

  bool started = false;
  int32_t prev = 0;
  std::vector<int> leading;  // columns before the first candidate column
  for (int i = 0, r = begin; i < R; ++i, r += step) {
    const auto& col = cands.per_receiver[r];
    if (!started) {
      if (col.empty()) {
        leading.push_back(r);
        continue;
      }
      prev = detail::initial_pick(col, cands.run_lengths[r]);
      started = true;
      for (int lr : leading) out.times[lr] = prev;  // backfill, stays invalid
    } else if (!col.empty()) {
      prev = detail::nearest_candidate(col, prev);
    } else {
      out.times[r] = prev;  // carried forward
      continue;
    }
    out.times[r] = prev;
    out.valid[r] = 1;
  }
  return out;
}

/// Bidirectional NPP. Both passes run; agreeing columns keep the common pick.
/// Each maximal disagreement interval is resolved by the jump magnitude each
/// direction makes across the boundary between its last agreed column and its
/// first disagreeing column ("the gap"): the direction with the smaller gap
/// wins the interval, ties going to left-to-right. When the interval touches
/// an image border, only the available agreed edge is used for both gaps; if
/// no column agrees at all, left-to-right wins outright.
inline PickLine npp_bidirectional(const SegmentationMask& mask) {
  const CandidateSet cs = candidates(mask);
  const PickLine l2r = npp_directional(cs, Direction::left_to_right);
  const PickLine r2l = npp_directional(cs, Direction::right_to_left);
  const int R = cs.num_receivers();

  PickLine out;
  out.times.assign(R, 0);
  out.valid.assign(R, 0);

  auto agrees = [&](int r) { return l2r.times[r] == r2l.times[r]; };

  int r = 0;
  while (r < R) {
    if (agrees(r)) {
      out.times[r] = l2r.times[r];
      out.valid[r] = l2r.valid[r] && r2l.valid[r];
      ++r;
      continue;
    }
    int a = r;
    int b = r;
    while (b + 1 < R && !agrees(b + 1)) ++b;

    const bool has_left = a > 0;    // column a-1 agreed
    const bool has_right = b + 1 < R;
    bool left_wins;
    if (has_left && has_right) {
      long gap_l2r = std::labs(static_cast<long>(l2r.times[a]) - l2r.times[a - 1]);
      long gap_r2l = std::labs(static_cast<long>(r2l.times[b]) - r2l.times[b + 1]);
      left_wins = gap_l2r <= gap_r2l;
    } else if (has_left) {
      long gap_l2r = std::labs(static_cast<long>(l2r.times[a]) - out.times[a - 1]);
      long gap_r2l = std::labs(static_cast<long>(r2l.times[a]) - out.times[a - 1]);
      left_wins = gap_l2r <= gap_r2l;
    } else if (has_right) {
      long gap_l2r = std::labs(static_cast<long>(l2r.times[b]) - r2l.times[b + 1]);
      long gap_r2l = std::labs(static_cast<long>(r2l.times[b]) - r2l.times[b + 1]);
      left_wins = gap_l2r <= gap_r2l;
    } else {
      left_wins = true;  // whole line disagrees
    }
    const PickLine& win = left_wins ? l2r : r2l;
    for (int c = a; c <= b; ++c) {
      out.times[c] = win.times[c];
      out.valid[c] = win.valid[c];
    }
    r = b + 1;
  }
  return out;
}

/// Dispatch helper used by the CLI layer.
inline PickLine run_picker(const SegmentationMask& mask, PickMethod method) {
  if (method == PickMethod::fpp) return fpp(mask);
  return npp_bidirectional(mask);
}

}  // namespace fbp
