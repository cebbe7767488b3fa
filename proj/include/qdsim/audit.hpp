#pragma once

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "qdsim/dataset.hpp"

// Property checks over a generated map. Used by the `validate` subcommand and
// by the test suites.

namespace qdsim {

inline std::array<int, kChargeSlots> padded_charge(const PixelRecord& r) {
  std::array<int, kChargeSlots> c{};
  for (std::size_t i = 0; i < std::min(r.charge.size(), kChargeSlots); ++i) c[i] = r.charge[i];
  return c;
}

inline int total_charge(const PixelRecord& r) { return std::accumulate(r.charge.begin(), r.charge.end(), 0); }

/// True when the ground-state charge changes between two pixels: the total
/// electron count differs, or the per-island charges differ within one state
/// label. A split or merge of islands at fixed electron count is a change of
/// state label, not a charge transition.
inline bool charge_changes(const PixelRecord& a, const PixelRecord& b) {
  if (total_charge(a) != total_charge(b)) return true;
  return a.state == b.state && padded_charge(a) != padded_charge(b);
}

/// Pixels on a charge-transition line: the charge changes between this pixel
/// and the next one along either voltage axis. Each line is marked on its
/// lower-voltage side only.
inline std::vector<bool> charge_transition_mask(const DeviceMap& m) {
  const std::size_t n1 = m.V_P1_vec.size(), n2 = m.V_P2_vec.size();
  std::vector<bool> mask(n1 * n2, false);
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      const auto& here = m.at(i, j);
      mask[i * n2 + j] = (i + 1 < n1 && charge_changes(here, m.at(i + 1, j))) ||
                         (j + 1 < n2 && charge_changes(here, m.at(i, j + 1)));
    }
  }
  return mask;
}

/// 3x3 (8-neighbour) dilation repeated `radius` times.
inline std::vector<bool> dilate(const std::vector<bool>& mask, std::size_t n1, std::size_t n2, std::size_t radius = 1) {
  std::vector<bool> cur = mask;
  for (std::size_t pass = 0; pass < radius; ++pass) {
    std::vector<bool> next(cur.size(), false);
    for (std::size_t i = 0; i < n1; ++i) {
      for (std::size_t j = 0; j < n2; ++j) {
        if (!cur[i * n2 + j]) continue;
        for (std::size_t a = (i ? i - 1 : 0); a <= std::min(i + 1, n1 - 1); ++a) {
          for (std::size_t b = (j ? j - 1 : 0); b <= std::min(j + 1, n2 - 1); ++b) next[a * n2 + b] = true;
        }
      }
    }
    cur = std::move(next);
  }
  return cur;
}

/// The ceil(fraction * N) largest values; ties resolved toward lower index.
inline std::vector<bool> top_fraction_mask(const std::vector<double>& values, double fraction) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(values.size())));
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<bool> mask(values.size(), false);
  for (std::size_t i = 0; i < std::min(keep, idx.size()); ++i) mask[idx[i]] = true;
  return mask;
}

struct ConsistencyReport {
  std::size_t transition_pixels = 0;
  std::size_t covered = 0;
  double fraction() const { return transition_pixels ? static_cast<double>(covered) / transition_pixels : 1.0; }
};

/// Share of charge-transition pixels within one pixel of the top-decile
/// differential-conductance pixels of the given sensor.
inline ConsistencyReport sensor_charge_consistency(const DeviceMap& m, std::size_t sensor_index = 0) {
  const std::size_t n1 = m.V_P1_vec.size(), n2 = m.V_P2_vec.size();
  const auto grad = differential_conductance(m, sensor_index);
  const auto near_peak = dilate(top_fraction_mask(grad, 0.1), n1, n2, 1);
  const auto transitions = charge_transition_mask(m);
  ConsistencyReport r;
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    if (!transitions[i]) continue;
    ++r.transition_pixels;
    if (near_peak[i]) ++r.covered;
  }
  return r;
}

inline std::array<std::size_t, 4> label_counts(const DeviceMap& m) {
  std::array<std::size_t, 4> c{};
  for (const auto& r : m.records) ++c[class_index(state_from_int(r.state))];
  return c;
}

inline std::pair<int, int> charge_bounds(const DeviceMap& m) {
  int lo = INT_MAX, hi = INT_MIN;
  for (const auto& r : m.records) {
    for (int q : r.charge) {
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
  }
  return {lo, hi};
}

struct MonotonicityReport {
  std::size_t pairs = 0;       // neighbouring dot-state pixel pairs inspected
  std::size_t violations = 0;  // total charge decreased with increasing voltage
  std::size_t unconfined = 0;  // violations away from any charge-transition line
};

/// Total charge along each voltage axis between neighbouring pixels that are
/// both in a dot state. A decrease is confined jitter when either pixel lies
/// within one pixel of a step where the total charge increases, or of a
/// change of state label.
inline MonotonicityReport charge_monotonicity(const DeviceMap& m) {
  const std::size_t n1 = m.V_P1_vec.size(), n2 = m.V_P2_vec.size();
  std::vector<bool> rising(n1 * n2, false), label_edge(n1 * n2, false);
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      const auto& r = m.at(i, j);
      const int q = total_charge(r);
      rising[i * n2 + j] = (i + 1 < n1 && total_charge(m.at(i + 1, j)) > q) ||
                           (j + 1 < n2 && total_charge(m.at(i, j + 1)) > q);
      label_edge[i * n2 + j] = (i + 1 < n1 && m.at(i + 1, j).state != r.state) ||
                               (j + 1 < n2 && m.at(i, j + 1).state != r.state);
    }
  }
  std::vector<bool> near(n1 * n2);
  const auto near_rising = dilate(rising, n1, n2, 1);
  const auto near_label_edge = dilate(label_edge, n1, n2, 1);
  for (std::size_t k = 0; k < near.size(); ++k) near[k] = near_rising[k] || near_label_edge[k];
  auto dot = [](const PixelRecord& r) { return r.state == 1 || r.state == 2; };

  MonotonicityReport rep;
  auto inspect = [&](std::size_t a, std::size_t b) {
    const auto& ra = m.records[a];
    const auto& rb = m.records[b];
    if (!dot(ra) || !dot(rb)) return;
    ++rep.pairs;
    if (total_charge(rb) >= total_charge(ra)) return;
    ++rep.violations;
    if (!near[a] && !near[b]) ++rep.unconfined;
  };
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      const std::size_t a = i * n2 + j;
      if (i + 1 < n1) inspect(a, a + n2);
      if (j + 1 < n2) inspect(a, a + 1);
    }
  }
  return rep;
}

}  // namespace qdsim
