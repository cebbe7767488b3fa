#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qdsim/device_model.hpp"
#include "qdsim/error.hpp"
#include "qdsim/grid.hpp"
#include "qdsim/tf_solver.hpp"

namespace qdsim {

/// Closed grid-index range [first, last] of one electron island.
struct IslandRange {
  std::size_t first = 0;
  std::size_t last = 0;
  bool operator==(const IslandRange&) const = default;
};

struct IslandModel {
  std::vector<IslandRange> islands;
  std::vector<double> Z;              // continuous charge per island
  Eigen::MatrixXd E;                  // inverse capacitance, meV
  std::vector<double> dot_positions;  // nm
};

struct ChargeState {
  std::vector<int> Q;
  double energy = 0.0;  // meV
  bool definite = true; // false when E was not positive definite
};

inline constexpr double kDefaultIslandThreshold = 1e-6;  // 1/nm

/// Maximal runs with n > threshold. Runs that reach either end of the grid
/// belong to the leads and are not islands; single-point runs carry no
/// trapezoid charge and are skipped.
inline std::vector<IslandRange> segment_islands(std::span<const double> n, double threshold = kDefaultIslandThreshold) {
  if (!(threshold > 0.0)) throw ConfigError("segment_islands: threshold must be positive");
  std::vector<IslandRange> out;
  const std::size_t size = n.size();
  std::size_t i = 0;
  while (i < size) {
    if (!(n[i] > threshold)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < size && n[j + 1] > threshold) ++j;
    if (i > 0 && j + 1 < size && j > i) out.push_back({i, j});
    i = j + 1;
  }
  return out;
}

inline std::vector<double> induced_charges(const Grid& grid, std::span<const double> n,
                                           std::span<const IslandRange> islands) {
  std::vector<double> z;
  z.reserve(islands.size());
  for (const auto& isl : islands) z.push_back(grid.integrate(n, isl.first, isl.last));
  return z;
}

/// Inverse-capacitance estimate from the density:
///   E_ij = [c_k d_ij int_i n^2 + int_i int_j K n n] / (int_i n)(int_j n)
/// with every integral taken by the trapezoid rule over the island ranges.
inline Eigen::MatrixXd inverse_capacitance(const Grid& grid, std::span<const double> n,
                                           std::span<const IslandRange> islands, const PhysicsParams& p) {
  const auto k = static_cast<Eigen::Index>(islands.size());
  const auto z = induced_charges(grid, n, islands);
  for (double zi : z) {
    if (!(zi > 0.0)) throw NumericError("inverse_capacitance: island with zero integrated charge");
  }
  Eigen::MatrixXd E(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const auto& ia = islands[static_cast<std::size_t>(a)];
    for (Eigen::Index b = a; b < k; ++b) {
      const auto& ib = islands[static_cast<std::size_t>(b)];
      double coulomb = 0.0;
      for (std::size_t i = ia.first; i <= ia.last; ++i) {
        const double wi = grid.weight(i, ia.first, ia.last) * n[i];
        if (wi == 0.0) continue;
        double inner = 0.0;
        for (std::size_t j = ib.first; j <= ib.last; ++j) {
          inner += grid.weight(j, ib.first, ib.last) * n[j] * coulomb_kernel(grid[i], grid[j], p);
        }
        coulomb += wi * inner;
      }
      double kinetic = 0.0;
      if (a == b) {
        for (std::size_t i = ia.first; i <= ia.last; ++i) kinetic += grid.weight(i, ia.first, ia.last) * n[i] * n[i];
        kinetic *= p.c_k;
      }
      const double value = (kinetic + coulomb) / (z[static_cast<std::size_t>(a)] * z[static_cast<std::size_t>(b)]);
      E(a, b) = value;
      E(b, a) = value;
    }
  }
  return E;
}

/// Grid position of the density maximum inside each island.
inline std::vector<double> dot_positions(const Grid& grid, std::span<const double> n,
                                         std::span<const IslandRange> islands) {
  std::vector<double> out;
  for (const auto& isl : islands) {
    std::size_t best = isl.first;
    for (std::size_t i = isl.first; i <= isl.last; ++i) {
      if (n[i] > n[best]) best = i;
    }
    out.push_back(grid[best]);
  }
  return out;
}

inline IslandModel build_island_model(const Grid& grid, std::span<const double> n, const PhysicsParams& p,
                                      double threshold = kDefaultIslandThreshold) {
  IslandModel m;
  m.islands = segment_islands(n, threshold);
  m.Z = induced_charges(grid, n, m.islands);
  m.E = inverse_capacitance(grid, n, m.islands, p);
  m.dot_positions = dot_positions(grid, n, m.islands);
  return m;
}

/// sum_ij E_ij (Q - Z)_i (Q - Z)_j for real-valued Q.
inline double charging_energy(std::span<const double> q, std::span<const double> z, const Eigen::MatrixXd& E) {
  if (q.size() != z.size() || static_cast<Eigen::Index>(q.size()) != E.rows() || E.rows() != E.cols()) {
    throw ConfigError("charging_energy: dimension mismatch");
  }
  double e = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (std::size_t j = 0; j < q.size(); ++j) {
      e += E(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * (q[i] - z[i]) * (q[j] - z[j]);
    }
  }
  return e;
}

inline double charging_energy(std::span<const int> q, std::span<const double> z, const Eigen::MatrixXd& E) {
  std::vector<double> qd(q.begin(), q.end());
  return charging_energy(std::span<const double>(qd), z, E);
}

inline double charging_energy(std::span<const int> q, const IslandModel& m) { return charging_energy(q, m.Z, m.E); }

namespace detail {

// Strict ordering used to pick the ground state: lower energy, then fewer
// electrons, then lexicographically smaller.
inline bool charge_state_less(double ea, std::span<const int> qa, double eb, std::span<const int> qb) {
  const double tol = 1e-12 * std::max({1.0, std::abs(ea), std::abs(eb)});
  if (ea < eb - tol) return true;
  if (eb < ea - tol) return false;
  long sa = 0, sb = 0;
  for (int v : qa) sa += v;
  for (int v : qb) sb += v;
  if (sa != sb) return sa < sb;
  return std::lexicographical_compare(qa.begin(), qa.end(), qb.begin(), qb.end());
}

}  // namespace detail

/// Integer charge vector (Q_i >= 0) minimising the charging energy.
///
/// Candidates cover max(0, floor(Z_i) - 2) .. ceil(Z_i) + 2. When E is
/// positive definite the box is widened to the ellipsoid bound
/// |Q_i - Z_i| <= sqrt(E_r (E^-1)_ii), where E_r is the energy of the rounded
/// charge vector, so the result is the exact minimiser over Q >= 0.
inline ChargeState ground_state_charges(std::span<const double> z, const Eigen::MatrixXd& E) {
  const std::size_t k = z.size();
  if (static_cast<Eigen::Index>(k) != E.rows() || E.rows() != E.cols()) {
    throw ConfigError("ground_state_charges: dimension mismatch");
  }
  ChargeState best;
  if (k == 0) return best;

  std::vector<int> lo(k), hi(k);
  for (std::size_t i = 0; i < k; ++i) {
    lo[i] = std::max(0, static_cast<int>(std::floor(z[i])) - 2);
    hi[i] = static_cast<int>(std::ceil(z[i])) + 2;
  }

  Eigen::LLT<Eigen::MatrixXd> llt(E);
  const bool definite = llt.info() == Eigen::Success && E.diagonal().minCoeff() > 0.0;
  if (definite) {
    std::vector<int> rounded(k);
    for (std::size_t i = 0; i < k; ++i) rounded[i] = std::max(0, static_cast<int>(std::lround(z[i])));
    const double e_r = charging_energy(std::span<const int>(rounded), z, E);
    const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(E.rows(), E.cols()));
    constexpr double kMaxRadius = 64.0;
    for (std::size_t i = 0; i < k; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double r = std::min(kMaxRadius, std::sqrt(std::max(0.0, e_r * inv(ii, ii))) + 1e-9);
      lo[i] = std::min(lo[i], std::max(0, static_cast<int>(std::ceil(z[i] - r))));
      hi[i] = std::max(hi[i], static_cast<int>(std::floor(z[i] + r)));
    }
  }

  std::vector<int> q = lo;
  bool have = false;
  while (true) {
    const double e = charging_energy(std::span<const int>(q), z, E);
    if (!have || detail::charge_state_less(e, q, best.energy, best.Q)) {
      best.Q = q;
      best.energy = e;
      have = true;
    }
    bool advanced = false;
    for (std::size_t d = k; d-- > 0;) {
      if (q[d] < hi[d]) {
        ++q[d];
        advanced = true;
        break;
      }
      q[d] = lo[d];
    }
    if (!advanced) break;
  }
  best.definite = definite;
  return best;
}

inline ChargeState ground_state_charges(const IslandModel& m) { return ground_state_charges(m.Z, m.E); }

}  // namespace qdsim
