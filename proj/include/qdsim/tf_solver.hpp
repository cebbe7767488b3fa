#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qdsim/device_model.hpp"
#include "qdsim/grid.hpp"

namespace qdsim {

/// Converged (or best-effort) Thomas-Fermi density on the device grid.
struct DensityProfile {
  std::vector<double> n;         // 1/nm
  std::vector<double> band_min;  // eV
  double residual = 0.0;         // max |F(n) - n| at the returned density
  int iterations = 0;
  bool converged = false;
};

struct SolverConfig {
  double tol = 1e-10;  // 1/nm
  int max_iter = 2000;
  double mix = 0.1;
  int ramp_iters = 50;
};

inline void validate(const SolverConfig& c) {
  if (!(c.tol > 0.0)) throw ConfigError("solver: tol must be positive");
  if (!(c.mix > 0.0 && c.mix <= 1.0)) throw ConfigError("solver: mix must lie in (0, 1]");
  if (c.ramp_iters < 0 || c.max_iter < 1) throw ConfigError("solver: bad iteration limits");
}

/// Occupied density of a constant-DOS band with minimum `band_min` (eV):
/// the Fermi integral from band_min to infinity in closed form,
/// n = (g0/beta) ln(1 + exp(-beta (band_min - mu))).
inline double fermi_density(double band_min, const PhysicsParams& p) {
  const double a = -p.beta * (band_min - p.mu);
  const double softplus = a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
  return p.g0 / p.beta * softplus;
}

inline std::vector<double> fermi_density(std::span<const double> band_min, const PhysicsParams& p) {
  std::vector<double> n(band_min.size());
  std::transform(band_min.begin(), band_min.end(), n.begin(), [&](double e) { return fermi_density(e, p); });
  return n;
}

/// Softened Coulomb kernel between two channel points (meV).
inline double coulomb_kernel(double x, double xp, const PhysicsParams& p) {
  const double d = x - xp;
  return p.K0 / std::sqrt(d * d + p.sigma * p.sigma);
}

/// Discretised interaction operator: (K n)_i = sum_j K(x_i, x_j) w_j n_j in
/// meV, with trapezoid weights w over the full grid.
class CoulombOperator {
 public:
  CoulombOperator(const Grid& grid, const PhysicsParams& p) : matrix_(grid.size(), grid.size()) {
    const auto w = grid.weights();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      for (std::size_t j = 0; j < grid.size(); ++j) {
        matrix_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            coulomb_kernel(grid[i], grid[j], p) * w[j];
      }
    }
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& n) const { return matrix_ * n; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

 private:
  Eigen::MatrixXd matrix_;
};

namespace detail {

inline Eigen::Map<const Eigen::VectorXd> view(std::span<const double> v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

}  // namespace detail

/// Band minimum (eV) in the presence of the external potential energy
/// `potential` (meV) and the density n, with the interaction scaled by `ramp`.
inline std::vector<double> modified_band_min(const CoulombOperator& op, std::span<const double> n,
                                             std::span<const double> potential, const PhysicsParams& p,
                                             double ramp = 1.0) {
  const Eigen::VectorXd coulomb = op.apply(detail::view(n));
  std::vector<double> e(n.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    e[i] = p.epsilon0 + 1e-3 * (potential[i] + ramp * coulomb(static_cast<Eigen::Index>(i)));
  }
  return e;
}

inline std::vector<double> modified_band_min(const Grid& grid, std::span<const double> n,
                                             std::span<const double> potential, const PhysicsParams& p,
                                             double ramp = 1.0) {
  return modified_band_min(CoulombOperator(grid, p), n, potential, p, ramp);
}

/// Damped fixed-point iteration for the self-consistent density, starting
/// from n = 0. The interaction strength rises linearly over the first
/// ramp_iters iterations; convergence is only tested at full strength.
/// Exhausting max_iter returns converged = false instead of throwing.
inline DensityProfile solve_self_consistent(const CoulombOperator& op, std::span<const double> potential,
                                            const PhysicsParams& p, const SolverConfig& cfg = {}) {
  validate(cfg);
  const auto size = static_cast<Eigen::Index>(potential.size());
  const Eigen::VectorXd external = detail::view(potential);

  Eigen::VectorXd n = Eigen::VectorXd::Zero(size);
  Eigen::VectorXd next(size);
  DensityProfile out;
  for (int it = 0; it < cfg.max_iter; ++it) {
    const double ramp = cfg.ramp_iters == 0 ? 1.0 : std::min(1.0, static_cast<double>(it + 1) / cfg.ramp_iters);
    const Eigen::VectorXd coulomb = op.apply(n);
    for (Eigen::Index i = 0; i < size; ++i) {
      next(i) = fermi_density(p.epsilon0 + 1e-3 * (external(i) + ramp * coulomb(i)), p);
    }
    out.residual = (next - n).cwiseAbs().maxCoeff();
    out.iterations = it + 1;
    if (ramp == 1.0 && out.residual < cfg.tol) {
      out.converged = true;
      break;
    }
    n += cfg.mix * (next - n);
  }

  out.n.assign(n.data(), n.data() + size);
  out.band_min = modified_band_min(op, out.n, potential, p);
  if (!out.converged) {
    double r = 0.0;
    for (std::size_t i = 0; i < out.n.size(); ++i) r = std::max(r, std::abs(fermi_density(out.band_min[i], p) - out.n[i]));
    out.residual = r;
  }
  return out;
}

inline DensityProfile solve_self_consistent(const Grid& grid, std::span<const double> potential,
                                            const PhysicsParams& p, const SolverConfig& cfg = {}) {
  return solve_self_consistent(CoulombOperator(grid, p), potential, p, cfg);
}

}  // namespace qdsim
