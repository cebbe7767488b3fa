#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "qdsim/error.hpp"

namespace qdsim {

/// Uniform 1D grid along the channel, positions in nm.
class Grid {
 public:
  Grid() = default;

  Grid(double x_min, double x_max, double spacing) {
    if (!(spacing > 0.0) || !(x_max > x_min)) {
      throw ConfigError("grid: need x_max > x_min and spacing > 0");
    }
    const double cells = (x_max - x_min) / spacing;
    const auto n_cells = static_cast<std::size_t>(std::llround(cells));
    if (n_cells < 1 || std::abs(cells - static_cast<double>(n_cells)) > 1e-9 * cells) {
      throw ConfigError("grid: spacing must divide the device length");
    }
    x_min_ = x_min;
    spacing_ = spacing;
    points_.resize(n_cells + 1);
    for (std::size_t i = 0; i <= n_cells; ++i) {
      points_[i] = x_min + spacing * static_cast<double>(i);
    }
    points_.back() = x_max;
  }

  std::size_t size() const { return points_.size(); }
  double spacing() const { return spacing_; }
  double front() const { return points_.front(); }
  double back() const { return points_.back(); }
  double operator[](std::size_t i) const { return points_[i]; }
  std::span<const double> points() const { return points_; }

  /// Trapezoid weight of point i within the closed index range [first, last].
  double weight(std::size_t i, std::size_t first, std::size_t last) const {
    if (first == last) return 0.0;
    return (i == first || i == last) ? 0.5 * spacing_ : spacing_;
  }

  /// Trapezoid weights over the whole grid.
  std::vector<double> weights() const {
    std::vector<double> w(size(), spacing_);
    if (!w.empty()) {
      w.front() *= 0.5;
      w.back() *= 0.5;
    }
    return w;
  }

  /// Trapezoid integral of f over the index range [first, last].
  double integrate(std::span<const double> f, std::size_t first, std::size_t last) const {
    double s = 0.0;
    for (std::size_t i = first; i <= last; ++i) s += weight(i, first, last) * f[i];
    return s;
  }

  double integrate(std::span<const double> f) const {
    return f.empty() ? 0.0 : integrate(f, 0, f.size() - 1);
  }

  bool operator==(const Grid&) const = default;

 private:
  double x_min_ = 0.0;
  double spacing_ = 1.0;
  std::vector<double> points_;
};

}  // namespace qdsim
