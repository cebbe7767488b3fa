#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "qdsim/audit.hpp"
#include "qdsim/dataset.hpp"
#include "qdsim/serialization.hpp"

// Map rendering to binary PPM (P6). V_P1 runs along x, V_P2 upward along y.

namespace qdsim {

using Rgb = std::array<std::uint8_t, 3>;

/// Scalar field over the voltage grid, ready to be colour-mapped.
struct Panel {
  std::string name;
  std::string note;  // written as a header comment
  std::size_t n = 0;
  std::vector<double> values;  // records order
  bool categorical = false;
};

namespace plot_detail {

inline Rgb lerp(const Rgb& a, const Rgb& b, double t) {
  Rgb c{};
  for (int k = 0; k < 3; ++k) c[k] = static_cast<std::uint8_t>(std::lround(a[k] + (b[k] - a[k]) * t));
  return c;
}

// Five-stop approximation of a perceptually ordered dark-to-bright map.
inline Rgb sequential(double t) {
  static constexpr std::array<Rgb, 5> stops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  return lerp(stops[i], stops[i + 1], t - static_cast<double>(i));
}

inline Rgb state_colour(int state) {
  switch (state) {
    case -1: return {230, 230, 230};
    case 0: return {60, 60, 60};
    case 1: return {214, 96, 77};
    case 2: return {67, 147, 195};
    default: return {255, 0, 255};
  }
}

}  // namespace plot_detail

inline std::string format_range(double lo, double hi) {
  std::ostringstream s;
  s << "range " << lo << " " << hi;
  return s.str();
}

inline std::pair<double, double> finite_range(const std::vector<double>& v) {
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (double x : v) {
    if (!std::isfinite(x)) continue;
    if (first) {
      lo = hi = x;
      first = false;
    }
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return {lo, hi};
}

/// The four standard panels: current (displayed x1e4), total charge, sensor 0
/// and state label.
inline std::vector<Panel> standard_panels(const DeviceMap& m) {
  const std::size_t n = m.size();
  Panel current{"current", "current x1e4", n, {}, false};
  Panel charge{"charge", "total charge", n, {}, false};
  Panel sensor{"sensor", "sensor 0", n, {}, false};
  Panel state{"state", "state: -1 SC, 0 QPC, 1 SD, 2 DD", n, {}, true};
  for (const auto& r : m.records) {
    current.values.push_back(1e4 * r.current);
    charge.values.push_back(total_charge(r));
    sensor.values.push_back(r.sensor.empty() ? 0.0 : r.sensor.front());
    state.values.push_back(r.state);
  }
  for (auto* p : {&current, &charge, &sensor}) {
    const auto [lo, hi] = finite_range(p->values);
    p->note += ", " + format_range(lo, hi);
  }
  return {current, charge, sensor, state};
}

/// Encodes a panel as P6 with each pixel drawn as a scale x scale block.
inline std::string render_ppm(const Panel& panel, std::size_t scale = 4) {
  if (scale == 0) throw ConfigError("render: scale must be positive");
  const std::size_t n = panel.n;
  if (panel.values.size() != n * n) throw ConfigError("render: panel size mismatch");
  const auto [lo, hi] = finite_range(panel.values);
  const double span = hi > lo ? hi - lo : 1.0;

  const std::size_t side = n * scale;
  std::ostringstream out;
  out << "P6\n# " << panel.name << ": " << panel.note << "\n" << side << " " << side << "\n255\n";
  std::string row(side * 3, '\0');
  for (std::size_t y = 0; y < side; ++y) {
    const std::size_t i2 = n - 1 - y / scale;  // V_P2 grows upward
    for (std::size_t x = 0; x < side; ++x) {
      const std::size_t i1 = x / scale;
      const double v = panel.values[i1 * n + i2];
      const Rgb c = panel.categorical ? plot_detail::state_colour(static_cast<int>(v))
                                      : plot_detail::sequential((v - lo) / span);
      for (int k = 0; k < 3; ++k) row[x * 3 + k] = static_cast<char>(c[k]);
    }
    out << row;
  }
  return out.str();
}

/// Writes <stem>_<panel>.ppm for every standard panel; returns the paths.
inline std::vector<std::filesystem::path> plot_map(const DeviceMap& m, const std::filesystem::path& out_dir,
                                                   const std::string& stem, std::size_t scale = 4) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& panel : standard_panels(m)) {
    auto path = out_dir / (stem + "_" + panel.name + ".ppm");
    write_text(path, render_ppm(panel, scale));
    written.push_back(std::move(path));
  }
  return written;
}

}  // namespace qdsim
