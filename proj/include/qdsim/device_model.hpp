#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qdsim/error.hpp"
#include "qdsim/grid.hpp"

namespace qdsim {

/// Position in the 2DEG plane (nm): x along the channel, y away from it.
struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

/// Cylindrical gate electrode. `peak` is the electron potential energy (meV)
/// under the gate centre before the lever arm is applied.
struct GateSpec {
  double peak = 0.0;    // meV
  double x0 = 0.0;      // nm
  double h = 50.0;      // nm, height above the 2DEG
  double r0 = 5.0;      // nm, gate radius
  double screen = 20.0; // nm, screening length
  double alpha = 1.0;   // lever arm

  bool operator==(const GateSpec&) const = default;
};

/// Physical constants of one device. Units follow the parameter dictionary
/// stored with every map: energies for the density solve in eV, interaction
/// scales in meV, lengths in nm.
struct PhysicsParams {
  double K0 = 10.0;         // meV
  double sigma = 2.0;       // nm
  double g0 = 0.5;          // 1/(eV nm)
  double c_k = 1.0;         // meV nm
  double beta = 1000.0;     // 1/eV
  double mu = 0.1;          // eV
  double kT = 50e-6;        // eV
  double bias = 100e-6;     // eV
  double V_L = 50e-6;       // V
  double V_R = -50e-6;      // V
  double WKB_coeff = 0.5;
  double attempt_rate_coef = 1.0;
  double barrier_tunnel_rate = 10.0;
  double barrier_current = 1.0;
  double short_circuit_current = 100.0;
  double sensor_gate_coeff = 0.1;
  std::vector<Point2> sensors{{-20.0, 50.0}, {20.0, 50.0}};
  double epsilon0 = 0.0;    // eV

  bool operator==(const PhysicsParams&) const = default;
};

inline constexpr std::size_t kGateCount = 5;
inline constexpr std::array<const char*, kGateCount> kGateNames{"B1", "P1", "B2", "P2", "B3"};
inline constexpr std::array<std::size_t, 2> kPlungerIndex{1, 3};

struct DeviceSpec {
  std::array<GateSpec, kGateCount> gates{};
  Grid grid;
  PhysicsParams physics;

  bool operator==(const DeviceSpec&) const = default;
};

inline void validate(const GateSpec& g) {
  if (!(g.h > 0.0) || !(g.r0 > 0.0)) throw ConfigError("gate: h and r0 must be positive");
  if (!(g.h > g.r0)) throw ConfigError("gate: h must exceed r0");
  if (!(g.screen > 0.0)) throw ConfigError("gate: screening length must be positive");
  if (!(g.alpha > 0.0)) throw ConfigError("gate: lever arm must be positive");
  if (!std::isfinite(g.peak) || !std::isfinite(g.x0)) throw ConfigError("gate: non-finite peak or position");
}

inline void validate(const PhysicsParams& p) {
  if (!(p.beta > 0.0)) throw ConfigError("physics: beta must be positive");
  if (!(p.kT > 0.0)) throw ConfigError("physics: kT must be positive");
  if (!(p.mu > 0.0)) throw ConfigError("physics: mu must be positive");
  if (!(p.sigma > 0.0)) throw ConfigError("physics: sigma must be positive");
  if (!(p.K0 >= 0.0) || !(p.g0 > 0.0) || !(p.c_k >= 0.0)) {
    throw ConfigError("physics: need K_0 >= 0, g_0 > 0, c_k >= 0");
  }
  for (const auto& s : p.sensors) {
    if (s.y == 0.0) throw ConfigError("physics: sensors must sit off the channel axis");
  }
  if (std::abs(p.bias - (p.V_L - p.V_R)) > 1e-12) throw ConfigError("physics: bias must equal V_L - V_R");
}

inline void validate(const DeviceSpec& d) {
  for (const auto& g : d.gates) validate(g);
  for (std::size_t i = 1; i < d.gates.size(); ++i) {
    if (!(d.gates[i].x0 > d.gates[i - 1].x0)) throw ConfigError("device: gates must be ordered by position");
  }
  if (d.grid.size() < 3) throw ConfigError("device: grid too small");
  if (d.gates.front().x0 < d.grid.front() || d.gates.back().x0 > d.grid.back()) {
    throw ConfigError("device: grid does not cover the gates");
  }
  validate(d.physics);
}

/// Potential energy (meV) produced at channel position x by a single gate:
/// a screened cylindrical-conductor profile normalised to alpha*peak at x0.
inline double gate_potential(double x, const GateSpec& gate) {
  if (!(gate.h > gate.r0)) throw ConfigError("gate_potential: h must exceed r0");
  const double d = x - gate.x0;
  const double shape = std::log(std::sqrt(d * d + gate.h * gate.h) / gate.r0) / std::log(gate.h / gate.r0);
  return gate.alpha * gate.peak * shape * std::exp(-std::abs(d) / gate.screen);
}

/// Plunger voltages in mV. A positive voltage lowers the electron energy.
struct PlungerVoltages {
  double p1 = 0.0;
  double p2 = 0.0;
};

/// Gates with the plunger peaks replaced by the applied voltages.
inline std::array<GateSpec, kGateCount> biased_gates(const DeviceSpec& spec, PlungerVoltages v) {
  auto gates = spec.gates;
  gates[kPlungerIndex[0]].peak = -v.p1;
  gates[kPlungerIndex[1]].peak = -v.p2;
  return gates;
}

/// External potential energy profile over the device grid (meV).
inline std::vector<double> total_potential(const DeviceSpec& spec, PlungerVoltages v) {
  const auto gates = biased_gates(spec, v);
  std::vector<double> out(spec.grid.size(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = 0.0;
    for (const auto& g : gates) s += gate_potential(spec.grid[i], g);
    out[i] = s;
  }
  return out;
}

/// Mean 5-gate device. Gate geometry and fixed constants follow the stored
/// parameter dictionary; g0 and sigma use the few-electron values
/// (0.5 /(eV nm), 2 nm). See configs/ for the alternative set.
inline DeviceSpec mean_device() {
  DeviceSpec d;
  const std::array<double, kGateCount> x0{-40.0, -20.0, 0.0, 20.0, 40.0};
  const std::array<double, kGateCount> peak{200.0, -400.0, 200.0, -400.0, 200.0};
  for (std::size_t i = 0; i < kGateCount; ++i) {
    d.gates[i].x0 = x0[i];
    d.gates[i].peak = peak[i];
  }
  d.grid = Grid(-60.0, 60.0, 1.0);
  return d;
}

struct SamplingOptions {
  double relative_std = 0.05;
  int max_retries = 100;
};

namespace detail {

inline double draw(std::mt19937_64& rng, double mean, double rel_std) {
  const double sd = rel_std * std::abs(mean);
  if (sd == 0.0) return mean;
  std::normal_distribution<double> dist(mean, sd);
  return dist(rng);
}

template <class Field>
void draw_gate_field(std::mt19937_64& rng, const DeviceSpec& mean, DeviceSpec& out, double rel_std, Field field) {
  bool shared = true;
  for (const auto& g : mean.gates) shared = shared && (g.*field == mean.gates[0].*field);
  if (shared) {
    const double v = draw(rng, mean.gates[0].*field, rel_std);
    for (auto& g : out.gates) g.*field = v;
  } else {
    for (std::size_t i = 0; i < kGateCount; ++i) out.gates[i].*field = draw(rng, mean.gates[i].*field, rel_std);
  }
}

}  // namespace detail

/// Draws one device realisation around `mean`. Varied parameters are K_0,
/// c_k, g_0 and the gate alpha, h, r0, screen, position and peak; each is
/// Gaussian with standard deviation relative_std*|mean|. Parameters shared by
/// all gates in `mean` stay shared.
inline DeviceSpec sample_device(const DeviceSpec& mean, std::uint64_t seed, SamplingOptions opt = {}) {
  validate(mean);
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt <= opt.max_retries; ++attempt) {
    DeviceSpec d = mean;
    const double s = opt.relative_std;
    d.physics.K0 = detail::draw(rng, mean.physics.K0, s);
    d.physics.c_k = detail::draw(rng, mean.physics.c_k, s);
    d.physics.g0 = detail::draw(rng, mean.physics.g0, s);
    detail::draw_gate_field(rng, mean, d, s, &GateSpec::alpha);
    detail::draw_gate_field(rng, mean, d, s, &GateSpec::h);
    detail::draw_gate_field(rng, mean, d, s, &GateSpec::r0);
    detail::draw_gate_field(rng, mean, d, s, &GateSpec::screen);
    for (std::size_t i = 0; i < kGateCount; ++i) d.gates[i].x0 = detail::draw(rng, mean.gates[i].x0, s);
    for (std::size_t i = 0; i < kGateCount; ++i) d.gates[i].peak = detail::draw(rng, mean.gates[i].peak, s);
    try {
      validate(d);
      return d;
    } catch (const ConfigError&) {
    }
  }
  throw ConfigError("sample_device: no valid draw within the retry limit");
}

}  // namespace qdsim
