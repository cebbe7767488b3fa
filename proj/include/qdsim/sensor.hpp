#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "qdsim/device_model.hpp"
#include "qdsim/error.hpp"

namespace qdsim {

struct SensorReadout {
  std::vector<double> values;
  bool operator==(const SensorReadout&) const = default;
};

namespace detail {

inline double sensor_distance(const Point2& sensor, double x) {
  const double r = std::hypot(sensor.x - x, sensor.y);
  if (!(r > 0.0)) throw ConfigError("sensor_response: sensor coincides with a charge");
  return r;
}

}  // namespace detail

/// Charge-sensor signal: sum_i Q_i / r_i over the dots plus
/// sensor_gate_coeff * sum_g U_g / r_g over the gates, where U_g is the gate's
/// potential energy at its centre in eV (lever arm and plunger voltage
/// included) and distances are in nm from the sensor to points on the channel.
inline SensorReadout sensor_response(std::span<const int> charges, std::span<const double> dot_positions,
                                     std::span<const GateSpec> biased_gates, const PhysicsParams& p) {
  if (charges.size() != dot_positions.size()) throw ConfigError("sensor_response: charges and dots differ in length");
  SensorReadout out;
  out.values.reserve(p.sensors.size());
  for (const auto& s : p.sensors) {
    double dots = 0.0;
    for (std::size_t i = 0; i < charges.size(); ++i) dots += charges[i] / detail::sensor_distance(s, dot_positions[i]);
    double gates = 0.0;
    for (const auto& g : biased_gates) gates += 1e-3 * g.alpha * g.peak / detail::sensor_distance(s, g.x0);
    out.values.push_back(dots + p.sensor_gate_coeff * gates);
  }
  return out;
}

}  // namespace qdsim
