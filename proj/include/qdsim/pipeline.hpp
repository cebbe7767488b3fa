#pragma once

#include <cstdint>
#include <vector>

#include "qdsim/device_model.hpp"
#include "qdsim/islands.hpp"
#include "qdsim/sensor.hpp"
#include "qdsim/tf_solver.hpp"
#include "qdsim/transport.hpp"

namespace qdsim {

/// Per-pixel diagnostic bits. A flagged pixel still carries a valid record.
enum PixelFlag : std::uint32_t {
  kPixelOk = 0,
  kNotConverged = 1u << 0,   // density solve hit max_iter
  kLabelError = 1u << 1,     // island count outside the 5-gate taxonomy
  kIndefiniteE = 1u << 2,    // inverse capacitance not positive definite
  kTransportError = 1u << 3, // Markov chain could not be solved
};

inline constexpr std::size_t kChargeSlots = 2;

/// Simulated output at one plunger-voltage point. `charge` holds one entry per
/// island, or a single 0 for short-circuit and barrier states.
struct PixelRecord {
  std::vector<int> charge{0};
  double current = 0.0;
  std::vector<double> sensor;
  int state = 0;
  std::uint32_t flags = kPixelOk;

  bool operator==(const PixelRecord&) const = default;
};

struct PipelineOptions {
  SolverConfig solver{};
  double island_threshold = kDefaultIslandThreshold;
};

/// Everything about a device that does not change across the voltage sweep.
class PixelSimulator {
 public:
  explicit PixelSimulator(DeviceSpec device, PipelineOptions opt = {})
      : device_(std::move(device)), opt_(opt), coulomb_(device_.grid, device_.physics) {
    validate(device_);
    validate(opt_.solver);
  }

  const DeviceSpec& device() const { return device_; }

  /// Full chain for one pixel: potential, density, islands, charges, current,
  /// sensor and label.
  PixelRecord operator()(PlungerVoltages v) const {
    const auto& p = device_.physics;
    const auto& grid = device_.grid;
    PixelRecord rec;

    const auto potential = total_potential(device_, v);
    const auto density = solve_self_consistent(coulomb_, potential, p, opt_.solver);
    if (!density.converged) rec.flags |= kNotConverged;

    const auto gates = biased_gates(device_, v);
    const auto gate_only = [&] { return sensor_response({}, {}, gates, p).values; };

    const auto islands = segment_islands(density.n, opt_.island_threshold);
    StateLabel label;
    try {
      label = classify_state(islands, density.band_min, p);
    } catch (const NumericError&) {
      rec.flags |= kLabelError;
      rec.state = to_int(StateLabel::Barrier);
      rec.sensor = gate_only();
      return rec;
    }
    rec.state = to_int(label);

    if (label == StateLabel::ShortCircuit || label == StateLabel::Barrier) {
      rec.current = compute_current(label, MarkovChain{}, {}, density.band_min, grid, p);
      rec.sensor = gate_only();
      return rec;
    }

    IslandModel model;
    model.islands = islands;
    model.Z = induced_charges(grid, density.n, islands);
    model.E = inverse_capacitance(grid, density.n, islands, p);
    model.dot_positions = dot_positions(grid, density.n, islands);

    const auto ground = ground_state_charges(model);
    if (!ground.definite) rec.flags |= kIndefiniteE;
    rec.charge = ground.Q;
    rec.sensor = sensor_response(ground.Q, model.dot_positions, gates, p).values;

    try {
      const auto chain = build_markov_chain(ground, model, density.band_min, grid, p);
      const auto pi = stationary_distribution(chain);
      rec.current = compute_current(label, chain, pi, density.band_min, grid, p);
    } catch (const NumericError&) {
      rec.flags |= kTransportError;
      rec.current = 0.0;
    }
    return rec;
  }

 private:
  DeviceSpec device_;
  PipelineOptions opt_;
  CoulombOperator coulomb_;
};

}  // namespace qdsim
