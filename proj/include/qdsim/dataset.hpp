#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "qdsim/device_model.hpp"
#include "qdsim/error.hpp"
#include "qdsim/pipeline.hpp"

namespace qdsim {

inline constexpr const char* kMapType =
    "5-gate quantum dot device: current, charge, sensor and state over (V_P1, V_P2)";

/// One simulated device over a square plunger-voltage grid. Records are
/// row-major with V_P1 as the outer index: records[i1 * N + i2].
struct DeviceMap {
  std::string type = kMapType;
  std::vector<double> V_P1_vec;  // V
  std::vector<double> V_P2_vec;  // V
  std::vector<PixelRecord> records;
  DeviceSpec device;

  std::size_t size() const { return V_P1_vec.size(); }
  const PixelRecord& at(std::size_t i1, std::size_t i2) const { return records[i1 * V_P2_vec.size() + i2]; }

  bool operator==(const DeviceMap&) const = default;
};

struct VoltageRange {
  double min = 0.0;  // V
  double max = 0.4;  // V
};

struct SweepOptions {
  std::size_t grid_size = 100;
  VoltageRange range{};
  unsigned workers = 1;
  PipelineOptions pipeline{};
};

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = (i + 1 == n) ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return v;
}

/// Runs `fn(i)` for i in [0, count) on up to `workers` threads. Each index is
/// processed exactly once; results must be written to per-index slots.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Simulates every pixel of the plunger sweep. Output does not depend on the
/// worker count.
inline DeviceMap sweep_map(const DeviceSpec& device, const SweepOptions& opt = {}) {
  if (opt.grid_size < 2) throw ConfigError("sweep_map: grid size must be at least 2");
  if (!(opt.range.max > opt.range.min)) throw ConfigError("sweep_map: empty voltage range");
  const PixelSimulator sim(device, opt.pipeline);

  DeviceMap map;
  map.device = device;
  map.V_P1_vec = linspace(opt.range.min, opt.range.max, opt.grid_size);
  map.V_P2_vec = map.V_P1_vec;
  const std::size_t n = opt.grid_size;
  map.records.resize(n * n);
  parallel_for(n * n, opt.workers, [&](std::size_t idx) {
    const PlungerVoltages v{1e3 * map.V_P1_vec[idx / n], 1e3 * map.V_P2_vec[idx % n]};
    map.records[idx] = sim(v);
  });
  return map;
}

enum class Channel { Current, SensorGradient };

inline std::string to_string(Channel c) { return c == Channel::Current ? "current" : "sensor"; }

inline Channel channel_from_string(const std::string& s) {
  if (s == "current") return Channel::Current;
  if (s == "sensor") return Channel::SensorGradient;
  throw ConfigError("unknown channel '" + s + "' (expected current or sensor)");
}

/// |grad g_s| over the (V_P1, V_P2) plane for one sensor: central differences
/// in the interior, one-sided at the edges, in units of signal per volt.
inline std::vector<double> differential_conductance(const DeviceMap& map, std::size_t sensor_index) {
  const std::size_t n1 = map.V_P1_vec.size(), n2 = map.V_P2_vec.size();
  if (n1 < 2 || n2 < 2) throw ConfigError("differential_conductance: map too small");
  for (const auto& r : map.records) {
    if (sensor_index >= r.sensor.size()) throw ConfigError("differential_conductance: sensor index out of range");
  }
  auto g = [&](std::size_t i1, std::size_t i2) { return map.records[i1 * n2 + i2].sensor[sensor_index]; };
  auto diff = [](auto&& f, const std::vector<double>& v, std::size_t i, std::size_t n) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == n ? i : i + 1;
    return (f(hi) - f(lo)) / (v[hi] - v[lo]);
  };
  std::vector<double> out(n1 * n2);
  for (std::size_t i1 = 0; i1 < n1; ++i1) {
    for (std::size_t i2 = 0; i2 < n2; ++i2) {
      const double d1 = diff([&](std::size_t k) { return g(k, i2); }, map.V_P1_vec, i1, n1);
      const double d2 = diff([&](std::size_t k) { return g(i1, k); }, map.V_P2_vec, i2, n2);
      out[i1 * n2 + i2] = std::hypot(d1, d2);
    }
  }
  return out;
}

inline std::vector<double> channel_values(const DeviceMap& map, Channel channel, std::size_t sensor_index = 0) {
  if (channel == Channel::SensorGradient) return differential_conductance(map, sensor_index);
  std::vector<double> v;
  v.reserve(map.records.size());
  for (const auto& r : map.records) v.push_back(r.current);
  return v;
}

/// Labelled sub-image. Fractions are ordered [SC, QPC, SD, DD].
struct Patch {
  std::size_t size = 0;
  std::size_t row = 0;  // V_P1 offset
  std::size_t col = 0;  // V_P2 offset
  std::vector<double> pixels;
  std::array<double, 4> fractions{};
  StateLabel majority_label = StateLabel::Barrier;

  bool operator==(const Patch&) const = default;
};

/// Patch cut from a state grid at a given offset (exposed for tests).
inline Patch make_patch(std::span<const double> values, std::span<const int> states, std::size_t n, std::size_t size,
                        std::size_t row, std::size_t col) {
  if (size == 0 || size > n || row + size > n || col + size > n) throw ConfigError("patch: out of bounds");
  Patch p;
  p.size = size;
  p.row = row;
  p.col = col;
  p.pixels.reserve(size * size);
  std::array<std::size_t, 4> counts{};
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      const std::size_t idx = (row + r) * n + (col + c);
      p.pixels.push_back(values[idx]);
      ++counts[class_index(state_from_int(states[idx]))];
    }
  }
  const double total = static_cast<double>(size * size);
  std::size_t best = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    p.fractions[c] = static_cast<double>(counts[c]) / total;
    if (counts[c] > counts[best]) best = c;
  }
  p.majority_label = static_cast<StateLabel>(static_cast<int>(best) - 1);
  return p;
}

/// `count` patches at uniformly random top-left offsets.
inline std::vector<Patch> sample_patches(const DeviceMap& map, Channel channel, std::size_t size, std::size_t count,
                                         std::uint64_t seed, std::size_t sensor_index = 0) {
  const std::size_t n = map.size();
  if (size == 0 || size > n) throw ConfigError("sample_patches: patch size exceeds map size");
  const auto values = channel_values(map, channel, sensor_index);
  std::vector<int> states;
  states.reserve(map.records.size());
  for (const auto& r : map.records) states.push_back(r.state);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> offset(0, n - size);
  std::vector<Patch> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t row = offset(rng);
    const std::size_t col = offset(rng);
    out.push_back(make_patch(values, states, n, size, row, col));
  }
  return out;
}

/// splitmix64 finaliser.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Seed of item `index` in a run seeded with `seed`:
/// splitmix64(splitmix64(seed) ^ index).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) { return splitmix64(splitmix64(seed) ^ index); }

}  // namespace qdsim
