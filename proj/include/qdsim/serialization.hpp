#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "qdsim/dataset.hpp"
#include "qdsim/device_model.hpp"
#include "qdsim/error.hpp"

// Device map file (JSON, one device per file):
//
//   schema_version  integer, kSchemaVersion
//   type            string
//   V_P1_vec        [N] plunger 1 voltages (V)
//   V_P2_vec        [N] plunger 2 voltages (V)
//   output          columns of length N*N, row-major with V_P1 outer
//                   (index = i_P1 * N + i_P2):
//                     charge  [2][N*N] integer slots, unused slot = 0;
//                             tuple length is 2 for state 2, else 1
//                     current [N*N]
//                     sensor  [S][N*N], one column per sensor
//                     state   [N*N] in {-1, 0, 1, 2}
//                     flags   [N*N] pixel diagnostic bits
//   physics         parameter dictionary (K_0, sigma, g_0, ... , gates, x)
//
// Doubles are written in shortest round-trip form, so read(write(m)) == m.

namespace qdsim {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kPatchType = "labelled patches";

using json = nlohmann::json;

namespace serial_detail {

template <class T>
T get(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("bad value for key '") + key + "': " + e.what());
  }
}

inline json gate_field(const DeviceSpec& d, double GateSpec::*field) {
  json a = json::array();
  for (const auto& g : d.gates) a.push_back(g.*field);
  return a;
}

inline void read_gate_field(const json& gates, const char* key, DeviceSpec& d, double GateSpec::*field) {
  const auto v = get<std::vector<double>>(gates, key);
  if (v.size() != kGateCount) throw SchemaError(std::string("gates.") + key + " must have 5 entries");
  for (std::size_t i = 0; i < kGateCount; ++i) d.gates[i].*field = v[i];
}

}  // namespace serial_detail

/// Parameter dictionary of a device, keyed by the stored parameter names.
inline json physics_to_json(const DeviceSpec& d) {
  using serial_detail::gate_field;
  const auto& p = d.physics;
  json sensors = json::array();
  for (const auto& s : p.sensors) sensors.push_back({s.x, s.y});
  std::vector<double> x(d.grid.points().begin(), d.grid.points().end());
  return json{
      {"attempt_rate_coef", p.attempt_rate_coef},
      {"barrier_current", p.barrier_current},
      {"barrier_tunnel_rate", p.barrier_tunnel_rate},
      {"beta", p.beta},
      {"bias", p.bias},
      {"c_k", p.c_k},
      {"D", 2},
      {"g_0", p.g0},
      {"gates",
       {{"alpha", gate_field(d, &GateSpec::alpha)},
        {"h", gate_field(d, &GateSpec::h)},
        {"mean", gate_field(d, &GateSpec::x0)},
        {"peak", gate_field(d, &GateSpec::peak)},
        {"rho", gate_field(d, &GateSpec::r0)},
        {"screen", gate_field(d, &GateSpec::screen)}}},
      {"K_0", p.K0},
      {"kT", p.kT},
      {"mu", p.mu},
      {"sensor_gate_coeff", p.sensor_gate_coeff},
      {"sensors", sensors},
      {"short_circuit_current", p.short_circuit_current},
      {"sigma", p.sigma},
      {"V_L", p.V_L},
      {"V_R", p.V_R},
      {"WKB_coeff", p.WKB_coeff},
      {"epsilon0", p.epsilon0},
      {"dx", d.grid.spacing()},
      {"x", x},
  };
}

inline DeviceSpec physics_from_json(const json& j) {
  using serial_detail::get;
  using serial_detail::read_gate_field;
  DeviceSpec d;
  auto& p = d.physics;
  p.attempt_rate_coef = get<double>(j, "attempt_rate_coef");
  p.barrier_current = get<double>(j, "barrier_current");
  p.barrier_tunnel_rate = get<double>(j, "barrier_tunnel_rate");
  p.beta = get<double>(j, "beta");
  p.bias = get<double>(j, "bias");
  p.c_k = get<double>(j, "c_k");
  p.g0 = get<double>(j, "g_0");
  p.K0 = get<double>(j, "K_0");
  p.kT = get<double>(j, "kT");
  p.mu = get<double>(j, "mu");
  p.sensor_gate_coeff = get<double>(j, "sensor_gate_coeff");
  p.short_circuit_current = get<double>(j, "short_circuit_current");
  p.sigma = get<double>(j, "sigma");
  p.V_L = get<double>(j, "V_L");
  p.V_R = get<double>(j, "V_R");
  p.WKB_coeff = get<double>(j, "WKB_coeff");
  p.epsilon0 = get<double>(j, "epsilon0");
  p.sensors.clear();
  for (const auto& s : get<std::vector<std::vector<double>>>(j, "sensors")) {
    if (s.size() != 2) throw SchemaError("sensors entries must be (x, y) pairs");
    p.sensors.push_back({s[0], s[1]});
  }
  const auto gates = get<json>(j, "gates");
  read_gate_field(gates, "alpha", d, &GateSpec::alpha);
  read_gate_field(gates, "h", d, &GateSpec::h);
  read_gate_field(gates, "mean", d, &GateSpec::x0);
  read_gate_field(gates, "peak", d, &GateSpec::peak);
  read_gate_field(gates, "rho", d, &GateSpec::r0);
  read_gate_field(gates, "screen", d, &GateSpec::screen);

  const auto x = get<std::vector<double>>(j, "x");
  if (x.size() < 2) throw SchemaError("physics.x too short");
  try {
    d.grid = Grid(x.front(), x.back(), get<double>(j, "dx"));
  } catch (const ConfigError& e) {
    throw SchemaError(std::string("physics grid: ") + e.what());
  }
  if (!std::equal(x.begin(), x.end(), d.grid.points().begin(), d.grid.points().end())) {
    throw SchemaError("physics.x is not the uniform grid described by dx");
  }
  return d;
}

inline json map_to_json(const DeviceMap& m) {
  const std::size_t count = m.records.size();
  const std::size_t sensors = count ? m.records.front().sensor.size() : 0;
  std::vector<std::vector<int>> charge(kChargeSlots, std::vector<int>(count, 0));
  std::vector<std::vector<double>> sensor(sensors, std::vector<double>(count, 0.0));
  std::vector<double> current(count);
  std::vector<int> state(count);
  std::vector<std::uint32_t> flags(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& r = m.records[i];
    if (r.charge.size() > kChargeSlots) throw SchemaError("charge tuple longer than the storage slots");
    if (r.sensor.size() != sensors) throw SchemaError("inconsistent sensor count across pixels");
    for (std::size_t s = 0; s < r.charge.size(); ++s) charge[s][i] = r.charge[s];
    for (std::size_t s = 0; s < sensors; ++s) sensor[s][i] = r.sensor[s];
    current[i] = r.current;
    state[i] = r.state;
    flags[i] = r.flags;
  }
  return json{
      {"schema_version", kSchemaVersion},
      {"type", m.type},
      {"V_P1_vec", m.V_P1_vec},
      {"V_P2_vec", m.V_P2_vec},
      {"output",
       {{"order", "row-major, V_P1 outer: index = i_P1 * len(V_P2_vec) + i_P2"},
        {"charge", charge},
        {"current", current},
        {"sensor", sensor},
        {"state", state},
        {"flags", flags}}},
      {"physics", physics_to_json(m.device)},
  };
}

inline DeviceMap map_from_json(const json& j) {
  using serial_detail::get;
  if (get<int>(j, "schema_version") != kSchemaVersion) {
    throw SchemaError("unsupported schema_version " + std::to_string(get<int>(j, "schema_version")));
  }
  DeviceMap m;
  m.type = get<std::string>(j, "type");
  m.V_P1_vec = get<std::vector<double>>(j, "V_P1_vec");
  m.V_P2_vec = get<std::vector<double>>(j, "V_P2_vec");
  m.device = physics_from_json(get<json>(j, "physics"));

  const auto out = get<json>(j, "output");
  const std::size_t count = m.V_P1_vec.size() * m.V_P2_vec.size();
  const auto charge = get<std::vector<std::vector<int>>>(out, "charge");
  const auto current = get<std::vector<double>>(out, "current");
  const auto sensor = get<std::vector<std::vector<double>>>(out, "sensor");
  const auto state = get<std::vector<int>>(out, "state");
  const auto flags = get<std::vector<std::uint32_t>>(out, "flags");
  if (charge.size() != kChargeSlots) throw SchemaError("output.charge must have 2 slots");
  auto check = [&](std::size_t n, const char* what) {
    if (n != count) throw SchemaError(std::string("output.") + what + " length does not match the voltage grid");
  };
  for (const auto& c : charge) check(c.size(), "charge");
  for (const auto& s : sensor) check(s.size(), "sensor");
  check(current.size(), "current");
  check(state.size(), "state");
  check(flags.size(), "flags");

  m.records.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& r = m.records[i];
    r.state = to_int(state_from_int(state[i]));
    const std::size_t len = r.state == to_int(StateLabel::DoubleDot) ? 2 : 1;
    r.charge.assign(len, 0);
    for (std::size_t s = 0; s < len; ++s) r.charge[s] = charge[s][i];
    r.current = current[i];
    r.sensor.resize(sensor.size());
    for (std::size_t s = 0; s < sensor.size(); ++s) r.sensor[s] = sensor[s][i];
    r.flags = flags[i];
  }
  return m;
}

inline std::string serialize(const DeviceMap& m) { return map_to_json(m).dump(); }

inline DeviceMap deserialize(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("truncated or malformed map file: ") + e.what());
  }
  return map_from_json(j);
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  if (f.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  f.flush();
  if (!f) throw IoError("write failed: " + path.string());
}

inline void write_map(const std::filesystem::path& path, const DeviceMap& m) { write_text(path, serialize(m)); }

inline DeviceMap read_map(const std::filesystem::path& path) { return deserialize(read_text(path)); }

/// Patch container: flat pixel array plus per-patch fractions and labels.
///   pixels     [count * size * size], patch-major, row-major inside a patch
///   fractions  [count][4] over [SC, QPC, SD, DD]
///   label      [count] majority state in {-1, 0, 1, 2}
///   source     [count] index of the map file the patch came from
///   offset     [count][2] (V_P1 row, V_P2 column) of the top-left pixel
struct PatchSet {
  Channel channel = Channel::Current;
  std::size_t size = 0;
  std::vector<Patch> patches;
  std::vector<std::size_t> source;
  std::vector<std::string> files;
};

inline json patches_to_json(const PatchSet& set) {
  std::vector<double> pixels;
  std::vector<std::array<double, 4>> fractions;
  std::vector<int> labels;
  std::vector<std::array<std::size_t, 2>> offsets;
  for (const auto& p : set.patches) {
    if (p.size != set.size) throw SchemaError("patch size mismatch in patch set");
    pixels.insert(pixels.end(), p.pixels.begin(), p.pixels.end());
    fractions.push_back(p.fractions);
    labels.push_back(to_int(p.majority_label));
    offsets.push_back({p.row, p.col});
  }
  return json{
      {"schema_version", kSchemaVersion},
      {"type", kPatchType},
      {"channel", to_string(set.channel)},
      {"size", set.size},
      {"count", set.patches.size()},
      {"classes", {"SC", "QPC", "SD", "DD"}},
      {"pixels", pixels},
      {"fractions", fractions},
      {"label", labels},
      {"source", set.source},
      {"offset", offsets},
      {"files", set.files},
  };
}

inline PatchSet patches_from_json(const json& j) {
  using serial_detail::get;
  if (get<int>(j, "schema_version") != kSchemaVersion) throw SchemaError("unsupported patch schema_version");
  PatchSet set;
  set.channel = channel_from_string(get<std::string>(j, "channel"));
  set.size = get<std::size_t>(j, "size");
  const auto count = get<std::size_t>(j, "count");
  const auto pixels = get<std::vector<double>>(j, "pixels");
  const auto fractions = get<std::vector<std::array<double, 4>>>(j, "fractions");
  const auto labels = get<std::vector<int>>(j, "label");
  const auto offsets = get<std::vector<std::array<std::size_t, 2>>>(j, "offset");
  set.source = get<std::vector<std::size_t>>(j, "source");
  set.files = get<std::vector<std::string>>(j, "files");
  const std::size_t per = set.size * set.size;
  if (pixels.size() != count * per || fractions.size() != count || labels.size() != count ||
      offsets.size() != count || set.source.size() != count) {
    throw SchemaError("patch arrays disagree with count");
  }
  for (std::size_t i = 0; i < count; ++i) {
    Patch p;
    p.size = set.size;
    p.row = offsets[i][0];
    p.col = offsets[i][1];
    p.pixels.assign(pixels.begin() + static_cast<std::ptrdiff_t>(i * per),
                    pixels.begin() + static_cast<std::ptrdiff_t>((i + 1) * per));
    p.fractions = fractions[i];
    p.majority_label = state_from_int(labels[i]);
    set.patches.push_back(std::move(p));
  }
  return set;
}

}  // namespace qdsim
