#pragma once

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qdsim/device_model.hpp"
#include "qdsim/error.hpp"

// Plain-text device configuration:
//
//   # comment
//   K_0 = 10
//   gates.mean = -40, -20, 0, 20, 40
//   sensors = (-20, 50), (20, 50)
//
// Keys use the names of the stored parameter dictionary. gates.{alpha,h,rho,
// screen} take one value (shared) or five. Unlisted keys keep the values of
// mean_device().

namespace qdsim {

namespace config_detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<double> numbers(const std::string& key, std::string_view text) {
  std::vector<double> out;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    double v = 0.0;
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw ConfigError("config: bad number '" + token + "' for key " + key);
    out.push_back(v);
    token.clear();
  };
  for (char c : text) {
    if (c == ',' || c == '(' || c == ')' || c == '[' || c == ']' || std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      token.push_back(c);
    }
  }
  flush();
  if (out.empty()) throw ConfigError("config: key " + key + " has no value");
  return out;
}

inline double scalar(const std::string& key, std::string_view text) {
  const auto v = numbers(key, text);
  if (v.size() != 1) throw ConfigError("config: key " + key + " expects one value");
  return v[0];
}

inline void per_gate(DeviceSpec& d, const std::string& key, std::string_view text, double GateSpec::*field,
                     bool allow_shared) {
  const auto v = numbers(key, text);
  if (allow_shared && v.size() == 1) {
    for (auto& g : d.gates) g.*field = v[0];
  } else if (v.size() == kGateCount) {
    for (std::size_t i = 0; i < kGateCount; ++i) d.gates[i].*field = v[i];
  } else {
    throw ConfigError("config: key " + key + " expects " + (allow_shared ? "1 or " : "") + "5 values");
  }
}

}  // namespace config_detail

/// Parses configuration text on top of `base`. Throws ConfigError on unknown
/// keys, malformed values or a resulting device that fails validation.
inline DeviceSpec parse_device_config(std::string_view text, DeviceSpec base = mean_device()) {
  using namespace config_detail;
  DeviceSpec d = std::move(base);
  auto& p = d.physics;
  std::optional<double> bias, v_l, v_r, x_min, x_max, dx;

  const std::map<std::string, double*> scalars{
      {"K_0", &p.K0},
      {"sigma", &p.sigma},
      {"g_0", &p.g0},
      {"c_k", &p.c_k},
      {"beta", &p.beta},
      {"kT", &p.kT},
      {"mu", &p.mu},
      {"WKB_coeff", &p.WKB_coeff},
      {"attempt_rate_coef", &p.attempt_rate_coef},
      {"barrier_tunnel_rate", &p.barrier_tunnel_rate},
      {"barrier_current", &p.barrier_current},
      {"short_circuit_current", &p.short_circuit_current},
      {"sensor_gate_coeff", &p.sensor_gate_coeff},
      {"epsilon0", &p.epsilon0},
  };

  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("config: line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));

    if (auto it = scalars.find(key); it != scalars.end()) {
      *it->second = scalar(key, value);
    } else if (key == "bias") {
      bias = scalar(key, value);
    } else if (key == "V_L") {
      v_l = scalar(key, value);
    } else if (key == "V_R") {
      v_r = scalar(key, value);
    } else if (key == "x_min") {
      x_min = scalar(key, value);
    } else if (key == "x_max") {
      x_max = scalar(key, value);
    } else if (key == "dx") {
      dx = scalar(key, value);
    } else if (key == "sensors") {
      const auto v = numbers(key, value);
      if (v.size() % 2 != 0) throw ConfigError("config: sensors expects (x, y) pairs");
      p.sensors.clear();
      for (std::size_t i = 0; i < v.size(); i += 2) p.sensors.push_back({v[i], v[i + 1]});
    } else if (key == "gates.alpha") {
      per_gate(d, key, value, &GateSpec::alpha, true);
    } else if (key == "gates.h") {
      per_gate(d, key, value, &GateSpec::h, true);
    } else if (key == "gates.rho") {
      per_gate(d, key, value, &GateSpec::r0, true);
    } else if (key == "gates.screen") {
      per_gate(d, key, value, &GateSpec::screen, true);
    } else if (key == "gates.mean") {
      per_gate(d, key, value, &GateSpec::x0, false);
    } else if (key == "gates.peak") {
      per_gate(d, key, value, &GateSpec::peak, false);
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }

  if (v_l || v_r) {
    p.V_L = v_l.value_or(p.V_L);
    p.V_R = v_r.value_or(p.V_R);
    p.bias = bias.value_or(p.V_L - p.V_R);
  } else if (bias) {
    p.bias = *bias;
    p.V_L = *bias / 2.0;
    p.V_R = -*bias / 2.0;
  }
  if (x_min || x_max || dx) {
    d.grid = Grid(x_min.value_or(d.grid.front()), x_max.value_or(d.grid.back()), dx.value_or(d.grid.spacing()));
  }
  validate(d);
  return d;
}

inline DeviceSpec load_device_config(const std::string& path, DeviceSpec base = mean_device()) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_device_config(ss.str(), std::move(base));
}

}  // namespace qdsim
