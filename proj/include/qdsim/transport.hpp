#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qdsim/device_model.hpp"
#include "qdsim/error.hpp"
#include "qdsim/grid.hpp"
#include "qdsim/islands.hpp"

namespace qdsim {

enum class StateLabel : int {
  ShortCircuit = -1,
  Barrier = 0,
  SingleDot = 1,
  DoubleDot = 2,
};

inline int to_int(StateLabel s) { return static_cast<int>(s); }

inline StateLabel state_from_int(int v) {
  if (v < -1 || v > 2) throw SchemaError("state label out of range: " + std::to_string(v));
  return static_cast<StateLabel>(v);
}

/// Index of a label in the [SC, QPC, SD, DD] ordering.
inline std::size_t class_index(StateLabel s) { return static_cast<std::size_t>(to_int(s) + 1); }

/// Device state from the islands and the converged band minimum. Short
/// circuit when the band lies below mu everywhere; otherwise the island
/// count. Throws NumericError for three or more islands.
inline StateLabel classify_state(std::span<const IslandRange> islands, std::span<const double> band_min,
                                 const PhysicsParams& p) {
  double top = -HUGE_VAL;
  for (double e : band_min) top = std::max(top, e);
  if (top < p.mu) return StateLabel::ShortCircuit;
  switch (islands.size()) {
    case 0: return StateLabel::Barrier;
    case 1: return StateLabel::SingleDot;
    case 2: return StateLabel::DoubleDot;
    default: throw NumericError("classify_state: " + std::to_string(islands.size()) + " islands in a 5-gate device");
  }
}

/// WKB tunnel rate through a band-minimum segment (eV) sampled with the
/// given spacing (nm):
///   attempt_rate_coef * exp(-WKB_coeff * int sqrt(max(0, e - mu)) dx).
inline double wkb_rate(std::span<const double> segment, double spacing, const PhysicsParams& p) {
  double action = 0.0;
  for (std::size_t i = 0; i + 1 < segment.size(); ++i) {
    const double a = std::sqrt(std::max(0.0, segment[i] - p.mu));
    const double b = std::sqrt(std::max(0.0, segment[i + 1] - p.mu));
    action += 0.5 * spacing * (a + b);
  }
  return p.attempt_rate_coef * std::exp(-p.WKB_coeff * action);
}

/// Tunnel rates of the k + 1 barriers of a k-island channel, left to right:
/// left lead | island 0 | ... | island k-1 | right lead.
inline std::vector<double> barrier_rates(std::span<const IslandRange> islands, std::span<const double> band_min,
                                         const Grid& grid, const PhysicsParams& p) {
  std::vector<double> rates;
  if (islands.empty()) return rates;
  auto segment = [&](std::size_t first, std::size_t last) {
    return wkb_rate(band_min.subspan(first, last - first + 1), grid.spacing(), p);
  };
  rates.push_back(segment(0, islands.front().first));
  for (std::size_t i = 0; i + 1 < islands.size(); ++i) rates.push_back(segment(islands[i].last, islands[i + 1].first));
  rates.push_back(segment(islands.back().last, band_min.size() - 1));
  return rates;
}

/// Thermal acceptance factor 1 / (1 + exp(dE / kT)).
inline double thermal_factor(double dE, double kT) {
  const double x = dE / kT;
  if (x > 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

struct Transition {
  std::size_t from = 0;
  std::size_t to = 0;
  std::size_t barrier = 0;  // 0 = left contact, k = right contact
  int direction = +1;       // +1: one electron crosses the barrier left to right
  double rate = 0.0;
};

struct MarkovChain {
  std::vector<std::vector<int>> states;
  Eigen::MatrixXd generator;  // generator(a, b) = total rate a -> b, rows sum to 0
  std::vector<Transition> transitions;
  std::size_t barrier_count = 0;
};

/// Sequential-tunnelling chain over charge vectors within +-1 of the ground
/// state. Electrons hop between neighbouring islands or between an edge
/// island and its lead. Rates are Gamma_barrier * f(dE) where dE is the
/// charging-energy change (meV) plus the lead chemical-potential offset
/// (mu_L = V_L, mu_R = V_R in eV).
inline MarkovChain build_markov_chain(const ChargeState& ground, const IslandModel& model,
                                      std::span<const double> gammas, const PhysicsParams& p) {
  const std::size_t k = ground.Q.size();
  if (k == 0) throw ConfigError("build_markov_chain: no islands");
  if (gammas.size() != k + 1 || model.Z.size() != k) throw ConfigError("build_markov_chain: dimension mismatch");

  MarkovChain chain;
  chain.barrier_count = k + 1;

  std::vector<int> lo(k), hi(k);
  for (std::size_t i = 0; i < k; ++i) {
    lo[i] = std::max(0, ground.Q[i] - 1);
    hi[i] = ground.Q[i] + 1;
  }
  std::map<std::vector<int>, std::size_t> index;
  std::vector<int> q = lo;
  while (true) {
    index.emplace(q, chain.states.size());
    chain.states.push_back(q);
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

  std::vector<double> energy;
  energy.reserve(chain.states.size());
  for (const auto& s : chain.states) energy.push_back(charging_energy(std::span<const int>(s), model));

  const double mu_left = 1e3 * p.V_L;   // meV
  const double mu_right = 1e3 * p.V_R;  // meV
  const double kT = 1e3 * p.kT;         // meV

  const auto n = static_cast<Eigen::Index>(chain.states.size());
  chain.generator = Eigen::MatrixXd::Zero(n, n);

  auto add = [&](std::size_t from, const std::vector<int>& target, std::size_t barrier, int direction,
                 double lead_offset) {
    auto it = index.find(target);
    if (it == index.end()) return;
    const std::size_t to = it->second;
    const double dE = energy[to] - energy[from] + lead_offset;
    const double rate = gammas[barrier] * thermal_factor(dE, kT);
    chain.transitions.push_back({from, to, barrier, direction, rate});
    chain.generator(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to)) += rate;
  };

  for (std::size_t s = 0; s < chain.states.size(); ++s) {
    const auto& cur = chain.states[s];
    auto shifted = [&](std::size_t i, int delta) {
      auto t = cur;
      t[i] += delta;
      return t;
    };
    // left lead <-> island 0
    add(s, shifted(0, +1), 0, +1, -mu_left);
    if (cur[0] > 0) add(s, shifted(0, -1), 0, -1, +mu_left);
    // island i-1 <-> island i
    for (std::size_t b = 1; b < k; ++b) {
      if (cur[b - 1] > 0) {
        auto t = cur;
        --t[b - 1];
        ++t[b];
        add(s, t, b, +1, 0.0);
      }
      if (cur[b] > 0) {
        auto t = cur;
        ++t[b - 1];
        --t[b];
        add(s, t, b, -1, 0.0);
      }
    }
    // island k-1 <-> right lead
    if (cur[k - 1] > 0) add(s, shifted(k - 1, -1), k, +1, +mu_right);
    add(s, shifted(k - 1, +1), k, -1, -mu_right);
  }

  for (Eigen::Index a = 0; a < n; ++a) chain.generator(a, a) = -chain.generator.row(a).sum();
  return chain;
}

inline MarkovChain build_markov_chain(const ChargeState& ground, const IslandModel& model,
                                      std::span<const double> band_min, const Grid& grid, const PhysicsParams& p) {
  const auto gammas = barrier_rates(model.islands, band_min, grid, p);
  return build_markov_chain(ground, model, gammas, p);
}

/// Stationary distribution pi of the chain: pi G = 0, sum(pi) = 1, solved with
/// one balance equation replaced by the normalisation row.
inline std::vector<double> stationary_distribution(const MarkovChain& chain) {
  const Eigen::Index n = chain.generator.rows();
  if (n == 0 || chain.generator.cols() != n) throw NumericError("stationary_distribution: empty chain");
  Eigen::MatrixXd A = chain.generator.transpose();
  A.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) throw NumericError("stationary_distribution: singular or reducible chain");
  Eigen::VectorXd pi = lu.solve(rhs);
  std::vector<double> out(pi.data(), pi.data() + n);
  for (double& v : out) {
    if (v < 0.0 && v > -1e-13) v = 0.0;
    if (!(v >= 0.0)) throw NumericError("stationary_distribution: negative probability");
  }
  return out;
}

/// Net rate at which electrons cross `barrier` left to right in steady state.
inline double barrier_current(const MarkovChain& chain, std::span<const double> pi, std::size_t barrier) {
  double current = 0.0;
  for (const auto& t : chain.transitions) {
    if (t.barrier == barrier) current += pi[t.from] * t.rate * t.direction;
  }
  return current;
}

inline double left_contact_current(const MarkovChain& chain, std::span<const double> pi) {
  return barrier_current(chain, pi, 0);
}

inline double right_contact_current(const MarkovChain& chain, std::span<const double> pi) {
  return barrier_current(chain, pi, chain.barrier_count - 1);
}

inline double sign_of(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

/// Device current for one pixel. Short circuit and barrier states carry
/// fixed scales with the sign of the bias; dot states use the net probability
/// current through the left contact.
inline double compute_current(StateLabel label, const MarkovChain& chain, std::span<const double> pi,
                              std::span<const double> band_min, const Grid& grid, const PhysicsParams& p) {
  switch (label) {
    case StateLabel::ShortCircuit:
      return sign_of(p.bias) * p.short_circuit_current;
    case StateLabel::Barrier:
      return sign_of(p.bias) * p.barrier_current * p.barrier_tunnel_rate * wkb_rate(band_min, grid.spacing(), p);
    default:
      return left_contact_current(chain, pi);
  }
}

}  // namespace qdsim
