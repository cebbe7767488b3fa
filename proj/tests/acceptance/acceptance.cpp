// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit status if
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qdsim/audit.hpp"
#include "qdsim/cli.hpp"
#include "qdsim/ensemble.hpp"
#include "qdsim/serialization.hpp"

using namespace qdsim;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  failures += !pass;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

DeviceSpec zero_bias(DeviceSpec d) {
  d.physics.bias = 0.0;
  d.physics.V_L = 0.0;
  d.physics.V_R = 0.0;
  return d;
}

void fixed_point() {
  std::mt19937_64 rng(20);
  std::uniform_real_distribution<double> volt(0.0, 400.0);
  double worst = 0.0, slowest = 0.0;
  bool all_converged = true;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const auto d = sample_device(mean_device(), derive_seed(20, k));
    const PlungerVoltages v{volt(rng), volt(rng)};
    const auto u = total_potential(d, v);
    const auto t0 = Clock::now();
    const auto r = solve_self_consistent(d.grid, u, d.physics);
    slowest = std::max(slowest, seconds_since(t0));
    all_converged = all_converged && r.converged;
    // Re-insert the density, with the interaction integral coded here.
    for (std::size_t i = 0; i < u.size(); ++i) {
      double coulomb = 0.0;
      for (std::size_t j = 0; j < u.size(); ++j) {
        const double w = (j == 0 || j + 1 == u.size()) ? 0.5 * d.grid.spacing() : d.grid.spacing();
        const double dx = d.grid[i] - d.grid[j];
        coulomb += w * d.physics.K0 / std::sqrt(dx * dx + d.physics.sigma * d.physics.sigma) * r.n[j];
      }
      const double band = d.physics.epsilon0 + 1e-3 * (u[i] + coulomb);
      const double a = -d.physics.beta * (band - d.physics.mu);
      const double n = d.physics.g0 / d.physics.beta * (a > 0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a)));
      worst = std::max(worst, std::abs(n - r.n[i]));
    }
  }
  report(all_converged && worst < 1e-10 && slowest < 1.0, "fixed-point correctness",
         fmt("20 pixels, max |n - F(n)| = %.3g /nm (< 1e-10), slowest solve %.3f s (< 1 s)", worst, slowest));
}

void fermi_integral() {
  double worst = 0.0;
  for (double g0 : {0.5, 1.0}) {
    PhysicsParams p;
    p.g0 = g0;
    for (int k = -400; k <= 400; ++k) {
      const double offset = 0.2 * k / 400.0;
      const double quad = oracle::fermi_integral(p.mu + offset, p.g0, p.beta, p.mu);
      worst = std::max(worst, std::abs(fermi_density(p.mu + offset, p) / quad - 1.0));
    }
  }
  report(worst < 1e-9, "analytic Fermi integral",
         fmt("max relative deviation from adaptive quadrature %.3g over [-0.2, 0.2] eV (< 1e-9)", worst));
}

void minimizer_oracle() {
  std::mt19937_64 rng(1000);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = 1 + static_cast<std::size_t>(t % 2);
    std::vector<std::vector<double>> E;
    if (t % 4 < 2) {
      E = oracle::random_spd(rng, k, 1.0 + 19.0 * u(rng));
    } else {
      // Strongly coupled positive-definite pairs: E = A^T A + small diagonal.
      std::vector<std::vector<double>> A(k, std::vector<double>(k));
      for (auto& row : A) {
        for (auto& x : row) x = 4.0 * (u(rng) - 0.5);
      }
      E.assign(k, std::vector<double>(k, 0.0));
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          for (std::size_t l = 0; l < k; ++l) E[i][j] += A[l][i] * A[l][j];
        }
        E[i][i] += 0.05 + u(rng);
      }
    }
    std::vector<double> z(k);
    for (auto& x : z) x = 10.0 * u(rng);
    Eigen::MatrixXd Em(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) Em(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = E[i][j];
    }
    const auto bf = oracle::brute_force_minimum(E, z, 15);
    mismatches += ground_state_charges(z, Em).Q != bf.q;
  }
  report(mismatches == 0, "charge-minimizer oracle",
         std::to_string(mismatches) + " mismatches on 1000 instances, k in {1, 2}, enumeration over [0, 15]^k");
}

struct ChainStats {
  std::size_t chains = 0;
  double worst_balance = 0.0;
  double worst_norm = 0.0;
};

void check_chain(const DeviceSpec& d, PlungerVoltages v, ChainStats& s) {
  const auto r = solve_self_consistent(d.grid, total_potential(d, v), d.physics);
  const auto islands = segment_islands(r.n);
  const auto label = classify_state(islands, r.band_min, d.physics);
  if (label != StateLabel::SingleDot && label != StateLabel::DoubleDot) return;
  const auto model = build_island_model(d.grid, r.n, d.physics);
  const auto chain = build_markov_chain(ground_state_charges(model), model, r.band_min, d.grid, d.physics);
  const auto pi = stationary_distribution(chain);
  const Eigen::Map<const Eigen::RowVectorXd> row(pi.data(), static_cast<Eigen::Index>(pi.size()));
  s.worst_balance = std::max(s.worst_balance, (row * chain.generator).cwiseAbs().maxCoeff());
  double sum = 0.0;
  for (double x : pi) sum += x;
  s.worst_norm = std::max(s.worst_norm, std::abs(sum - 1.0));
  ++s.chains;
}

void markov_steady_state() {
  ChainStats stats;
  // Every chain of a 40 x 40 mean-device sweep.
  const auto mean = mean_device();
  const auto volts = linspace(0.0, 400.0, 40);
  for (double v1 : volts) {
    for (double v2 : volts) check_chain(mean, {v1, v2}, stats);
  }
  // 100 pixels on sampled devices, at the stored bias and at zero bias.
  std::mt19937_64 rng(100);
  std::uniform_real_distribution<double> volt(0.0, 400.0);
  double worst_zero_bias = 0.0;
  std::size_t dot_pixels = 0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const auto d = sample_device(mean, derive_seed(100, k));
    const PlungerVoltages v{volt(rng), volt(rng)};
    check_chain(d, v, stats);
    const auto rec = PixelSimulator(zero_bias(d))(v);
    dot_pixels += rec.state == 1 || rec.state == 2;
    worst_zero_bias = std::max(worst_zero_bias, std::abs(rec.current));
  }
  report(stats.worst_balance < 1e-10 && stats.worst_norm < 1e-12 && worst_zero_bias < 1e-12, "Markov steady state",
         fmt("%g chains: max |pi G| = %.3g (< 1e-10), max |sum pi - 1| = %.3g (< 1e-12); ",
             static_cast<double>(stats.chains), stats.worst_balance, stats.worst_norm) +
             fmt("zero-bias |I| max %.3g over 100 pixels (%g in dot states) (< 1e-12)", worst_zero_bias,
                 static_cast<double>(dot_pixels)));
}

DeviceMap mean_map_checks() {
  SweepOptions opt;
  opt.grid_size = 100;
  const auto t0 = Clock::now();
  const auto map = sweep_map(mean_device(), opt);
  const double elapsed = seconds_since(t0);
  const auto [lo, hi] = charge_bounds(map);
  const auto c = label_counts(map);
  std::set<int> labels;
  std::size_t flagged = 0;
  for (const auto& r : map.records) {
    labels.insert(r.state);
    flagged += r.flags != kPixelOk;
  }
  const bool has_labels = labels.count(0) && labels.count(1) && labels.count(2);
  std::ostringstream d;
  d << "100x100 mean device: charges in [" << lo << ", " << hi << "], labels SC " << c[0] << " QPC " << c[1] << " SD "
    << c[2] << " DD " << c[3] << ", " << flagged << " flagged pixels, " << fmt("%.1f s (< 600 s)", elapsed);
  report(lo >= 0 && hi <= 10 && has_labels && c[3] > c[2] && elapsed < 600.0, "few-electron regime", d.str());
  return map;
}

void sensor_consistency(const DeviceMap& map) {
  const auto s0 = sensor_charge_consistency(map, 0);
  const auto s1 = sensor_charge_consistency(map, 1);
  std::ostringstream d;
  d << s0.covered << "/" << s0.transition_pixels << " = " << fmt("%.4f", s0.fraction())
    << " of charge-transition pixels within 1 pixel of the top-decile gradient (>= 0.9); second sensor "
    << fmt("%.4f", s1.fraction());
  report(s0.fraction() >= 0.9 && s1.fraction() >= 0.9, "sensor/charge consistency", d.str());
}

std::vector<fs::path> determinism(const fs::path& root) {
  std::vector<fs::path> dirs;
  std::vector<std::string> problems;
  for (const char* workers : {"1", "4"}) {
    for (int rep = 0; rep < 2; ++rep) {
      const auto dir = root / (std::string("w") + workers + "_" + std::to_string(rep));
      fs::remove_all(dir);
      std::ostringstream out, err;
      const int code = cli::run({"ensemble", "--count", "3", "--seed", "1", "--workers", workers, "--out", dir.string()},
                                out, err);
      if (code != 0) problems.push_back("exit " + std::to_string(code) + ": " + err.str());
      dirs.push_back(dir);
    }
  }
  const std::vector<std::string> names{"device_0000.json", "device_0001.json", "device_0002.json", "manifest.json"};
  std::size_t compared = 0;
  for (const auto& name : names) {
    std::string first;
    try {
      first = read_text(dirs[0] / name);
    } catch (const IoError& e) {
      problems.push_back(e.what());
      continue;
    }
    for (std::size_t k = 1; k < dirs.size(); ++k) {
      std::string other;
      try {
        other = read_text(dirs[k] / name);
      } catch (const IoError& e) {
        problems.push_back(e.what());
        continue;
      }
      ++compared;
      if (other != first) problems.push_back(name + " differs in " + dirs[k].filename().string());
    }
  }
  for (const auto& dir : dirs) {
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
    if (files != names.size()) problems.push_back(dir.filename().string() + " holds " + std::to_string(files) + " files");
  }
  std::string detail = "`ensemble --count 3 --seed 1` x2 with --workers 1 and 4: " + std::to_string(compared) +
                       " file comparisons against the first set";
  if (!problems.empty()) detail += "; " + problems.front();
  report(problems.empty(), "determinism", detail);
  return dirs;
}

void schema_round_trip(const DeviceMap& mean_map, const fs::path& ensemble_dir) {
  std::vector<DeviceMap> maps{mean_map};
  for (const char* name : {"device_0000.json", "device_0001.json", "device_0002.json"}) {
    maps.push_back(read_map(ensemble_dir / name));
  }
  SweepOptions opt;
  opt.grid_size = 20;
  for (std::uint64_t k = 0; maps.size() < 10; ++k) maps.push_back(sweep_map(sample_device(mean_device(), 500 + k), opt));

  std::size_t identical = 0, length_ok = 0;
  for (const auto& m : maps) {
    const auto text = serialize(m);
    const auto back = deserialize(text);
    identical += back == m && serialize(back) == text;
    const auto j = nlohmann::json::parse(text);
    const std::size_t n = m.size();
    bool ok = j["output"]["state"].size() == n * n && j["output"]["current"].size() == n * n;
    for (const auto& col : j["output"]["charge"]) ok = ok && col.size() == n * n;
    for (const auto& col : j["output"]["sensor"]) ok = ok && col.size() == n * n;
    length_ok += ok;
  }
  const std::size_t default_len = nlohmann::json::parse(serialize(mean_map))["output"]["state"].size();
  std::ostringstream d;
  d << identical << "/10 maps identical after serialize/deserialize, " << length_ok
    << "/10 with output length grid^2; 100x100 map output length " << default_len;
  report(identical == 10 && length_ok == 10 && default_len == 10000, "schema round-trip", d.str());
}

}  // namespace

int main() {
  const auto root = fs::temp_directory_path() / "qdsim_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);

  fixed_point();
  fermi_integral();
  minimizer_oracle();
  markov_steady_state();
  const auto map = mean_map_checks();
  sensor_consistency(map);
  const auto dirs = determinism(root);
  schema_round_trip(map, dirs.front());

  std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
