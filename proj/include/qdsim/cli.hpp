#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qdsim/audit.hpp"
#include "qdsim/config.hpp"
#include "qdsim/dataset.hpp"
#include "qdsim/ensemble.hpp"
#include "qdsim/plot.hpp"
#include "qdsim/serialization.hpp"

namespace qdsim::cli {

inline constexpr const char* kConfigEnv = "QDSIM_CONFIG";

enum ExitCode : int {
  kOk = 0,
  kBadConfig = 1,
  kIoFailure = 2,
  kAuditFailed = 3,
  kInternal = 4,
};

/// Parsed command line, shared by all subcommands.
struct RunConfig {
  std::string command;
  std::string config_path;
  std::uint64_t seed = 0;
  bool mean = false;
  std::size_t grid = 100;
  std::size_t count = 10;
  std::size_t patch_size = 30;
  std::size_t patches_per_device = 10;
  std::string channel = "current";
  std::size_t sensor = 0;
  unsigned workers = 1;
  std::size_t scale = 4;
  std::string out;
  std::vector<std::string> inputs;

  void validate() const {
    if (grid < 2) throw ConfigError("--grid must be at least 2");
    if (count < 1) throw ConfigError("--count must be positive");
    if (patch_size < 1) throw ConfigError("--patch-size must be positive");
    if (patches_per_device < 1) throw ConfigError("--patches-per-device must be positive");
    if (workers < 1) throw ConfigError("--workers must be positive");
    if (scale < 1) throw ConfigError("--scale must be positive");
    channel_from_string(channel);
  }
};

/// The configured mean device: --config, else $QDSIM_CONFIG, else built-in.
inline DeviceSpec configured_mean(const RunConfig& rc) {
  std::string path = rc.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnv)) path = env;
  }
  return path.empty() ? mean_device() : load_device_config(path);
}

inline SweepOptions sweep_options(const RunConfig& rc) {
  SweepOptions opt;
  opt.grid_size = rc.grid;
  opt.workers = rc.workers;
  return opt;
}

/// Map files named on the command line. A directory contributes the files
/// listed in its manifest, in manifest order.
inline std::vector<std::filesystem::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<std::filesystem::path> files;
  for (const auto& in : inputs) {
    const std::filesystem::path p(in);
    if (std::filesystem::is_directory(p)) {
      const auto manifest = manifest_from_json(nlohmann::json::parse(read_text(p / kManifestName), nullptr, false));
      for (const auto& d : manifest.devices) files.push_back(p / d.file);
    } else {
      files.push_back(p);
    }
  }
  return files;
}

inline int simulate(const RunConfig& rc, std::ostream& out) {
  const auto mean = configured_mean(rc);
  const auto device = rc.mean ? mean : sample_device(mean, derive_seed(rc.seed, 0));
  const auto map = sweep_map(device, sweep_options(rc));
  write_map(rc.out, map);
  const auto c = label_counts(map);
  out << "wrote " << rc.out << " (" << rc.grid << "x" << rc.grid << "; SC " << c[0] << ", QPC " << c[1] << ", SD "
      << c[2] << ", DD " << c[3] << ")\n";
  return kOk;
}

inline int ensemble(const RunConfig& rc, std::ostream& out) {
  const auto manifest = generate_ensemble(configured_mean(rc), rc.count, rc.seed, rc.out, sweep_options(rc));
  const auto c = manifest.pooled_label_counts();
  out << "wrote " << manifest.devices.size() << " maps and " << kManifestName << " to " << rc.out << " (SC " << c[0]
      << ", QPC " << c[1] << ", SD " << c[2] << ", DD " << c[3] << ")\n";
  return kOk;
}

inline int patches(const RunConfig& rc, std::ostream& out) {
  const auto files = expand_inputs(rc.inputs);
  if (files.empty()) throw ConfigError("patches: no input maps");
  PatchSet set;
  set.channel = channel_from_string(rc.channel);
  set.size = rc.patch_size;
  for (std::size_t f = 0; f < files.size(); ++f) {
    const auto map = read_map(files[f]);
    if (rc.patch_size > map.size()) {
      throw ConfigError("--patch-size " + std::to_string(rc.patch_size) + " exceeds map size " +
                        std::to_string(map.size()) + " of " + files[f].string());
    }
    auto batch = sample_patches(map, set.channel, rc.patch_size, rc.patches_per_device, derive_seed(rc.seed, f),
                                rc.sensor);
    for (auto& p : batch) {
      set.patches.push_back(std::move(p));
      set.source.push_back(f);
    }
    set.files.push_back(files[f].filename().string());
  }
  write_text(rc.out, patches_to_json(set).dump() + "\n");
  out << "wrote " << set.patches.size() << " " << rc.channel << " patches to " << rc.out << "\n";
  return kOk;
}

inline int plot(const RunConfig& rc, std::ostream& out) {
  const std::filesystem::path input(rc.inputs.at(0));
  const auto map = read_map(input);
  for (const auto& path : plot_map(map, rc.out, input.stem().string(), rc.scale)) out << "wrote " << path.string() << "\n";
  return kOk;
}

/// Property audit of one map file. One line per check; exit code 3 when any
/// check fails.
inline int validate_map(const RunConfig& rc, std::ostream& out) {
  const auto map = read_map(rc.inputs.at(0));
  bool ok = true;
  auto line = [&](bool pass, const std::string& name, const std::string& detail) {
    ok = ok && pass;
    out << (pass ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
  };
  const std::size_t n = map.size();
  line(map.records.size() == n * n && map.V_P2_vec.size() == n, "output length",
       std::to_string(map.records.size()) + " records for " + std::to_string(n) + "x" + std::to_string(map.V_P2_vec.size()));

  const auto [lo, hi] = charge_bounds(map);
  line(lo >= 0 && hi <= 10, "charge range", "[" + std::to_string(lo) + ", " + std::to_string(hi) + "]");

  std::size_t bad_tuple = 0, flagged = 0;
  for (const auto& r : map.records) {
    const std::size_t want = r.state == 2 ? 2 : 1;
    bad_tuple += r.charge.size() != want;
    flagged += r.flags != kPixelOk;
  }
  line(bad_tuple == 0, "charge tuple length", std::to_string(bad_tuple) + " mismatched pixels");
  line(true, "flagged pixels", std::to_string(flagged));

  const auto c = label_counts(map);
  line(true, "label counts",
       "SC " + std::to_string(c[0]) + ", QPC " + std::to_string(c[1]) + ", SD " + std::to_string(c[2]) + ", DD " +
           std::to_string(c[3]));

  const auto mono = charge_monotonicity(map);
  line(mono.unconfined == 0, "charge monotonicity",
       std::to_string(mono.violations) + " decreases over " + std::to_string(mono.pairs) + " pairs, " +
           std::to_string(mono.unconfined) + " not confined to transition lines");

  if (rc.sensor < (map.records.empty() ? 0 : map.records.front().sensor.size())) {
    const auto cons = sensor_charge_consistency(map, rc.sensor);
    line(cons.fraction() >= 0.9, "sensor/charge consistency",
         std::to_string(cons.covered) + "/" + std::to_string(cons.transition_pixels) + " transition pixels near gradient peaks");
  } else {
    line(false, "sensor/charge consistency", "sensor index " + std::to_string(rc.sensor) + " out of range");
  }
  return ok ? kOk : kAuditFailed;
}

inline int dispatch(const RunConfig& rc, std::ostream& out) {
  rc.validate();
  if (rc.command == "simulate") return simulate(rc, out);
  if (rc.command == "ensemble") return ensemble(rc, out);
  if (rc.command == "patches") return patches(rc, out);
  if (rc.command == "plot") return plot(rc, out);
  if (rc.command == "validate") return validate_map(rc, out);
  throw ConfigError("unknown command '" + rc.command + "'");
}

/// Entry point. Exit codes: 0 success, 1 bad arguments or configuration,
/// 2 I/O or file-format failure, 3 failed audit, 4 numerical failure.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig rc;
  CLI::App app{"Quantum dot device simulator and dataset generator", "qdsim"};
  app.require_subcommand(1);

  auto add_device = [&](CLI::App* s) {
    s->add_option("--config", rc.config_path, std::string("Device config file (default: $") + kConfigEnv + ")");
    s->add_option("--grid", rc.grid, "Pixels per voltage axis")->capture_default_str();
    s->add_option("--workers", rc.workers, "Worker threads (never changes output)")->capture_default_str();
  };

  auto* sim = app.add_subcommand("simulate", "Simulate one device into a map file");
  add_device(sim);
  sim->add_option("--seed", rc.seed, "Device sampling seed")->capture_default_str();
  sim->add_flag("--mean", rc.mean, "Use the mean device instead of sampling one");
  sim->add_option("--out", rc.out, "Output map file")->required();

  auto* ens = app.add_subcommand("ensemble", "Simulate an ensemble of sampled devices");
  add_device(ens);
  ens->add_option("--count", rc.count, "Number of devices")->capture_default_str();
  ens->add_option("--seed", rc.seed, "Ensemble seed")->capture_default_str();
  ens->add_option("--out", rc.out, "Output directory")->required();

  auto* pat = app.add_subcommand("patches", "Sample labelled patches from map files");
  pat->add_option("inputs", rc.inputs, "Map files or ensemble directories")->required();
  pat->add_option("--patch-size", rc.patch_size, "Patch side in pixels")->capture_default_str();
  pat->add_option("--patches-per-device", rc.patches_per_device, "Patches per map")->capture_default_str();
  pat->add_option("--channel", rc.channel, "current or sensor")->check(CLI::IsMember({"current", "sensor"}))->capture_default_str();
  pat->add_option("--sensor", rc.sensor, "Sensor index for the sensor channel")->capture_default_str();
  pat->add_option("--seed", rc.seed, "Sampling seed")->capture_default_str();
  pat->add_option("--out", rc.out, "Output patch file")->required();

  auto* plt = app.add_subcommand("plot", "Render current, charge, sensor and state panels as PPM images");
  plt->add_option("input", rc.inputs, "Map file")->required()->expected(1);
  plt->add_option("--out", rc.out, "Output directory")->required();
  plt->add_option("--scale", rc.scale, "Screen pixels per map pixel")->capture_default_str();

  auto* val = app.add_subcommand("validate", "Run the property audit on a map file");
  val->add_option("input", rc.inputs, "Map file")->required()->expected(1);
  val->add_option("--sensor", rc.sensor, "Sensor index for the consistency check")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "qdsim: " << e.what() << "\n";
    return kBadConfig;
  }
  rc.command = app.get_subcommands().front()->get_name();

  try {
    return dispatch(rc, out);
  } catch (const ConfigError& e) {
    err << "qdsim: config error: " << e.what() << "\n";
    return kBadConfig;
  } catch (const IoError& e) {
    err << "qdsim: i/o error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const SchemaError& e) {
    err << "qdsim: bad file: " << e.what() << "\n";
    return kIoFailure;
  } catch (const std::exception& e) {
    err << "qdsim: " << e.what() << "\n";
    return kInternal;
  }
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<const char*> argv{"qdsim"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace qdsim::cli
