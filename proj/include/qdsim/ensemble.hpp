#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "qdsim/audit.hpp"
#include "qdsim/dataset.hpp"
#include "qdsim/device_model.hpp"
#include "qdsim/error.hpp"
#include "qdsim/serialization.hpp"

namespace qdsim {

inline constexpr const char* kManifestType = "device ensemble manifest";
inline constexpr const char* kManifestName = "manifest.json";

struct EnsembleEntry {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string file;  // relative to the output directory
  std::array<std::size_t, 4> label_counts{};  // [SC, QPC, SD, DD]
  int max_charge = 0;
  std::size_t flagged = 0;

  bool operator==(const EnsembleEntry&) const = default;
};

struct Manifest {
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::size_t grid_size = 0;
  VoltageRange range{};
  bool complete = false;
  std::vector<EnsembleEntry> devices;

  std::array<std::size_t, 4> pooled_label_counts() const {
    std::array<std::size_t, 4> c{};
    for (const auto& d : devices) {
      for (std::size_t k = 0; k < 4; ++k) c[k] += d.label_counts[k];
    }
    return c;
  }
};

inline std::string device_file_name(std::size_t index) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "device_%04zu.json", index);
  return buf;
}

inline nlohmann::json manifest_to_json(const Manifest& m) {
  nlohmann::json devices = nlohmann::json::array();
  for (const auto& d : m.devices) {
    devices.push_back({{"index", d.index},
                       {"seed", d.seed},
                       {"file", d.file},
                       {"label_counts", d.label_counts},
                       {"max_charge", d.max_charge},
                       {"flagged_pixels", d.flagged}});
  }
  return {
      {"schema_version", kSchemaVersion},
      {"type", kManifestType},
      {"seed", m.seed},
      {"count", m.count},
      {"grid_size", m.grid_size},
      {"voltage_range", {m.range.min, m.range.max}},
      {"complete", m.complete},
      {"seed_hash", "splitmix64(splitmix64(seed) ^ index)"},
      {"classes", {"SC", "QPC", "SD", "DD"}},
      {"label_counts", m.pooled_label_counts()},
      {"devices", devices},
  };
}

inline Manifest manifest_from_json(const nlohmann::json& j) {
  using serial_detail::get;
  if (get<int>(j, "schema_version") != kSchemaVersion) throw SchemaError("unsupported manifest schema_version");
  Manifest m;
  m.seed = get<std::uint64_t>(j, "seed");
  m.count = get<std::size_t>(j, "count");
  m.grid_size = get<std::size_t>(j, "grid_size");
  const auto range = get<std::array<double, 2>>(j, "voltage_range");
  m.range = {range[0], range[1]};
  m.complete = get<bool>(j, "complete");
  for (const auto& d : get<nlohmann::json>(j, "devices")) {
    EnsembleEntry e;
    e.index = get<std::size_t>(d, "index");
    e.seed = get<std::uint64_t>(d, "seed");
    e.file = get<std::string>(d, "file");
    e.label_counts = get<std::array<std::size_t, 4>>(d, "label_counts");
    e.max_charge = get<int>(d, "max_charge");
    e.flagged = get<std::size_t>(d, "flagged_pixels");
    m.devices.push_back(std::move(e));
  }
  return m;
}

/// Samples `count` devices around `mean`, sweeps each one and writes
/// device_NNNN.json plus manifest.json into `out_dir`. Device i uses
/// derive_seed(seed, i). On an I/O failure the manifest lists the devices
/// written so far (complete = false) and IoError is rethrown.
inline Manifest generate_ensemble(const DeviceSpec& mean, std::size_t count, std::uint64_t seed,
                                  const std::filesystem::path& out_dir, const SweepOptions& opt = {},
                                  const SamplingOptions& sampling = {}) {
  if (count < 1) throw ConfigError("ensemble: count must be at least 1");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  Manifest manifest;
  manifest.seed = seed;
  manifest.count = count;
  manifest.grid_size = opt.grid_size;
  manifest.range = opt.range;
  const auto manifest_path = out_dir / kManifestName;

  for (std::size_t i = 0; i < count; ++i) {
    EnsembleEntry entry;
    entry.index = i;
    entry.seed = derive_seed(seed, i);
    entry.file = device_file_name(i);
    const auto map = sweep_map(sample_device(mean, entry.seed, sampling), opt);
    try {
      write_map(out_dir / entry.file, map);
    } catch (const IoError&) {
      try {
        write_text(manifest_path, manifest_to_json(manifest).dump(2) + "\n");
      } catch (const IoError&) {
      }
      throw;
    }
    entry.label_counts = label_counts(map);
    entry.max_charge = charge_bounds(map).second;
    for (const auto& r : map.records) entry.flagged += r.flags != kPixelOk;
    manifest.devices.push_back(std::move(entry));
  }
  manifest.complete = true;
  write_text(manifest_path, manifest_to_json(manifest).dump(2) + "\n");
  return manifest;
}

}  // namespace qdsim
