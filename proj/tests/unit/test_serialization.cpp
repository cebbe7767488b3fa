#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qdsim/serialization.hpp"

using namespace qdsim;

namespace {

const DeviceMap& sampled_map() {
  static const DeviceMap map = [] {
    SweepOptions opt;
    opt.grid_size = 16;
    return sweep_map(sample_device(mean_device(), 123), opt);
  }();
  return map;
}

}  // namespace

TEST(Serialization, RoundTripIsExact) {
  const auto& m = sampled_map();
  const auto text = serialize(m);
  const auto back = deserialize(text);
  EXPECT_EQ(back, m);
  EXPECT_EQ(serialize(back), text);
}

TEST(Serialization, LayoutHasTheFiveTopLevelFields) {
  const auto j = map_to_json(sampled_map());
  for (const char* key : {"type", "V_P1_vec", "V_P2_vec", "output", "physics", "schema_version"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  const std::size_t n = sampled_map().size();
  EXPECT_EQ(j["output"]["state"].size(), n * n);
  EXPECT_EQ(j["output"]["current"].size(), n * n);
  EXPECT_EQ(j["output"]["charge"].size(), 2u);
  EXPECT_EQ(j["output"]["sensor"].size(), 2u);
  for (const char* key : {"K_0", "sigma", "g_0", "c_k", "beta", "kT", "mu", "bias", "V_L", "V_R", "WKB_coeff",
                          "attempt_rate_coef", "barrier_tunnel_rate", "barrier_current", "short_circuit_current",
                          "sensor_gate_coeff", "sensors", "gates", "x"}) {
    EXPECT_TRUE(j["physics"].contains(key)) << key;
  }
  for (const char* key : {"alpha", "h", "mean", "peak", "rho", "screen"}) {
    EXPECT_EQ(j["physics"]["gates"][key].size(), 5u) << key;
  }
}

TEST(Serialization, DefaultMapHasTenThousandOutputs) {
  DeviceMap m;
  m.device = mean_device();
  m.V_P1_vec = linspace(0.0, 0.4, 100);
  m.V_P2_vec = m.V_P1_vec;
  m.records.assign(10000, PixelRecord{{0}, 0.0, {0.0, 0.0}, 0, 0});
  const auto j = map_to_json(m);
  EXPECT_EQ(j["output"]["state"].size(), 10000u);
  EXPECT_EQ(deserialize(j.dump()).records.size(), 10000u);
}

TEST(Serialization, ShortCircuitPixel) {
  DeviceMap m;
  m.device = mean_device();
  m.V_P1_vec = {0.0, 0.1};
  m.V_P2_vec = {0.0, 0.1};
  PixelRecord sc{{0}, 100.0, {0.1, 0.2}, -1, 0};
  PixelRecord dd{{2, 3}, 1e-3, {0.1, 0.2}, 2, 0};
  PixelRecord sd{{4}, 2e-3, {0.1, 0.2}, 1, 0};
  PixelRecord qpc{{0}, 1e-7, {0.1, 0.2}, 0, kNotConverged};
  m.records = {sc, dd, sd, qpc};
  const auto j = map_to_json(m);
  EXPECT_EQ(j["output"]["state"][0], -1);
  EXPECT_EQ(j["output"]["charge"][0][0], 0);
  EXPECT_EQ(j["output"]["charge"][1][0], 0);
  EXPECT_EQ(j["output"]["charge"][1][1], 3);
  const auto back = deserialize(j.dump());
  EXPECT_EQ(back.records[0].charge, std::vector<int>{0});
  EXPECT_EQ(back.records[1].charge, (std::vector<int>{2, 3}));
  EXPECT_EQ(back.records[2].charge, std::vector<int>{4});
  EXPECT_EQ(back.records[3].flags, static_cast<std::uint32_t>(kNotConverged));
  EXPECT_EQ(back, m);
}

TEST(Serialization, RejectsWrongVersion) {
  auto j = map_to_json(sampled_map());
  j["schema_version"] = 2;
  EXPECT_THROW(deserialize(j.dump()), SchemaError);
}

TEST(Serialization, RejectsTruncatedFile) {
  const auto text = serialize(sampled_map());
  EXPECT_THROW(deserialize(text.substr(0, text.size() / 2)), SchemaError);
  EXPECT_THROW(deserialize(""), SchemaError);
}

TEST(Serialization, RejectsInconsistentColumns) {
  auto j = map_to_json(sampled_map());
  j["output"]["current"].erase(0);
  EXPECT_THROW(map_from_json(j), SchemaError);
  j = map_to_json(sampled_map());
  j["output"]["state"][3] = 7;
  EXPECT_THROW(map_from_json(j), SchemaError);
  j = map_to_json(sampled_map());
  j["physics"].erase("K_0");
  EXPECT_THROW(map_from_json(j), SchemaError);
}

TEST(Serialization, FileRoundTripAndIoErrors) {
  const auto dir = oracle::temp_dir("serialization");
  const auto path = dir / "map.json";
  write_map(path, sampled_map());
  EXPECT_EQ(read_map(path), sampled_map());
  EXPECT_THROW(read_map(dir / "missing.json"), IoError);
  EXPECT_THROW(write_map(dir / "no" / "such" / "dir.json", sampled_map()), IoError);
}

TEST(PatchContainer, RoundTrip) {
  PatchSet set;
  set.channel = Channel::SensorGradient;
  set.size = 6;
  set.patches = sample_patches(sampled_map(), set.channel, 6, 5, 77);
  set.source = {0, 0, 0, 1, 1};
  set.files = {"device_0000.json", "device_0001.json"};
  const auto j = patches_to_json(set);
  EXPECT_EQ(j["pixels"].size(), 5u * 36u);
  EXPECT_EQ(j["fractions"].size(), 5u);
  EXPECT_EQ(j["label"].size(), 5u);
  EXPECT_EQ(j["channel"], "sensor");
  const auto back = patches_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.patches, set.patches);
  EXPECT_EQ(back.source, set.source);
  EXPECT_EQ(back.files, set.files);
  EXPECT_EQ(back.channel, set.channel);
}

TEST(PatchContainer, RejectsMismatchedCounts) {
  PatchSet set;
  set.size = 4;
  set.patches = sample_patches(sampled_map(), Channel::Current, 4, 3, 1);
  set.source = {0, 0, 0};
  auto j = patches_to_json(set);
  j["count"] = 4;
  EXPECT_THROW(patches_from_json(j), SchemaError);
  set.patches[1].size = 3;
  EXPECT_THROW(patches_to_json(set), SchemaError);
}
