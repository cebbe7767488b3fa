#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "qdsim/config.hpp"

using namespace qdsim;

TEST(Config, EmptyTextKeepsBase) { EXPECT_EQ(parse_device_config(""), mean_device()); }

TEST(Config, ParsesScalarsListsAndComments) {
  const auto d = parse_device_config(R"(
# comment line
K_0 = 12.5      # trailing comment
sigma = 3
g_0 = 1.0
c_k = 0.5
beta = 500
kT = 1e-4
mu = 0.2
WKB_coeff = 0.25
attempt_rate_coef = 2
barrier_tunnel_rate = 5
barrier_current = 3
short_circuit_current = 50
sensor_gate_coeff = 0.2
sensors = (-10, 40), (10, 40), (0, 30)
gates.mean = [-42, -21, 0, 21, 42]
gates.peak = 210, -300, 190, -300, 205
gates.h = 45
gates.rho = 4, 4, 5, 4, 4
gates.screen = 18
gates.alpha = 0.9
)");
  EXPECT_DOUBLE_EQ(d.physics.K0, 12.5);
  EXPECT_DOUBLE_EQ(d.physics.sigma, 3.0);
  EXPECT_DOUBLE_EQ(d.physics.g0, 1.0);
  EXPECT_DOUBLE_EQ(d.physics.c_k, 0.5);
  EXPECT_DOUBLE_EQ(d.physics.beta, 500.0);
  EXPECT_DOUBLE_EQ(d.physics.kT, 1e-4);
  EXPECT_DOUBLE_EQ(d.physics.mu, 0.2);
  EXPECT_DOUBLE_EQ(d.physics.WKB_coeff, 0.25);
  EXPECT_DOUBLE_EQ(d.physics.attempt_rate_coef, 2.0);
  EXPECT_DOUBLE_EQ(d.physics.barrier_tunnel_rate, 5.0);
  EXPECT_DOUBLE_EQ(d.physics.barrier_current, 3.0);
  EXPECT_DOUBLE_EQ(d.physics.short_circuit_current, 50.0);
  EXPECT_DOUBLE_EQ(d.physics.sensor_gate_coeff, 0.2);
  ASSERT_EQ(d.physics.sensors.size(), 3u);
  EXPECT_DOUBLE_EQ(d.physics.sensors[2].y, 30.0);
  EXPECT_DOUBLE_EQ(d.gates[0].x0, -42.0);
  EXPECT_DOUBLE_EQ(d.gates[3].peak, -300.0);
  EXPECT_DOUBLE_EQ(d.gates[2].r0, 5.0);
  EXPECT_DOUBLE_EQ(d.gates[1].r0, 4.0);
  for (const auto& g : d.gates) {
    EXPECT_DOUBLE_EQ(g.h, 45.0);
    EXPECT_DOUBLE_EQ(g.screen, 18.0);
    EXPECT_DOUBLE_EQ(g.alpha, 0.9);
  }
}

TEST(Config, BiasSplitsSymmetricallyAcrossLeads) {
  const auto d = parse_device_config("bias = 2e-4");
  EXPECT_DOUBLE_EQ(d.physics.V_L, 1e-4);
  EXPECT_DOUBLE_EQ(d.physics.V_R, -1e-4);
  EXPECT_DOUBLE_EQ(d.physics.bias, 2e-4);
}

TEST(Config, LeadVoltagesDetermineBias) {
  const auto d = parse_device_config("V_L = 3e-5\nV_R = -1e-5");
  EXPECT_DOUBLE_EQ(d.physics.bias, 4e-5);
  EXPECT_THROW(parse_device_config("V_L = 3e-5\nV_R = -1e-5\nbias = 1"), ConfigError);
}

TEST(Config, GridKeys) {
  const auto d = parse_device_config("dx = 0.5");
  EXPECT_EQ(d.grid.size(), 241u);
  EXPECT_THROW(parse_device_config("dx = 0.7"), ConfigError);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_device_config("nonsense = 1"), ConfigError);
  EXPECT_THROW(parse_device_config("K_0 12"), ConfigError);
  EXPECT_THROW(parse_device_config("K_0 = twelve"), ConfigError);
  EXPECT_THROW(parse_device_config("K_0 = 1, 2"), ConfigError);
  EXPECT_THROW(parse_device_config("gates.mean = 1, 2, 3"), ConfigError);
  EXPECT_THROW(parse_device_config("gates.h = 1, 2"), ConfigError);
  EXPECT_THROW(parse_device_config("sensors = (1, 2), (3)"), ConfigError);
  EXPECT_THROW(parse_device_config("gates.h = 3"), ConfigError);  // h below r0
  EXPECT_THROW(load_device_config("/nonexistent/qdsim.cfg"), IoError);
}

TEST(Config, ShippedConfigsLoad) {
  const auto dir = oracle::source_dir() / "configs";
  EXPECT_EQ(load_device_config((dir / "mean_device.cfg").string()), mean_device());
  const auto t3 = load_device_config((dir / "table3.cfg").string());
  EXPECT_DOUBLE_EQ(t3.physics.g0, 1.0);
  EXPECT_DOUBLE_EQ(t3.physics.sigma, 3.0);
}
