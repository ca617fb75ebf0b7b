#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "rsmamec/scenario.hpp"

using namespace rsmamec;

TEST_CASE("path-loss mean gain matches frozen values") {
  // 10^(-(128.1 + 37.6 log10 d) / 10)
  CHECK(mean_channel_gain(1.0) == doctest::Approx(1.5488166189124858e-13).epsilon(1e-13));
  CHECK(mean_channel_gain(0.1) == doctest::Approx(8.912509381337441e-10).epsilon(1e-13));
  CHECK(mean_channel_gain(0.5) == doctest::Approx(2.098325138837318e-12).epsilon(1e-13));
  CHECK_THROWS_AS(mean_channel_gain(0.0), std::domain_error);
  CHECK_THROWS_AS(mean_channel_gain(-1.0), std::domain_error);
}

TEST_CASE("generate_scenario is deterministic and within the disk") {
  SystemConfig cfg;
  const auto a = generate_scenario(cfg, 42);
  const auto b = generate_scenario(cfg, 42);
  const auto c = generate_scenario(cfg, 43);
  CHECK(a.gains() == b.gains());
  CHECK(a.gains() != c.gains());
  CHECK(a.gains().size() == 3u * 3u * 9u);
  for (const auto& p : a.device_positions())
    CHECK(std::hypot(p.x_km, p.y_km) <= cfg.placement_radius_km + 1e-12);
  for (const auto& p : a.server_positions())
    CHECK(std::hypot(p.x_km, p.y_km) <= cfg.placement_radius_km + 1e-12);
  for (double g : a.gains()) CHECK(g > 0);
}

TEST_CASE("larger instances extend smaller ones with the same seed") {
  SystemConfig small, big;
  big.num_devices = 12;
  big.num_servers = 4;
  const auto s = generate_scenario(small, 7);
  const auto l = generate_scenario(big, 7);
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 3; ++n)
      for (int k = 0; k < 9; ++k) CHECK(s.gain(m, n, k) == l.gain(m, n, k));
}

TEST_CASE("link distance is clamped at the minimum distance") {
  SystemConfig cfg;
  cfg.num_servers = cfg.num_channels = cfg.num_devices = 1;
  Scenario sc(cfg, 0, {{0, 0}}, {{0.001, 0}}, {1e-9});
  CHECK(sc.link_distance(0, 0) == doctest::Approx(cfg.min_distance_km));
  // capacity with h P / sigma^2 B = 3 is 2 bits per Hz
  const double h = 3 * cfg.noise_power_w() / cfg.max_tx_power_w;
  Scenario sc2(cfg, 0, {{0, 0}}, {{0.1, 0}}, {h});
  CHECK(sc2.single_user_capacity(0, 0, 0) == doctest::Approx(2 * cfg.bandwidth_hz).epsilon(1e-12));
}

TEST_CASE("exponential fading averages to the path-loss mean") {
  SystemConfig cfg;
  cfg.num_servers = cfg.num_channels = cfg.num_devices = 1;
  double sum = 0;
  const int draws = 100000;
  for (int s = 0; s < draws; ++s) {
    const auto sc = generate_scenario(cfg, static_cast<std::uint64_t>(s));
    sum += sc.gain(0, 0, 0) / mean_channel_gain(sc.link_distance(0, 0));
  }
  CHECK(sum / draws == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("derived seeds separate counter tuples") {
  CHECK(derive_seed(1, {0}) != derive_seed(1, {1}));
  CHECK(derive_seed(1, {0, 1}) != derive_seed(1, {1, 0}));
  CHECK(derive_seed(1, {5}) == derive_seed(1, {5}));
  auto r1 = make_rng(9, {3});
  auto r2 = make_rng(9, {3});
  CHECK(r1() == r2());
}
