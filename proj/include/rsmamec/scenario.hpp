#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "rsmamec/config.hpp"

namespace rsmamec {

/// Mean linear channel gain of the 128.1 + 37.6 log10(d) dB path-loss model,
/// d in km. Throws std::domain_error for d <= 0.
double mean_channel_gain(double distance_km);

/// Deterministic sub-seed derived from a base seed and a list of counters.
/// Distinct counter tuples give independent streams.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> counters);

/// A std::mt19937_64 seeded from derive_seed().
std::mt19937_64 make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> counters);

struct Point {
  double x_km = 0;
  double y_km = 0;
};

double distance_km(const Point& a, const Point& b);

/// One random network instance. Immutable after generation.
class Scenario {
 public:
  Scenario(SystemConfig config, std::uint64_t seed, std::vector<Point> servers,
           std::vector<Point> devices, std::vector<double> gains);

  const SystemConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

  int num_servers() const { return config_.num_servers; }
  int num_channels() const { return config_.num_channels; }
  int num_devices() const { return config_.num_devices; }

  /// Linear power gain between device k and server m on channel n.
  double gain(int m, int n, int k) const {
    return gains_[(static_cast<std::size_t>(m) * config_.num_channels + n) * config_.num_devices + k];
  }
  const std::vector<double>& gains() const { return gains_; }

  double max_power(int /*k*/) const { return config_.max_tx_power_w; }
  double frequency(int /*m*/) const { return config_.server_frequency_bps; }
  double bandwidth() const { return config_.bandwidth_hz; }
  double noise_power() const { return config_.noise_power_w(); }
  double deadline() const { return config_.deadline_s; }

  const std::vector<Point>& server_positions() const { return servers_; }
  const std::vector<Point>& device_positions() const { return devices_; }

  /// Device-server distance after clamping at min_distance.
  double link_distance(int m, int k) const;

  /// Interference-free link rate B log2(1 + h P / sigma^2 B) in bits/s.
  double single_user_capacity(int m, int n, int k) const;

 private:
  SystemConfig config_;
  std::uint64_t seed_;
  std::vector<Point> servers_;
  std::vector<Point> devices_;
  std::vector<double> gains_;
};

/// Uniform placement in a disk, exponential (Rayleigh power) fading drawn
/// independently per (server, channel, device). Each position and each gain
/// comes from its own counter-derived stream, so instances with more servers,
/// channels or devices extend the smaller ones with the same seed.
Scenario generate_scenario(const SystemConfig& config, std::uint64_t seed);

}  // namespace rsmamec
