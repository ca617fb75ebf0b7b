#include "rsmamec/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rsmamec {

namespace {

// Stream tags for derive_seed().
constexpr std::uint64_t kServerTag = 0x5345525645ULL;
constexpr std::uint64_t kDeviceTag = 0x444556ULL;
constexpr std::uint64_t kGainTag = 0x4741494eULL;

Point sample_disk(std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = radius * std::sqrt(unit(rng));
  const double phi = 2.0 * std::numbers::pi * unit(rng);
  return {r * std::cos(phi), r * std::sin(phi)};
}

}  // namespace

double mean_channel_gain(double distance_km) {
  if (!(distance_km > 0)) throw std::domain_error("mean_channel_gain: distance must be positive");
  const double loss_db = 128.1 + 37.6 * std::log10(distance_km);
  return std::pow(10.0, -loss_db / 10.0);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> counters) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * counters.size());
  words.push_back(static_cast<std::uint32_t>(base));
  words.push_back(static_cast<std::uint32_t>(base >> 32));
  for (auto c : counters) {
    words.push_back(static_cast<std::uint32_t>(c));
    words.push_back(static_cast<std::uint32_t>(c >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

std::mt19937_64 make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> counters) {
  return std::mt19937_64(derive_seed(base, counters));
}

double distance_km(const Point& a, const Point& b) { return std::hypot(a.x_km - b.x_km, a.y_km - b.y_km); }

Scenario::Scenario(SystemConfig config, std::uint64_t seed, std::vector<Point> servers,
                   std::vector<Point> devices, std::vector<double> gains)
    : config_(config), seed_(seed), servers_(std::move(servers)), devices_(std::move(devices)),
      gains_(std::move(gains)) {
  config_.validate();
  const auto expected = static_cast<std::size_t>(config_.num_servers) * config_.num_channels *
                        config_.num_devices;
  if (gains_.size() != expected) throw std::invalid_argument("Scenario: gain table has wrong size");
  if (servers_.size() != static_cast<std::size_t>(config_.num_servers) ||
      devices_.size() != static_cast<std::size_t>(config_.num_devices))
    throw std::invalid_argument("Scenario: position list has wrong size");
  for (double g : gains_)
    if (!(g > 0)) throw std::invalid_argument("Scenario: gains must be positive");
}

double Scenario::link_distance(int m, int k) const {
  return std::max(distance_km(servers_[m], devices_[k]), config_.min_distance_km);
}

double Scenario::single_user_capacity(int m, int n, int k) const {
  return bandwidth() * std::log2(1.0 + gain(m, n, k) * max_power(k) / noise_power());
}

Scenario generate_scenario(const SystemConfig& config, std::uint64_t seed) {
  config.validate();
  const int M = config.num_servers;
  const int N = config.num_channels;
  const int K = config.num_devices;

  std::vector<Point> servers;
  servers.reserve(M);
  for (int m = 0; m < M; ++m) {
    auto rng = make_rng(seed, {kServerTag, static_cast<std::uint64_t>(m)});
    servers.push_back(sample_disk(rng, config.placement_radius_km));
  }
  std::vector<Point> devices;
  devices.reserve(K);
  for (int k = 0; k < K; ++k) {
    auto rng = make_rng(seed, {kDeviceTag, static_cast<std::uint64_t>(k)});
    devices.push_back(sample_disk(rng, config.placement_radius_km));
  }

  std::vector<double> gains(static_cast<std::size_t>(M) * N * K);
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < K; ++k) {
      const double d = std::max(distance_km(servers[m], devices[k]), config.min_distance_km);
      const double mean = mean_channel_gain(d);
      for (int n = 0; n < N; ++n) {
        auto rng = make_rng(seed, {kGainTag, static_cast<std::uint64_t>(m),
                                   static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(k)});
        std::exponential_distribution<double> fading(1.0);
        double g = mean * fading(rng);
        // exponential draws can be exactly 0 only with probability ~2^-53
        if (!(g > 0)) g = mean * 1e-16;
        gains[(static_cast<std::size_t>(m) * N + n) * K + k] = g;
      }
    }
  }
  return Scenario(config, seed, std::move(servers), std::move(devices), std::move(gains));
}

}  // namespace rsmamec
