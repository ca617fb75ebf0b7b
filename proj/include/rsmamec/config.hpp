#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace rsmamec {

/// dBm -> W.
double dbm_to_watt(double dbm);
/// W -> dBm.
double watt_to_dbm(double watt);

/// Physical parameters of one network instance, stored in linear SI units.
struct SystemConfig {
  int num_servers = 3;
  int num_channels = 3;
  int num_devices = 9;
  double bandwidth_hz = 1e6;
  double deadline_s = 1.0;
  double noise_psd_w_per_hz = 3.981071705534985e-21;  // -174 dBm/Hz
  double max_tx_power_w = 0.1;                         // 20 dBm
  double server_frequency_bps = 20e6;
  double placement_radius_km = 0.5;
  double min_distance_km = 0.01;

  /// Throws std::invalid_argument if any field is out of range.
  void validate() const;

  double noise_power_w() const { return noise_psd_w_per_hz * bandwidth_hz; }
};

/// Tuning knobs of the bisection / alternating / SCA / barrier stack.
struct ScaSettings {
  double sca_tol = 1e-4;         // max relative power change between SCA iterates
  int sca_max_iters = 30;
  int alt_max_iters = 5;         // rounds of power/order alternation
  double bisection_tol = 1e-4;   // relative to the initial upper bound
  double inner_solver_tol = 1e-6;
  int inner_max_iters = 200;     // Newton steps per inner solve
  bool warm_start = false;       // reuse powers across bisection steps
  bool record_trace = false;

  void validate() const;
};

/// Matching options that the pipeline passes down.
struct MatchingSettings {
  /// Place capacity-pruned units at the server with the largest residual
  /// computing frequency instead of leaving their devices unserved. On by
  /// default: the re-optimization after matching reassigns frequencies, so
  /// the placement never breaks a capacity constraint.
  bool place_unmatched = true;
  /// Swap applications allowed per refinement, as a multiple of K^2.
  int swap_cap_factor = 10;
  bool record_trace = false;

  void validate() const;
};

/// Everything a config file can set.
struct RunConfig {
  SystemConfig system;
  ScaSettings sca;
  MatchingSettings matching;
  int workers = 1;
};

/// Applies one `key=value` pair. Boundary units: powers in dBm, noise in
/// dBm/Hz, computing frequency in Mbps, bandwidth in MHz, distances in km.
/// Throws std::invalid_argument on unknown keys or unparsable values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Parses `key=value` lines; `#` starts a comment, blank lines are skipped.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Serializes back to `key=value` text in boundary units.
std::string to_config_text(const RunConfig& config);

}  // namespace rsmamec
