#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rsmamec/config.hpp"
#include "rsmamec/rate_core.hpp"
#include "rsmamec/scenario.hpp"

namespace rsmamec {

/// How channels and servers score a device group. Devices always score a
/// channel by their own offload rate.
enum class PreferenceRule {
  min_rate,  // MCOR of the group
  sum_rate,  // sum of the members' offload rates
};

/// Values of the optimization stage that preferences are evaluated against.
struct StageSnapshot {
  PowerAllocation powers;            // per device; defaults where no stage value exists
  std::vector<double> offload_time;  // t_o per server
  std::vector<double> frequency;     // f_k per device
  /// TDMA links: members of a group share the server in time at full power
  /// instead of decoding by SIC, and score the equal rate the group could get.
  bool time_shared = false;
  /// r_k of the stage. Time-shared server matching reserves the slot each
  /// device needs to keep this rate.
  std::vector<double> rates;
};

/// Before any optimization: P_k/2 per sub-message (P_k on part 1 when
/// single_message), t_o = T, f = 0.
StageSnapshot default_snapshot(const Scenario& scenario, bool single_message = false);

/// Powers, offload times and frequencies of a solved stage. Devices the
/// stage left without a channel fall back to the defaults.
StageSnapshot snapshot_from_solution(const Scenario& scenario, const Solution& solution,
                                     bool single_message = false);

struct MatchingEvent {
  std::string phase;  // "channel", "swap" or "server"
  int round = 0;
  int proposer = 0;  // channel, device or server index
  int proposee = 0;  // device, device or unit (channel) index
  bool accepted = false;
};

void write_matching_trace_csv(std::ostream& out, std::span<const MatchingEvent> events);

/// Scenario, stage values and the current channel groups.
class MatchingState {
 public:
  MatchingState(const Scenario& scenario, StageSnapshot snapshot,
                PreferenceRule rule = PreferenceRule::min_rate);

  const Scenario& scenario() const { return *scenario_; }
  const StageSnapshot& snapshot() const { return snapshot_; }
  PreferenceRule rule() const { return rule_; }

  /// Channel of each device, kUnassigned when none.
  const std::vector<int>& channel_of() const { return channel_of_; }
  void set_channel_of(std::vector<int> channel_of);
  /// Devices on channel n, ascending.
  std::vector<int> group(int n) const;

  /// Offload-rate preference of every member of `group` on channel n: for each
  /// member, min over servers m of (t_o^m / T) times its link rate at m. The
  /// group is decoded in the descending-gain initial order at each server.
  /// With a time-shared snapshot every member gets min over m of the largest
  /// common TDMA rate of the group alone on m.
  std::vector<double> member_preferences(int n, std::span<const int> group) const;
  /// The same per-member estimate at one server m.
  std::vector<double> server_scores(int m, int n, std::span<const int> group) const;

 private:
  const Scenario* scenario_;
  StageSnapshot snapshot_;
  PreferenceRule rule_;
  std::vector<int> channel_of_;
};

/// Preference of device k for channel n when joining `existing` (k must not
/// be in it). Throws std::invalid_argument otherwise.
double device_channel_pref(const MatchingState& state, int k, int n,
                           std::span<const int> existing);

/// Score of channel n holding `group` under the state's rule; 0 when empty.
double channel_utility(const MatchingState& state, int n, std::span<const int> group);

/// Channels propose to their most preferred remaining device; each device
/// keeps its best offer (its current channel included). Every device ends up
/// on some channel. Returns channel_of.
std::vector<int> gs_channel_matching(const MatchingState& state,
                                     std::vector<MatchingEvent>* trace = nullptr);

/// Relative tolerance below which utility changes count as ties.
inline constexpr double kSwapTolerance = 1e-9;

/// Whether exchanging the channels of k and k2 weakly improves both devices
/// and both channels and strictly improves at least one of them.
bool is_swap_blocking(const MatchingState& state, int k, int k2);

struct SwapResult {
  std::vector<int> channel_of;
  int swaps = 0;
  bool cap_hit = false;
};

/// Applies the first blocking swap in lexicographic pair order until none is
/// left or swap_cap_factor * K^2 swaps have been applied.
SwapResult swap_refine(const MatchingState& state, const MatchingSettings& settings,
                       std::vector<MatchingEvent>* trace = nullptr);

struct ServerMatching {
  std::vector<int> server_of;           // per device
  std::vector<int> unmatched_channels;  // units left without a server
  int placed_units = 0;                 // units placed by the fallback rule
};

/// Servers propose to (channel, group) units, units keep their best server.
/// A unit is dropped from server m's list as soon as one of its devices needs
/// more frequency than m has left. `frequency` is f_k of the previous stage.
/// Time-shared snapshots also drop a unit once its slots at the stage rates
/// no longer fit in m's remaining offload time or computing budget.
ServerMatching gs_mec_matching(const MatchingState& state, std::span<const double> frequency,
                               const MatchingSettings& settings,
                               std::vector<MatchingEvent>* trace = nullptr);

struct AllocationResult {
  Allocation allocation;
  int swaps = 0;
  bool swap_cap_hit = false;
  std::vector<int> unmatched_channels;
  std::vector<MatchingEvent> trace;
};

/// Channel matching, swap refinement, then server matching.
AllocationResult allocate(const Scenario& scenario, const StageSnapshot& snapshot,
                          PreferenceRule rule, const MatchingSettings& settings);

}  // namespace rsmamec
