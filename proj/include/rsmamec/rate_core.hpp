#pragma once

#include <span>
#include <string>
#include <vector>

#include "rsmamec/scenario.hpp"

namespace rsmamec {

inline constexpr int kUnassigned = -1;

/// Server (alpha) and channel (beta) assignment. Each device holds at most
/// one server and at most one channel, so the "at most one" constraints are
/// structural; is_valid() checks the remaining coupling constraint.
struct Allocation {
  int num_servers = 0;
  int num_channels = 0;
  std::vector<int> server_of;   // kUnassigned or 0..M-1
  std::vector<int> channel_of;  // kUnassigned or 0..N-1

  Allocation() = default;
  Allocation(int servers, int channels, int devices);

  int num_devices() const { return static_cast<int>(server_of.size()); }
  bool alpha(int m, int k) const { return server_of[k] == m; }
  bool beta(int n, int k) const { return channel_of[k] == n; }
  /// True when device k has both a server and a channel.
  bool served(int k) const { return server_of[k] != kUnassigned && channel_of[k] != kUnassigned; }

  /// Devices with server m and channel n, ascending index.
  std::vector<int> group(int m, int n) const;
  /// Devices with server m (any channel), ascending index.
  std::vector<int> server_devices(int m) const;

  /// Builds from 0/1 matrices alpha[m][k], beta[n][k]. Throws
  /// std::invalid_argument if a device has more than one server or channel.
  static Allocation from_matrices(const std::vector<std::vector<int>>& alpha,
                                  const std::vector<std::vector<int>>& beta);

  bool operator==(const Allocation&) const = default;
};

/// Checks index ranges and that every channel's devices share one server.
bool is_valid(const Allocation& allocation);

struct SubMessage {
  int device = 0;
  int part = 0;  // 0 -> s_{k,1}, 1 -> s_{k,2}

  bool operator==(const SubMessage&) const = default;
  auto operator<=>(const SubMessage&) const = default;
};

/// SIC ranks of all 2K sub-messages. Ranks are 1-based and dense within each
/// (server, channel) group; 0 marks an unranked sub-message.
class DecodingOrder {
 public:
  DecodingOrder() = default;
  explicit DecodingOrder(int num_devices) : ranks_(2 * static_cast<std::size_t>(num_devices), 0) {}

  int rank(int k, int part) const { return ranks_[2 * static_cast<std::size_t>(k) + part]; }
  int rank(SubMessage s) const { return rank(s.device, s.part); }
  void set_rank(SubMessage s, int r) { ranks_[2 * static_cast<std::size_t>(s.device) + s.part] = r; }

  /// Assigns ranks 1..L following `sequence` (first element decoded first).
  void assign(std::span<const SubMessage> sequence);

  /// Sub-messages of `group` sorted by rank. Throws std::domain_error if a
  /// group member is unranked.
  std::vector<SubMessage> sequence(std::span<const int> group) const;

  int num_devices() const { return static_cast<int>(ranks_.size() / 2); }
  const std::vector<int>& ranks() const { return ranks_; }

  bool operator==(const DecodingOrder&) const = default;

 private:
  std::vector<int> ranks_;
};

/// True when the group's ranks form a permutation of 1..2|group|.
bool is_permutation_order(const DecodingOrder& order, std::span<const int> group);

/// Transmit power of every sub-message in W.
class PowerAllocation {
 public:
  PowerAllocation() = default;
  explicit PowerAllocation(int num_devices) : p_(2 * static_cast<std::size_t>(num_devices), 0.0) {}

  double operator()(int k, int part) const { return p_[2 * static_cast<std::size_t>(k) + part]; }
  double& operator()(int k, int part) { return p_[2 * static_cast<std::size_t>(k) + part]; }
  double total(int k) const { return (*this)(k, 0) + (*this)(k, 1); }

  int num_devices() const { return static_cast<int>(p_.size() / 2); }
  const std::vector<double>& values() const { return p_; }

  /// Non-negativity and p_{k,1} + p_{k,2} <= P_k (with relative slack).
  bool is_valid(const Scenario& scenario, double slack = 1e-12) const;

  bool operator==(const PowerAllocation&) const = default;

 private:
  std::vector<double> p_;
};

struct Schedule {
  std::vector<double> offload_time;  // t_o per server, s
  std::vector<double> compute_time;  // t_c per server, s
  std::vector<double> frequency;     // f_k per device, bits/s
};

/// One optimization call's per-iteration record.
struct ScaTraceRow {
  double eta = 0;       // bits/s
  int server = 0;
  int round = 0;        // alternation round
  int iteration = 0;    // SCA iteration, 1-based
  double objective = 0; // min_k z - l, normalized units
  bool feasible = false;
};

struct Solution {
  Allocation allocation;
  DecodingOrder order;
  PowerAllocation powers;
  Schedule schedule;
  std::vector<double> link_rates;  // sum over parts of the SIC rates, bits/s
  std::vector<double> rates;       // computation offloading rates r_k, bits/s
  double mcor = 0;                 // min_k r_k
  double eta = 0;                  // bisection value that certified feasibility

  std::vector<int> sca_iterations;  // one entry per SCA invocation
  std::vector<ScaTraceRow> trace;
  int swaps = 0;
  std::vector<int> unserved_devices;
};

/// Sub-messages of `group` decoded after (k, part). Throws std::domain_error
/// if k is not in the group or the order does not rank it.
std::vector<SubMessage> interference_set(std::span<const int> group, const DecodingOrder& order,
                                         int k, int part);

/// Achievable SIC rate of sub-message (k, part) at server m on channel n, bits/s.
double submessage_rate(const Scenario& scenario, int m, int n, std::span<const int> group,
                       const DecodingOrder& order, const PowerAllocation& powers, int k, int part);

/// Sum of both sub-message rates of device k.
double device_link_rate(const Scenario& scenario, int m, int n, std::span<const int> group,
                        const DecodingOrder& order, const PowerAllocation& powers, int k);

/// Link rates of all group members, evaluated in one pass over the SIC sequence.
std::vector<double> group_link_rates(const Scenario& scenario, int m, int n,
                                     std::span<const int> group, const DecodingOrder& order,
                                     const PowerAllocation& powers);

struct ServerSchedule {
  double offload_time = 0;
  double compute_time = 0;
  std::vector<double> frequency;
};

/// Closed-form time and computing-frequency split of one server. When every
/// link rate is zero the server spends the whole deadline offloading and
/// allocates no frequency.
ServerSchedule schedule_from_rates(double server_frequency, std::span<const double> link_rates,
                                   double deadline);

/// (t_o / T) * link_rate.
double offload_rate(double offload_time, double deadline, double link_rate);

/// Minimum rate. Throws std::domain_error on empty input.
double mcor(std::span<const double> rates);
/// (sum r)^2 / (K sum r^2); 1 when all rates are zero. Throws on empty input.
double jain_index(std::span<const double> rates);

/// Recomputes link rates, schedule, offload rates and MCOR of `solution` from
/// its allocation, order and powers.
void evaluate_solution(const Scenario& scenario, Solution& solution);

/// Diagnostic check of the constraint set of the full problem plus the
/// closed-form schedule identities: returns an empty string when everything holds,
/// otherwise a description of the first violation.
std::string check_solution(const Scenario& scenario, const Solution& solution, double tol = 1e-9);

}  // namespace rsmamec
