#pragma once

#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rsmamec/config.hpp"
#include "rsmamec/rate_core.hpp"
#include "rsmamec/sca_power.hpp"
#include "rsmamec/scenario.hpp"

namespace rsmamec {

enum class BaselineKind {
  rsma_random_propfair,
  rsma_match_maxmin,
  rsma_match_sumrate,
  rsma_random_sumrate,
  noma_match,
  noma_random,
  tdma_match,
  tdma_random,
  proposed,
  oracle_order,
};

/// Display name, e.g. "RSMA-Match-MaxMin".
std::string_view to_string(BaselineKind kind);
/// Inverse of to_string(); throws std::invalid_argument for unknown names.
BaselineKind parse_baseline(std::string_view name);
/// All kinds in declaration order.
std::span<const BaselineKind> all_baselines();

/// Interference-free TDMA rate B log2(1 + h P / sigma^2 B) of each served
/// device on its own server and channel; 0 for unserved devices.
std::vector<double> tdma_link_rates(const Scenario& scenario, const Allocation& allocation);

/// Whether every server can give each of its served devices rate theta,
/// using the minimal slot lengths t_k = theta T / R_k.
bool tdma_feasible(const Scenario& scenario, const Allocation& allocation, double theta);

/// TDMA max-min offloading: bisection on theta over tdma_feasible(). Devices
/// send at full power on their first sub-message.
Solution tdma_maximin(const Scenario& scenario, const Allocation& allocation,
                      const ScaSettings& settings);

/// Max-min with one message per device decoded in descending-gain order.
Solution noma_maximin(const Scenario& scenario, const Allocation& allocation,
                      const ScaSettings& settings);

/// Sum-rate maximizing powers for a fixed order.
PowerAllocation sumrate_power(const GroupProblem& problem, const DecodingOrder& order,
                              const ScaSettings& settings);
/// Proportional-fair (sum of log rates) powers for a fixed order.
PowerAllocation propfair_power(const GroupProblem& problem, const DecodingOrder& order,
                               const ScaSettings& settings);

/// Per-server utility maximization alternating powers and power-derived
/// orders, then the closed-form schedule.
Solution utility_solution(const Scenario& scenario, const Allocation& allocation,
                          PowerObjective objective, const ScaSettings& settings);

/// Uniform channel per device, uniform server per nonempty channel.
Allocation random_allocation(std::mt19937_64& rng, int servers, int channels, int devices);

/// Largest 2|K_m| the order search accepts.
inline constexpr int kOracleMaxMessages = 6;

/// Bisection where each server's feasibility is decided by trying every
/// decoding order of its channel groups. Orders that only swap the two parts
/// of a device are skipped since the symmetric start makes them equivalent.
/// Throws std::length_error when a server has more than kOracleMaxMessages
/// sub-messages.
Solution oracle_order_search(const Scenario& scenario, const Allocation& allocation,
                             const ScaSettings& settings);

/// Every decoding order of the problem's channel groups in which each
/// device's first part precedes its second.
std::vector<DecodingOrder> enumerate_orders(const GroupProblem& problem);

}  // namespace rsmamec
