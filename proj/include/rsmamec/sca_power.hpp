#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "rsmamec/config.hpp"
#include "rsmamec/rate_core.hpp"
#include "rsmamec/scenario.hpp"

namespace rsmamec {

struct GroupMember {
  int device = 0;
  int channel = 0;
  double gain = 0;       // h_{m,n,k} on the device's channel
  double max_power = 0;  // P_k
};

/// The per-server subproblem: one server, its devices and their channels.
struct GroupProblem {
  int server = 0;
  int num_devices = 0;  // K of the whole scenario (sizes global vectors)
  double frequency = 0;    // F_m, bits/s
  double bandwidth = 0;    // B, Hz
  double noise_power = 0;  // sigma^2 B, W
  double deadline = 0;     // T, s
  std::vector<GroupMember> members;  // ascending device index
  /// One message per device (p_{k,2} fixed at 0), as in NOMA.
  bool single_message = false;

  /// Members of server m that also hold a channel.
  static GroupProblem build(const Scenario& scenario, const Allocation& allocation, int m,
                            bool single_message = false);

  int size() const { return static_cast<int>(members.size()); }
  /// Device indices of the members on channel n.
  std::vector<int> channel_group(int n) const;
  /// Distinct channels used by the members, ascending.
  std::vector<int> channels() const;
  /// Largest interference-free link rate among members' minimum, i.e.
  /// min_k B log2(1 + h_k P_k / sigma^2 B).
  double min_single_user_capacity() const;
};

/// Symmetric start point p_{k,1} = p_{k,2} = P_k / 2 (P_k on part 1 in
/// single-message mode); all non-members at zero.
PowerAllocation initial_powers(const GroupProblem& problem);

struct WvTerm {
  SubMessage message;
  double w = 0;  // B log2(sigma^2 B + interference + own), bits/s
  double v = 0;  // B log2(sigma^2 B + interference), bits/s
};

/// w and v of every sub-message of the group; w - v is the SIC rate.
std::vector<WvTerm> wv_terms(const GroupProblem& problem, const DecodingOrder& order,
                             const PowerAllocation& powers);

struct ZlValue {
  int device = 0;
  double z = 0;  // bits^2/s^2
  double l = 0;
};

/// z_{m,k} and l_{m,k} for each member. Throws std::domain_error when
/// eta >= F_m, where the difference-of-concave split breaks down.
std::vector<ZlValue> zl_values(const GroupProblem& problem, const DecodingOrder& order,
                               const PowerAllocation& powers, double eta);

/// First-order Taylor expansion of each l_{m,k} around a reference point.
class AffineMinorant {
 public:
  struct Row {
    int device = 0;
    double value_at_ref = 0;
    std::vector<double> gradient;  // d l / d p_{k',i}, laid out like PowerAllocation
  };

  AffineMinorant(PowerAllocation reference, std::vector<Row> rows)
      : reference_(std::move(reference)), rows_(std::move(rows)) {}

  /// l-hat for each member at p, in member order.
  std::vector<double> evaluate(const PowerAllocation& p) const;
  const std::vector<Row>& rows() const { return rows_; }
  const PowerAllocation& reference() const { return reference_; }

 private:
  PowerAllocation reference_;
  std::vector<Row> rows_;
};

/// Affine l-hat around p_ref. Because l is concave, z - l-hat under-estimates
/// z - l everywhere and touches it at p_ref.
AffineMinorant linearize(const GroupProblem& problem, const DecodingOrder& order,
                         const PowerAllocation& p_ref, double eta);

/// min_k (z_{m,k} - l_{m,k}) in bits^2/s^2.
double maxmin_objective(const GroupProblem& problem, const DecodingOrder& order,
                        const PowerAllocation& powers, double eta);

struct InnerResult {
  PowerAllocation powers;
  double objective = 0;  // min_k (z - l-hat) at the returned point, bits^2/s^2
  int newton_steps = 0;
  bool stalled = false;  // solver could not improve on p_ref
};

/// Solves the convexified subproblem max_p min_k (z - l-hat) over the budget
/// set. Never returns a point whose objective is below that of p_ref.
InnerResult solve_inner(const GroupProblem& problem, const DecodingOrder& order,
                        const PowerAllocation& p_ref, double eta, const ScaSettings& settings);

struct ScaResult {
  PowerAllocation powers;
  double objective = 0;            // min_k (z - l), bits^2/s^2
  std::vector<double> objectives;  // after each iteration, starting with p0
  int iterations = 0;
  bool converged = false;
};

/// SCA on the max-min difference-of-concave program for a fixed order.
/// Starts from `start` if given, otherwise from initial_powers().
ScaResult sca_maximin_power(const GroupProblem& problem, const DecodingOrder& order, double eta,
                            const ScaSettings& settings, const PowerAllocation* start = nullptr);

/// Part 1 of every member before any part 2; within a part by descending
/// gain, ties by device index.
DecodingOrder init_decoding_order(const GroupProblem& problem);

/// Descending received power h p per channel group; ties by (device, part).
DecodingOrder order_from_powers(const GroupProblem& problem, const PowerAllocation& powers);

struct AlternatingResult {
  PowerAllocation powers;
  DecodingOrder order;
  double objective = 0;  // best min_k (z - l) found, bits^2/s^2
  bool feasible = false;
  int rounds = 0;
  std::vector<int> sca_iterations;
  std::vector<ScaTraceRow> trace;
};

/// Objective >= eta F_m up to the solver margin.
bool is_feasible_objective(const GroupProblem& problem, double objective, double eta);

/// Alternates SCA power allocation and order updates until the best
/// objective reaches eta F_m, the order stops changing, or alt_max_iters
/// rounds have run. In single-message mode the order stays at the
/// descending-gain order.
AlternatingResult alternating_power_order(const GroupProblem& problem, double eta,
                                          const ScaSettings& settings,
                                          const PowerAllocation* start = nullptr);

/// Per-server feasibility routine used by the bisection.
using FeasibilityCheck = std::function<AlternatingResult(
    const GroupProblem& problem, double eta, const PowerAllocation* start)>;

/// Bisection on the common rate eta, feasibility being the AND of the
/// per-server checks. Returns the schedule and rates for the largest
/// certified eta. `check` defaults to alternating_power_order.
Solution bisection_mcor(const Scenario& scenario, const Allocation& allocation,
                        const ScaSettings& settings, bool single_message = false,
                        const FeasibilityCheck& check = {});

/// Utility used by the fairness-agnostic baselines.
enum class PowerObjective { sum_rate, proportional_fair };

/// SCA ascent of sum_k R_k or sum_k log(R_k + delta) for a fixed order.
ScaResult sca_utility_power(const GroupProblem& problem, const DecodingOrder& order,
                            PowerObjective objective, const ScaSettings& settings);

/// Utility value at `powers` in the units of ScaResult::objective (bits/s for
/// the sum rate, nats for the log utility).
double utility_objective(const GroupProblem& problem, const DecodingOrder& order,
                         const PowerAllocation& powers, PowerObjective objective);

inline constexpr double kPropFairFloor = 1e-9;  // delta, bits/s

}  // namespace rsmamec
