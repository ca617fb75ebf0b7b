#include "rsmamec/baselines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rsmamec {

namespace {

constexpr std::array<BaselineKind, 10> kAll = {
    BaselineKind::rsma_random_propfair, BaselineKind::rsma_match_maxmin,
    BaselineKind::rsma_match_sumrate,   BaselineKind::rsma_random_sumrate,
    BaselineKind::noma_match,           BaselineKind::noma_random,
    BaselineKind::tdma_match,           BaselineKind::tdma_random,
    BaselineKind::proposed,             BaselineKind::oracle_order,
};

}  // namespace

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::rsma_random_propfair: return "RSMA-Random-PropFair";
    case BaselineKind::rsma_match_maxmin: return "RSMA-Match-MaxMin";
    case BaselineKind::rsma_match_sumrate: return "RSMA-Match-SumRate";
    case BaselineKind::rsma_random_sumrate: return "RSMA-Random-SumRate";
    case BaselineKind::noma_match: return "NOMA-Match";
    case BaselineKind::noma_random: return "NOMA-Random";
    case BaselineKind::tdma_match: return "TDMA-Match";
    case BaselineKind::tdma_random: return "TDMA-Random";
    case BaselineKind::proposed: return "Proposed";
    case BaselineKind::oracle_order: return "OracleOrder";
  }
  throw std::invalid_argument("unknown BaselineKind");
}

BaselineKind parse_baseline(std::string_view name) {
  for (auto k : kAll)
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown algorithm: " + std::string(name));
}

std::span<const BaselineKind> all_baselines() { return kAll; }

// ---------------------------------------------------------------------------
// TDMA

std::vector<double> tdma_link_rates(const Scenario& scenario, const Allocation& allocation) {
  std::vector<double> R(scenario.num_devices(), 0.0);
  for (int k = 0; k < scenario.num_devices(); ++k)
    if (allocation.served(k))
      R[k] = scenario.single_user_capacity(allocation.server_of[k], allocation.channel_of[k], k);
  return R;
}

namespace {

bool tdma_feasible_rates(const Scenario& scenario, const Allocation& allocation,
                         const std::vector<double>& R, double theta) {
  const double T = scenario.deadline();
  for (int m = 0; m < scenario.num_servers(); ++m) {
    double load = 0, time = 0;
    for (int k : allocation.server_devices(m)) {
      if (!allocation.served(k)) continue;
      if (!(R[k] > 0)) {
        if (theta > 0) return false;
        continue;
      }
      const double t = theta * T / R[k];
      load += t * (scenario.frequency(m) + R[k]);
      time += t;
    }
    if (load > scenario.frequency(m) * T || time > T) return false;
  }
  return true;
}

}  // namespace

bool tdma_feasible(const Scenario& scenario, const Allocation& allocation, double theta) {
  return tdma_feasible_rates(scenario, allocation, tdma_link_rates(scenario, allocation), theta);
}

Solution tdma_maximin(const Scenario& scenario, const Allocation& allocation,
                      const ScaSettings& settings) {
  if (!is_valid(allocation)) throw std::invalid_argument("tdma_maximin: invalid allocation");
  const int M = scenario.num_servers();
  const int K = scenario.num_devices();
  const double T = scenario.deadline();
  const auto R = tdma_link_rates(scenario, allocation);

  double hi = std::numeric_limits<double>::infinity();
  bool any = false;
  for (int k = 0; k < K; ++k)
    if (allocation.served(k)) {
      hi = std::min(hi, R[k]);
      any = true;
    }
  double lo = 0;
  if (any && hi > 0) {
    const double eps = settings.bisection_tol * hi;
    while (hi - lo > eps) {
      const double mid = 0.5 * (lo + hi);
      (tdma_feasible_rates(scenario, allocation, R, mid) ? lo : hi) = mid;
    }
  }

  Solution sol;
  sol.allocation = allocation;
  sol.eta = lo;
  sol.order = DecodingOrder(K);
  sol.powers = PowerAllocation(K);
  sol.link_rates = R;
  sol.rates.assign(K, 0.0);
  sol.schedule.offload_time.assign(M, 0.0);
  sol.schedule.compute_time.assign(M, T);
  sol.schedule.frequency.assign(K, 0.0);
  for (int k = 0; k < K; ++k) {
    if (!allocation.served(k)) {
      sol.unserved_devices.push_back(k);
      continue;
    }
    sol.powers(k, 0) = scenario.max_power(k);
    sol.order.set_rank({k, 0}, 1);
    sol.order.set_rank({k, 1}, 2);
    if (R[k] > 0) sol.schedule.offload_time[allocation.server_of[k]] += lo * T / R[k];
  }
  for (int m = 0; m < M; ++m) sol.schedule.compute_time[m] = T - sol.schedule.offload_time[m];
  for (int k = 0; k < K; ++k) {
    if (!allocation.served(k) || !(lo > 0)) continue;
    sol.rates[k] = lo;
    sol.schedule.frequency[k] = lo * T / sol.schedule.compute_time[allocation.server_of[k]];
  }
  sol.mcor = mcor(sol.rates);
  return sol;
}

// ---------------------------------------------------------------------------

Solution noma_maximin(const Scenario& scenario, const Allocation& allocation,
                      const ScaSettings& settings) {
  return bisection_mcor(scenario, allocation, settings, true);
}

PowerAllocation sumrate_power(const GroupProblem& problem, const DecodingOrder& order,
                              const ScaSettings& settings) {
  return sca_utility_power(problem, order, PowerObjective::sum_rate, settings).powers;
}

PowerAllocation propfair_power(const GroupProblem& problem, const DecodingOrder& order,
                               const ScaSettings& settings) {
  return sca_utility_power(problem, order, PowerObjective::proportional_fair, settings).powers;
}

Solution utility_solution(const Scenario& scenario, const Allocation& allocation,
                          PowerObjective objective, const ScaSettings& settings) {
  if (!is_valid(allocation)) throw std::invalid_argument("utility_solution: invalid allocation");
  const int K = scenario.num_devices();
  Solution sol;
  sol.allocation = allocation;
  sol.order = DecodingOrder(K);
  sol.powers = PowerAllocation(K);
  for (int m = 0; m < scenario.num_servers(); ++m) {
    const auto problem = GroupProblem::build(scenario, allocation, m);
    if (problem.size() == 0) continue;
    DecodingOrder order = init_decoding_order(problem);
    DecodingOrder best_order = order;
    PowerAllocation best_powers = initial_powers(problem);
    double best = -std::numeric_limits<double>::infinity();
    for (int round = 1; round <= settings.alt_max_iters; ++round) {
      const auto res = sca_utility_power(problem, order, objective, settings);
      sol.sca_iterations.push_back(res.iterations);
      if (res.objective > best) {
        best = res.objective;
        best_order = order;
        best_powers = res.powers;
      }
      auto next = order_from_powers(problem, res.powers);
      if (next == order) break;
      order = std::move(next);
    }
    for (const auto& mem : problem.members)
      for (int part = 0; part < 2; ++part) {
        sol.order.set_rank({mem.device, part}, best_order.rank(mem.device, part));
        sol.powers(mem.device, part) = best_powers(mem.device, part);
      }
  }
  evaluate_solution(scenario, sol);
  sol.eta = sol.mcor;
  return sol;
}

Allocation random_allocation(std::mt19937_64& rng, int servers, int channels, int devices) {
  if (servers < 1 || channels < 1 || devices < 1)
    throw std::invalid_argument("random_allocation: sizes must be positive");
  Allocation a(servers, channels, devices);
  std::uniform_int_distribution<int> pick_channel(0, channels - 1);
  std::uniform_int_distribution<int> pick_server(0, servers - 1);
  for (int k = 0; k < devices; ++k) a.channel_of[k] = pick_channel(rng);
  std::vector<int> unit_server(channels, kUnassigned);
  for (int n = 0; n < channels; ++n) unit_server[n] = pick_server(rng);
  for (int k = 0; k < devices; ++k) a.server_of[k] = unit_server[a.channel_of[k]];
  return a;
}

// ---------------------------------------------------------------------------
// Order search

std::vector<DecodingOrder> enumerate_orders(const GroupProblem& problem) {
  std::vector<DecodingOrder> out{DecodingOrder(problem.num_devices)};
  for (int n : problem.channels()) {
    std::vector<SubMessage> msgs;
    for (int k : problem.channel_group(n))
      for (int i = 0; i < 2; ++i) msgs.push_back({k, i});
    std::sort(msgs.begin(), msgs.end());
    std::vector<std::vector<SubMessage>> perms;
    do {
      bool canonical = true;
      for (std::size_t a = 0; a < msgs.size() && canonical; ++a)
        if (msgs[a].part == 1)
          for (std::size_t b = a + 1; b < msgs.size(); ++b)
            if (msgs[b].device == msgs[a].device && msgs[b].part == 0) canonical = false;
      if (canonical) perms.push_back(msgs);
    } while (std::next_permutation(msgs.begin(), msgs.end()));

    std::vector<DecodingOrder> next;
    next.reserve(out.size() * perms.size());
    for (const auto& base : out)
      for (const auto& seq : perms) {
        DecodingOrder o = base;
        o.assign(seq);
        next.push_back(std::move(o));
      }
    out = std::move(next);
  }
  return out;
}

Solution oracle_order_search(const Scenario& scenario, const Allocation& allocation,
                             const ScaSettings& settings) {
  for (int m = 0; m < scenario.num_servers(); ++m) {
    const auto problem = GroupProblem::build(scenario, allocation, m);
    if (2 * problem.size() > kOracleMaxMessages)
      throw std::length_error("oracle_order_search: server " + std::to_string(m) + " has " +
                              std::to_string(2 * problem.size()) + " sub-messages, limit is " +
                              std::to_string(kOracleMaxMessages));
  }
  const FeasibilityCheck check = [&settings](const GroupProblem& problem, double eta,
                                             const PowerAllocation* start) {
    AlternatingResult best;
    best.objective = -std::numeric_limits<double>::infinity();
    for (const auto& order : enumerate_orders(problem)) {
      const auto sca = sca_maximin_power(problem, order, eta, settings, start);
      best.sca_iterations.push_back(sca.iterations);
      ++best.rounds;
      if (sca.objective > best.objective) {
        best.objective = sca.objective;
        best.powers = sca.powers;
        best.order = order;
      }
      if (is_feasible_objective(problem, sca.objective, eta)) {
        best.feasible = true;
        break;
      }
    }
    return best;
  };
  return bisection_mcor(scenario, allocation, settings, false, check);
}

}  // namespace rsmamec
