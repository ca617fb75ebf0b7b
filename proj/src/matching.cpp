#include "rsmamec/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rsmamec {

StageSnapshot default_snapshot(const Scenario& scenario, bool single_message) {
  StageSnapshot s;
  const int K = scenario.num_devices();
  s.powers = PowerAllocation(K);
  for (int k = 0; k < K; ++k) {
    const double P = scenario.max_power(k);
    s.powers(k, 0) = single_message ? P : P / 2;
    s.powers(k, 1) = single_message ? 0.0 : P / 2;
  }
  s.offload_time.assign(scenario.num_servers(), scenario.deadline());
  s.frequency.assign(K, 0.0);
  s.rates.assign(K, 0.0);
  return s;
}

StageSnapshot snapshot_from_solution(const Scenario& scenario, const Solution& solution,
                                     bool single_message) {
  StageSnapshot s = default_snapshot(scenario, single_message);
  for (int k = 0; k < scenario.num_devices(); ++k) {
    if (!solution.allocation.served(k)) continue;
    s.powers(k, 0) = solution.powers(k, 0);
    s.powers(k, 1) = solution.powers(k, 1);
    s.frequency[k] = solution.schedule.frequency[k];
  }
  if (static_cast<int>(solution.rates.size()) == scenario.num_devices()) s.rates = solution.rates;
  if (static_cast<int>(solution.schedule.offload_time.size()) == scenario.num_servers())
    s.offload_time = solution.schedule.offload_time;
  return s;
}

void write_matching_trace_csv(std::ostream& out, std::span<const MatchingEvent> events) {
  out << "phase,round,proposer,proposee,accepted\n";
  for (const auto& e : events)
    out << e.phase << ',' << e.round << ',' << e.proposer << ',' << e.proposee << ','
        << (e.accepted ? 1 : 0) << '\n';
}

MatchingState::MatchingState(const Scenario& scenario, StageSnapshot snapshot, PreferenceRule rule)
    : scenario_(&scenario), snapshot_(std::move(snapshot)), rule_(rule),
      channel_of_(scenario.num_devices(), kUnassigned) {
  if (snapshot_.powers.num_devices() != scenario.num_devices() ||
      static_cast<int>(snapshot_.offload_time.size()) != scenario.num_servers())
    throw std::invalid_argument("MatchingState: snapshot does not fit the scenario");
}

void MatchingState::set_channel_of(std::vector<int> channel_of) {
  if (static_cast<int>(channel_of.size()) != scenario_->num_devices())
    throw std::invalid_argument("set_channel_of: wrong size");
  channel_of_ = std::move(channel_of);
}

std::vector<int> MatchingState::group(int n) const {
  std::vector<int> out;
  for (int k = 0; k < static_cast<int>(channel_of_.size()); ++k)
    if (channel_of_[k] == n) out.push_back(k);
  return out;
}

std::vector<double> MatchingState::server_scores(int m, int n, std::span<const int> group) const {
  const Scenario& sc = *scenario_;
  const auto size = group.size();
  std::vector<double> rate(size, 0.0);
  if (snapshot_.time_shared) {
    // largest common rate theta of the group alone on m
    const double F = sc.frequency(m);
    double load = 0, time = 0;
    for (int k : group) {
      const double R = sc.single_user_capacity(m, n, k);
      load += (F + R) / R;
      time += 1 / R;
    }
    const double theta = std::min(F / load, 1 / time);
    std::fill(rate.begin(), rate.end(), theta > 0 ? theta : 0.0);
    return rate;
  }
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double ga = sc.gain(m, n, group[a]);
    const double gb = sc.gain(m, n, group[b]);
    if (ga != gb) return ga > gb;
    return group[a] < group[b];
  });
  // decode every part 1, then every part 2; walk backwards for the tail sums
  double tail = 0;
  for (int part = 1; part >= 0; --part) {
    for (std::size_t j = size; j-- > 0;) {
      const std::size_t i = idx[j];
      const double rx = sc.gain(m, n, group[i]) * snapshot_.powers(group[i], part);
      rate[i] += sc.bandwidth() * std::log2(1.0 + rx / (sc.noise_power() + tail));
      tail += rx;
    }
  }
  const double share = snapshot_.offload_time[m] / sc.deadline();
  for (auto& r : rate) r *= share;
  return rate;
}

std::vector<double> MatchingState::member_preferences(int n, std::span<const int> group) const {
  std::vector<double> pref(group.size(), std::numeric_limits<double>::infinity());
  for (int m = 0; m < scenario_->num_servers(); ++m) {
    const auto r = server_scores(m, n, group);
    for (std::size_t i = 0; i < pref.size(); ++i) pref[i] = std::min(pref[i], r[i]);
  }
  return pref;
}

double device_channel_pref(const MatchingState& state, int k, int n, std::span<const int> existing) {
  if (std::find(existing.begin(), existing.end(), k) != existing.end())
    throw std::invalid_argument("device_channel_pref: device already in the group");
  std::vector<int> g(existing.begin(), existing.end());
  g.push_back(k);
  return state.member_preferences(n, g).back();
}

double channel_utility(const MatchingState& state, int n, std::span<const int> group) {
  if (group.empty()) return 0.0;
  const auto pref = state.member_preferences(n, group);
  if (state.rule() == PreferenceRule::sum_rate) return std::accumulate(pref.begin(), pref.end(), 0.0);
  return *std::min_element(pref.begin(), pref.end());
}

namespace {

// Value of k on its current channel given the other members.
double current_value(const MatchingState& state, const std::vector<int>& channel_of, int k) {
  const int n = channel_of[k];
  if (n == kUnassigned) return -std::numeric_limits<double>::infinity();
  std::vector<int> others;
  for (int j = 0; j < static_cast<int>(channel_of.size()); ++j)
    if (j != k && channel_of[j] == n) others.push_back(j);
  return device_channel_pref(state, k, n, others);
}

bool strictly_greater(double a, double b) {
  return a > b + kSwapTolerance * std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

std::vector<int> gs_channel_matching(const MatchingState& state, std::vector<MatchingEvent>* trace) {
  const int N = state.scenario().num_channels();
  const int K = state.scenario().num_devices();
  std::vector<int> channel_of(K, kUnassigned);
  std::vector<std::vector<int>> available(N);
  for (auto& a : available) {
    a.resize(K);
    std::iota(a.begin(), a.end(), 0);
  }
  MatchingState work = state;

  for (int round = 1;; ++round) {
    work.set_channel_of(channel_of);
    // request phase, all channels against the same snapshot
    std::vector<std::vector<int>> offers(K);
    bool any = false;
    for (int n = 0; n < N; ++n) {
      if (available[n].empty()) continue;
      any = true;
      auto members = work.group(n);
      int best = -1;
      double best_value = -std::numeric_limits<double>::infinity();
      for (int k : available[n]) {
        std::vector<int> g = members;
        if (std::find(g.begin(), g.end(), k) == g.end()) g.push_back(k);
        const double v = channel_utility(work, n, g);
        if (best < 0 || v > best_value) {
          best = k;
          best_value = v;
        }
      }
      available[n].erase(std::find(available[n].begin(), available[n].end(), best));
      offers[best].push_back(n);
    }
    if (!any) break;

    // response phase
    std::vector<int> next = channel_of;
    for (int k = 0; k < K; ++k) {
      if (offers[k].empty()) continue;
      int choice = channel_of[k];
      double choice_value = current_value(work, channel_of, k);
      for (int n : offers[k]) {
        if (n == channel_of[k]) continue;
        const double v = device_channel_pref(work, k, n, work.group(n));
        if (v > choice_value || (choice == kUnassigned && v >= choice_value)) {
          choice = n;
          choice_value = v;
        }
      }
      next[k] = choice;
      if (trace)
        for (int n : offers[k]) trace->push_back({"channel", round, n, k, n == choice});
    }
    channel_of = std::move(next);
  }
  return channel_of;
}

bool is_swap_blocking(const MatchingState& state, int k, int k2) {
  const auto& before = state.channel_of();
  const int n = before[k];
  const int n2 = before[k2];
  if (k == k2 || n == kUnassigned || n2 == kUnassigned || n == n2) return false;

  MatchingState after = state;
  auto swapped = before;
  std::swap(swapped[k], swapped[k2]);
  after.set_channel_of(swapped);

  const double old_vals[4] = {current_value(state, before, k), current_value(state, before, k2),
                              channel_utility(state, n, state.group(n)),
                              channel_utility(state, n2, state.group(n2))};
  const double new_vals[4] = {current_value(after, swapped, k), current_value(after, swapped, k2),
                              channel_utility(after, n, after.group(n)),
                              channel_utility(after, n2, after.group(n2))};
  bool gain = false;
  for (int i = 0; i < 4; ++i) {
    if (strictly_greater(old_vals[i], new_vals[i])) return false;
    if (strictly_greater(new_vals[i], old_vals[i])) gain = true;
  }
  return gain;
}

SwapResult swap_refine(const MatchingState& state, const MatchingSettings& settings,
                       std::vector<MatchingEvent>* trace) {
  const int K = state.scenario().num_devices();
  const long cap = static_cast<long>(settings.swap_cap_factor) * K * K;
  MatchingState work = state;
  SwapResult res;
  res.channel_of = state.channel_of();
  for (;;) {
    bool swapped = false;
    for (int k = 0; k < K && !swapped; ++k) {
      for (int k2 = k + 1; k2 < K; ++k2) {
        if (!is_swap_blocking(work, k, k2)) continue;
        if (res.swaps >= cap) {
          res.cap_hit = true;
          return res;
        }
        std::swap(res.channel_of[k], res.channel_of[k2]);
        work.set_channel_of(res.channel_of);
        ++res.swaps;
        if (trace) trace->push_back({"swap", res.swaps, k, k2, true});
        swapped = true;
        break;
      }
    }
    if (!swapped) break;
  }
  return res;
}

ServerMatching gs_mec_matching(const MatchingState& state, std::span<const double> frequency,
                               const MatchingSettings& settings, std::vector<MatchingEvent>* trace) {
  const Scenario& sc = state.scenario();
  const int M = sc.num_servers();
  const int N = sc.num_channels();
  const int K = sc.num_devices();
  if (static_cast<int>(frequency.size()) != K)
    throw std::invalid_argument("gs_mec_matching: frequency vector has wrong size");

  std::vector<int> units;  // channels with a nonempty group
  std::vector<std::vector<int>> groups;
  for (int n = 0; n < N; ++n) {
    auto g = state.group(n);
    if (g.empty()) continue;
    units.push_back(n);
    groups.push_back(std::move(g));
  }
  const auto U = units.size();

  // pref[m][u]: server m's (and the unit's) score of the pairing
  std::vector<std::vector<double>> pref(M, std::vector<double>(U, 0.0));
  for (std::size_t u = 0; u < U; ++u)
    for (int m = 0; m < M; ++m) {
      const auto r = state.server_scores(m, units[u], groups[u]);
      pref[m][u] = state.rule() == PreferenceRule::sum_rate
                       ? std::accumulate(r.begin(), r.end(), 0.0)
                       : *std::min_element(r.begin(), r.end());
    }

  // time-shared slots: offload time and computing budget a unit takes at m
  const bool slots = state.snapshot().time_shared;
  std::vector<std::vector<double>> need_time(M, std::vector<double>(U, 0.0));
  std::vector<std::vector<double>> need_load = need_time;
  if (slots) {
    const auto& target = state.snapshot().rates;
    if (static_cast<int>(target.size()) != K)
      throw std::invalid_argument("gs_mec_matching: time-shared snapshot needs per-device rates");
    for (std::size_t u = 0; u < U; ++u)
      for (int m = 0; m < M; ++m)
        for (int k : groups[u]) {
          if (!(target[k] > 0)) continue;
          const double R = sc.single_user_capacity(m, units[u], k);
          const double t = R > 0 ? target[k] * sc.deadline() / R
                                 : std::numeric_limits<double>::infinity();
          need_time[m][u] += t;
          need_load[m][u] += t * (sc.frequency(m) + R);
        }
  }

  auto max_f = [&](std::size_t u) {
    double f = 0;
    for (int k : groups[u]) f = std::max(f, frequency[k]);
    return f;
  };
  auto unit_f = [&](std::size_t u) {
    double f = 0;
    for (int k : groups[u]) f += frequency[k];
    return f;
  };

  std::vector<int> unit_server(U, kUnassigned);
  auto fits = [&](int m, std::size_t u, double left) {
    if (max_f(u) > left) return false;
    if (!slots) return true;
    double time = sc.deadline(), load = sc.frequency(m) * sc.deadline();
    for (std::size_t v = 0; v < U; ++v)
      if (unit_server[v] == m && v != u) {
        time -= need_time[m][v];
        load -= need_load[m][v];
      }
    const double slack = 1e-12;
    return need_time[m][u] <= time + slack * sc.deadline() &&
           need_load[m][u] <= load + slack * sc.frequency(m) * sc.deadline();
  };

  std::vector<std::vector<std::size_t>> available(M);
  for (int m = 0; m < M; ++m)
    for (std::size_t u = 0; u < U; ++u)
      if (fits(m, u, sc.frequency(m))) available[m].push_back(u);

  auto residual = [&](int m) {
    double r = sc.frequency(m);
    for (std::size_t u = 0; u < U; ++u)
      if (unit_server[u] == m) r -= unit_f(u);
    return r;
  };

  for (int round = 1;; ++round) {
    std::vector<std::vector<int>> offers(U);
    bool any = false;
    for (int m = 0; m < M; ++m) {
      if (available[m].empty()) continue;
      any = true;
      auto best = available[m].begin();
      for (auto it = available[m].begin(); it != available[m].end(); ++it)
        if (pref[m][*it] > pref[m][*best]) best = it;
      offers[*best].push_back(m);
      available[m].erase(best);
    }
    if (!any) break;
    for (std::size_t u = 0; u < U; ++u) {
      if (offers[u].empty()) continue;
      int choice = unit_server[u];
      for (int m : offers[u])
        if (choice == kUnassigned || pref[m][u] > pref[choice][u]) choice = m;
      unit_server[u] = choice;
      if (trace)
        for (int m : offers[u]) trace->push_back({"server", round, m, units[u], m == choice});
    }
    for (int m = 0; m < M; ++m) {
      const double left = residual(m);
      std::erase_if(available[m], [&](std::size_t u) { return !fits(m, u, left); });
    }
  }

  ServerMatching out;
  if (settings.place_unmatched) {
    for (std::size_t u = 0; u < U; ++u) {
      if (unit_server[u] != kUnassigned) continue;
      int best = 0;
      double best_left = residual(0);
      for (int m = 1; m < M; ++m) {
        const double left = residual(m);
        if (left > best_left) {
          best = m;
          best_left = left;
        }
      }
      unit_server[u] = best;
      ++out.placed_units;
    }
  }
  out.server_of.assign(K, kUnassigned);
  for (std::size_t u = 0; u < U; ++u) {
    if (unit_server[u] == kUnassigned) {
      out.unmatched_channels.push_back(units[u]);
      continue;
    }
    for (int k : groups[u]) out.server_of[k] = unit_server[u];
  }
  return out;
}

AllocationResult allocate(const Scenario& scenario, const StageSnapshot& snapshot,
                          PreferenceRule rule, const MatchingSettings& settings) {
  settings.validate();
  AllocationResult res;
  auto* trace = settings.record_trace ? &res.trace : nullptr;
  MatchingState state(scenario, snapshot, rule);
  state.set_channel_of(gs_channel_matching(state, trace));
  auto swapped = swap_refine(state, settings, trace);
  res.swaps = swapped.swaps;
  res.swap_cap_hit = swapped.cap_hit;
  state.set_channel_of(std::move(swapped.channel_of));
  auto servers = gs_mec_matching(state, snapshot.frequency, settings, trace);
  res.unmatched_channels = std::move(servers.unmatched_channels);

  res.allocation = Allocation(scenario.num_servers(), scenario.num_channels(), scenario.num_devices());
  for (int k = 0; k < scenario.num_devices(); ++k) {
    // a device whose unit found no server keeps its channel but is not served
    res.allocation.server_of[k] = servers.server_of[k];
    res.allocation.channel_of[k] = state.channel_of()[k];
  }
  return res;
}

}  // namespace rsmamec
