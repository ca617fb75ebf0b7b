#include "rsmamec/rate_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rsmamec {

Allocation::Allocation(int servers, int channels, int devices)
    : num_servers(servers), num_channels(channels), server_of(devices, kUnassigned),
      channel_of(devices, kUnassigned) {}

std::vector<int> Allocation::group(int m, int n) const {
  std::vector<int> out;
  for (int k = 0; k < num_devices(); ++k)
    if (server_of[k] == m && channel_of[k] == n) out.push_back(k);
  return out;
}

std::vector<int> Allocation::server_devices(int m) const {
  std::vector<int> out;
  for (int k = 0; k < num_devices(); ++k)
    if (server_of[k] == m) out.push_back(k);
  return out;
}

Allocation Allocation::from_matrices(const std::vector<std::vector<int>>& alpha,
                                     const std::vector<std::vector<int>>& beta) {
  if (alpha.empty() || beta.empty()) throw std::invalid_argument("from_matrices: empty matrix");
  const int K = static_cast<int>(alpha.front().size());
  Allocation a(static_cast<int>(alpha.size()), static_cast<int>(beta.size()), K);
  auto fill = [K](const std::vector<std::vector<int>>& mat, std::vector<int>& out, const char* name) {
    for (int row = 0; row < static_cast<int>(mat.size()); ++row) {
      if (static_cast<int>(mat[row].size()) != K)
        throw std::invalid_argument(std::string("from_matrices: ragged ") + name);
      for (int k = 0; k < K; ++k) {
        const int v = mat[row][k];
        if (v != 0 && v != 1) throw std::invalid_argument(std::string(name) + " entries must be 0/1");
        if (v == 1) {
          if (out[k] != kUnassigned)
            throw std::invalid_argument(std::string("device assigned twice in ") + name);
          out[k] = row;
        }
      }
    }
  };
  fill(alpha, a.server_of, "alpha");
  fill(beta, a.channel_of, "beta");
  return a;
}

bool is_valid(const Allocation& a) {
  if (a.server_of.size() != a.channel_of.size()) return false;
  std::vector<int> channel_server(a.num_channels, kUnassigned);
  for (int k = 0; k < a.num_devices(); ++k) {
    const int m = a.server_of[k];
    const int n = a.channel_of[k];
    if (m != kUnassigned && (m < 0 || m >= a.num_servers)) return false;
    if (n != kUnassigned && (n < 0 || n >= a.num_channels)) return false;
    if (m == kUnassigned || n == kUnassigned) continue;
    if (channel_server[n] == kUnassigned) channel_server[n] = m;
    else if (channel_server[n] != m) return false;
  }
  return true;
}

void DecodingOrder::assign(std::span<const SubMessage> sequence) {
  int r = 1;
  for (const auto& s : sequence) set_rank(s, r++);
}

std::vector<SubMessage> DecodingOrder::sequence(std::span<const int> group) const {
  std::vector<SubMessage> seq;
  seq.reserve(2 * group.size());
  for (int k : group)
    for (int i = 0; i < 2; ++i) {
      if (rank(k, i) <= 0) throw std::domain_error("DecodingOrder: unranked sub-message in group");
      seq.push_back({k, i});
    }
  std::sort(seq.begin(), seq.end(),
            [this](const SubMessage& a, const SubMessage& b) { return rank(a) < rank(b); });
  return seq;
}

bool is_permutation_order(const DecodingOrder& order, std::span<const int> group) {
  std::vector<int> seen(2 * group.size() + 1, 0);
  for (int k : group)
    for (int i = 0; i < 2; ++i) {
      const int r = order.rank(k, i);
      if (r < 1 || r > static_cast<int>(2 * group.size()) || seen[r]++) return false;
    }
  return true;
}

bool PowerAllocation::is_valid(const Scenario& scenario, double slack) const {
  if (num_devices() != scenario.num_devices()) return false;
  for (int k = 0; k < num_devices(); ++k) {
    if ((*this)(k, 0) < 0 || (*this)(k, 1) < 0) return false;
    if (total(k) > scenario.max_power(k) * (1 + slack)) return false;
  }
  return true;
}

std::vector<SubMessage> interference_set(std::span<const int> group, const DecodingOrder& order,
                                         int k, int part) {
  if (std::find(group.begin(), group.end(), k) == group.end())
    throw std::domain_error("interference_set: device not in group");
  const int own = order.rank(k, part);
  if (own <= 0) throw std::domain_error("interference_set: sub-message is unranked");
  std::vector<SubMessage> out;
  for (int kk : group)
    for (int i = 0; i < 2; ++i)
      if (order.rank(kk, i) > own) out.push_back({kk, i});
  return out;
}

double submessage_rate(const Scenario& scenario, int m, int n, std::span<const int> group,
                       const DecodingOrder& order, const PowerAllocation& powers, int k, int part) {
  double interference = 0;
  for (const auto& s : interference_set(group, order, k, part))
    interference += scenario.gain(m, n, s.device) * powers(s.device, s.part);
  const double own = scenario.gain(m, n, k) * powers(k, part);
  const double noise = scenario.noise_power();
  return scenario.bandwidth() * std::log2(1.0 + own / (noise + interference));
}

double device_link_rate(const Scenario& scenario, int m, int n, std::span<const int> group,
                        const DecodingOrder& order, const PowerAllocation& powers, int k) {
  return submessage_rate(scenario, m, n, group, order, powers, k, 0) +
         submessage_rate(scenario, m, n, group, order, powers, k, 1);
}

std::vector<double> group_link_rates(const Scenario& scenario, int m, int n,
                                     std::span<const int> group, const DecodingOrder& order,
                                     const PowerAllocation& powers) {
  const auto seq = order.sequence(group);
  const double noise = scenario.noise_power();
  const double B = scenario.bandwidth();
  std::vector<double> received(seq.size());
  for (std::size_t j = 0; j < seq.size(); ++j)
    received[j] = scenario.gain(m, n, seq[j].device) * powers(seq[j].device, seq[j].part);
  std::vector<double> rates(group.size(), 0.0);
  double tail = 0;  // received power of sub-messages decoded after position j
  for (std::size_t j = seq.size(); j-- > 0;) {
    const double r = B * std::log2(1.0 + received[j] / (noise + tail));
    const auto pos = std::find(group.begin(), group.end(), seq[j].device) - group.begin();
    rates[pos] += r;
    tail += received[j];
  }
  return rates;
}

ServerSchedule schedule_from_rates(double server_frequency, std::span<const double> link_rates,
                                   double deadline) {
  ServerSchedule s;
  s.frequency.assign(link_rates.size(), 0.0);
  const double total = std::accumulate(link_rates.begin(), link_rates.end(), 0.0);
  if (!(total > 0)) {
    s.offload_time = deadline;
    s.compute_time = 0;
    return s;
  }
  s.offload_time = deadline * server_frequency / (server_frequency + total);
  s.compute_time = deadline - s.offload_time;
  for (std::size_t k = 0; k < link_rates.size(); ++k)
    s.frequency[k] = server_frequency * link_rates[k] / total;
  return s;
}

double offload_rate(double offload_time, double deadline, double link_rate) {
  return offload_time / deadline * link_rate;
}

double mcor(std::span<const double> rates) {
  if (rates.empty()) throw std::domain_error("mcor: empty rate list");
  return *std::min_element(rates.begin(), rates.end());
}

double jain_index(std::span<const double> rates) {
  if (rates.empty()) throw std::domain_error("jain_index: empty rate list");
  double sum = 0, sq = 0;
  for (double r : rates) {
    sum += r;
    sq += r * r;
  }
  if (sq == 0) return 1.0;
  return sum * sum / (static_cast<double>(rates.size()) * sq);
}

void evaluate_solution(const Scenario& scenario, Solution& sol) {
  const int M = scenario.num_servers();
  const int N = scenario.num_channels();
  const int K = scenario.num_devices();
  const auto& alloc = sol.allocation;
  sol.link_rates.assign(K, 0.0);
  sol.rates.assign(K, 0.0);
  sol.schedule.offload_time.assign(M, scenario.deadline());
  sol.schedule.compute_time.assign(M, 0.0);
  sol.schedule.frequency.assign(K, 0.0);
  sol.unserved_devices.clear();

  for (int m = 0; m < M; ++m) {
    for (int n = 0; n < N; ++n) {
      const auto group = alloc.group(m, n);
      if (group.empty()) continue;
      const auto rates = group_link_rates(scenario, m, n, group, sol.order, sol.powers);
      for (std::size_t i = 0; i < group.size(); ++i) sol.link_rates[group[i]] = rates[i];
    }
    const auto members = alloc.server_devices(m);
    std::vector<double> link;
    for (int k : members) link.push_back(alloc.served(k) ? sol.link_rates[k] : 0.0);
    const auto sched = schedule_from_rates(scenario.frequency(m), link, scenario.deadline());
    sol.schedule.offload_time[m] = sched.offload_time;
    sol.schedule.compute_time[m] = sched.compute_time;
    for (std::size_t i = 0; i < members.size(); ++i) {
      const int k = members[i];
      sol.schedule.frequency[k] = sched.frequency[i];
      sol.rates[k] = offload_rate(sched.offload_time, scenario.deadline(), link[i]);
    }
  }
  for (int k = 0; k < K; ++k)
    if (!alloc.served(k)) sol.unserved_devices.push_back(k);
  sol.mcor = mcor(sol.rates);
}

std::string check_solution(const Scenario& scenario, const Solution& sol, double tol) {
  std::ostringstream err;
  const int M = scenario.num_servers();
  const int K = scenario.num_devices();
  const double T = scenario.deadline();
  if (!is_valid(sol.allocation)) return "allocation violates the channel/server coupling";
  if (!sol.powers.is_valid(scenario, 1e-9)) return "power allocation violates the budget";
  if (static_cast<int>(sol.rates.size()) != K) return "rate vector has wrong size";
  if (sol.mcor != mcor(sol.rates)) return "mcor differs from min rate";
  for (int m = 0; m < M; ++m) {
    const double to = sol.schedule.offload_time[m];
    const double tc = sol.schedule.compute_time[m];
    if (to < -tol * T || tc < -tol * T) return "negative phase time";
    if (std::abs(to + tc - T) > tol * T) {
      err << "server " << m << ": t_o + t_c = " << to + tc << " != T";
      return err.str();
    }
    double used = 0;
    for (int k : sol.allocation.server_devices(m)) {
      const double f = sol.schedule.frequency[k];
      used += f;
      if (f < 0) return "negative frequency";
      if (f > 0) {
        const double need = sol.rates[k] * T / f;
        if (std::abs(need - tc) > tol * T) {
          err << "device " << k << ": r T / f = " << need << " but t_c = " << tc;
          return err.str();
        }
      } else if (sol.rates[k] > tol * scenario.frequency(m)) {
        err << "device " << k << " has positive rate but no frequency";
        return err.str();
      }
    }
    if (used > scenario.frequency(m) * (1 + tol)) {
      err << "server " << m << " frequency over-allocated";
      return err.str();
    }
  }
  return {};
}

}  // namespace rsmamec
