#include "rsmamec/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "rsmamec/matching.hpp"
#include "rsmamec/scenario.hpp"

namespace rsmamec {

namespace {

using Clock = std::chrono::steady_clock;

struct Stage {
  Solution solution;
  bool single_message = false;
};

Stage optimize(BaselineKind kind, const Scenario& sc, const Allocation& alloc, const ScaSettings& s,
               bool final_stage) {
  switch (kind) {
    case BaselineKind::proposed:
    case BaselineKind::rsma_match_maxmin:
      return {bisection_mcor(sc, alloc, s), false};
    case BaselineKind::oracle_order:
      if (final_stage) return {oracle_order_search(sc, alloc, s), false};
      return {bisection_mcor(sc, alloc, s), false};
    case BaselineKind::rsma_match_sumrate:
    case BaselineKind::rsma_random_sumrate:
      return {utility_solution(sc, alloc, PowerObjective::sum_rate, s), false};
    case BaselineKind::rsma_random_propfair:
      return {utility_solution(sc, alloc, PowerObjective::proportional_fair, s), false};
    case BaselineKind::noma_match:
    case BaselineKind::noma_random:
      return {noma_maximin(sc, alloc, s), true};
    case BaselineKind::tdma_match:
    case BaselineKind::tdma_random:
      return {tdma_maximin(sc, alloc, s), true};
  }
  throw std::invalid_argument("optimize: unknown algorithm");
}

bool matches(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::rsma_random_propfair:
    case BaselineKind::rsma_random_sumrate:
    case BaselineKind::noma_random:
    case BaselineKind::tdma_random:
      return false;
    default:
      return true;
  }
}

PreferenceRule rule_of(BaselineKind kind) {
  return kind == BaselineKind::rsma_match_maxmin || kind == BaselineKind::rsma_match_sumrate
             ? PreferenceRule::sum_rate
             : PreferenceRule::min_rate;
}

void append(std::vector<int>& dst, const std::vector<int>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("fmt: to_chars failed");
  return std::string(buf, end);
}

int as_count(double value, const char* what) {
  if (!(value >= 1) || value != std::floor(value) || value > 1e6)
    throw std::invalid_argument(std::string(what) + " must be a positive integer");
  return static_cast<int>(value);
}

}  // namespace

InstanceResult run_instance(const RunConfig& config, std::uint64_t seed, BaselineKind algorithm,
                            bool keep_solution) {
  config.system.validate();
  config.sca.validate();
  config.matching.validate();
  const auto t0 = Clock::now();

  const Scenario sc = generate_scenario(config.system, seed);
  auto rng = make_rng(seed, {kAllocationStream});
  const Allocation initial =
      random_allocation(rng, sc.num_servers(), sc.num_channels(), sc.num_devices());

  InstanceResult res;
  res.seed = seed;
  res.algorithm = algorithm;

  Stage stage = optimize(algorithm, sc, initial, config.sca, !matches(algorithm));
  append(res.sca_iterations, stage.solution.sca_iterations);
  res.first_stage_mcor = stage.solution.mcor;
  const auto first_trace = stage.solution.trace;

  if (matches(algorithm)) {
    auto snap = snapshot_from_solution(sc, stage.solution, stage.single_message);
    snap.time_shared = algorithm == BaselineKind::tdma_match;
    auto matched = allocate(sc, snap, rule_of(algorithm), config.matching);
    res.swaps = matched.swaps;
    res.swap_cap_hit = matched.swap_cap_hit;
    res.unmatched_units = static_cast<int>(matched.unmatched_channels.size());
    res.matching_trace = std::move(matched.trace);
    stage = optimize(algorithm, sc, matched.allocation, config.sca, true);
    append(res.sca_iterations, stage.solution.sca_iterations);
    stage.solution.swaps = matched.swaps;
    // keep the first stage's SCA trace in front of the final one
    stage.solution.trace.insert(stage.solution.trace.begin(), first_trace.begin(), first_trace.end());
  }

  Solution& sol = stage.solution;
  if (auto why = check_solution(sc, sol); !why.empty())
    throw std::logic_error("run_instance: emitted solution fails validation: " + why);

  res.rates = sol.rates;
  res.mcor = sol.mcor;
  res.jain = jain_index(res.rates);
  res.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  if (keep_solution) res.solution = std::move(sol);
  return res;
}

double mean_iterations(std::span<const int> iterations) {
  if (iterations.empty()) return 0;
  return std::accumulate(iterations.begin(), iterations.end(), 0.0) /
         static_cast<double>(iterations.size());
}

void write_sca_trace_csv(std::ostream& out, std::span<const ScaTraceRow> rows) {
  out << "iteration,eta_bps,objective,feasible,server,round\n";
  for (const auto& r : rows)
    out << r.iteration << ',' << fmt(r.eta) << ',' << fmt(r.objective) << ',' << (r.feasible ? 1 : 0)
        << ',' << r.server << ',' << r.round << '\n';
}

std::string solution_json(const RunConfig& config, const InstanceResult& result) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["seed"] = result.seed;
  j["algorithm"] = std::string(to_string(result.algorithm));
  j["config"] = to_config_text(config);
  j["mcor_bps"] = result.mcor;
  j["jain"] = result.jain;
  j["rates_bps"] = result.rates;
  j["first_stage_mcor_bps"] = result.first_stage_mcor;
  j["sca_iterations"] = result.sca_iterations;
  j["swaps"] = result.swaps;
  j["swap_cap_hit"] = result.swap_cap_hit;
  j["unmatched_units"] = result.unmatched_units;
  if (!result.error.empty()) j["error"] = result.error;
  if (result.solution) {
    const Solution& s = *result.solution;
    ordered_json sj;
    sj["server_of"] = s.allocation.server_of;
    sj["channel_of"] = s.allocation.channel_of;
    sj["eta_bps"] = s.eta;
    const int K = s.powers.num_devices();
    std::vector<std::array<double, 2>> powers(K);
    std::vector<std::array<int, 2>> ranks(K);
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < 2; ++i) {
        powers[k][i] = s.powers(k, i);
        ranks[k][i] = s.order.rank(k, i);
      }
    sj["powers_w"] = powers;
    sj["sic_ranks"] = ranks;
    sj["link_rates_bps"] = s.link_rates;
    sj["offload_time_s"] = s.schedule.offload_time;
    sj["compute_time_s"] = s.schedule.compute_time;
    sj["frequency_bps"] = s.schedule.frequency;
    sj["unserved_devices"] = s.unserved_devices;
    j["solution"] = std::move(sj);
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------

SweepParam parse_sweep_param(std::string_view name) {
  for (auto p : {SweepParam::F_m, SweepParam::K, SweepParam::P_k, SweepParam::M, SweepParam::N})
    if (to_string(p) == name) return p;
  throw std::invalid_argument("unknown sweep parameter: " + std::string(name));
}

std::string_view to_string(SweepParam param) {
  switch (param) {
    case SweepParam::F_m: return "F_m";
    case SweepParam::K: return "K";
    case SweepParam::P_k: return "P_k";
    case SweepParam::M: return "M";
    case SweepParam::N: return "N";
  }
  throw std::invalid_argument("unknown SweepParam");
}

RunConfig with_param(const RunConfig& base, SweepParam param, double value) {
  RunConfig c = base;
  switch (param) {
    case SweepParam::F_m: c.system.server_frequency_bps = value * 1e6; break;
    case SweepParam::P_k: c.system.max_tx_power_w = dbm_to_watt(value); break;
    case SweepParam::K: c.system.num_devices = as_count(value, "K"); break;
    case SweepParam::M: c.system.num_servers = as_count(value, "M"); break;
    case SweepParam::N: c.system.num_channels = as_count(value, "N"); break;
  }
  c.system.validate();
  return c;
}

void SweepSpec::validate() const {
  if (values.empty()) throw std::invalid_argument("sweep: value list is empty");
  if (runs < 1) throw std::invalid_argument("sweep: runs must be >= 1");
  if (algorithms.empty()) throw std::invalid_argument("sweep: algorithm list is empty");
}

std::uint64_t run_seed(std::uint64_t master_seed, int run) {
  if (run < 0) throw std::invalid_argument("run_seed: negative run");
  return derive_seed(master_seed, {static_cast<std::uint64_t>(run)});
}

std::vector<SweepRow> run_sweep(const RunConfig& config, const SweepSpec& spec) {
  spec.validate();
  std::vector<RunConfig> cells;
  for (double v : spec.values) cells.push_back(with_param(config, spec.param, v));

  const std::size_t A = spec.algorithms.size();
  const std::size_t R = static_cast<std::size_t>(spec.runs);
  std::vector<SweepRow> rows(spec.values.size() * R * A);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& row = rows[i];
    row.value_index = i / (R * A);
    row.value = spec.values[row.value_index];
    row.run = static_cast<int>((i / A) % R);
    row.result.algorithm = spec.algorithms[i % A];
    row.result.seed = run_seed(spec.master_seed, row.run);
  }

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < rows.size();) {
      auto& row = rows[i];
      const auto seed = row.result.seed;
      const auto algo = row.result.algorithm;
      try {
        row.result = run_instance(cells[row.value_index], seed, algo);
      } catch (const std::exception& e) {
        row.result = InstanceResult{};
        row.result.seed = seed;
        row.result.algorithm = algo;
        row.result.mcor = std::numeric_limits<double>::quiet_NaN();
        row.result.jain = std::numeric_limits<double>::quiet_NaN();
        row.result.error = e.what();
      }
    }
  };
  const int workers = std::max(1, config.workers);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const SweepSpec& spec, std::span<const SweepRow> rows) {
  out << kCsvHeader << '\n';
  const auto param = to_string(spec.param);
  for (const auto& row : rows) {
    const auto& r = row.result;
    out << param << ',' << fmt(row.value) << ',' << r.seed << ',' << to_string(r.algorithm) << ','
        << fmt(r.mcor) << ',' << fmt(r.jain) << ',' << fmt(mean_iterations(r.sca_iterations))
        << ',' << r.swaps << ',' << fmt(spec.timing ? r.wall_ms : 0.0) << '\n';
  }
}

std::vector<CellSummary> summarize(const SweepSpec& spec, std::span<const SweepRow> rows) {
  std::vector<CellSummary> out;
  for (std::size_t vi = 0; vi < spec.values.size(); ++vi)
    for (auto algo : spec.algorithms) {
      CellSummary c;
      c.value = spec.values[vi];
      c.algorithm = algo;
      std::vector<double> m, j;
      for (const auto& row : rows) {
        if (row.value_index != vi || row.result.algorithm != algo) continue;
        if (!row.result.error.empty()) {
          ++c.failures;
          continue;
        }
        m.push_back(row.result.mcor);
        j.push_back(row.result.jain);
      }
      c.count = static_cast<int>(m.size());
      auto stats = [](const std::vector<double>& x, double& mean, double& sd) {
        if (x.empty()) return;
        mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
        if (x.size() < 2) return;
        double ss = 0;
        for (double v : x) ss += (v - mean) * (v - mean);
        sd = std::sqrt(ss / static_cast<double>(x.size() - 1));
      };
      stats(m, c.mcor_mean, c.mcor_std);
      stats(j, c.jain_mean, c.jain_std);
      out.push_back(c);
    }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<CdfPoint> empirical_cdf(std::span<const int> samples) {
  if (samples.empty()) return {};
  std::vector<int> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  std::vector<CdfPoint> out;
  const double n = static_cast<double>(s.size());
  for (int x = s.front(); x <= s.back(); ++x) {
    const auto le = std::upper_bound(s.begin(), s.end(), x) - s.begin();
    out.push_back({x, static_cast<double>(le) / n});
  }
  return out;
}

ConvergenceStats convergence_stats(std::span<const InstanceResult> results) {
  std::vector<int> iters, swaps;
  for (const auto& r : results) {
    append(iters, r.sca_iterations);
    swaps.push_back(r.swaps);
  }
  ConvergenceStats st;
  st.sca_iterations = empirical_cdf(iters);
  st.swaps = empirical_cdf(swaps);
  st.sca_invocations = iters.size();
  st.instances = results.size();
  return st;
}

double cdf_at(std::span<const CdfPoint> cdf, int x) {
  if (cdf.empty() || x >= cdf.back().x) return 1.0;
  if (x < cdf.front().x) return 0.0;
  return cdf[static_cast<std::size_t>(x - cdf.front().x)].fraction;
}

// ---------------------------------------------------------------------------

Table1Result table1_comparison(const RunConfig& config, int runs, std::span<const int> devices,
                               std::uint64_t master_seed) {
  if (runs < 1) throw std::invalid_argument("table1_comparison: runs must be >= 1");
  Table1Result out;
  for (int K : devices) {
    RunConfig c = config;
    c.system.num_servers = 1;
    c.system.num_channels = 1;
    c.system.num_devices = K;
    std::array<Table1Row, 2> rows;
    rows[0] = {K, BaselineKind::proposed, runs, 0, 0};
    rows[1] = {K, BaselineKind::oracle_order, runs, 0, 0};
    for (int r = 0; r < runs; ++r) {
      const auto seed = run_seed(master_seed, r);
      const auto p = run_instance(c, seed, BaselineKind::proposed);
      const auto o = run_instance(c, seed, BaselineKind::oracle_order);
      out.pairs.push_back({K, seed, p.mcor, o.mcor});
      rows[0].mcor_mean += p.mcor / runs;
      rows[0].wall_ms_mean += p.wall_ms / runs;
      rows[1].mcor_mean += o.mcor / runs;
      rows[1].wall_ms_mean += o.wall_ms / runs;
    }
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  }
  return out;
}

}  // namespace rsmamec
