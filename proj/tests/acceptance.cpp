// Acceptance runner. Prints one PASS/FAIL line per criterion; detail lines
// start with two spaces. Usage: acceptance [--criterion N] (all by default).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "grid_oracle.hpp"
#include "lp_oracle.hpp"
#include "rsmamec/harness.hpp"
#include "test_support.hpp"

using namespace rsmamec;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool report(int id, bool ok, const std::string& what) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  return ok;
}

void detail(const char* fmt, auto... args) {
  std::printf("  ");
  std::printf(fmt, args...);
  std::printf("\n");
  std::fflush(stdout);
}

RunConfig defaults() {
  RunConfig c;
  c.workers = 1;
  return c;
}

// Cell means of a sweep, logging any failed run.
std::vector<CellSummary> sweep_means(const RunConfig& c, SweepParam param, std::vector<double> values,
                                     std::vector<BaselineKind> algos, int runs) {
  SweepSpec spec;
  spec.param = param;
  spec.values = std::move(values);
  spec.runs = runs;
  spec.algorithms = std::move(algos);
  const auto rows = run_sweep(c, spec);
  for (const auto& r : rows)
    if (!r.result.error.empty())
      detail("run failed: %s=%g seed %llu %s: %s", std::string(to_string(param)).c_str(), r.value,
             static_cast<unsigned long long>(r.result.seed), std::string(to_string(r.result.algorithm)).c_str(),
             r.result.error.c_str());
  return summarize(spec, rows);
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t t = i; t <= j; ++t) r[idx[t]] = 0.5 * static_cast<double>(i + j) + 1;
    i = j + 1;
  }
  return r;
}

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------

bool criterion1() {
  const auto c = defaults();
  const std::vector<int> devices{2};
  const auto t0 = Clock::now();
  const auto t = table1_comparison(c, 100, devices);
  const double secs = seconds_since(t0);
  const double prop = t.rows[0].mcor_mean, oracle = t.rows[1].mcor_mean;
  const double gap = (oracle - prop) / oracle;
  detail("Proposed %.4f Mbps, OracleOrder %.4f Mbps, gap %.3f%%, %.1f s", prop / 1e6, oracle / 1e6,
         100 * gap, secs);
  const bool ok = prop >= 2.45e6 && prop <= 3.35e6 && gap <= 0.05 && secs < 300;
  char buf[160];
  std::snprintf(buf, sizeof buf, "M=N=1 K=2 100 seeds: Proposed %.3f Mbps in [2.45,3.35], gap %.2f%% <= 5%%, %.0f s < 300 s",
                prop / 1e6, 100 * gap, secs);
  return report(1, ok, buf);
}

bool criterion2() {
  const auto c = defaults();
  SweepSpec spec;
  spec.param = SweepParam::K;
  spec.values = {static_cast<double>(c.system.num_devices)};
  spec.runs = 50;
  std::vector<InstanceResult> results;
  for (const auto& r : run_sweep(c, spec))
    if (r.result.error.empty()) results.push_back(r.result);
  const auto st = convergence_stats(results);
  const double at5 = cdf_at(st.sca_iterations, 5);
  detail("%zu instances, %zu SCA invocations", st.instances, st.sca_invocations);
  for (int x : {1, 2, 3, 5, 10, 20, 50}) detail("share within %d iterations: %.4f", x, cdf_at(st.sca_iterations, x));
  char buf[128];
  std::snprintf(buf, sizeof buf, "default config 50 seeds: %.1f%% of SCA invocations within 5 iterations (need >= 85%%)",
                100 * at5);
  return report(2, st.instances == 50 && at5 >= 0.85, buf);
}

bool criterion3() {
  const auto c = defaults();
  struct Trend {
    SweepParam param;
    std::vector<double> values;
    double sign;
  };
  const std::vector<Trend> trends{
      {SweepParam::F_m, {10, 15, 20, 25, 30}, 1},
      {SweepParam::P_k, {10, 15, 20, 25}, 1},
      {SweepParam::M, {2, 3, 4, 5}, 1},
      {SweepParam::N, {2, 3, 4, 5}, 1},
      {SweepParam::K, {3, 6, 9, 12}, -1},
  };
  bool ok = true;
  std::string summary;
  for (const auto& tr : trends) {
    const auto cells = sweep_means(c, tr.param, tr.values, {BaselineKind::proposed}, 50);
    std::vector<double> means;
    std::string line;
    bool failures = false;
    for (const auto& cell : cells) {
      means.push_back(cell.mcor_mean);
      failures |= cell.failures > 0;
      char b[64];
      std::snprintf(b, sizeof b, " %g:%.4f", cell.value, cell.mcor_mean / 1e6);
      line += b;
    }
    const double rho = spearman(tr.values, means);
    const bool good = !failures && std::abs(rho - tr.sign) < 1e-12;
    ok &= good;
    detail("%s mean MCOR (Mbps):%s  rho %.3f %s", std::string(to_string(tr.param)).c_str(), line.c_str(), rho,
           good ? "ok" : "BAD");
    char b[48];
    std::snprintf(b, sizeof b, "%s%s rho=%.2f", summary.empty() ? "" : ", ", std::string(to_string(tr.param)).c_str(), rho);
    summary += b;
  }
  return report(3, ok, "trend suite 50 seeds per cell: " + summary);
}

bool criterion4() {
  const auto c = defaults();
  const std::vector<BaselineKind> algos{
      BaselineKind::proposed,          BaselineKind::rsma_match_maxmin, BaselineKind::noma_match,
      BaselineKind::tdma_match,        BaselineKind::rsma_match_sumrate, BaselineKind::rsma_random_sumrate,
      BaselineKind::noma_random,       BaselineKind::tdma_random,       BaselineKind::rsma_random_propfair,
  };
  const auto cells = sweep_means(c, SweepParam::K, {static_cast<double>(c.system.num_devices)}, algos, 50);
  auto mean = [&](const std::vector<CellSummary>& cs, BaselineKind k) {
    for (const auto& x : cs)
      if (x.algorithm == k) return x.mcor_mean;
    return std::nan("");
  };
  for (const auto& x : cells)
    detail("%-22s %.4f Mbps (%d runs, %d failed)", std::string(to_string(x.algorithm)).c_str(), x.mcor_mean / 1e6,
           x.count, x.failures);
  struct Pair {
    BaselineKind hi, lo;
  };
  const std::vector<Pair> chain{
      {BaselineKind::proposed, BaselineKind::rsma_match_maxmin},
      {BaselineKind::rsma_match_maxmin, BaselineKind::noma_match},
      {BaselineKind::noma_match, BaselineKind::tdma_match},
      {BaselineKind::rsma_match_sumrate, BaselineKind::rsma_random_sumrate},
      {BaselineKind::noma_match, BaselineKind::noma_random},
      {BaselineKind::tdma_match, BaselineKind::tdma_random},
  };
  bool ok = true;
  for (const auto& p : chain) {
    const bool good = mean(cells, p.hi) >= mean(cells, p.lo);
    ok &= good;
    detail("%s >= %s: %s", std::string(to_string(p.hi)).c_str(), std::string(to_string(p.lo)).c_str(),
           good ? "ok" : "BAD");
  }
  for (const auto& x : cells) ok &= x.failures == 0;

  const auto k12 = sweep_means(c, SweepParam::K, {12},
                               {BaselineKind::proposed, BaselineKind::rsma_match_sumrate,
                                BaselineKind::rsma_random_sumrate},
                               50);
  const double prop12 = mean(k12, BaselineKind::proposed);
  double worst = 0;
  for (auto k : {BaselineKind::rsma_match_sumrate, BaselineKind::rsma_random_sumrate}) {
    const double share = mean(k12, k) / prop12;
    worst = std::max(worst, share);
    detail("K=12 %s %.4f Mbps = %.1f%% of Proposed %.4f Mbps", std::string(to_string(k)).c_str(),
           mean(k12, k) / 1e6, 100 * share, prop12 / 1e6);
  }
  const bool sum_ok = worst < 0.25;
  char buf[200];
  std::snprintf(buf, sizeof buf, "ordering chain and Match >= Random %s; K=12 sum-rate at most %.1f%% of Proposed (need < 25%%)",
                ok ? "hold" : "broken", 100 * worst);
  return report(4, ok && sum_ok, buf);
}

// ---------------------------------------------------------------------------
// Property suite

struct Tally {
  long checks = 0, failures = 0;
  void check(bool ok) {
    ++checks;
    failures += !ok;
  }
};

PowerAllocation random_interior(const GroupProblem& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 0.9);
  PowerAllocation p(g.num_devices);
  for (const auto& m : g.members) {
    p(m.device, 0) = u(rng) * m.max_power / 2;
    p(m.device, 1) = u(rng) * m.max_power / 2;
  }
  return p;
}

SystemConfig cell(int devices) {
  SystemConfig c;
  c.num_servers = c.num_channels = 1;
  c.num_devices = devices;
  return c;
}

Tally telescoping() {
  Tally t;
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0, 1);
  const SystemConfig cfg;
  for (int trial = 0; trial < 1000; ++trial) {
    const int size = 1 + trial % 6;
    std::vector<double> gains(size);
    for (auto& h : gains) h = testing::gain_for_snr(std::pow(10.0, 5 * u(rng) - 1));
    const auto sc = testing::single_cell(gains);
    PowerAllocation p(size);
    std::vector<SubMessage> seq;
    double rx = 0;
    for (int k = 0; k < size; ++k) {
      p(k, 0) = u(rng) * cfg.max_tx_power_w / 2;
      p(k, 1) = u(rng) * cfg.max_tx_power_w / 2;
      rx += gains[k] * p.total(k);
      seq.push_back({k, 0});
      seq.push_back({k, 1});
    }
    std::shuffle(seq.begin(), seq.end(), rng);
    DecodingOrder o(size);
    o.assign(seq);
    std::vector<int> g(size);
    std::iota(g.begin(), g.end(), 0);
    const auto r = group_link_rates(sc, 0, 0, g, o, p);
    const double total = std::accumulate(r.begin(), r.end(), 0.0);
    const double cap = cfg.bandwidth_hz * std::log2(1 + rx / cfg.noise_power_w());
    t.check(std::abs(total - cap) <= 1e-10 * cap);
  }
  return t;
}

Tally taylor() {
  Tally t;
  std::mt19937_64 rng(102);
  for (int seed = 0; seed < 100; ++seed) {
    const int K = 2 + seed % 3;
    const auto sc = generate_scenario(cell(K), 1000 + seed);
    const auto g = GroupProblem::build(sc, testing::everyone_on(1, 1, K, 0, 0), 0);
    const auto order = init_decoding_order(g);
    const auto p = random_interior(g, rng);
    const double eta = 0.3 * g.min_single_user_capacity();
    const auto lin = linearize(g, order, p, eta);
    const auto zl = zl_values(g, order, p, eta);
    const auto at = lin.evaluate(p);
    for (std::size_t i = 0; i < zl.size(); ++i) t.check(std::abs(at[i] - zl[i].l) <= 1e-12 * std::abs(zl[i].l));
    for (std::size_t i = 0; i < lin.rows().size(); ++i) {
      const auto& grad = lin.rows()[i].gradient;
      double worst = 0, scale = 0;
      for (const auto& m : g.members)
        for (int part = 0; part < 2; ++part) {
          const double h = 1e-6 * m.max_power;
          auto up = p, down = p;
          up(m.device, part) += h;
          down(m.device, part) -= h;
          const double fd =
              (zl_values(g, order, up, eta)[i].l - zl_values(g, order, down, eta)[i].l) / (2 * h);
          const double an = grad[2 * static_cast<std::size_t>(m.device) + part];
          worst = std::max(worst, std::abs(an - fd));
          scale = std::max(scale, std::abs(an));
        }
      t.check(worst <= 1e-5 * scale);
    }
  }
  return t;
}

// Every recorded trace, split into SCA invocations by the iteration counter.
void check_trace(std::span<const ScaTraceRow> rows, Tally& t) {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].iteration > rows[i - 1].iteration) t.check(rows[i].objective >= rows[i - 1].objective);
}

Tally sca_monotone(std::vector<InstanceResult>& emitted) {
  Tally t;
  auto c = defaults();
  c.sca.record_trace = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    for (auto algo : all_baselines()) {
      if (algo == BaselineKind::oracle_order) continue;
      auto r = run_instance(c, 500 + seed, algo, true);
      check_trace(r.solution->trace, t);
      emitted.push_back(std::move(r));
    }
  for (int seed = 0; seed < 30; ++seed) {
    const auto sc = generate_scenario(cell(3), 600 + seed);
    const auto g = GroupProblem::build(sc, testing::everyone_on(1, 1, 3, 0, 0), 0);
    const auto order = init_decoding_order(g);
    for (double f : {0.1, 0.4, 0.7, 0.95}) {
      const auto r = sca_maximin_power(g, order, f * g.min_single_user_capacity(), ScaSettings{});
      for (std::size_t i = 1; i < r.objectives.size(); ++i) t.check(r.objectives[i] >= r.objectives[i - 1]);
    }
  }
  return t;
}

Tally schedules(const std::vector<InstanceResult>& emitted) {
  Tally t;
  for (const auto& r : emitted) {
    const auto sc = generate_scenario(defaults().system, r.seed);
    t.check(check_solution(sc, *r.solution, 1e-9).empty());
  }
  // small cells through the order search as well
  RunConfig c = defaults();
  c.system.num_servers = c.system.num_channels = 1;
  c.system.num_devices = 2;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = run_instance(c, seed, BaselineKind::oracle_order, true);
    t.check(check_solution(generate_scenario(c.system, seed), *r.solution, 1e-9).empty());
  }
  return t;
}

Tally blocking_pairs() {
  Tally t;
  for (int i = 0; i < 200; ++i) {
    SystemConfig c;
    c.num_servers = 1 + i % 4;
    c.num_channels = 2 + (i / 4) % 3;
    c.num_devices = 2 + i % 9;
    const auto sc = generate_scenario(c, 700 + i);
    MatchingState st(sc, default_snapshot(sc));
    st.set_channel_of(gs_channel_matching(st));
    const auto res = swap_refine(st, MatchingSettings{});
    if (res.cap_hit) continue;  // the property only covers uncapped exits
    st.set_channel_of(res.channel_of);
    bool clean = true;
    for (int a = 0; a < c.num_devices; ++a)
      for (int b = a + 1; b < c.num_devices; ++b)
        if (st.channel_of()[a] != st.channel_of()[b] && is_swap_blocking(st, a, b)) clean = false;
    t.check(clean);
  }
  return t;
}

Tally tdma_lp() {
  Tally t;
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> u(0, 2);
  const SystemConfig c;
  for (int seed = 0; seed < 100; ++seed) {
    const auto sc = generate_scenario(c, 800 + seed);
    auto alloc_rng = make_rng(800 + seed, {kAllocationStream});
    const auto a = random_allocation(alloc_rng, c.num_servers, c.num_channels, c.num_devices);
    const auto sol = tdma_maximin(sc, a, ScaSettings{});
    for (int i = 0; i < 5; ++i) {
      const double theta = u(rng) * sol.eta;
      t.check(tdma_feasible(sc, a, theta) == lp::tdma_lp_feasible(sc, a, theta));
    }
    const auto R = tdma_link_rates(sc, a);
    double bracket = 1e300;
    for (int k = 0; k < c.num_devices; ++k)
      if (a.served(k)) bracket = std::min(bracket, R[k]);
    const double opt = lp::tdma_lp_optimum(sc, a);
    t.check(sol.eta <= opt * (1 + 1e-9) && sol.eta >= opt - ScaSettings{}.bisection_tol * bracket);
  }
  return t;
}

Tally grid() {
  Tally t;
  for (int seed = 0; seed < 20; ++seed) {
    const auto sc = generate_scenario(cell(2), 900 + seed);
    const auto g = GroupProblem::build(sc, testing::everyone_on(1, 1, 2, 0, 0), 0);
    const auto order = init_decoding_order(g);
    const auto p0 = initial_powers(g);
    const double eta = (0.1 + 0.04 * seed) * g.min_single_user_capacity();
    const auto inner = solve_inner(g, order, p0, eta, ScaSettings{});
    const double oracle = testing::grid_inner_max(g, order, p0, eta);
    t.check(std::abs(inner.objective - oracle) <= 1e-3 * std::abs(oracle));
  }
  return t;
}

Tally single_user() {
  Tally t;
  RunConfig c = defaults();
  c.system.num_servers = c.system.num_channels = c.system.num_devices = 1;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto sc = generate_scenario(c.system, seed);
    const double R = sc.single_user_capacity(0, 0, 0), F = sc.frequency(0);
    const double eta = R * F / (F + R);
    const auto r = run_instance(c, seed, BaselineKind::proposed);
    t.check(r.mcor <= eta * (1 + 1e-12) && r.mcor >= eta - c.sca.bisection_tol * std::min(R, F));
  }
  return t;
}

bool criterion5() {
  struct Item {
    const char* name;
    std::function<Tally()> run;
  };
  std::vector<InstanceResult> emitted;
  const std::vector<Item> items{
      {"SIC telescoping, 1000 groups, 1e-10", telescoping},
      {"Taylor anchor 1e-12 and gradient 1e-5, 100 instances", taylor},
      {"SCA objective monotone in every trace", [&] { return sca_monotone(emitted); }},
      {"schedule equalities on every emitted solution, 1e-9", [&] { return schedules(emitted); }},
      {"no blocking pair at uncapped swap exit, 200 instances", blocking_pairs},
      {"TDMA minimal times agree with the LP, 100 instances", tdma_lp},
      {"two-device inner subproblem within 1e-3 of the grid, 20 instances", grid},
      {"single-user optimum R F / (F + R) within bisection tolerance", single_user},
  };
  bool ok = true;
  long total = 0;
  for (const auto& it : items) {
    const auto t0 = Clock::now();
    const Tally t = it.run();
    ok &= t.failures == 0 && t.checks > 0;
    total += t.checks;
    detail("%s %s: %ld checks, %ld failed (%.1f s)", t.failures == 0 && t.checks > 0 ? "ok " : "BAD", it.name,
           t.checks, t.failures, seconds_since(t0));
  }
  return report(5, ok, "property suite, " + std::to_string(total) + " checks");
}

bool criterion6() {
  RunConfig c = defaults();
  SweepSpec spec;
  spec.param = SweepParam::F_m;
  spec.values = {10, 20, 30};
  spec.runs = 4;
  spec.algorithms.clear();
  for (auto a : all_baselines())
    if (a != BaselineKind::oracle_order) spec.algorithms.push_back(a);
  auto csv = [&](int workers) {
    c.workers = workers;
    std::ostringstream out;
    write_sweep_csv(out, spec, run_sweep(c, spec));
    return out.str();
  };
  const auto a = csv(1), b = csv(1), d = csv(3);
  detail("%zu bytes per CSV", a.size());
  return report(6, a == b && a == d && !a.empty(),
                "repeated sweep with the same master seed is byte-identical (1, 1 and 3 workers)");
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion 1..6]\n");
      return 2;
    }
  }
  const std::vector<std::function<bool()>> all{criterion1, criterion2, criterion3,
                                               criterion4, criterion5, criterion6};
  if (only < 0 || only > static_cast<int>(all.size())) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  bool ok = true;
  for (int i = 1; i <= static_cast<int>(all.size()); ++i) {
    if (only != 0 && only != i) continue;
    try {
      ok &= all[i - 1]();
    } catch (const std::exception& e) {
      ok &= report(i, false, std::string("threw: ") + e.what());
    }
  }
  return ok ? 0 : 1;
}
