#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rsmamec/harness.hpp"

using namespace rsmamec;

namespace {

RunConfig load(const std::string& path, int workers) {
  RunConfig c = path.empty() ? RunConfig{} : load_config(path);
  if (workers > 0) c.workers = workers;
  return c;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  return f;
}

void print_cdf(const char* name, const std::vector<CdfPoint>& cdf) {
  std::printf("%s\n  x  cdf\n", name);
  for (const auto& p : cdf) std::printf("%3d  %.4f\n", p.x, p.fraction);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Max-min fair computation offloading for RSMA multi-server MEC networks"};
  app.require_subcommand(1);

  std::string config_path;
  int workers = 0;
  std::uint64_t seed = 1;

  // run
  auto* run = app.add_subcommand("run", "Solve one instance with one algorithm");
  std::string algo = "Proposed", json_path, sca_trace_path, matching_trace_path;
  run->add_option("--config", config_path, "key=value config file");
  run->add_option("--algo", algo, "Algorithm name, e.g. Proposed or TDMA-Random");
  run->add_option("--seed", seed, "Instance seed");
  run->add_option("--json", json_path, "Write the full solution as JSON");
  run->add_option("--sca-trace", sca_trace_path, "Write SCA iterations as CSV");
  run->add_option("--matching-trace", matching_trace_path, "Write matching events as CSV");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep over one parameter");
  std::string param = "F_m", out_path;
  std::vector<double> values;
  std::vector<std::string> algos{"Proposed"};
  int runs = 10;
  bool timing = false;
  sweep->add_option("--config", config_path, "key=value config file");
  sweep->add_option("--param", param, "F_m (Mbps), K, P_k (dBm), M or N")->required();
  sweep->add_option("--values", values, "Comma separated values")->required()->delimiter(',');
  sweep->add_option("--runs", runs, "Instances per value")->required();
  sweep->add_option("--out", out_path, "CSV output path")->required();
  sweep->add_option("--algos", algos, "Comma separated algorithm names")->delimiter(',');
  sweep->add_option("--seed", seed, "Master seed");
  sweep->add_option("--workers", workers, "Worker threads (overrides the config)");
  sweep->add_flag("--timing", timing, "Write measured wall times instead of 0");

  // table1
  auto* table1 = app.add_subcommand("table1", "Proposed against exhaustive decoding orders, M=N=1");
  int t1_runs = 100;
  std::vector<int> devices{2, 3};
  table1->add_option("--config", config_path, "key=value config file");
  table1->add_option("--runs", t1_runs, "Instances per K")->required();
  table1->add_option("--devices", devices, "Comma separated K values")->delimiter(',');
  table1->add_option("--seed", seed, "Master seed");

  // convergence
  auto* conv = app.add_subcommand("convergence", "CDFs of SCA iterations and swap counts");
  int c_runs = 20;
  std::string cdf_out;
  conv->add_option("--config", config_path, "key=value config file");
  conv->add_option("--runs", c_runs, "Instances")->required();
  conv->add_option("--seed", seed, "Master seed");
  conv->add_option("--workers", workers, "Worker threads (overrides the config)");
  conv->add_option("--out", cdf_out, "Write both CDFs as CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig config = load(config_path, workers);

    if (*run) {
      RunConfig c = config;
      if (!sca_trace_path.empty()) c.sca.record_trace = true;
      if (!matching_trace_path.empty()) c.matching.record_trace = true;
      const auto res = run_instance(c, seed, parse_baseline(algo), true);
      std::printf("algo %s seed %llu\n", std::string(to_string(res.algorithm)).c_str(),
                  static_cast<unsigned long long>(res.seed));
      std::printf("mcor_bps %.6g\njain %.6f\n", res.mcor, res.jain);
      if (res.first_stage_mcor != res.mcor)
        std::printf("first_stage_mcor_bps %.6g\n", res.first_stage_mcor);
      std::printf("sca_invocations %zu sca_iters_mean %.3f swaps %d unmatched_units %d\n",
                  res.sca_iterations.size(), mean_iterations(res.sca_iterations), res.swaps,
                  res.unmatched_units);
      for (std::size_t k = 0; k < res.rates.size(); ++k)
        std::printf("  device %zu rate_bps %.6g\n", k, res.rates[k]);
      if (!json_path.empty()) open_out(json_path) << solution_json(c, res) << '\n';
      if (!sca_trace_path.empty()) {
        auto f = open_out(sca_trace_path);
        write_sca_trace_csv(f, res.solution->trace);
      }
      if (!matching_trace_path.empty()) {
        auto f = open_out(matching_trace_path);
        write_matching_trace_csv(f, res.matching_trace);
      }
    } else if (*sweep) {
      SweepSpec spec;
      spec.param = parse_sweep_param(param);
      spec.values = values;
      spec.runs = runs;
      spec.algorithms.clear();
      for (const auto& a : algos) spec.algorithms.push_back(parse_baseline(a));
      spec.master_seed = seed;
      spec.timing = timing;
      const auto rows = run_sweep(config, spec);
      {
        auto f = open_out(out_path);
        write_sweep_csv(f, spec, rows);
      }
      std::printf("%-8s %-22s %5s %5s %14s %12s %8s\n", "value", "algo", "n", "fail", "mcor_mean_bps",
                  "mcor_std", "jain");
      for (const auto& c : summarize(spec, rows))
        std::printf("%-8g %-22s %5d %5d %14.6g %12.4g %8.4f\n", c.value,
                    std::string(to_string(c.algorithm)).c_str(), c.count, c.failures, c.mcor_mean,
                    c.mcor_std, c.jain_mean);
      for (const auto& r : rows)
        if (!r.result.error.empty())
          std::fprintf(stderr, "value %g seed %llu %s: %s\n", r.value,
                       static_cast<unsigned long long>(r.result.seed),
                       std::string(to_string(r.result.algorithm)).c_str(), r.result.error.c_str());
    } else if (*table1) {
      const auto t = table1_comparison(config, t1_runs, devices, seed);
      std::printf("%3s %-12s %5s %14s %10s\n", "K", "algo", "runs", "mcor_mean_Mbps", "wall_ms");
      for (const auto& r : t.rows)
        std::printf("%3d %-12s %5d %14.4f %10.2f\n", r.num_devices,
                    std::string(to_string(r.algorithm)).c_str(), r.runs, r.mcor_mean / 1e6,
                    r.wall_ms_mean);
      int below = 0;
      for (const auto& p : t.pairs) below += p.oracle < p.proposed;
      std::printf("instances with oracle below proposed: %d of %zu\n", below, t.pairs.size());
    } else if (*conv) {
      SweepSpec spec;
      spec.param = SweepParam::K;
      spec.values = {static_cast<double>(config.system.num_devices)};
      spec.runs = c_runs;
      spec.master_seed = seed;
      const auto rows = run_sweep(config, spec);
      std::vector<InstanceResult> results;
      for (const auto& r : rows)
        if (r.result.error.empty()) results.push_back(r.result);
      const auto st = convergence_stats(results);
      std::printf("instances %zu sca_invocations %zu\n", st.instances, st.sca_invocations);
      print_cdf("sca iterations", st.sca_iterations);
      print_cdf("swaps", st.swaps);
      std::printf("share of SCA invocations within 5 iterations: %.4f\n", cdf_at(st.sca_iterations, 5));
      if (!cdf_out.empty()) {
        auto f = open_out(cdf_out);
        f << "series,x,cdf\n";
        for (const auto& p : st.sca_iterations) f << "sca_iterations," << p.x << ',' << p.fraction << '\n';
        for (const auto& p : st.swaps) f << "swaps," << p.x << ',' << p.fraction << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
