#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rsmamec/baselines.hpp"
#include "rsmamec/config.hpp"
#include "rsmamec/matching.hpp"
#include "rsmamec/rate_core.hpp"

namespace rsmamec {

struct InstanceResult {
  std::uint64_t seed = 0;
  BaselineKind algorithm = BaselineKind::proposed;
  double mcor = 0;                 // bits/s
  double jain = 1;
  std::vector<double> rates;       // bits/s
  std::vector<int> sca_iterations; // every SCA invocation of the run
  int swaps = 0;
  bool swap_cap_hit = false;
  int unmatched_units = 0;
  double wall_ms = 0;
  double first_stage_mcor = 0;     // before matching, where the pipeline has one
  std::string error;               // set when the run threw
  std::optional<Solution> solution;
  std::vector<MatchingEvent> matching_trace;  // filled when config.matching.record_trace
};

/// Seed stream used for the random allocation of a run.
inline constexpr std::uint64_t kAllocationStream = 0xA110CA7E;

/// Runs one algorithm on generate_scenario(config.system, seed). For
/// Proposed and the Match variants: random allocation, optimization,
/// matching against the optimized stage, re-optimization. Random variants
/// stop after the first optimization. Exceptions are not caught.
InstanceResult run_instance(const RunConfig& config, std::uint64_t seed, BaselineKind algorithm,
                            bool keep_solution = false);

/// Mean of the iteration counts, 0 when empty.
double mean_iterations(std::span<const int> iterations);

/// SCA trace rows as CSV: iteration, eta, objective, feasibility, plus the
/// server and alternation round they belong to.
void write_sca_trace_csv(std::ostream& out, std::span<const ScaTraceRow> rows);

/// JSON dump of a solved instance.
std::string solution_json(const RunConfig& config, const InstanceResult& result);

// ---------------------------------------------------------------------------
// Sweeps

/// Parameters a sweep can vary. Values are given in config units
/// (F_m in Mbps, P_k in dBm).
enum class SweepParam { F_m, K, P_k, M, N };

SweepParam parse_sweep_param(std::string_view name);
std::string_view to_string(SweepParam param);
/// Copy of `base` with the parameter set to `value`.
RunConfig with_param(const RunConfig& base, SweepParam param, double value);

struct SweepSpec {
  SweepParam param = SweepParam::F_m;
  std::vector<double> values;
  int runs = 1;
  std::vector<BaselineKind> algorithms{BaselineKind::proposed};
  std::uint64_t master_seed = 1;
  bool timing = false;  // write measured wall times instead of 0

  void validate() const;
};

/// Sub-seed of run r. Depends only on the master seed and r, so every cell
/// and every algorithm of a sweep sees the same instances.
std::uint64_t run_seed(std::uint64_t master_seed, int run);

struct SweepRow {
  std::size_t value_index = 0;
  double value = 0;
  int run = 0;
  InstanceResult result;
};

/// Cross product of values, runs and algorithms on `workers` threads. Rows
/// come back ordered by (value, run, algorithm) whatever the scheduling.
std::vector<SweepRow> run_sweep(const RunConfig& config, const SweepSpec& spec);

inline constexpr const char* kCsvHeader = "param,value,seed,algo,mcor_bps,jain,sca_iters_mean,swaps,wall_ms";

void write_sweep_csv(std::ostream& out, const SweepSpec& spec, std::span<const SweepRow> rows);

struct CellSummary {
  double value = 0;
  BaselineKind algorithm = BaselineKind::proposed;
  int count = 0;
  int failures = 0;
  double mcor_mean = 0, mcor_std = 0;
  double jain_mean = 0, jain_std = 0;
};

/// Mean and sample standard deviation of MCOR and Jain's index per
/// (value, algorithm). Failed rows are counted, not averaged.
std::vector<CellSummary> summarize(const SweepSpec& spec, std::span<const SweepRow> rows);

// ---------------------------------------------------------------------------
// Convergence statistics

struct CdfPoint {
  int x = 0;
  double fraction = 0;  // share of samples <= x
};

/// Empirical CDF on the integers from the smallest to the largest sample.
std::vector<CdfPoint> empirical_cdf(std::span<const int> samples);

struct ConvergenceStats {
  std::vector<CdfPoint> sca_iterations;
  std::vector<CdfPoint> swaps;
  std::size_t sca_invocations = 0;
  std::size_t instances = 0;
};

ConvergenceStats convergence_stats(std::span<const InstanceResult> results);

/// CDF value at x (1 beyond the last point, 0 before the first).
double cdf_at(std::span<const CdfPoint> cdf, int x);

// ---------------------------------------------------------------------------
// Decoding-order comparison on a single server and channel

struct Table1Row {
  int num_devices = 0;
  BaselineKind algorithm = BaselineKind::proposed;
  int runs = 0;
  double mcor_mean = 0;
  double wall_ms_mean = 0;
};

struct Table1Result {
  std::vector<Table1Row> rows;
  /// Per instance (K, seed, proposed mcor, oracle mcor).
  struct Pair {
    int num_devices = 0;
    std::uint64_t seed = 0;
    double proposed = 0;
    double oracle = 0;
  };
  std::vector<Pair> pairs;
};

/// Proposed against OracleOrder with M = N = 1 for each K in `devices`.
Table1Result table1_comparison(const RunConfig& config, int runs, std::span<const int> devices,
                               std::uint64_t master_seed = 1);

}  // namespace rsmamec
