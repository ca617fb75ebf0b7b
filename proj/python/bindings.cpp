#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rsmamec/harness.hpp"

namespace py = pybind11;
using namespace rsmamec;

namespace {

std::vector<BaselineKind> parse_all(const std::vector<std::string>& names) {
  std::vector<BaselineKind> out;
  for (const auto& n : names) out.push_back(parse_baseline(n));
  return out;
}

SweepSpec make_spec(const std::string& param, std::vector<double> values, int runs,
                    const std::vector<std::string>& algorithms, std::uint64_t master_seed) {
  SweepSpec spec;
  spec.param = parse_sweep_param(param);
  spec.values = std::move(values);
  spec.runs = runs;
  spec.algorithms = parse_all(algorithms);
  spec.master_seed = master_seed;
  spec.validate();
  return spec;
}

py::dict row_dict(const SweepRow& r) {
  py::dict d;
  d["value"] = r.value;
  d["run"] = r.run;
  d["seed"] = r.result.seed;
  d["algorithm"] = std::string(to_string(r.result.algorithm));
  d["mcor_bps"] = r.result.mcor;
  d["jain"] = r.result.jain;
  d["sca_iters_mean"] = mean_iterations(r.result.sca_iterations);
  d["swaps"] = r.result.swaps;
  d["error"] = r.result.error;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "C++ core: scenarios, RSMA max-min optimization, matching, baselines and sweeps";

  py::class_<SystemConfig>(m, "SystemConfig")
      .def(py::init<>())
      .def_readwrite("num_servers", &SystemConfig::num_servers)
      .def_readwrite("num_channels", &SystemConfig::num_channels)
      .def_readwrite("num_devices", &SystemConfig::num_devices)
      .def_readwrite("bandwidth_hz", &SystemConfig::bandwidth_hz)
      .def_readwrite("deadline_s", &SystemConfig::deadline_s)
      .def_readwrite("noise_psd_w_per_hz", &SystemConfig::noise_psd_w_per_hz)
      .def_readwrite("max_tx_power_w", &SystemConfig::max_tx_power_w)
      .def_readwrite("server_frequency_bps", &SystemConfig::server_frequency_bps)
      .def_readwrite("placement_radius_km", &SystemConfig::placement_radius_km)
      .def_readwrite("min_distance_km", &SystemConfig::min_distance_km)
      .def("validate", &SystemConfig::validate)
      .def("noise_power_w", &SystemConfig::noise_power_w);

  py::class_<ScaSettings>(m, "ScaSettings")
      .def(py::init<>())
      .def_readwrite("sca_tol", &ScaSettings::sca_tol)
      .def_readwrite("sca_max_iters", &ScaSettings::sca_max_iters)
      .def_readwrite("alt_max_iters", &ScaSettings::alt_max_iters)
      .def_readwrite("bisection_tol", &ScaSettings::bisection_tol)
      .def_readwrite("inner_solver_tol", &ScaSettings::inner_solver_tol)
      .def_readwrite("inner_max_iters", &ScaSettings::inner_max_iters)
      .def_readwrite("warm_start", &ScaSettings::warm_start)
      .def_readwrite("record_trace", &ScaSettings::record_trace);

  py::class_<MatchingSettings>(m, "MatchingSettings")
      .def(py::init<>())
      .def_readwrite("place_unmatched", &MatchingSettings::place_unmatched)
      .def_readwrite("swap_cap_factor", &MatchingSettings::swap_cap_factor)
      .def_readwrite("record_trace", &MatchingSettings::record_trace);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("system", &RunConfig::system)
      .def_readwrite("sca", &RunConfig::sca)
      .def_readwrite("matching", &RunConfig::matching)
      .def_readwrite("workers", &RunConfig::workers);

  m.def("parse_config", [](const std::string& text) { return parse_config(text); }, py::arg("text"),
        "Parses key=value text in boundary units (dBm, Mbps, MHz).");
  m.def("load_config", [](const std::filesystem::path& p) { return load_config(p); }, py::arg("path"));
  m.def("to_config_text", &to_config_text, py::arg("config"));
  m.def("dbm_to_watt", &dbm_to_watt);
  m.def("watt_to_dbm", &watt_to_dbm);
  m.def("mean_channel_gain", &mean_channel_gain, py::arg("distance_km"));

  py::class_<Scenario>(m, "Scenario")
      .def_property_readonly("seed", &Scenario::seed)
      .def_property_readonly("num_servers", &Scenario::num_servers)
      .def_property_readonly("num_channels", &Scenario::num_channels)
      .def_property_readonly("num_devices", &Scenario::num_devices)
      .def("gain", &Scenario::gain, py::arg("m"), py::arg("n"), py::arg("k"))
      .def("link_distance", &Scenario::link_distance, py::arg("m"), py::arg("k"))
      .def("single_user_capacity", &Scenario::single_user_capacity, py::arg("m"), py::arg("n"), py::arg("k"));
  m.def("generate_scenario", &generate_scenario, py::arg("config"), py::arg("seed"));

  m.def("algorithms", [] {
    std::vector<std::string> out;
    for (auto k : all_baselines()) out.emplace_back(to_string(k));
    return out;
  });

  py::class_<InstanceResult>(m, "InstanceResult")
      .def_readonly("seed", &InstanceResult::seed)
      .def_property_readonly("algorithm", [](const InstanceResult& r) { return std::string(to_string(r.algorithm)); })
      .def_readonly("mcor", &InstanceResult::mcor)
      .def_readonly("jain", &InstanceResult::jain)
      .def_readonly("rates", &InstanceResult::rates)
      .def_readonly("sca_iterations", &InstanceResult::sca_iterations)
      .def_readonly("swaps", &InstanceResult::swaps)
      .def_readonly("unmatched_units", &InstanceResult::unmatched_units)
      .def_readonly("first_stage_mcor", &InstanceResult::first_stage_mcor)
      .def_readonly("wall_ms", &InstanceResult::wall_ms);

  m.def(
      "run_instance",
      [](const RunConfig& c, std::uint64_t seed, const std::string& algo, bool keep) {
        const auto kind = parse_baseline(algo);
        py::gil_scoped_release nogil;
        return run_instance(c, seed, kind, keep);
      },
      py::arg("config"), py::arg("seed"), py::arg("algorithm") = "Proposed", py::arg("keep_solution") = false);
  m.def("solution_json", &solution_json, py::arg("config"), py::arg("result"));
  m.def("jain_index", [](const std::vector<double>& r) { return jain_index(r); });

  m.def(
      "run_sweep",
      [](const RunConfig& c, const std::string& param, std::vector<double> values, int runs,
         const std::vector<std::string>& algorithms, std::uint64_t master_seed) {
        const auto spec = make_spec(param, std::move(values), runs, algorithms, master_seed);
        std::vector<SweepRow> rows;
        {
          py::gil_scoped_release nogil;
          rows = run_sweep(c, spec);
        }
        py::list out;
        for (const auto& r : rows) out.append(row_dict(r));
        return out;
      },
      py::arg("config"), py::arg("param"), py::arg("values"), py::arg("runs"),
      py::arg("algorithms") = std::vector<std::string>{"Proposed"}, py::arg("master_seed") = 1,
      "Sweep rows ordered by (value, run, algorithm).");
  m.def(
      "sweep_csv",
      [](const RunConfig& c, const std::string& param, std::vector<double> values, int runs,
         const std::vector<std::string>& algorithms, std::uint64_t master_seed) {
        const auto spec = make_spec(param, std::move(values), runs, algorithms, master_seed);
        std::ostringstream out;
        {
          py::gil_scoped_release nogil;
          write_sweep_csv(out, spec, run_sweep(c, spec));
        }
        return out.str();
      },
      py::arg("config"), py::arg("param"), py::arg("values"), py::arg("runs"),
      py::arg("algorithms") = std::vector<std::string>{"Proposed"}, py::arg("master_seed") = 1);

  m.def(
      "table1",
      [](const RunConfig& c, int runs, const std::vector<int>& devices, std::uint64_t master_seed) {
        Table1Result t;
        {
          py::gil_scoped_release nogil;
          t = table1_comparison(c, runs, devices, master_seed);
        }
        py::list out;
        for (const auto& r : t.rows) {
          py::dict d;
          d["num_devices"] = r.num_devices;
          d["algorithm"] = std::string(to_string(r.algorithm));
          d["runs"] = r.runs;
          d["mcor_mean_bps"] = r.mcor_mean;
          d["wall_ms_mean"] = r.wall_ms_mean;
          out.append(d);
        }
        return out;
      },
      py::arg("config"), py::arg("runs"), py::arg("devices") = std::vector<int>{2}, py::arg("master_seed") = 1,
      "Proposed against the exhaustive decoding-order search with M = N = 1.");
}
