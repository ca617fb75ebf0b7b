#include "rsmamec/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string_view>

namespace rsmamec {

double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

double watt_to_dbm(double watt) { return 10.0 * std::log10(watt * 1e3); }

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for '" + key + "': " + value);
  }
}

int to_int(const std::string& key, const std::string& value) {
  int v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc{} || ptr != end)
    throw std::invalid_argument("config: bad integer for '" + key + "': " + value);
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw std::invalid_argument("config: bad boolean for '" + key + "': " + value);
}

}  // namespace

void SystemConfig::validate() const {
  require(num_servers >= 1, "num_servers must be >= 1");
  require(num_channels >= 1, "num_channels must be >= 1");
  require(num_devices >= 1, "num_devices must be >= 1");
  require(bandwidth_hz > 0, "bandwidth must be positive");
  require(deadline_s > 0, "deadline must be positive");
  require(noise_psd_w_per_hz > 0, "noise psd must be positive");
  require(max_tx_power_w > 0, "max tx power must be positive");
  require(server_frequency_bps > 0, "server frequency must be positive");
  require(placement_radius_km > 0, "placement radius must be positive");
  require(min_distance_km > 0, "min distance must be positive");
}

void ScaSettings::validate() const {
  require(sca_tol > 0, "sca_tol must be positive");
  require(sca_max_iters > 0, "sca_max_iters must be positive");
  require(alt_max_iters > 0, "alt_max_iters must be positive");
  require(bisection_tol > 0 && bisection_tol < 1, "bisection_tol must be in (0,1)");
  require(inner_solver_tol > 0, "inner_solver_tol must be positive");
  require(inner_max_iters > 0, "inner_max_iters must be positive");
}

void MatchingSettings::validate() const {
  require(swap_cap_factor >= 0, "swap_cap_factor must be non-negative");
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  using Setter = std::function<void(RunConfig&, const std::string&)>;
  static const std::map<std::string, Setter, std::less<>> setters = {
      {"num_servers", [](RunConfig& r, const std::string& v) { r.system.num_servers = to_int("num_servers", v); }},
      {"num_channels", [](RunConfig& r, const std::string& v) { r.system.num_channels = to_int("num_channels", v); }},
      {"num_devices", [](RunConfig& r, const std::string& v) { r.system.num_devices = to_int("num_devices", v); }},
      {"bandwidth_mhz", [](RunConfig& r, const std::string& v) { r.system.bandwidth_hz = to_double("bandwidth_mhz", v) * 1e6; }},
      {"deadline_s", [](RunConfig& r, const std::string& v) { r.system.deadline_s = to_double("deadline_s", v); }},
      {"noise_dbm_per_hz", [](RunConfig& r, const std::string& v) { r.system.noise_psd_w_per_hz = dbm_to_watt(to_double("noise_dbm_per_hz", v)); }},
      {"max_tx_power_dbm", [](RunConfig& r, const std::string& v) { r.system.max_tx_power_w = dbm_to_watt(to_double("max_tx_power_dbm", v)); }},
      {"server_frequency_mbps", [](RunConfig& r, const std::string& v) { r.system.server_frequency_bps = to_double("server_frequency_mbps", v) * 1e6; }},
      {"placement_radius_km", [](RunConfig& r, const std::string& v) { r.system.placement_radius_km = to_double("placement_radius_km", v); }},
      {"min_distance_km", [](RunConfig& r, const std::string& v) { r.system.min_distance_km = to_double("min_distance_km", v); }},
      {"sca_tol", [](RunConfig& r, const std::string& v) { r.sca.sca_tol = to_double("sca_tol", v); }},
      {"sca_max_iters", [](RunConfig& r, const std::string& v) { r.sca.sca_max_iters = to_int("sca_max_iters", v); }},
      {"alt_max_iters", [](RunConfig& r, const std::string& v) { r.sca.alt_max_iters = to_int("alt_max_iters", v); }},
      {"bisection_tol", [](RunConfig& r, const std::string& v) { r.sca.bisection_tol = to_double("bisection_tol", v); }},
      {"inner_solver_tol", [](RunConfig& r, const std::string& v) { r.sca.inner_solver_tol = to_double("inner_solver_tol", v); }},
      {"inner_max_iters", [](RunConfig& r, const std::string& v) { r.sca.inner_max_iters = to_int("inner_max_iters", v); }},
      {"warm_start", [](RunConfig& r, const std::string& v) { r.sca.warm_start = to_bool("warm_start", v); }},
      {"place_unmatched", [](RunConfig& r, const std::string& v) { r.matching.place_unmatched = to_bool("place_unmatched", v); }},
      {"swap_cap_factor", [](RunConfig& r, const std::string& v) { r.matching.swap_cap_factor = to_int("swap_cap_factor", v); }},
      {"workers", [](RunConfig& r, const std::string& v) { r.workers = to_int("workers", v); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
  it->second(c, value);
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    apply_setting(base, std::string(trim(view.substr(0, eq))), std::string(trim(view.substr(eq + 1))));
  }
  base.system.validate();
  base.sca.validate();
  base.matching.validate();
  if (base.workers < 1) throw std::invalid_argument("workers must be >= 1");
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

std::string to_config_text(const RunConfig& c) {
  // shortest text that reads back to the same double
  auto num = [](double v) {
    char buf[32];
    return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
  };
  std::ostringstream out;
  const auto& s = c.system;
  out << "num_servers=" << s.num_servers << '\n'
      << "num_channels=" << s.num_channels << '\n'
      << "num_devices=" << s.num_devices << '\n'
      << "bandwidth_mhz=" << num(s.bandwidth_hz / 1e6) << '\n'
      << "deadline_s=" << num(s.deadline_s) << '\n'
      << "noise_dbm_per_hz=" << num(watt_to_dbm(s.noise_psd_w_per_hz)) << '\n'
      << "max_tx_power_dbm=" << num(watt_to_dbm(s.max_tx_power_w)) << '\n'
      << "server_frequency_mbps=" << num(s.server_frequency_bps / 1e6) << '\n'
      << "placement_radius_km=" << num(s.placement_radius_km) << '\n'
      << "min_distance_km=" << num(s.min_distance_km) << '\n'
      << "sca_tol=" << num(c.sca.sca_tol) << '\n'
      << "sca_max_iters=" << c.sca.sca_max_iters << '\n'
      << "alt_max_iters=" << c.sca.alt_max_iters << '\n'
      << "bisection_tol=" << num(c.sca.bisection_tol) << '\n'
      << "inner_solver_tol=" << num(c.sca.inner_solver_tol) << '\n'
      << "inner_max_iters=" << c.sca.inner_max_iters << '\n'
      << "warm_start=" << (c.sca.warm_start ? "true" : "false") << '\n'
      << "place_unmatched=" << (c.matching.place_unmatched ? "true" : "false") << '\n'
      << "swap_cap_factor=" << c.matching.swap_cap_factor << '\n'
      << "workers=" << c.workers << '\n';
  return out.str();
}

}  // namespace rsmamec
