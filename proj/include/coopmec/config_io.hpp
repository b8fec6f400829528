#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <coopmec/types.hpp>

namespace coopmec {

// User placement: either explicit BS distances or i.i.d. uniform(lo, hi)
// draws resolved later from a seed.
struct TopologySpec {
  std::vector<double> user_dist_m;
  bool random = false;
  double random_lo = 0;
  double random_hi = 0;
  double coop_bs_dist_m = 0;
};

struct LoadedConfig {
  SystemConfig cfg;
  TopologySpec topo;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_real(const std::string& key, const std::string& text) {
  std::string t = trim(text);
  std::string lower;
  for (char c : t) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "inf" || lower == "infinite" || lower == "infinity")
    return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: '" + key + "' has non-numeric value '" + t + "'");
  }
  if (used != t.size())
    throw std::invalid_argument("config: '" + key + "' has trailing junk in value '" + t + "'");
  return v;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text, int n) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_real(key, item));
  }
  if (out.empty()) throw std::invalid_argument("config: '" + key + "' is empty");
  if (out.size() == 1 && n > 1) out.assign(static_cast<std::size_t>(n), out[0]);  // broadcast
  if (out.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("config: '" + key + "' must list 1 or n_users values");
  return out;
}

}  // namespace detail

// Flat `key = value` text; '#' starts a comment.  Keys are the SystemConfig
// field names plus the unit alternates sigma2_mw_per_hz, bs_capacity_ghz and
// bandwidth_mhz, plus user_dist_m / coop_bs_dist_m for the topology.  Unknown
// keys, duplicate keys and base-plus-alternate conflicts are errors.
inline LoadedConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) + " is not 'key = value'");
    std::string key = detail::trim(line.substr(0, eq));
    std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw std::invalid_argument("config: line " + std::to_string(lineno) + " has empty key or value");
    if (!kv.emplace(key, val).second)
      throw std::invalid_argument("config: duplicate key '" + key + "'");
  }

  static const char* known[] = {
      "n_users",       "bandwidth_hz",  "bandwidth_mhz",     "cycles_per_nat",
      "kappa",         "rate_nat_per_s", "overhead_j",        "t_min_s",
      "t_max_s",       "bs_capacity_hz", "bs_capacity_ghz",   "noise_density_w_per_hz",
      "sigma2_mw_per_hz", "pathloss_ref_gain", "pathloss_ref_dist_m", "pathloss_exponent",
      "user_dist_m",   "coop_bs_dist_m"};
  for (const auto& [key, val] : kv) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  auto conflict = [&kv](const char* a, const char* b) {
    if (kv.count(a) && kv.count(b))
      throw std::invalid_argument(std::string("config: '") + a + "' conflicts with '" + b + "'");
  };
  conflict("bandwidth_hz", "bandwidth_mhz");
  conflict("bs_capacity_hz", "bs_capacity_ghz");
  conflict("noise_density_w_per_hz", "sigma2_mw_per_hz");

  auto need = [&kv](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument(std::string("config: missing key '") + key + "'");
    return it->second;
  };
  auto real_alt = [&kv, &need](const char* base, const char* alt, double scale) {
    if (auto it = kv.find(alt); it != kv.end()) return detail::parse_real(alt, it->second) * scale;
    return detail::parse_real(base, need(base));
  };

  LoadedConfig out;
  SystemConfig& cfg = out.cfg;
  double n_real = detail::parse_real("n_users", need("n_users"));
  if (n_real != static_cast<int>(n_real))
    throw std::invalid_argument("config: n_users must be an integer");
  cfg.n_users = static_cast<int>(n_real);
  cfg.bandwidth_hz = real_alt("bandwidth_hz", "bandwidth_mhz", 1e6);
  cfg.cycles_per_nat = detail::parse_real("cycles_per_nat", need("cycles_per_nat"));
  cfg.kappa = detail::parse_list("kappa", need("kappa"), cfg.n_users);
  cfg.rate_nat_per_s = detail::parse_list("rate_nat_per_s", need("rate_nat_per_s"), cfg.n_users);
  cfg.overhead_j = detail::parse_list("overhead_j", need("overhead_j"), cfg.n_users);
  cfg.t_min_s = detail::parse_real("t_min_s", need("t_min_s"));
  cfg.t_max_s = detail::parse_real("t_max_s", need("t_max_s"));
  cfg.bs_capacity_hz = real_alt("bs_capacity_hz", "bs_capacity_ghz", 1e9);
  cfg.noise_density_w_per_hz = real_alt("noise_density_w_per_hz", "sigma2_mw_per_hz", 1e-3);
  cfg.pathloss_ref_gain = detail::parse_real("pathloss_ref_gain", need("pathloss_ref_gain"));
  cfg.pathloss_ref_dist_m = detail::parse_real("pathloss_ref_dist_m", need("pathloss_ref_dist_m"));
  cfg.pathloss_exponent = detail::parse_real("pathloss_exponent", need("pathloss_exponent"));

  TopologySpec& topo = out.topo;
  topo.coop_bs_dist_m = detail::parse_real("coop_bs_dist_m", need("coop_bs_dist_m"));
  std::string dist = detail::trim(need("user_dist_m"));
  if (dist.rfind("uniform(", 0) == 0 && dist.back() == ')') {
    std::string args = dist.substr(8, dist.size() - 9);
    auto comma = args.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("config: user_dist_m uniform(lo,hi) needs two arguments");
    topo.random = true;
    topo.random_lo = detail::parse_real("user_dist_m", args.substr(0, comma));
    topo.random_hi = detail::parse_real("user_dist_m", args.substr(comma + 1));
    if (!(0 < topo.random_lo && topo.random_lo <= topo.random_hi))
      throw std::invalid_argument("config: user_dist_m uniform bounds must satisfy 0 < lo <= hi");
  } else {
    topo.user_dist_m = detail::parse_list("user_dist_m", dist, cfg.n_users);
  }
  return out;
}

inline LoadedConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace coopmec
