#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <coopmec/baselines.hpp>
#include <coopmec/channel.hpp>

namespace coopmec {

enum class SweepVariable { kBandwidth, kBsCapacity, kRateScale, kNoiseDensity };

inline SweepVariable parse_sweep_variable(const std::string& name) {
  if (name == "B") return SweepVariable::kBandwidth;
  if (name == "f_B") return SweepVariable::kBsCapacity;
  if (name == "c_scale") return SweepVariable::kRateScale;
  if (name == "sigma2") return SweepVariable::kNoiseDensity;
  throw std::invalid_argument("unknown sweep variable: " + name +
                              " (expected B, f_B, c_scale, or sigma2)");
}

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> methods{"optimized", "equal_bandwidth", "equal_time",
                                                "all_local", "all_offload"};
  return methods;
}

struct ExperimentSpec {
  SystemConfig base;
  TopologySpec topology;
  SweepVariable variable = SweepVariable::kBandwidth;
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> methods{"optimized"};
  bool fading = true;
};

inline std::vector<std::string> validate_spec(const ExperimentSpec& spec) {
  std::vector<std::string> errs = validate_config(spec.base);
  if (spec.values.empty()) errs.push_back("sweep needs at least one value");
  for (double v : spec.values)
    if (!(v > 0)) { errs.push_back("sweep values must be positive"); break; }
  if (spec.seeds.empty()) errs.push_back("sweep needs at least one seed");
  if (spec.methods.empty()) errs.push_back("sweep needs at least one method");
  for (const auto& m : spec.methods) {
    bool known = false;
    for (const auto& k : known_methods()) known = known || k == m;
    if (!known) errs.push_back("unknown method: " + m);
  }
  return errs;
}

inline SystemConfig apply_sweep_value(SystemConfig cfg, SweepVariable var, double value) {
  switch (var) {
    case SweepVariable::kBandwidth: cfg.bandwidth_hz = value; break;
    case SweepVariable::kBsCapacity: cfg.bs_capacity_hz = value; break;
    case SweepVariable::kRateScale:
      for (double& c : cfg.rate_nat_per_s) c *= value;
      break;
    case SweepVariable::kNoiseDensity: cfg.noise_density_w_per_hz = value; break;
  }
  return cfg;
}

inline SolveReport run_method(const SystemConfig& cfg, const ChannelRealization& chan,
                              const std::string& method) {
  if (method == "optimized")
    return cfg.abundant_capacity() ? solve_case1(cfg, chan).report : solve_case2(cfg, chan).report;
  if (method == "equal_bandwidth") return baseline_equal_bandwidth(cfg, chan);
  if (method == "equal_time") return baseline_equal_time(cfg, chan);
  if (method == "all_local") return baseline_all_local(cfg, chan);
  if (method == "all_offload") return baseline_all_offload(cfg, chan);
  throw std::invalid_argument("unknown method: " + method);
}

struct ExperimentRow {
  std::uint64_t seed = 0;
  int case_id = 0;
  std::string method;
  double bandwidth_hz = 0;
  double bs_capacity_hz = 0;
  double noise_w_per_hz = 0;
  int n_users = 0;
  SolveReport report;
  std::string status = "ok";
};

inline ExperimentRow run_row(const SystemConfig& cfg, const ChannelRealization& chan,
                             std::uint64_t seed, const std::string& method) {
  ExperimentRow row;
  row.seed = seed;
  row.case_id = cfg.abundant_capacity() ? 1 : 2;
  row.method = method;
  row.bandwidth_hz = cfg.bandwidth_hz;
  row.bs_capacity_hz = cfg.bs_capacity_hz;
  row.noise_w_per_hz = cfg.noise_density_w_per_hz;
  row.n_users = cfg.n_users;
  try {
    row.report = run_method(cfg, chan, method);
    auto feas = check_feasible(cfg, row.report.schedule);
    if (!feas.empty()) row.status = "infeasible schedule: " + feas.front();
  } catch (const std::exception& e) {
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    row.status = e.what();
    row.report = SolveReport{};
    row.report.avg_power_w = nan;
    row.report.kkt_residual = nan;
    row.report.schedule.t1_s = row.report.schedule.t2_s = nan;
    row.report.schedule.t3_s = row.report.schedule.t4_s = nan;
    row.report.schedule.r.assign(static_cast<std::size_t>(cfg.n_users), nan);
    row.report.schedule.b.assign(static_cast<std::size_t>(cfg.n_users), nan);
  }
  return row;
}

inline std::vector<ExperimentRow> run_experiment(const ExperimentSpec& spec) {
  if (const auto errs = validate_spec(spec); !errs.empty())
    throw std::invalid_argument("run_experiment: " + errs.front());
  std::vector<ExperimentRow> rows;
  for (double value : spec.values) {
    const SystemConfig cfg = apply_sweep_value(spec.base, spec.variable, value);
    for (std::uint64_t seed : spec.seeds) {
      const Topology topo = resolve_topology(spec.topology, cfg.n_users, seed);
      const ChannelRealization chan = realize(cfg, topo, seed, spec.fading);
      for (const auto& method : spec.methods)
        rows.push_back(run_row(cfg, chan, seed, method));
    }
  }
  return rows;
}

inline bool all_succeeded(const std::vector<ExperimentRow>& rows) {
  for (const auto& row : rows)
    if (row.status != "ok") return false;
  return true;
}

namespace detail {

// shortest round-trip decimal form, so identical runs serialize identically
inline std::string format_value(double v) {
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline std::string sanitize_status(std::string s) {
  for (char& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  return s;
}

}  // namespace detail

inline void write_csv(const std::vector<ExperimentRow>& rows, std::ostream& out, int n_users) {
  out << "seed,case,method,B_hz,fB_hz,sigma2_w_hz,N,avg_power_w,t1_s,t2_s,t3_s,t4_s";
  for (int i = 1; i <= n_users; ++i) out << ",r_" << i;
  for (int i = 1; i <= n_users; ++i) out << ",b_" << i;
  out << ",dinkelbach_iters,inner_iters,kkt_residual,runtime_ms,status\n";
  for (const auto& row : rows) {
    const Schedule& s = row.report.schedule;
    out << row.seed << ',' << row.case_id << ',' << row.method << ','
        << detail::format_value(row.bandwidth_hz) << ',' << detail::format_value(row.bs_capacity_hz)
        << ',' << detail::format_value(row.noise_w_per_hz) << ',' << row.n_users << ','
        << detail::format_value(row.report.avg_power_w) << ',' << detail::format_value(s.t1_s)
        << ',' << detail::format_value(s.t2_s) << ',' << detail::format_value(s.t3_s) << ','
        << detail::format_value(s.t4_s);
    for (int i = 0; i < n_users; ++i)
      out << ',' << (i < static_cast<int>(s.r.size()) ? detail::format_value(s.r[i]) : "nan");
    for (int i = 0; i < n_users; ++i)
      out << ',' << (i < static_cast<int>(s.b.size()) ? detail::format_value(s.b[i]) : "nan");
    out << ',' << row.report.dinkelbach_trace.size() << ',' << row.report.inner_trace.size() << ','
        << detail::format_value(row.report.kkt_residual) << ','
        << detail::format_value(row.report.runtime_ms) << ','
        << detail::sanitize_status(row.status) << '\n';
  }
}

}  // namespace coopmec
