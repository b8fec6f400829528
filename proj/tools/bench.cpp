#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <coopmec/coopmec.hpp>

namespace {

struct CommonOpts {
  std::string config_path;
  std::string case_mode = "auto";
  std::string fading = "on";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "instance description file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--case", opts.case_mode, "1 forces abundant capacity, 2 requires finite")
      ->check(CLI::IsMember({"1", "2", "auto"}));
  cmd->add_option("--fading", opts.fading, "Rayleigh small-scale fading on the channel draws")
      ->check(CLI::IsMember({"on", "off"}));
}

coopmec::LoadedConfig load_instance(const CommonOpts& opts) {
  coopmec::LoadedConfig loaded = coopmec::load_config(opts.config_path);
  if (opts.case_mode == "1") loaded.cfg.bs_capacity_hz = coopmec::kInfiniteCapacity;
  if (opts.case_mode == "2" && loaded.cfg.abundant_capacity())
    throw std::invalid_argument("--case 2 needs a finite bs_capacity_hz in the config");
  const auto errs = coopmec::validate_config(loaded.cfg);
  if (!errs.empty()) throw std::invalid_argument("config: " + errs.front());
  return loaded;
}

std::vector<std::string> parse_baselines(const std::string& list) {
  if (list.empty() || list == "none") return {};
  if (list == "all")
    return {"equal_bandwidth", "equal_time", "all_local", "all_offload"};
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    bool known = false;
    for (const auto& k : coopmec::known_methods()) known = known || k == item;
    if (!known || item == "optimized")
      throw std::invalid_argument("unknown baseline '" + item +
                                  "' (equal_bandwidth, equal_time, all_local, all_offload)");
    out.push_back(item);
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& list) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const auto v = std::stoull(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad seed '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("--seeds needs at least one value");
  return out;
}

std::vector<double> parse_values(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad sweep value '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("--values needs at least one value");
  return out;
}

void write_rows(const std::vector<coopmec::ExperimentRow>& rows, int n_users,
                const std::string& out_path) {
  if (out_path.empty()) {
    coopmec::write_csv(rows, std::cout, n_users);
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw std::invalid_argument("cannot open output file '" + out_path + "'");
  coopmec::write_csv(rows, f, n_users);
}

void print_report(const coopmec::SystemConfig& cfg, const coopmec::ExperimentRow& row) {
  std::printf("%-16s ", row.method.c_str());
  if (row.status != "ok") {
    std::printf("failed: %s\n", row.status.c_str());
    return;
  }
  const coopmec::SolveReport& rep = row.report;
  std::printf("%.9g W  (%zu outer, %zu inner, %.1f ms%s)\n", rep.avg_power_w,
              rep.dinkelbach_trace.size(), rep.inner_trace.size(), rep.runtime_ms,
              rep.converged ? "" : ", NOT converged");
  const coopmec::Schedule& s = rep.schedule;
  std::printf("  slots  t1=%.6g  t2=%.6g  t3=%.6g  t4=%.6g  (sum %.6g <= t1)\n", s.t1_s, s.t2_s,
              s.t3_s, s.t4_s, s.t2_s + s.t3_s + s.t4_s);
  double sum_b = 0;
  for (double b : s.b) sum_b += b;
  std::printf("  users  ");
  for (std::size_t i = 0; i < s.r.size(); ++i) std::printf("r_%zu=%.4g ", i + 1, s.r[i]);
  std::printf("\n         ");
  for (std::size_t i = 0; i < s.b.size(); ++i) std::printf("b_%zu=%.5g ", i + 1, s.b[i]);
  std::printf(" (sum %.6g of %.6g Hz)\n", sum_b, cfg.bandwidth_hz);
  if (std::isfinite(rep.kkt_residual))
    std::printf("  certificate residual %.3g\n", rep.kkt_residual);
  if (rep.dinkelbach_trace.size() > 1) {
    std::printf("  ratio trace ");
    for (const auto& [theta, resid] : rep.dinkelbach_trace) std::printf("%.7g ", theta);
    std::printf("\n");
  }
}

int cmd_solve(const CommonOpts& opts, std::uint64_t seed, const std::string& baselines,
              const std::string& out_path) {
  const coopmec::LoadedConfig loaded = load_instance(opts);
  const coopmec::SystemConfig& cfg = loaded.cfg;
  const coopmec::Topology topo = coopmec::resolve_topology(loaded.topo, cfg.n_users, seed);
  const coopmec::ChannelRealization chan = coopmec::realize(cfg, topo, seed, opts.fading == "on");

  std::printf("instance: N=%d  B=%.6g Hz  f_B=%.6g Hz  sigma2=%.6g W/Hz  seed=%" PRIu64
              "  case=%d\n",
              cfg.n_users, cfg.bandwidth_hz, cfg.bs_capacity_hz, cfg.noise_density_w_per_hz, seed,
              cfg.abundant_capacity() ? 1 : 2);
  std::printf("channel:  g=%.6g", chan.g);
  std::printf("  h=[");
  for (std::size_t i = 0; i < chan.h.size(); ++i)
    std::printf("%s%.6g", i ? " " : "", chan.h[i]);
  std::printf("]\n\n");

  std::vector<std::string> methods{"optimized"};
  for (const auto& b : parse_baselines(baselines)) methods.push_back(b);
  std::vector<coopmec::ExperimentRow> rows;
  for (const auto& method : methods) {
    rows.push_back(coopmec::run_row(cfg, chan, seed, method));
    print_report(cfg, rows.back());
  }
  if (!out_path.empty()) write_rows(rows, cfg.n_users, out_path);
  return coopmec::all_succeeded(rows) ? 0 : 1;
}

int cmd_sweep(const CommonOpts& opts, const std::string& var, const std::string& values,
              const std::string& seeds, const std::string& baselines,
              const std::string& out_path) {
  const coopmec::LoadedConfig loaded = load_instance(opts);
  coopmec::ExperimentSpec spec;
  spec.base = loaded.cfg;
  spec.topology = loaded.topo;
  spec.variable = coopmec::parse_sweep_variable(var);
  spec.values = parse_values(values);
  spec.seeds = parse_seeds(seeds);
  spec.fading = opts.fading == "on";
  for (const auto& b : parse_baselines(baselines)) spec.methods.push_back(b);

  const auto rows = coopmec::run_experiment(spec);
  write_rows(rows, spec.base.n_users, out_path);
  if (!coopmec::all_succeeded(rows)) {
    std::size_t failed = 0;
    for (const auto& row : rows) failed += row.status != "ok";
    std::fprintf(stderr, "%zu of %zu rows failed\n", failed, rows.size());
    return 1;
  }
  return 0;
}

// Small two-user instance whose optimum a coarse grid can bracket quickly.
coopmec::SystemConfig verify_config() {
  coopmec::SystemConfig cfg;
  cfg.n_users = 2;
  cfg.bandwidth_hz = 1e6;
  cfg.cycles_per_nat = 100;
  cfg.kappa.assign(2, 1e-24);
  cfg.rate_nat_per_s.assign(2, 1.5e6);
  cfg.overhead_j.assign(2, 0.0);
  cfg.t_min_s = 0.5;
  cfg.t_max_s = 2.0;
  cfg.noise_density_w_per_hz = 1e-13;
  cfg.pathloss_ref_gain = 1e-6;
  cfg.pathloss_ref_dist_m = 10.0;
  cfg.pathloss_exponent = 3.0;
  return cfg;
}

int cmd_verify(int steps) {
  coopmec::TopologySpec topo;
  topo.random = true;
  topo.random_lo = 5;
  topo.random_hi = 50;
  topo.coop_bs_dist_m = 30;

  coopmec::GridSpec grid;
  grid.t1 = {0.5, 2.0, steps};
  grid.f2 = {0.05, 0.9, steps};
  grid.f3 = {0.05, 0.9, steps};
  grid.f4 = {0.02, 0.5, std::max(4, steps / 2)};
  grid.r = {0.0, 1.0, steps};
  grid.beta = {0.0, 1.0, steps};

  bool all_ok = true;
  auto check = [&all_ok](bool ok, const char* what, double a, double b) {
    std::printf("  %-34s %s  (%.9g vs %.9g)\n", what, ok ? "ok" : "FAIL", a, b);
    all_ok = all_ok && ok;
  };

  for (std::uint64_t seed : {1, 2, 3}) {
    coopmec::SystemConfig cfg = verify_config();
    const coopmec::Topology t = coopmec::resolve_topology(topo, cfg.n_users, seed);
    const coopmec::ChannelRealization chan = coopmec::realize(cfg, t, seed, true);
    std::printf("seed %" PRIu64 "\n", seed);

    const auto res1 = coopmec::solve_case1(cfg, chan);
    grid.finite_capacity = false;
    const auto g1 = coopmec::grid_search(cfg, chan, grid);
    const auto m1 = coopmec::multistart_descent(cfg, chan, false, 4, seed,
                                                {res1.report.schedule});
    check(res1.report.avg_power_w <= g1.avg_power_w + 1e-9, "case 1 beats the grid",
          res1.report.avg_power_w, g1.avg_power_w);
    check(res1.report.avg_power_w >= g1.avg_power_w * 0.95, "case 1 within 5% of the grid",
          res1.report.avg_power_w, g1.avg_power_w);
    check(res1.report.avg_power_w >= m1.avg_power_w - 1e-6, "case 1 is descent-stationary",
          res1.report.avg_power_w, m1.avg_power_w);
    check(res1.report.kkt_residual <= 1e-6, "case 1 optimality certificate",
          res1.report.kkt_residual, 1e-6);

    cfg.bs_capacity_hz = 5e9;
    const auto res2 = coopmec::solve_case2(cfg, chan);
    grid.finite_capacity = true;
    const auto g2 = coopmec::grid_search(cfg, chan, grid);
    const auto m2 = coopmec::multistart_descent(cfg, chan, true, 4, seed,
                                                {res2.report.schedule});
    check(res2.report.avg_power_w <= g2.avg_power_w + 1e-9, "case 2 beats the grid",
          res2.report.avg_power_w, g2.avg_power_w);
    check(res2.report.avg_power_w >= g2.avg_power_w * 0.95, "case 2 within 5% of the grid",
          res2.report.avg_power_w, g2.avg_power_w);
    check(res2.report.avg_power_w >= m2.avg_power_w - 1e-6, "case 2 is descent-stationary",
          res2.report.avg_power_w, m2.avg_power_w);
    check(res1.report.avg_power_w <= res2.report.avg_power_w + 1e-9,
          "finite capacity never helps", res1.report.avg_power_w, res2.report.avg_power_w);
  }
  std::printf("%s\n", all_ok ? "verify: all checks passed" : "verify: FAILURES above");
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"minimum average-power scheduling for cooperative task offloading"};
  app.require_subcommand(1);

  CommonOpts solve_opts;
  std::uint64_t seed = 1;
  std::string solve_baselines, solve_out;
  CLI::App* solve = app.add_subcommand("solve", "solve one channel realization and print it");
  add_common(solve, solve_opts);
  solve->add_option("--seed", seed, "channel realization seed");
  solve->add_option("--baselines", solve_baselines,
                    "comma list of restricted schemes to run as well, or 'all'");
  solve->add_option("--out", solve_out, "also write the rows as CSV here");

  CommonOpts sweep_opts;
  std::string var = "B", values, seeds = "1", sweep_baselines, sweep_out;
  CLI::App* sweep = app.add_subcommand("sweep", "sweep one parameter and emit CSV");
  add_common(sweep, sweep_opts);
  sweep->add_option("--var", var, "sweep variable: B, f_B, c_scale, or sigma2")
      ->check(CLI::IsMember({"B", "f_B", "c_scale", "sigma2"}));
  sweep->add_option("--values", values, "comma list of sweep values")->required();
  sweep->add_option("--seeds", seeds, "comma list of channel seeds");
  sweep->add_option("--baselines", sweep_baselines,
                    "comma list of restricted schemes to run as well, or 'all'");
  sweep->add_option("--out", sweep_out, "CSV output path (default stdout)");

  int verify_steps = 12;
  CLI::App* verify =
      app.add_subcommand("verify", "cross-check the solvers against brute-force oracles");
  verify->add_option("--steps", verify_steps, "grid steps per axis")
      ->check(CLI::Range(4, 24));

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(solve_opts, seed, solve_baselines, solve_out);
    if (sweep->parsed()) return cmd_sweep(sweep_opts, var, values, seeds, sweep_baselines,
                                          sweep_out);
    return cmd_verify(verify_steps);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
