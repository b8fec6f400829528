#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace coopmec {

// bs_capacity_hz value selecting the abundant-capacity regime (Case I)
inline constexpr double kInfiniteCapacity = std::numeric_limits<double>::infinity();

// All quantities in SI units: Hz, W, J, s, nat, CPU cycles.
struct SystemConfig {
  int n_users = 0;                       // N
  double bandwidth_hz = 0;               // B, uplink band shared by the users
  double cycles_per_nat = 0;             // X, CPU cycles per nat of task data
  std::vector<double> kappa;             // effective switched capacitance, per user
  std::vector<double> rate_nat_per_s;    // c_n, task arrival rate
  std::vector<double> overhead_j;        // E0_n, fixed per-slot overhead energy
  double t_min_s = 0;                    // t^l, shortest admissible slot
  double t_max_s = 0;                    // t^u, longest admissible slot
  double bs_capacity_hz = kInfiniteCapacity;  // f_B, cooperative-node CPU rate
  double noise_density_w_per_hz = 0;     // sigma^2
  double pathloss_ref_gain = 0;          // g_0 at the reference distance
  double pathloss_ref_dist_m = 0;        // d_0
  double pathloss_exponent = 0;

  bool abundant_capacity() const { return std::isinf(bs_capacity_hz); }
};

// Noise-normalized channel power gains: rates are b*log(1 + p*h/b).
struct ChannelRealization {
  std::vector<double> h;   // user -> BS, 1/W scaled by 1/(sigma^2/Hz)
  double g = 0;            // BS -> cooperative node
  std::uint64_t seed = 0;
};

// One scheduling period: t1 covers arrival+compute, t2 user uplink, t3 BS
// relay, t4 cooperative-node compute (zero in the abundant-capacity case).
struct Schedule {
  double t1_s = 0;
  double t2_s = 0;
  double t3_s = 0;
  double t4_s = 0;
  std::vector<double> r;   // offloading ratios, in [0, 1]
  std::vector<double> b;   // bandwidth shares in Hz, sum <= B
};

struct SolveReport {
  Schedule schedule;
  double avg_power_w = 0;
  // (theta, numerator - theta * denominator) per outer iteration
  std::vector<std::pair<double, double>> dinkelbach_trace;
  std::vector<double> inner_trace;                 // all inner objective values
  std::vector<std::vector<double>> inner_rounds;   // same, split per outer iteration
  double kkt_residual = 0;
  double runtime_ms = 0;
  bool converged = false;
};

inline std::vector<std::string> validate_config(const SystemConfig& cfg) {
  std::vector<std::string> errs;
  auto bad = [&errs](const std::string& msg) { errs.push_back(msg); };
  auto finite_pos = [](double v) { return std::isfinite(v) && v > 0; };

  if (cfg.n_users < 1) bad("n_users must be >= 1");
  if (!finite_pos(cfg.bandwidth_hz)) bad("bandwidth_hz must be positive");
  if (!finite_pos(cfg.cycles_per_nat)) bad("cycles_per_nat must be positive");
  if (!finite_pos(cfg.t_min_s)) bad("t_min_s must be positive");
  if (!(std::isfinite(cfg.t_max_s) && cfg.t_max_s >= cfg.t_min_s))
    bad("t_max_s must be finite and >= t_min_s");
  if (!(cfg.bs_capacity_hz > 0)) bad("bs_capacity_hz must be positive or infinite");
  if (!finite_pos(cfg.noise_density_w_per_hz)) bad("noise_density_w_per_hz must be positive");
  if (!finite_pos(cfg.pathloss_ref_gain)) bad("pathloss_ref_gain must be positive");
  if (!finite_pos(cfg.pathloss_ref_dist_m)) bad("pathloss_ref_dist_m must be positive");
  if (!finite_pos(cfg.pathloss_exponent)) bad("pathloss_exponent must be positive");

  const auto n = static_cast<std::size_t>(cfg.n_users < 0 ? 0 : cfg.n_users);
  if (cfg.kappa.size() != n) bad("kappa must list one value per user");
  if (cfg.rate_nat_per_s.size() != n) bad("rate_nat_per_s must list one value per user");
  if (cfg.overhead_j.size() != n) bad("overhead_j must list one value per user");
  for (double k : cfg.kappa)
    if (!finite_pos(k)) { bad("kappa entries must be positive"); break; }
  for (double c : cfg.rate_nat_per_s)
    if (!finite_pos(c)) { bad("rate_nat_per_s entries must be positive"); break; }
  for (double e : cfg.overhead_j)
    if (!(std::isfinite(e) && e >= 0)) { bad("overhead_j entries must be >= 0"); break; }
  return errs;
}

// Schedule invariants, checked to 1e-9 absolute.  Returns human-readable
// violations; empty means feasible.  The capacity constraint applies only in
// the finite-capacity case; the abundant case requires t4 = 0 instead.
inline std::vector<std::string> check_feasible(const SystemConfig& cfg, const Schedule& s) {
  constexpr double tol = 1e-9;
  std::vector<std::string> errs;
  auto bad = [&errs](const std::string& msg) { errs.push_back(msg); };

  if (s.r.size() != static_cast<std::size_t>(cfg.n_users) ||
      s.b.size() != static_cast<std::size_t>(cfg.n_users)) {
    bad("r/b length differs from n_users");
    return errs;
  }
  if (s.t1_s < cfg.t_min_s - tol || s.t1_s > cfg.t_max_s + tol)
    bad("t1 outside [t_min, t_max]");
  if (s.t2_s < -tol) bad("t2 negative");
  if (s.t3_s < -tol) bad("t3 negative");
  if (s.t4_s < -tol) bad("t4 negative");
  if (cfg.abundant_capacity() && std::abs(s.t4_s) > tol)
    bad("t4 must be zero under abundant capacity");
  if (s.t2_s + s.t3_s + s.t4_s > s.t1_s + tol)
    bad("t2 + t3 + t4 exceeds t1");

  double sum_b = 0, offload = 0;
  for (int n = 0; n < cfg.n_users; ++n) {
    if (s.r[n] < -tol || s.r[n] > 1 + tol) bad("r_" + std::to_string(n + 1) + " outside [0, 1]");
    if (s.b[n] < -tol) bad("b_" + std::to_string(n + 1) + " negative");
    const bool r_zero = s.r[n] <= tol;
    const bool b_zero = s.b[n] <= tol * cfg.bandwidth_hz;
    if (r_zero != b_zero)
      bad("b_" + std::to_string(n + 1) + " must be zero exactly when r_" +
          std::to_string(n + 1) + " is zero");
    sum_b += s.b[n];
    offload += cfg.rate_nat_per_s[n] * s.r[n];
  }
  if (sum_b > cfg.bandwidth_hz + tol) bad("sum of b exceeds bandwidth");
  if (!cfg.abundant_capacity()) {
    if (s.t1_s * cfg.cycles_per_nat * offload > cfg.bs_capacity_hz * s.t4_s + tol)
      bad("offloaded cycles exceed cooperative-node capacity");
  }
  return errs;
}

}  // namespace coopmec
