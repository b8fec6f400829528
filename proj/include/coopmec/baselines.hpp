#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <stdexcept>

#include <coopmec/case1.hpp>
#include <coopmec/case2.hpp>

namespace coopmec {

namespace detail {

using BlockStep = std::function<BcdState(const BcdState&)>;

inline double all_local_ratio(const SystemConfig& cfg, const ChannelRealization& chan) {
  const auto n = static_cast<std::size_t>(cfg.n_users);
  const double t4 = cfg.abundant_capacity() ? 0.0 : cfg.t_min_s / 4;
  Schedule s{cfg.t_min_s, cfg.t_min_s / 4, cfg.t_min_s / 4, t4,
             std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  return avg_power(cfg, chan, s);
}

// Dinkelbach outer loop around a two-block BCD with caller-chosen steps;
// shared by the restricted schemes.
inline SolveReport dinkelbach_bcd(const SystemConfig& cfg, const ChannelRealization& chan,
                                  Schedule sched, double theta, const BlockStep& rb_step,
                                  const BlockStep& times_step) {
  const auto t_start = std::chrono::steady_clock::now();
  SolveReport rep;
  double num = 0, den = 1;
  for (int outer = 0; outer < 30; ++outer) {
    BcdState state{sched, theta, dinkelbach_objective(cfg, chan, sched, theta), 0};
    std::vector<double> trace{state.objective_value};
    double prev_rb = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= 50; ++it) {
      state = rb_step(state);
      state.iteration = it;
      trace.push_back(state.objective_value);
      if (std::isfinite(prev_rb) &&
          prev_rb - state.objective_value <= 1e-6 * (1 + std::abs(prev_rb)))
        break;
      prev_rb = state.objective_value;
      state = times_step(state);
      trace.push_back(state.objective_value);
    }
    sched = state.schedule;
    num = numerator(cfg, chan, sched);
    den = denominator(cfg, sched);
    const double residual = num - theta * den;
    rep.dinkelbach_trace.emplace_back(theta, residual);
    rep.inner_rounds.push_back(trace);
    rep.inner_trace.insert(rep.inner_trace.end(), trace.begin(), trace.end());
    if (std::abs(residual) <= 1e-6 * den) {
      rep.converged = true;
      break;
    }
    theta = num / den;
  }
  rep.schedule = sched;
  rep.avg_power_w = num / den;
  rep.kkt_residual = std::numeric_limits<double>::quiet_NaN();
  rep.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
          .count();
  return rep;
}

// Case II machinery restricted to an affine submanifold y_full = map y + off.
struct DcaMap {
  Eigen::MatrixXd map;
  Eigen::VectorXd offset;
  std::function<Eigen::VectorXd(const DcaPoint&)> reduce;
};

inline DcaPoint subproblem_mapped(const SystemConfig& cfg, const ChannelRealization& chan,
                                  double vartheta, const DcaPoint& anchor, const DcaMap& m) {
  const EtaModel lin = eta_linearize(cfg, vartheta, anchor);
  auto prog = dca_program(cfg, chan, lin);
  auto red = convex::substitute(prog, m.map, m.offset, m.reduce(anchor));
  auto sol = convex::minimize(red, 1e-10);
  return unpack(m.map * sol.x_star + m.offset, cfg.n_users);
}

inline SolveReport dinkelbach_dca(const SystemConfig& cfg, const ChannelRealization& chan,
                                  DcaPoint y, double vartheta, const DcaMap& m) {
  const auto t_start = std::chrono::steady_clock::now();
  SolveReport rep;
  double num = 0, den = 1;
  for (int outer = 0; outer < 30; ++outer) {
    std::vector<double> gamma_bar;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 15; ++k) {
      const EtaModel lin = eta_linearize(cfg, vartheta, y);
      y = subproblem_mapped(cfg, chan, vartheta, y, m);
      const double gb = psi(cfg, chan, y) - eta_model_at(lin, y);
      gamma_bar.push_back(gb);
      if (k >= 2 && std::abs(gb - prev) <= 1e-3 * (1 + std::abs(prev))) break;
      prev = gb;
    }
    const Schedule sched = to_schedule(cfg, y);
    num = numerator(cfg, chan, sched);
    den = denominator(cfg, sched);
    const double residual = num - vartheta * den;
    rep.dinkelbach_trace.emplace_back(vartheta, residual);
    rep.inner_rounds.push_back(gamma_bar);
    rep.inner_trace.insert(rep.inner_trace.end(), gamma_bar.begin(), gamma_bar.end());
    if (std::abs(residual) <= 1e-6 * den) {
      rep.converged = true;
      break;
    }
    vartheta = num / den;
  }
  rep.schedule = to_schedule(cfg, y);
  rep.avg_power_w = num / den;
  rep.kkt_residual = std::numeric_limits<double>::quiet_NaN();
  rep.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
          .count();
  return rep;
}

inline Schedule bcd_start(const SystemConfig& cfg, double r0) {
  const auto n = static_cast<std::size_t>(cfg.n_users);
  return Schedule{cfg.t_max_s,
                  cfg.t_max_s / 4,
                  cfg.t_max_s / 4,
                  0,
                  std::vector<double>(n, r0),
                  std::vector<double>(n, cfg.bandwidth_hz / cfg.n_users)};
}

inline BcdState rb_step_fixed_band(const SystemConfig& cfg, const ChannelRealization& chan,
                                   const BcdState& state) {
  const Schedule& s = state.schedule;
  const int n = cfg.n_users;
  auto prog = rb_primal_program(cfg, chan, s.t1_s, s.t2_s, s.t3_s, state.theta);

  Eigen::MatrixXd map = Eigen::MatrixXd::Zero(2 * n, n);
  map.topRows(n).setIdentity();
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(2 * n);
  offset.tail(n).setConstant(cfg.bandwidth_hz / n);

  Eigen::VectorXd start(n);
  for (int i = 0; i < n; ++i)
    start[i] = std::clamp(s.r[static_cast<std::size_t>(i)], 1e-4, 1 - 1e-4);

  auto red = convex::substitute(prog, map, offset, start);
  auto sol = convex::minimize(red, 1e-10);

  Schedule cand = s;
  for (int i = 0; i < n; ++i) {
    const double ri = sol.x_star[i];
    const bool gone = ri <= 1e-9;
    cand.r[static_cast<std::size_t>(i)] = gone ? 0.0 : ri;
    cand.b[static_cast<std::size_t>(i)] = gone ? 0.0 : cfg.bandwidth_hz / n;
  }
  const double val = dinkelbach_objective(cfg, chan, cand, state.theta);
  if (val <= state.objective_value)
    return {cand, state.theta, val, state.iteration};
  return state;
}

inline BcdState rb_step_all_offload(const SystemConfig& cfg, const ChannelRealization& chan,
                                    const BcdState& state) {
  const Schedule& s = state.schedule;
  const int n = cfg.n_users;
  auto prog = rb_primal_program(cfg, chan, s.t1_s, s.t2_s, s.t3_s, state.theta);

  Eigen::MatrixXd map = Eigen::MatrixXd::Zero(2 * n, n);
  map.bottomRows(n) = cfg.bandwidth_hz * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(2 * n);
  offset.head(n).setOnes();

  Eigen::VectorXd start(n);
  double used = 0;
  for (int i = 0; i < n; ++i) {
    start[i] = std::max(s.b[static_cast<std::size_t>(i)] / cfg.bandwidth_hz, 1e-4 / n);
    used += start[i];
  }
  if (used > 1 - 1e-4) start *= (1 - 1e-4) / used;

  auto red = convex::substitute(prog, map, offset, start);
  auto sol = convex::minimize(red, 1e-10);

  Schedule cand = s;
  for (int i = 0; i < n; ++i) {
    cand.r[static_cast<std::size_t>(i)] = 1.0;
    cand.b[static_cast<std::size_t>(i)] = cfg.bandwidth_hz * sol.x_star[i];
  }
  const double val = dinkelbach_objective(cfg, chan, cand, state.theta);
  if (val <= state.objective_value)
    return {cand, state.theta, val, state.iteration};
  return state;
}

// Slot-length step under the shared-uplink-slot restriction t2 = t3.
inline BcdState times_step_equal(const SystemConfig& cfg, const ChannelRealization& chan,
                                 const BcdState& state) {
  const Schedule& s = state.schedule;
  const detail::TimesObjective obj = detail::make_times_objective(cfg, chan, s, state.theta);

  convex::SmoothProgram prog;
  prog.dim = 3;
  prog.objective = [obj](const Eigen::VectorXd& t, Eigen::VectorXd& g) { return obj(t, g); };
  prog.hessian = [obj](const Eigen::VectorXd& t, Eigen::MatrixXd& h) { obj.hess(t, h); };
  prog.constraints.push_back({Eigen::Vector3d(-1, 1, 1), 0.0});
  prog.lower = Eigen::Vector3d(cfg.t_min_s, 0, 0);
  prog.upper = Eigen::Vector3d(cfg.t_max_s, std::numeric_limits<double>::infinity(),
                               std::numeric_limits<double>::infinity());

  const double span = cfg.t_max_s - cfg.t_min_s;
  const bool pinned = span <= 1e-12 * std::max(1.0, cfg.t_max_s);
  double t1c = pinned ? cfg.t_min_s
                      : std::clamp(s.t1_s, cfg.t_min_s + 1e-8 * span, cfg.t_max_s - 1e-8 * span);
  const double d2 = 1e-8 * t1c;
  const double sc = std::clamp(0.5 * (s.t2_s + s.t3_s), d2, (t1c - d2) / 2);

  convex::SolveOutcome sol;
  Eigen::Vector3d full;
  if (pinned) {
    Eigen::MatrixXd map(3, 1);
    map << 0, 1, 1;
    Eigen::Vector3d offset(t1c, 0, 0);
    auto red = convex::substitute(prog, map, offset, Eigen::VectorXd::Constant(1, sc));
    sol = convex::minimize(red, 1e-10);
    full = map * sol.x_star + offset;
  } else {
    Eigen::MatrixXd map(3, 2);
    map << 1, 0, 0, 1, 0, 1;
    auto red = convex::substitute(prog, map, Eigen::Vector3d::Zero(), Eigen::Vector2d(t1c, sc));
    sol = convex::minimize(red, 1e-10);
    full = map * sol.x_star;
  }

  Schedule cand = s;
  cand.t1_s = full[0];
  cand.t2_s = full[1];
  cand.t3_s = full[2];
  const double val = dinkelbach_objective(cfg, chan, cand, state.theta);
  if (val <= state.objective_value)
    return {cand, state.theta, val, state.iteration};
  return state;
}

}  // namespace detail

// Every task runs where it originated; only the slot length matters, and the
// idle transmission slots are not charged to the latency.
inline SolveReport baseline_all_local(const SystemConfig& cfg, const ChannelRealization& chan) {
  const auto t_start = std::chrono::steady_clock::now();
  const auto n = static_cast<std::size_t>(cfg.n_users);
  SolveReport rep;
  Schedule s{cfg.t_max_s, 0, 0, 0, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  rep.schedule = s;
  rep.avg_power_w = avg_power(cfg, chan, s);
  rep.dinkelbach_trace.emplace_back(rep.avg_power_w, 0.0);
  rep.converged = true;
  rep.kkt_residual = 0;
  rep.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
          .count();
  return rep;
}

inline SolveReport baseline_equal_bandwidth(const SystemConfig& cfg,
                                            const ChannelRealization& chan) {
  if (cfg.abundant_capacity()) {
    auto rb = [&](const BcdState& st) { return detail::rb_step_fixed_band(cfg, chan, st); };
    auto times = [&](const BcdState& st) { return optimize_times(cfg, chan, st); };
    return detail::dinkelbach_bcd(cfg, chan, detail::bcd_start(cfg, 0.5),
                                  detail::all_local_ratio(cfg, chan), rb, times);
  }
  const int n = cfg.n_users;
  const int dim = detail::dca_dim(cfg);
  detail::DcaMap m;
  m.map = Eigen::MatrixXd::Zero(dim, 4 + n);
  m.map.topLeftCorner(4 + n, 4 + n).setIdentity();
  m.map.bottomRows(n).col(1).setConstant(cfg.bandwidth_hz / n);
  m.offset = Eigen::VectorXd::Zero(dim);
  m.reduce = [n](const DcaPoint& y) { return detail::pack(y).head(4 + n).eval(); };

  DcaPoint start = detail::deep_interior(cfg);
  for (auto& p : start.p) p = cfg.bandwidth_hz * start.t2 / n;
  return detail::dinkelbach_dca(cfg, chan, start, detail::all_local_ratio(cfg, chan), m);
}

inline SolveReport baseline_equal_time(const SystemConfig& cfg, const ChannelRealization& chan) {
  if (cfg.abundant_capacity()) {
    auto rb = [&](const BcdState& st) { return optimize_rb(cfg, chan, st); };
    auto times = [&](const BcdState& st) { return detail::times_step_equal(cfg, chan, st); };
    return detail::dinkelbach_bcd(cfg, chan, detail::bcd_start(cfg, 0.5),
                                  detail::all_local_ratio(cfg, chan), rb, times);
  }
  const int n = cfg.n_users;
  const int dim = detail::dca_dim(cfg);
  detail::DcaMap m;
  m.map = Eigen::MatrixXd::Zero(dim, 3 + 2 * n);
  m.map(0, 0) = 1;  // t1
  m.map(1, 1) = 1;  // t2 and t3 share the second coordinate
  m.map(2, 1) = 1;
  m.map(3, 2) = 1;  // t4
  m.map.block(4, 3, n, n).setIdentity();
  m.map.bottomRightCorner(n, n) = cfg.bandwidth_hz * Eigen::MatrixXd::Identity(n, n);
  m.offset = Eigen::VectorXd::Zero(dim);
  m.reduce = [n, &cfg](const DcaPoint& y) {
    Eigen::VectorXd v(3 + 2 * n);
    v[0] = y.t1;
    v[1] = y.t2;
    v[2] = y.t4;
    for (int i = 0; i < n; ++i) {
      v[3 + i] = y.q[static_cast<std::size_t>(i)];
      v[3 + n + i] = y.p[static_cast<std::size_t>(i)] / cfg.bandwidth_hz;
    }
    return v;
  };
  return detail::dinkelbach_dca(cfg, chan, detail::deep_interior(cfg),
                                detail::all_local_ratio(cfg, chan), m);
}

inline SolveReport baseline_all_offload(const SystemConfig& cfg, const ChannelRealization& chan) {
  if (cfg.abundant_capacity()) {
    auto rb = [&](const BcdState& st) { return detail::rb_step_all_offload(cfg, chan, st); };
    auto times = [&](const BcdState& st) { return optimize_times(cfg, chan, st); };
    const Schedule start = detail::bcd_start(cfg, 1.0);
    // the all-local point is outside this restriction, so the ratio at the
    // scheme's own start seeds the fractional iteration instead
    return detail::dinkelbach_bcd(cfg, chan, start, avg_power(cfg, chan, start), rb, times);
  }
  double offload_rate = 0;
  for (int i = 0; i < cfg.n_users; ++i) offload_rate += cfg.rate_nat_per_s[i];
  offload_rate *= cfg.cycles_per_nat;
  if (offload_rate >= cfg.bs_capacity_hz)
    throw std::invalid_argument(
        "baseline_all_offload: full offload exceeds the relay capacity for every t4");

  const int n = cfg.n_users;
  const int dim = detail::dca_dim(cfg);
  detail::DcaMap m;
  m.map = Eigen::MatrixXd::Zero(dim, 4 + n);
  m.map.topLeftCorner(4, 4).setIdentity();
  m.map.block(4, 0, n, 1).setOnes();  // q_n pinned to t1
  m.map.bottomRightCorner(n, n) = cfg.bandwidth_hz * Eigen::MatrixXd::Identity(n, n);
  m.offset = Eigen::VectorXd::Zero(dim);
  m.reduce = [n, &cfg](const DcaPoint& y) {
    Eigen::VectorXd v(4 + n);
    v[0] = y.t1;
    v[1] = y.t2;
    v[2] = y.t3;
    v[3] = y.t4;
    for (int i = 0; i < n; ++i) v[4 + i] = y.p[static_cast<std::size_t>(i)] / cfg.bandwidth_hz;
    return v;
  };

  DcaPoint start;
  start.t1 = cfg.t_min_s + 0.9 * (cfg.t_max_s - cfg.t_min_s);
  const double t4_need = offload_rate * start.t1 / cfg.bs_capacity_hz;
  start.t4 = t4_need + 0.25 * (start.t1 - t4_need);
  start.t2 = start.t3 = 0.4 * (start.t1 - start.t4);
  start.q.assign(static_cast<std::size_t>(n), start.t1);
  start.p.assign(static_cast<std::size_t>(n), cfg.bandwidth_hz * start.t2 / (2.0 * n));
  const double vartheta0 = avg_power(cfg, chan, to_schedule(cfg, start));
  return detail::dinkelbach_dca(cfg, chan, start, vartheta0, m);
}

}  // namespace coopmec
