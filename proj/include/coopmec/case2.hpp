#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include <coopmec/barrier.hpp>
#include <coopmec/objective.hpp>
#include <coopmec/types.hpp>

namespace coopmec {

// Finite-capacity decision point in the substituted variables p_n = t2 b_n
// (uplink band-time products) and q_n = t1 r_n (offloaded payload times),
// which make the energy terms jointly convex up to a smooth concave part.
struct DcaPoint {
  double t1 = 0, t2 = 0, t3 = 0, t4 = 0;
  std::vector<double> q;
  std::vector<double> p;
};

struct DcSplit {
  double psi = 0;    // convex part
  double eta = 0;    // concave part's negative: gamma = psi - eta
  double gamma = 0;  // numerator - vartheta * denominator at the point
};

// Affine minorant eta_bar(y) = constant + grad . y built at an anchor.
struct EtaModel {
  double constant = 0;
  Eigen::VectorXd grad;
};

namespace detail {

inline int dca_dim(const SystemConfig& cfg) { return 4 + 2 * cfg.n_users; }

inline Eigen::VectorXd pack(const DcaPoint& y) {
  const auto n = y.q.size();
  Eigen::VectorXd x(4 + 2 * n);
  x[0] = y.t1;
  x[1] = y.t2;
  x[2] = y.t3;
  x[3] = y.t4;
  for (std::size_t i = 0; i < n; ++i) {
    x[4 + static_cast<Eigen::Index>(i)] = y.q[i];
    x[4 + static_cast<Eigen::Index>(n + i)] = y.p[i];
  }
  return x;
}

inline DcaPoint unpack(const Eigen::VectorXd& x, int n_users) {
  DcaPoint y;
  y.t1 = x[0];
  y.t2 = x[1];
  y.t3 = x[2];
  y.t4 = x[3];
  y.q.assign(static_cast<std::size_t>(n_users), 0.0);
  y.p.assign(static_cast<std::size_t>(n_users), 0.0);
  for (int i = 0; i < n_users; ++i) {
    y.q[static_cast<std::size_t>(i)] = x[4 + i];
    y.p[static_cast<std::size_t>(i)] = x[4 + n_users + i];
  }
  return y;
}

// psi(y) = sum (p_n/h_n)(e^{c_n q_n/p_n} - 1) + (t3 B/g)(e^{S/(t3 B)} - 1)
//        + sum k_n (t1 + 3 q_n^2/t1) + sum E0_n,   S = sum c_n q_n,
// with k_n = kappa_n X^3 c_n^3.  Every term is convex (perspectives).
struct PsiEval {
  std::vector<double> c, h, k;
  double band = 0, g = 0, overhead = 0;
  int n = 0;

  double value_grad(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
    const double t1 = x[0], t3 = x[2];
    if (grad) grad->setZero(x.size());
    double val = overhead;
    double s = 0;
    for (int i = 0; i < n; ++i) {
      const double qi = x[4 + i], pi = x[4 + n + i];
      s += c[i] * qi;
      val += k[i] * (t1 + 3 * qi * qi / t1);
      if (grad) {
        (*grad)[0] += k[i] * (1 - 3 * qi * qi / (t1 * t1));
        (*grad)[4 + i] += 6 * k[i] * qi / t1;
      }
      if (pi > 0) {
        const double u = c[i] * qi / pi;
        if (u > 700) return std::numeric_limits<double>::infinity();
        const double eu = std::exp(u);
        val += pi / h[i] * std::expm1(u);
        if (grad) {
          (*grad)[4 + i] += c[i] / h[i] * eu;
          (*grad)[4 + n + i] += (std::expm1(u) - u * eu) / h[i];
        }
      } else if (qi > 0) {
        return std::numeric_limits<double>::infinity();
      } else if (grad) {
        (*grad)[4 + i] += c[i] / h[i];  // limit of (c/h) e^u along q = 0
      }
    }
    const double y = s / (t3 * band);
    if (y > 700) return std::numeric_limits<double>::infinity();
    const double ey = std::exp(y);
    val += t3 * band / g * std::expm1(y);
    if (grad) {
      for (int i = 0; i < n; ++i) (*grad)[4 + i] += c[i] / g * ey;
      (*grad)[2] += band / g * (std::expm1(y) - y * ey);
    }
    return val;
  }

  void hess(const Eigen::VectorXd& x, Eigen::MatrixXd& out) const {
    const double t1 = x[0], t3 = x[2];
    out.setZero(x.size(), x.size());
    double s = 0;
    for (int i = 0; i < n; ++i) {
      const double qi = x[4 + i], pi = x[4 + n + i];
      s += c[i] * qi;
      out(0, 0) += 6 * k[i] * qi * qi / (t1 * t1 * t1);
      out(0, 4 + i) += -6 * k[i] * qi / (t1 * t1);
      out(4 + i, 0) += -6 * k[i] * qi / (t1 * t1);
      out(4 + i, 4 + i) += 6 * k[i] / t1;
      if (pi > 0) {
        const double u = c[i] * qi / pi;
        const double eu = std::exp(std::min(u, 700.0));
        out(4 + i, 4 + i) += c[i] * c[i] / (h[i] * pi) * eu;
        const double cross = -c[i] * u / (h[i] * pi) * eu;
        out(4 + i, 4 + n + i) += cross;
        out(4 + n + i, 4 + i) += cross;
        out(4 + n + i, 4 + n + i) += u * u / (h[i] * pi) * eu;
      }
    }
    const double y = s / (t3 * band);
    const double ey = std::exp(std::min(y, 700.0));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) out(4 + i, 4 + j) += c[i] * c[j] / (g * t3 * band) * ey;
      const double cross = -c[i] * y / (g * t3) * ey;
      out(4 + i, 2) += cross;
      out(2, 4 + i) += cross;
    }
    out(2, 2) += band * y * y / (g * t3) * ey;
  }
};

inline PsiEval make_psi(const SystemConfig& cfg, const ChannelRealization& chan) {
  PsiEval psi;
  psi.n = cfg.n_users;
  psi.band = cfg.bandwidth_hz;
  psi.g = chan.g;
  psi.c = cfg.rate_nat_per_s;
  psi.h = chan.h;
  const double x = cfg.cycles_per_nat;
  for (int i = 0; i < cfg.n_users; ++i) {
    const double xc = x * cfg.rate_nat_per_s[i];
    psi.k.push_back(cfg.kappa[i] * xc * xc * xc);
    psi.overhead += cfg.overhead_j[i];
  }
  return psi;
}

}  // namespace detail

inline double psi(const SystemConfig& cfg, const ChannelRealization& chan, const DcaPoint& y) {
  return detail::make_psi(cfg, chan).value_grad(detail::pack(y), nullptr);
}

// eta(y) = sum k_n (q_n^3/t1^2 + 3 q_n) + vartheta (t1 + t2 + t3 + t4); the
// perspective q^3/t1^2 makes it convex, so gamma = psi - eta is a proper DC
// split of the Dinkelbach objective.
inline double eta(const SystemConfig& cfg, double vartheta, const DcaPoint& y) {
  double val = vartheta * (y.t1 + y.t2 + y.t3 + y.t4);
  const double x = cfg.cycles_per_nat;
  for (int i = 0; i < cfg.n_users; ++i) {
    const double xc = x * cfg.rate_nat_per_s[i];
    const double k = cfg.kappa[i] * xc * xc * xc;
    const double qi = y.q[static_cast<std::size_t>(i)];
    val += k * (qi * qi * qi / (y.t1 * y.t1) + 3 * qi);
  }
  return val;
}

inline DcSplit dc_split(const SystemConfig& cfg, const ChannelRealization& chan, double vartheta,
                        const DcaPoint& y) {
  DcSplit s;
  s.psi = psi(cfg, chan, y);
  s.eta = eta(cfg, vartheta, y);
  s.gamma = s.psi - s.eta;
  return s;
}

inline EtaModel eta_linearize(const SystemConfig& cfg, double vartheta, const DcaPoint& anchor) {
  const int dim = detail::dca_dim(cfg);
  EtaModel m;
  m.grad = Eigen::VectorXd::Zero(dim);
  m.grad[0] = vartheta;
  m.grad[1] = vartheta;
  m.grad[2] = vartheta;
  m.grad[3] = vartheta;
  const double x = cfg.cycles_per_nat;
  const double t1 = anchor.t1;
  for (int i = 0; i < cfg.n_users; ++i) {
    const double xc = x * cfg.rate_nat_per_s[i];
    const double k = cfg.kappa[i] * xc * xc * xc;
    const double qi = anchor.q[static_cast<std::size_t>(i)];
    m.grad[4 + i] = 3 * k * (qi * qi / (t1 * t1) + 1);
    m.grad[0] -= 2 * k * qi * qi * qi / (t1 * t1 * t1);
  }
  m.constant = eta(cfg, vartheta, anchor) - m.grad.dot(detail::pack(anchor));
  return m;
}

inline double eta_model_at(const EtaModel& m, const DcaPoint& y) {
  return m.constant + m.grad.dot(detail::pack(y));
}

// Map back to schedule variables; vanishing (q, p) pairs snap to exact zero
// so the emitted schedule keeps the b_n = 0 iff r_n = 0 pairing.
inline Schedule to_schedule(const SystemConfig& cfg, const DcaPoint& y) {
  Schedule s;
  s.t1_s = y.t1;
  s.t2_s = y.t2;
  s.t3_s = y.t3;
  s.t4_s = y.t4;
  s.r.assign(static_cast<std::size_t>(cfg.n_users), 0.0);
  s.b.assign(static_cast<std::size_t>(cfg.n_users), 0.0);
  for (int i = 0; i < cfg.n_users; ++i) {
    const double qi = y.q[static_cast<std::size_t>(i)];
    const double pi = y.p[static_cast<std::size_t>(i)];
    if (qi <= 1e-9 * y.t1 || pi <= 1e-9 * cfg.bandwidth_hz * y.t2) continue;
    s.r[static_cast<std::size_t>(i)] = qi / y.t1;
    s.b[static_cast<std::size_t>(i)] = pi / y.t2;
  }
  return s;
}

namespace detail {

struct DcaGeometry {
  std::vector<convex::LinearConstraint> rows;
  Eigen::VectorXd lower, upper;
};

inline DcaGeometry dca_geometry(const SystemConfig& cfg) {
  const int dim = dca_dim(cfg);
  const int n = cfg.n_users;
  const double inf = std::numeric_limits<double>::infinity();
  DcaGeometry geo;
  geo.lower = Eigen::VectorXd::Zero(dim);
  geo.lower[0] = cfg.t_min_s;
  geo.upper = Eigen::VectorXd::Constant(dim, inf);
  geo.upper[0] = cfg.t_max_s;

  Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);  // t2 + t3 + t4 <= t1
  row[0] = -1;
  row[1] = row[2] = row[3] = 1;
  geo.rows.push_back({row, 0.0});

  row = Eigen::VectorXd::Zero(dim);  // X sum c_n q_n <= f_B t4
  row[3] = -cfg.bs_capacity_hz;
  for (int i = 0; i < n; ++i) row[4 + i] = cfg.cycles_per_nat * cfg.rate_nat_per_s[i];
  geo.rows.push_back({row, 0.0});

  row = Eigen::VectorXd::Zero(dim);  // sum p_n <= B t2
  row[1] = -cfg.bandwidth_hz;
  for (int i = 0; i < n; ++i) row[4 + n + i] = 1;
  geo.rows.push_back({row, 0.0});

  for (int i = 0; i < n; ++i) {  // q_n <= t1
    row = Eigen::VectorXd::Zero(dim);
    row[0] = -1;
    row[4 + i] = 1;
    geo.rows.push_back({row, 0.0});
  }
  return geo;
}

// Smallest scaled slack over the feasible-set inequalities.
inline double min_scaled_slack(const SystemConfig& cfg, const DcaPoint& y) {
  const double st = std::max(1.0, cfg.t_max_s);
  const double sp = std::max(1.0, cfg.bandwidth_hz * cfg.t_max_s);
  double m = std::min({(y.t1 - cfg.t_min_s) / st, (cfg.t_max_s - y.t1) / st,
                       (y.t1 - y.t2 - y.t3 - y.t4) / st, y.t2 / st, y.t3 / st, y.t4 / st});
  double used_cap = 0, used_band = 0;
  for (int i = 0; i < cfg.n_users; ++i) {
    const double qi = y.q[static_cast<std::size_t>(i)];
    const double pi = y.p[static_cast<std::size_t>(i)];
    used_cap += cfg.cycles_per_nat * cfg.rate_nat_per_s[i] * qi;
    used_band += pi;
    m = std::min({m, qi / st, (y.t1 - qi) / st, pi / sp});
  }
  if (!cfg.abundant_capacity()) {
    const double sc = std::max(1.0, cfg.bs_capacity_hz * cfg.t_max_s);
    m = std::min(m, (cfg.bs_capacity_hz * y.t4 - used_cap) / sc);
  }
  m = std::min(m, (cfg.bandwidth_hz * y.t2 - used_band) / sp);
  return m;
}

inline DcaPoint deep_interior(const SystemConfig& cfg) {
  DcaPoint y;
  y.t1 = cfg.t_min_s + 0.6 * (cfg.t_max_s - cfg.t_min_s);
  if (!(y.t1 > 0)) y.t1 = cfg.t_min_s;
  y.t2 = y.t3 = y.t4 = 0.225 * y.t1;
  const auto n = static_cast<std::size_t>(cfg.n_users);
  y.q.resize(n);
  y.p.resize(n);
  for (int i = 0; i < cfg.n_users; ++i) {
    y.q[static_cast<std::size_t>(i)] =
        std::min(0.4 * y.t1, cfg.bs_capacity_hz * y.t4 /
                                 (2.0 * cfg.n_users * cfg.cycles_per_nat * cfg.rate_nat_per_s[i]));
    y.p[static_cast<std::size_t>(i)] = cfg.bandwidth_hz * y.t2 / (2.0 * cfg.n_users);
  }
  return y;
}

// Pull a feasible point off the boundary by blending toward a deep interior
// point until every scaled slack clears the barrier's 1e-8 margin.
inline DcaPoint strictify(const SystemConfig& cfg, const DcaPoint& y) {
  if (min_scaled_slack(cfg, y) >= 1e-8) return y;
  const DcaPoint deep = deep_interior(cfg);
  for (double beta = 1e-7; beta <= 1.0; beta *= 10) {
    DcaPoint blend = y;
    auto mix = [beta](double a, double b) { return (1 - beta) * a + beta * b; };
    blend.t1 = mix(y.t1, deep.t1);
    blend.t2 = mix(y.t2, deep.t2);
    blend.t3 = mix(y.t3, deep.t3);
    blend.t4 = mix(y.t4, deep.t4);
    for (std::size_t i = 0; i < y.q.size(); ++i) {
      blend.q[i] = mix(y.q[i], deep.q[i]);
      blend.p[i] = mix(y.p[i], deep.p[i]);
    }
    if (min_scaled_slack(cfg, blend) >= 1e-8) return blend;
  }
  return deep;
}

// Full majorant program psi - eta_bar over the slot/payload/band polytope,
// in natural units and with no interior point chosen.
inline convex::SmoothProgram dca_program(const SystemConfig& cfg, const ChannelRealization& chan,
                                         const EtaModel& lin) {
  const auto psi_eval = make_psi(cfg, chan);
  convex::SmoothProgram prog;
  prog.dim = dca_dim(cfg);
  prog.objective = [psi_eval, lin](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const double v = psi_eval.value_grad(x, &grad);
    grad -= lin.grad;
    return v - lin.constant - lin.grad.dot(x);
  };
  prog.hessian = [psi_eval](const Eigen::VectorXd& x, Eigen::MatrixXd& h) { psi_eval.hess(x, h); };
  auto geo = dca_geometry(cfg);
  prog.constraints = std::move(geo.rows);
  prog.lower = geo.lower;
  prog.upper = geo.upper;
  return prog;
}

}  // namespace detail

// One convex majorant minimization, solved by the interior-point core in
// B-scaled uplink variables.
inline DcaPoint dca_subproblem(const SystemConfig& cfg, const ChannelRealization& chan,
                               double vartheta, const DcaPoint& anchor) {
  if (cfg.abundant_capacity())
    throw std::invalid_argument("dca_subproblem: requires finite BS capacity");
  const int dim = detail::dca_dim(cfg);
  const int n = cfg.n_users;
  const EtaModel lin = eta_linearize(cfg, vartheta, anchor);
  auto prog = detail::dca_program(cfg, chan, lin);

  // scale the p block by B so the Newton systems stay well conditioned
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(dim);
  scale.segment(4 + n, n).setConstant(cfg.bandwidth_hz);
  Eigen::MatrixXd map = scale.asDiagonal();
  Eigen::VectorXd start = detail::pack(detail::strictify(cfg, anchor));
  start.segment(4 + n, n) /= cfg.bandwidth_hz;

  auto red = convex::substitute(prog, map, Eigen::VectorXd::Zero(dim), start);
  auto sol = convex::minimize(red, 1e-10);
  return detail::unpack(scale.asDiagonal() * sol.x_star, n);
}

struct DcaRun {
  DcaPoint limit;
  std::vector<double> gamma_bar;  // optimal majorant values, nonincreasing
  int iterations = 0;
};

inline DcaRun dca_solve(const SystemConfig& cfg, const ChannelRealization& chan, double vartheta,
                        const DcaPoint& start) {
  DcaRun run;
  DcaPoint y = start;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 15; ++k) {
    const EtaModel lin = eta_linearize(cfg, vartheta, y);
    y = dca_subproblem(cfg, chan, vartheta, y);
    const double gamma_bar = psi(cfg, chan, y) - eta_model_at(lin, y);
    run.gamma_bar.push_back(gamma_bar);
    run.iterations = k;
    if (k >= 2 && std::abs(gamma_bar - prev) <= 1e-3 * (1 + std::abs(prev))) break;
    prev = gamma_bar;
  }
  run.limit = y;
  return run;
}

inline DcaPoint initial_dca_point(const SystemConfig& cfg) {
  DcaPoint y;
  y.t1 = cfg.t_max_s;
  y.t2 = y.t3 = y.t4 = y.t1 / 4;
  const auto n = static_cast<std::size_t>(cfg.n_users);
  y.q.resize(n);
  y.p.resize(n);
  for (int i = 0; i < cfg.n_users; ++i) {
    y.q[static_cast<std::size_t>(i)] =
        std::min(0.5 * y.t1, cfg.bs_capacity_hz * y.t4 /
                                 (2.0 * cfg.n_users * cfg.cycles_per_nat * cfg.rate_nat_per_s[i]));
    y.p[static_cast<std::size_t>(i)] = cfg.bandwidth_hz * y.t2 / (2.0 * cfg.n_users);
  }
  return y;
}

struct Case2Result {
  SolveReport report;
  DcaPoint limit;
};

inline Case2Result solve_case2(const SystemConfig& cfg, const ChannelRealization& chan) {
  if (cfg.abundant_capacity())
    throw std::invalid_argument("solve_case2: requires finite BS capacity");
  const auto t_start = std::chrono::steady_clock::now();
  const auto n = static_cast<std::size_t>(cfg.n_users);

  Schedule all_local{cfg.t_min_s, cfg.t_min_s / 4, cfg.t_min_s / 4, cfg.t_min_s / 4,
                     std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  double vartheta = avg_power(cfg, chan, all_local);

  Case2Result res;
  SolveReport& rep = res.report;
  DcaPoint y = initial_dca_point(cfg);
  double num = 0, den = 1;
  for (int outer = 0; outer < 30; ++outer) {
    DcaRun run = dca_solve(cfg, chan, vartheta, y);
    y = run.limit;
    const Schedule sched = to_schedule(cfg, y);
    num = numerator(cfg, chan, sched);
    den = denominator(cfg, sched);
    const double residual = num - vartheta * den;
    rep.dinkelbach_trace.emplace_back(vartheta, residual);
    rep.inner_rounds.push_back(run.gamma_bar);
    rep.inner_trace.insert(rep.inner_trace.end(), run.gamma_bar.begin(), run.gamma_bar.end());
    if (std::abs(residual) <= 1e-6 * den) {
      rep.converged = true;
      break;
    }
    vartheta = num / den;
  }
  res.limit = y;
  rep.schedule = to_schedule(cfg, y);
  rep.avg_power_w = num / den;

  // stationarity as a fixed-point residual: a converged DCA point solves its
  // own majorant subproblem, so re-solving should not move it
  const DcaPoint probe = dca_subproblem(cfg, chan, vartheta, y);
  double move = std::max({std::abs(probe.t1 - y.t1), std::abs(probe.t2 - y.t2),
                          std::abs(probe.t3 - y.t3), std::abs(probe.t4 - y.t4)}) /
                std::max(1.0, cfg.t_max_s);
  for (std::size_t i = 0; i < n; ++i) {
    move = std::max(move, std::abs(probe.q[i] - y.q[i]) / std::max(1.0, cfg.t_max_s));
    move = std::max(move, std::abs(probe.p[i] - y.p[i]) /
                              std::max(1.0, cfg.bandwidth_hz * cfg.t_max_s));
  }
  rep.kkt_residual = move;
  rep.runtime_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t_start)
                       .count();
  return res;
}

}  // namespace coopmec
