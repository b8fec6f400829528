#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include <coopmec/barrier.hpp>
#include <coopmec/objective.hpp>
#include <coopmec/types.hpp>

namespace coopmec {

// Multipliers of the bandwidth-and-ratio subproblem (lambda prices the band,
// epsilon prices pooled relay payload) with the primal point they induce.
struct DualPoint {
  double lambda = 0;
  double epsilon = 0;
  std::vector<double> r_star;
  std::vector<double> b_star;
  double z_star = 0;
  std::vector<bool> active;  // r_n* > 0

  bool any_active() const {
    for (bool a : active)
      if (a) return true;
    return false;
  }
};

struct BcdState {
  Schedule schedule;
  double theta = 0;
  double objective_value = 0;  // numerator - theta * denominator
  int iteration = 0;
};

// f(x) = (t1 x - t2) e^{t1 x / t2} + t2, written as t2 (u e^u - expm1(u))
// with u = t1 x / t2 to avoid cancellation near x = 0.  Strictly increasing
// on x >= 0 with f(0) = 0; it maps an uplink spectral load to the price
// lambda * h_n at which that load is the energy-optimal operating point.
inline double f_eval(double t1, double t2, double x) {
  const double u = t1 * x / t2;
  return t2 * (u * std::exp(u) - std::expm1(u));
}

inline double f_inverse(double t1, double t2, double y) {
  if (y < 0) throw std::invalid_argument("f_inverse: y must be nonnegative");
  if (y == 0) return 0.0;
  double hi = t2 / t1;  // u = 1
  for (int i = 0; i < 1200 && f_eval(t1, t2, hi) < y; ++i) hi *= 2;
  if (f_eval(t1, t2, hi) < y) throw std::invalid_argument("f_inverse: y out of range");
  double lo = 0;
  while (true) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket at machine resolution
    (f_eval(t1, t2, mid) < y ? lo : hi) = mid;
  }
  return hi;
}

namespace detail {

struct RbContext {
  const SystemConfig* cfg;
  const ChannelRealization* chan;
  double t1, t2, t3;
  std::vector<double> k3;  // 3 kappa_n t1 X^3 c_n^3, the local marginal-saving scale
  double eps_floor;        // t1 / g, below which z* clamps to zero
};

inline RbContext make_rb_context(const SystemConfig& cfg, const ChannelRealization& chan,
                                 double t1, double t2, double t3) {
  RbContext ctx{&cfg, &chan, t1, t2, t3, {}, t1 / chan.g};
  ctx.k3.reserve(static_cast<std::size_t>(cfg.n_users));
  const double x = cfg.cycles_per_nat;
  for (int n = 0; n < cfg.n_users; ++n) {
    const double xc = x * cfg.rate_nat_per_s[n];
    ctx.k3.push_back(3 * cfg.kappa[n] * t1 * xc * xc * xc);
  }
  return ctx;
}

// Quantities that depend on lambda but not on epsilon, so the inner epsilon
// search can reuse them across all its probes.
struct LambdaSlice {
  double lambda = 0;
  std::vector<double> alpha;  // f^{-1}(lambda h_n)
  std::vector<double> big_a;  // (t1 c_n / h_n) e^{t1 alpha_n / t2}
};

inline LambdaSlice make_slice(const RbContext& ctx, double lambda) {
  LambdaSlice s;
  s.lambda = lambda;
  const auto& cfg = *ctx.cfg;
  const auto& chan = *ctx.chan;
  for (int n = 0; n < cfg.n_users; ++n) {
    const double a = lambda > 0 ? f_inverse(ctx.t1, ctx.t2, lambda * chan.h[n]) : 0.0;
    s.alpha.push_back(a);
    s.big_a.push_back(ctx.t1 * cfg.rate_nat_per_s[n] / chan.h[n] * std::exp(ctx.t1 * a / ctx.t2));
  }
  return s;
}

inline DualPoint point_at(const RbContext& ctx, const LambdaSlice& s, double eps) {
  const auto& cfg = *ctx.cfg;
  DualPoint d;
  d.lambda = s.lambda;
  d.epsilon = eps;
  d.r_star.resize(static_cast<std::size_t>(cfg.n_users), 0.0);
  d.b_star.resize(static_cast<std::size_t>(cfg.n_users), 0.0);
  d.active.resize(static_cast<std::size_t>(cfg.n_users), false);
  for (int n = 0; n < cfg.n_users; ++n) {
    const double c = cfg.rate_nat_per_s[n];
    const double radicand = (s.big_a[n] + eps * c) / ctx.k3[n];
    if (radicand < 1) {
      const double r = 1 - std::sqrt(radicand);
      if (!(s.lambda > 0))
        throw std::invalid_argument("primal_from_duals: lambda = 0 with an active user");
      d.r_star[n] = r;
      d.b_star[n] = c * r / s.alpha[n];
      d.active[n] = true;
    }
  }
  d.z_star = eps * ctx.chan->g > ctx.t1
                 ? ctx.t3 * cfg.bandwidth_hz / ctx.t1 * std::log(eps * ctx.chan->g / ctx.t1)
                 : 0.0;
  return d;
}

inline double offload_rate(const SystemConfig& cfg, const DualPoint& d) {
  double s = 0;
  for (int n = 0; n < cfg.n_users; ++n) s += cfg.rate_nat_per_s[n] * d.r_star[n];
  return s;
}

inline DualPoint all_local_point(const RbContext& ctx) {
  DualPoint d;
  d.lambda = 0;
  d.epsilon = ctx.eps_floor;
  d.r_star.assign(static_cast<std::size_t>(ctx.cfg->n_users), 0.0);
  d.b_star.assign(static_cast<std::size_t>(ctx.cfg->n_users), 0.0);
  d.active.assign(static_cast<std::size_t>(ctx.cfg->n_users), false);
  d.z_star = 0;
  return d;
}

// Balance pooled payload against the relay's price-induced supply z*(eps):
// sum c_n r_n*(eps) falls and z*(eps) rises, so the crossing is unique.
inline DualPoint inner_bisect(const RbContext& ctx, const LambdaSlice& slice) {
  const auto& cfg = *ctx.cfg;
  auto gap = [&](const DualPoint& d) { return offload_rate(cfg, d) - d.z_star; };

  DualPoint at_zero = point_at(ctx, slice, 0.0);
  if (offload_rate(cfg, at_zero) <= 0) return point_at(ctx, slice, ctx.eps_floor);

  double lo = 0;
  double hi = ctx.eps_floor;
  DualPoint d_hi = point_at(ctx, slice, hi);
  for (int i = 0; i < 200 && gap(d_hi) > 0; ++i) {
    lo = hi;
    hi *= 2;
    d_hi = point_at(ctx, slice, hi);
  }
  DualPoint best = d_hi;
  for (int i = 0; i < 200; ++i) {
    const double g = gap(best);
    if (std::abs(g) <= 1e-9 * std::max(1.0, best.z_star)) break;
    (g > 0 ? lo : hi) = best.epsilon;
    if (hi - lo <= 1e-15 * hi) break;
    best = point_at(ctx, slice, 0.5 * (lo + hi));
  }
  return best;
}

inline double band_used(const DualPoint& d) {
  double s = 0;
  for (double b : d.b_star) s += b;
  return s;
}

// Outer search on the bandwidth price: sum b_n*(lambda) decreases, so expand
// a bracket around a per-user activation scale and bisect to the budget.
inline DualPoint outer_bisect(const RbContext& ctx) {
  const auto& cfg = *ctx.cfg;
  const auto& chan = *ctx.chan;
  const double band = cfg.bandwidth_hz;
  const double tol = 1e-6 * band;

  // Decide all-local up front.  At lambda = 0 user n wants to offload iff
  // t1 c_n / h_n + eps c_n < k3_n, and the z block pins any certifying eps
  // at or below the floor price.  The block problem is convex, so if nobody
  // passes the test at the floor price the all-local point is the block
  // optimum, certified by that eps.  If somebody passes, demand blows up as
  // lambda falls (b_n = c_n r_n / alpha_n with alpha_n -> 0), so a budget
  // crossing at positive lambda exists and the expansion below must find it.
  bool offload_pays = false;
  for (int n = 0; n < cfg.n_users; ++n) {
    const double c = cfg.rate_nat_per_s[n];
    if (ctx.t1 * c / chan.h[n] + ctx.eps_floor * c < ctx.k3[n]) {
      offload_pays = true;
      break;
    }
  }
  if (!offload_pays) return all_local_point(ctx);

  // search start: the price at which the weakest user would transmit at an
  // equal share and half offload, an upper bound on every activation price
  double lam_ref = 0;
  for (int n = 0; n < cfg.n_users; ++n) {
    // cap the exponent so the reference stays finite
    double a_hat = std::min(cfg.rate_nat_per_s[n] * cfg.n_users / (2 * band),
                            600 * ctx.t2 / ctx.t1);
    lam_ref = std::max(lam_ref, f_eval(ctx.t1, ctx.t2, a_hat) / chan.h[n]);
  }
  if (!(lam_ref > 0)) throw std::invalid_argument("outer_bisect_lambda: corrupt channel scales");

  double lam = lam_ref;
  LambdaSlice slice = make_slice(ctx, lam);
  DualPoint point = inner_bisect(ctx, slice);
  double excess = band_used(point) - band;

  double lo = 0, hi = 0;
  DualPoint at_hi;
  if (excess > 0) {
    for (int i = 0; i < 60; ++i) {
      lo = lam;
      lam *= 2;
      point = inner_bisect(ctx, make_slice(ctx, lam));
      if (band_used(point) - band <= 0) break;
    }
    hi = lam;
    at_hi = point;
    if (band_used(at_hi) - band > 0)
      throw std::runtime_error("outer_bisect_lambda: bracket expansion failed upward");
  } else {
    hi = lam;
    at_hi = point;
    while (true) {
      if (std::abs(band_used(at_hi) - band) <= tol) return at_hi;
      lam *= 0.5;
      if (!(lam > 0))
        throw std::runtime_error("outer_bisect_lambda: bracket expansion failed downward");
      point = inner_bisect(ctx, make_slice(ctx, lam));
      if (band_used(point) - band > 0) {
        lo = lam;
        break;
      }
      hi = lam;
      at_hi = point;
    }
  }

  for (int i = 0; i < 200; ++i) {
    if (std::abs(band_used(at_hi) - band) <= tol) break;
    const double mid = 0.5 * (lo + hi);
    point = inner_bisect(ctx, make_slice(ctx, mid));
    if (band_used(point) - band >= 0) {
      lo = mid;
    } else {
      hi = mid;
      at_hi = point;
    }
  }
  return at_hi;  // the feasible side: sum b* <= B
}

}  // namespace detail

// Lemma-1 closed forms at fixed multipliers.  The epsilon term enters the
// ratio stationarity scaled by c_n (raising r_n by dr adds c_n dr to the
// pooled relay payload), matching the Lagrangian's epsilon * sum c_n r_n.
inline DualPoint primal_from_duals(const SystemConfig& cfg, const ChannelRealization& chan,
                                   double t1, double t2, double t3, double lambda,
                                   double epsilon) {
  if (lambda < 0 || epsilon < 0)
    throw std::invalid_argument("primal_from_duals: multipliers must be nonnegative");
  auto ctx = detail::make_rb_context(cfg, chan, t1, t2, t3);
  return detail::point_at(ctx, detail::make_slice(ctx, lambda), epsilon);
}

inline DualPoint inner_bisect_epsilon(const SystemConfig& cfg, const ChannelRealization& chan,
                                      double t1, double t2, double t3, double lambda) {
  auto ctx = detail::make_rb_context(cfg, chan, t1, t2, t3);
  return detail::inner_bisect(ctx, detail::make_slice(ctx, lambda));
}

inline DualPoint outer_bisect_lambda(const SystemConfig& cfg, const ChannelRealization& chan,
                                     double t1, double t2, double t3) {
  auto ctx = detail::make_rb_context(cfg, chan, t1, t2, t3);
  return detail::outer_bisect(ctx);
}

// Signed residuals of the stationarity/complementarity system at a dual
// point.  Inactive users are evaluated along the dual path b = c r / alpha,
// where the bandwidth condition collapses to lambda - f(alpha)/h = 0.
struct KktReport {
  std::vector<double> stationarity_r;
  std::vector<double> stationarity_b;
  double stationarity_z = 0;
  double bandwidth_gap = 0;  // (sum b* - B) / B, meaningful when lambda > 0
  double payload_gap = 0;    // sum c_n r_n* - z*
  double max_violation = 0;
};

inline KktReport kkt_conditions(const SystemConfig& cfg, const ChannelRealization& chan,
                                double t1, double t2, double t3, const DualPoint& d) {
  KktReport rep;
  double worst = 0;
  const double x = cfg.cycles_per_nat;
  for (int n = 0; n < cfg.n_users; ++n) {
    const double c = cfg.rate_nat_per_s[n];
    const double h = chan.h[n];
    const double xc = x * c;
    const double k3 = 3 * cfg.kappa[n] * t1 * xc * xc * xc;
    const double keep = 1 - d.r_star[n];
    double u;
    if (d.active[n]) {
      u = t1 * c * d.r_star[n] / (t2 * d.b_star[n]);
    } else {
      const double alpha = d.lambda > 0 ? f_inverse(t1, t2, d.lambda * h) : 0.0;
      u = t1 * alpha / t2;
    }
    const double eu = std::exp(u);
    const double grad_b = -(t2 * u / h) * eu + (t2 / h) * std::expm1(u) + d.lambda;
    const double grad_r = (t1 * c / h) * eu - k3 * keep * keep + d.epsilon * c;
    rep.stationarity_b.push_back(grad_b);
    rep.stationarity_r.push_back(grad_r);
    if (d.active[n]) {
      worst = std::max(worst, std::abs(grad_b) / std::max(1.0, d.lambda));
      worst = std::max(worst, std::abs(grad_r) / std::max(1.0, k3));
    } else {
      worst = std::max(worst, std::max(0.0, -grad_b) / std::max(1.0, d.lambda));
      worst = std::max(worst, std::max(0.0, -grad_r) / std::max(1.0, k3));
    }
  }
  const double band = cfg.bandwidth_hz;
  rep.stationarity_z =
      t1 / chan.g * std::exp(t1 * d.z_star / (t3 * band)) - d.epsilon;
  if (d.z_star > 0)
    worst = std::max(worst, std::abs(rep.stationarity_z) / std::max(1.0, d.epsilon));
  else
    worst = std::max(worst, std::max(0.0, -rep.stationarity_z) / std::max(1.0, d.epsilon));
  rep.bandwidth_gap = (detail::band_used(d) - band) / band;
  if (d.lambda > 0) worst = std::max(worst, std::abs(rep.bandwidth_gap));
  rep.payload_gap = detail::offload_rate(cfg, d) - d.z_star;
  if (d.epsilon > 0)
    worst = std::max(worst, std::abs(rep.payload_gap) / std::max(1.0, d.z_star));
  rep.max_violation = worst;
  return rep;
}

// Exact block solve of (r, b) at the state's slot lengths via the nested
// dual bisections; keeps the incumbent when the exchange would not descend.
inline BcdState optimize_rb(const SystemConfig& cfg, const ChannelRealization& chan,
                            const BcdState& state, DualPoint* dual_out = nullptr) {
  const Schedule& s = state.schedule;
  DualPoint d = outer_bisect_lambda(cfg, chan, s.t1_s, s.t2_s, s.t3_s);
  Schedule cand = s;
  cand.r = d.r_star;
  cand.b = d.b_star;
  const double val = dinkelbach_objective(cfg, chan, cand, state.theta);
  if (dual_out) *dual_out = d;
  if (val <= state.objective_value)
    return {cand, state.theta, val, state.iteration};
  return state;
}

namespace detail {

// Objective of the slot-length subproblem at fixed (r, b): transmit terms
// are perspectives of e^u - 1 and jointly convex in the slot lengths.
struct TimesObjective {
  std::vector<double> payload;  // c_n r_n over active users
  std::vector<double> bn;       // their bandwidth shares
  std::vector<double> hn;
  double rate_sum = 0;  // sum c_n r_n over all users
  double local_slope = 0;
  double overhead = 0;
  double band = 0;
  double g = 0;
  double theta = 0;

  double operator()(const Eigen::VectorXd& t, Eigen::VectorXd& grad) const {
    const double t1 = t[0], t2 = t[1], t3 = t[2];
    double val = local_slope * t1 + overhead - theta * (t1 + t2 + t3);
    grad.setZero(3);
    grad[0] = local_slope - theta;
    grad[1] = -theta;
    grad[2] = -theta;
    for (std::size_t i = 0; i < payload.size(); ++i) {
      const double u = t1 * payload[i] / (t2 * bn[i]);
      if (u > 700) return std::numeric_limits<double>::infinity();
      const double eu = std::exp(u);
      val += t2 * bn[i] / hn[i] * std::expm1(u);
      grad[0] += payload[i] / hn[i] * eu;
      grad[1] += bn[i] / hn[i] * (std::expm1(u) - u * eu);
    }
    if (rate_sum > 0) {
      const double y = t1 * rate_sum / (t3 * band);
      if (y > 700) return std::numeric_limits<double>::infinity();
      const double ey = std::exp(y);
      val += t3 * band / g * std::expm1(y);
      grad[0] += rate_sum / g * ey;
      grad[2] += band / g * (std::expm1(y) - y * ey);
    }
    return val;
  }

  void hess(const Eigen::VectorXd& t, Eigen::MatrixXd& out) const {
    const double t1 = t[0], t2 = t[1], t3 = t[2];
    out.setZero(3, 3);
    for (std::size_t i = 0; i < payload.size(); ++i) {
      const double u = t1 * payload[i] / (t2 * bn[i]);
      const double eu = std::exp(std::min(u, 700.0));
      out(0, 0) += payload[i] * payload[i] / (hn[i] * t2 * bn[i]) * eu;
      const double cross = -payload[i] * u / (hn[i] * t2) * eu;
      out(0, 1) += cross;
      out(1, 0) += cross;
      out(1, 1) += bn[i] * u * u / (hn[i] * t2) * eu;
    }
    if (rate_sum > 0) {
      const double y = t1 * rate_sum / (t3 * band);
      const double ey = std::exp(std::min(y, 700.0));
      out(0, 0) += rate_sum * rate_sum / (g * t3 * band) * ey;
      const double cross = -rate_sum * y / (g * t3) * ey;
      out(0, 2) += cross;
      out(2, 0) += cross;
      out(2, 2) += band * y * y / (g * t3) * ey;
    }
  }
};

inline TimesObjective make_times_objective(const SystemConfig& cfg,
                                           const ChannelRealization& chan, const Schedule& s,
                                           double theta) {
  TimesObjective obj;
  obj.band = cfg.bandwidth_hz;
  obj.g = chan.g;
  obj.theta = theta;
  const double x = cfg.cycles_per_nat;
  for (int n = 0; n < cfg.n_users; ++n) {
    const double pay = cfg.rate_nat_per_s[n] * s.r[n];
    obj.rate_sum += pay;
    const double xc = x * cfg.rate_nat_per_s[n];
    const double keep = 1 - s.r[n];
    obj.local_slope += cfg.kappa[n] * xc * xc * xc * keep * keep * keep;
    obj.overhead += cfg.overhead_j[n];
    if (pay > 0) {
      if (!(s.b[n] > 0))
        throw std::invalid_argument("times objective: positive payload with zero bandwidth");
      obj.payload.push_back(pay);
      obj.bn.push_back(s.b[n]);
      obj.hn.push_back(chan.h[n]);
    }
  }
  return obj;
}

}  // namespace detail

// Slot-length block step at fixed (r, b): interior-point solve of the convex
// three-variable problem over t_min <= t1 <= t_max, t2 + t3 <= t1, t2,t3 >= 0.
inline BcdState optimize_times(const SystemConfig& cfg, const ChannelRealization& chan,
                               const BcdState& state) {
  const Schedule& s = state.schedule;
  const detail::TimesObjective obj = detail::make_times_objective(cfg, chan, s, state.theta);

  convex::SmoothProgram prog;
  prog.dim = 3;
  prog.objective = [obj](const Eigen::VectorXd& t, Eigen::VectorXd& g) { return obj(t, g); };
  prog.hessian = [obj](const Eigen::VectorXd& t, Eigen::MatrixXd& h) { obj.hess(t, h); };
  Eigen::Vector3d row(-1, 1, 1);
  prog.constraints.push_back({row, 0.0});
  prog.lower = Eigen::Vector3d(cfg.t_min_s, 0, 0);
  prog.upper = Eigen::Vector3d(cfg.t_max_s, std::numeric_limits<double>::infinity(),
                               std::numeric_limits<double>::infinity());

  // strictly interior start near the incumbent
  const double span = cfg.t_max_s - cfg.t_min_s;
  const bool pinned = span <= 1e-12 * std::max(1.0, cfg.t_max_s);
  double t1c = s.t1_s;
  if (!pinned) {
    const double d1 = 1e-8 * span;
    t1c = std::clamp(s.t1_s, cfg.t_min_s + d1, cfg.t_max_s - d1);
  } else {
    t1c = cfg.t_min_s;
  }
  const double d2 = 1e-8 * t1c;
  double t2c = std::max(s.t2_s, d2);
  double t3c = std::max(s.t3_s, d2);
  if (t2c + t3c > t1c - d2) {
    const double scale = (t1c - 3 * d2) / (t2c + t3c - 2 * d2);
    t2c = d2 + scale * (t2c - d2);
    t3c = d2 + scale * (t3c - d2);
  }

  convex::SolveOutcome sol;
  if (pinned) {
    Eigen::MatrixXd map(3, 2);
    map << 0, 0, 1, 0, 0, 1;
    Eigen::Vector3d offset(t1c, 0, 0);
    auto red = convex::substitute(prog, map, offset, Eigen::Vector2d(t2c, t3c));
    sol = convex::minimize(red, 1e-10);
    Eigen::Vector3d full = map * sol.x_star + offset;
    sol.x_star = full;
  } else {
    prog.interior = Eigen::Vector3d(t1c, t2c, t3c);
    sol = convex::minimize(prog, 1e-10);
  }

  Schedule cand = s;
  cand.t1_s = sol.x_star[0];
  cand.t2_s = sol.x_star[1];
  cand.t3_s = sol.x_star[2];
  const double val = dinkelbach_objective(cfg, chan, cand, state.theta);
  if (val <= state.objective_value)
    return {cand, state.theta, val, state.iteration};
  return state;
}

namespace detail {

// Direct primal form of the offload/bandwidth subproblem at fixed slot
// lengths: the same function the dual bisection optimizes, over (r, b).
struct RbPrimalObjective {
  std::vector<double> c, h, k1;  // k1_n = kappa_n t1 (X c_n)^3
  double t1 = 0, t2 = 0, t3 = 0;
  double band = 0, g = 0;
  double constant = 0;  // overheads minus theta times the latency
  int n = 0;

  double operator()(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
    grad.setZero(2 * n);
    double val = constant;
    double s = 0;
    for (int i = 0; i < n; ++i) {
      const double ri = x[i], bi = x[n + i];
      s += c[i] * ri;
      const double keep = 1 - ri;
      val += k1[i] * keep * keep * keep;
      grad[i] -= 3 * k1[i] * keep * keep;
      const double pay = t1 * c[i] * ri;
      if (bi > 0) {
        const double w = pay / (t2 * bi);
        if (w > 700) return std::numeric_limits<double>::infinity();
        const double ew = std::exp(w);
        val += t2 * bi / h[i] * std::expm1(w);
        grad[i] += t1 * c[i] / h[i] * ew;
        grad[n + i] += t2 / h[i] * (std::expm1(w) - w * ew);
      } else if (pay > 0) {
        return std::numeric_limits<double>::infinity();
      } else {
        grad[i] += t1 * c[i] / h[i];  // limit of (t1 c/h) e^w along r = 0
      }
    }
    const double y = t1 * s / (t3 * band);
    if (y > 700) return std::numeric_limits<double>::infinity();
    const double ey = std::exp(y);
    val += t3 * band / g * std::expm1(y);
    for (int i = 0; i < n; ++i) grad[i] += t1 * c[i] / g * ey;
    return val;
  }

  void hess(const Eigen::VectorXd& x, Eigen::MatrixXd& out) const {
    out.setZero(2 * n, 2 * n);
    double s = 0;
    for (int i = 0; i < n; ++i) {
      const double ri = x[i], bi = x[n + i];
      s += c[i] * ri;
      out(i, i) += 6 * k1[i] * (1 - ri);
      if (bi > 0) {
        const double w = t1 * c[i] * ri / (t2 * bi);
        const double ew = std::exp(std::min(w, 700.0));
        out(i, i) += t1 * t1 * c[i] * c[i] / (h[i] * t2 * bi) * ew;
        const double cross = -t1 * c[i] * w / (h[i] * bi) * ew;
        out(i, n + i) += cross;
        out(n + i, i) += cross;
        out(n + i, n + i) += t2 * w * w / (h[i] * bi) * ew;
      }
    }
    const double y = t1 * s / (t3 * band);
    const double ey = std::exp(std::min(y, 700.0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(i, j) += t1 * t1 * c[i] * c[j] / (g * t3 * band) * ey;
  }
};

inline RbPrimalObjective make_rb_primal(const SystemConfig& cfg, const ChannelRealization& chan,
                                        double t1, double t2, double t3, double theta) {
  RbPrimalObjective obj;
  obj.n = cfg.n_users;
  obj.t1 = t1;
  obj.t2 = t2;
  obj.t3 = t3;
  obj.band = cfg.bandwidth_hz;
  obj.g = chan.g;
  obj.c = cfg.rate_nat_per_s;
  obj.h = chan.h;
  obj.constant = -theta * (t1 + t2 + t3);
  const double x = cfg.cycles_per_nat;
  for (int i = 0; i < cfg.n_users; ++i) {
    const double xc = x * cfg.rate_nat_per_s[i];
    obj.k1.push_back(cfg.kappa[i] * t1 * xc * xc * xc);
    obj.constant += cfg.overhead_j[i];
  }
  return obj;
}

}  // namespace detail

// The offload/bandwidth subproblem as an explicit convex program over
// x = (r_1..r_N, b_1..b_N); no interior point is set.
inline convex::SmoothProgram rb_primal_program(const SystemConfig& cfg,
                                               const ChannelRealization& chan, double t1,
                                               double t2, double t3, double theta) {
  const auto obj = detail::make_rb_primal(cfg, chan, t1, t2, t3, theta);
  const int n = cfg.n_users;
  convex::SmoothProgram prog;
  prog.dim = 2 * n;
  prog.objective = [obj](const Eigen::VectorXd& x, Eigen::VectorXd& g) { return obj(x, g); };
  prog.hessian = [obj](const Eigen::VectorXd& x, Eigen::MatrixXd& h) { obj.hess(x, h); };
  Eigen::VectorXd row = Eigen::VectorXd::Zero(2 * n);
  row.tail(n).setOnes();
  prog.constraints.push_back({row, cfg.bandwidth_hz});
  prog.lower = Eigen::VectorXd::Zero(2 * n);
  prog.upper = Eigen::VectorXd::Constant(2 * n, std::numeric_limits<double>::infinity());
  prog.upper.head(n).setOnes();
  return prog;
}

// Interior-point counterpart of optimize_rb; exists to cross-check the dual
// construction and to host restricted baselines via substitution.
inline BcdState optimize_rb_primal(const SystemConfig& cfg, const ChannelRealization& chan,
                                   const BcdState& state) {
  const Schedule& s = state.schedule;
  const int n = cfg.n_users;
  auto prog = rb_primal_program(cfg, chan, s.t1_s, s.t2_s, s.t3_s, state.theta);

  Eigen::VectorXd scale = Eigen::VectorXd::Ones(2 * n);
  scale.tail(n).setConstant(cfg.bandwidth_hz);

  Eigen::VectorXd start(2 * n);
  double used = 0;
  for (int i = 0; i < n; ++i) {
    start[i] = std::clamp(s.r[static_cast<std::size_t>(i)], 1e-4, 1 - 1e-4);
    start[n + i] = std::max(s.b[static_cast<std::size_t>(i)] / cfg.bandwidth_hz, 1e-4 / n);
    used += start[n + i];
  }
  if (used > 1 - 1e-4) start.tail(n) *= (1 - 1e-4) / used;

  auto red = convex::substitute(prog, scale.asDiagonal(), Eigen::VectorXd::Zero(2 * n), start);
  auto sol = convex::minimize(red, 1e-10);
  Eigen::VectorXd full = scale.asDiagonal() * sol.x_star;

  Schedule cand = s;
  for (int i = 0; i < n; ++i) {
    const double ri = full[i], bi = full[n + i];
    const bool gone = ri <= 1e-9 || bi <= 1e-9 * cfg.bandwidth_hz;
    cand.r[static_cast<std::size_t>(i)] = gone ? 0.0 : ri;
    cand.b[static_cast<std::size_t>(i)] = gone ? 0.0 : bi;
  }
  const double val = dinkelbach_objective(cfg, chan, cand, state.theta);
  if (val <= state.objective_value)
    return {cand, state.theta, val, state.iteration};
  return state;
}

struct BcdRun {
  BcdState state;
  std::vector<double> trace;  // objective after the start and each block step
  DualPoint dual;             // from the final (r, b) step
};

// Alternate exact block solves until the rb-to-rb improvement stalls.  The
// loop always ends on an (r, b) step so the returned dual matches the
// returned slot lengths.
inline BcdRun bcd_solve(const SystemConfig& cfg, const ChannelRealization& chan, double theta,
                        const Schedule& start) {
  BcdRun run;
  BcdState state{start, theta, dinkelbach_objective(cfg, chan, start, theta), 0};
  run.trace.push_back(state.objective_value);
  double prev_rb = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= 50; ++it) {
    state = optimize_rb(cfg, chan, state, &run.dual);
    state.iteration = it;
    run.trace.push_back(state.objective_value);
    if (std::isfinite(prev_rb) &&
        prev_rb - state.objective_value <= 1e-6 * (1 + std::abs(prev_rb)))
      break;
    prev_rb = state.objective_value;
    state = optimize_times(cfg, chan, state);
    run.trace.push_back(state.objective_value);
  }
  run.state = state;
  return run;
}

struct Case1Result {
  SolveReport report;
  DualPoint dual;
};

inline Case1Result solve_case1(const SystemConfig& cfg, const ChannelRealization& chan) {
  if (!cfg.abundant_capacity())
    throw std::invalid_argument("solve_case1: requires abundant BS capacity");
  const auto t_start = std::chrono::steady_clock::now();
  const auto n = static_cast<std::size_t>(cfg.n_users);

  Schedule all_local{cfg.t_min_s, cfg.t_min_s / 4, cfg.t_min_s / 4, 0,
                     std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  double theta = avg_power(cfg, chan, all_local);

  Schedule sched{cfg.t_max_s, cfg.t_max_s / 4, cfg.t_max_s / 4, 0,
                 std::vector<double>(n, 0.5),
                 std::vector<double>(n, cfg.bandwidth_hz / cfg.n_users)};

  Case1Result res;
  SolveReport& rep = res.report;
  double num = 0, den = 1;
  for (int outer = 0; outer < 30; ++outer) {
    BcdRun run = bcd_solve(cfg, chan, theta, sched);
    sched = run.state.schedule;
    res.dual = run.dual;
    num = numerator(cfg, chan, sched);
    den = denominator(cfg, sched);
    const double residual = num - theta * den;
    rep.dinkelbach_trace.emplace_back(theta, residual);
    rep.inner_rounds.push_back(run.trace);
    rep.inner_trace.insert(rep.inner_trace.end(), run.trace.begin(), run.trace.end());
    if (std::abs(residual) <= 1e-6 * den) {
      rep.converged = true;
      break;
    }
    theta = num / den;
  }
  rep.schedule = sched;
  rep.avg_power_w = num / den;
  rep.kkt_residual =
      kkt_conditions(cfg, chan, sched.t1_s, sched.t2_s, sched.t3_s, res.dual).max_violation;
  rep.runtime_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t_start)
                       .count();
  return res;
}

}  // namespace coopmec
