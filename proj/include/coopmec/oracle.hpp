#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <coopmec/case1.hpp>
#include <coopmec/objective.hpp>
#include <coopmec/rng.hpp>
#include <coopmec/types.hpp>

namespace coopmec {

struct GridAxis {
  double lo = 0, hi = 0;
  int steps = 0;
};

// Grid over (t1, slot fractions of t1, per-user r, per-user bandwidth
// fractions with the last user taking the remainder).  Slot-budget and
// capacity violations are skipped rather than clamped.
struct GridSpec {
  GridAxis t1, f2, f3, f4;  // f4 is consulted only with finite capacity
  GridAxis r;
  GridAxis beta;
  bool finite_capacity = false;
};

struct OracleResult {
  Schedule schedule;
  double avg_power_w = std::numeric_limits<double>::infinity();
};

namespace detail {

inline std::vector<double> axis_values(const GridAxis& ax, const char* name) {
  if (ax.steps < 2 || !(ax.lo < ax.hi))
    throw std::invalid_argument(std::string("grid_search: bad axis ") + name);
  std::vector<double> v(static_cast<std::size_t>(ax.steps));
  for (int i = 0; i < ax.steps; ++i)
    v[static_cast<std::size_t>(i)] = ax.lo + (ax.hi - ax.lo) * i / (ax.steps - 1);
  return v;
}

inline bool advance_odometer(std::vector<int>& digits, int base) {
  for (auto& d : digits) {
    if (++d < base) return true;
    d = 0;
  }
  return false;
}

}  // namespace detail

inline OracleResult grid_search(const SystemConfig& cfg, const ChannelRealization& chan,
                                const GridSpec& spec) {
  const int n = cfg.n_users;
  const auto vt1 = detail::axis_values(spec.t1, "t1");
  const auto vf2 = detail::axis_values(spec.f2, "f2");
  const auto vf3 = detail::axis_values(spec.f3, "f3");
  const auto vf4 = spec.finite_capacity ? detail::axis_values(spec.f4, "f4")
                                        : std::vector<double>{0.0};
  const auto vr = detail::axis_values(spec.r, "r");
  const auto vb = detail::axis_values(spec.beta, "beta");

  double total = static_cast<double>(vt1.size()) * vf2.size() * vf3.size() * vf4.size();
  total *= std::pow(static_cast<double>(vr.size()), n);
  total *= std::pow(static_cast<double>(vb.size()), n - 1);
  if (total > 1e8) throw std::invalid_argument("grid_search: grid too large");

  // with a [0, 1] beta axis the remainder fraction lands back on the axis,
  // so the last user's transmit energy is a table lookup too
  const int bs = spec.beta.steps;
  const bool unit_beta = spec.beta.lo == 0.0 && spec.beta.hi == 1.0;

  const double band = cfg.bandwidth_hz;
  const double x = cfg.cycles_per_nat;
  const int rs = spec.r.steps;

  double best = std::numeric_limits<double>::infinity();
  double bt1 = 0, bt2 = 0, bt3 = 0, bt4 = 0;
  std::vector<int> best_ir, best_ib;

  std::vector<double> local_e(static_cast<std::size_t>(n * rs));
  std::vector<double> tx(static_cast<std::size_t>(n * rs * bs));
  std::vector<int> ir(static_cast<std::size_t>(n));
  std::vector<int> ib(static_cast<std::size_t>(std::max(n - 1, 1)));

  for (double t1 : vt1) {
    for (int u = 0; u < n; ++u)
      for (int i = 0; i < rs; ++i)
        local_e[static_cast<std::size_t>(u * rs + i)] =
            local_energy(cfg, u, t1, vr[static_cast<std::size_t>(i)]);

    for (double f2 : vf2) {
      const double t2 = f2 * t1;
      for (int u = 0; u < n; ++u) {
        const double cu = cfg.rate_nat_per_s[u];
        for (int i = 0; i < rs; ++i) {
          const double pay = t1 * cu * vr[static_cast<std::size_t>(i)];
          for (int j = 0; j < bs; ++j) {
            const double bw = vb[static_cast<std::size_t>(j)] * band;
            double e;
            if (pay <= 0)
              e = 0;
            else if (bw <= 0 || t2 <= 0)
              e = std::numeric_limits<double>::infinity();
            else
              e = t2 * bw / chan.h[static_cast<std::size_t>(u)] * std::expm1(pay / (t2 * bw));
            tx[static_cast<std::size_t>((u * rs + i) * bs + j)] = e;
          }
        }
      }

      for (double f3 : vf3) {
        const double t3 = f3 * t1;
        for (double f4 : vf4) {
          const double t4 = f4 * t1;
          if (f2 + f3 + f4 > 1 + 1e-12) continue;
          const double den =
              t1 + t2 + t3 + (spec.finite_capacity ? t4 : 0.0);

          std::fill(ir.begin(), ir.end(), 0);
          do {
            double base = 0, sumcr = 0;
            for (int u = 0; u < n; ++u) {
              base += local_e[static_cast<std::size_t>(u * rs + ir[static_cast<std::size_t>(u)])];
              sumcr += cfg.rate_nat_per_s[u] * vr[static_cast<std::size_t>(ir[static_cast<std::size_t>(u)])];
            }
            if (sumcr > 0) {
              if (t3 <= 0) continue;
              if (spec.finite_capacity && x * t1 * sumcr > cfg.bs_capacity_hz * t4) continue;
              base += t3 * band / chan.g * std::expm1(t1 * sumcr / (t3 * band));
            }
            if (base >= best * den) continue;

            const int last = n - 1;
            const double pay_last =
                t1 * cfg.rate_nat_per_s[last] * vr[static_cast<std::size_t>(ir[static_cast<std::size_t>(last)])];

            std::fill(ib.begin(), ib.end(), 0);
            do {
              double e = base;
              int used = 0;
              double frac = 0;
              for (int u = 0; u + 1 < n; ++u) {
                const int j = ib[static_cast<std::size_t>(u)];
                used += j;
                frac += vb[static_cast<std::size_t>(j)];
                e += tx[static_cast<std::size_t>((u * rs + ir[static_cast<std::size_t>(u)]) * bs + j)];
              }
              if (frac > 1 + 1e-12) continue;
              if (pay_last > 0) {
                if (unit_beta) {
                  const int j = (bs - 1) - used;
                  if (j < 0) continue;
                  e += tx[static_cast<std::size_t>((last * rs + ir[static_cast<std::size_t>(last)]) * bs + j)];
                } else {
                  const double bw = std::max(0.0, 1 - frac) * band;
                  if (bw <= 0 || t2 <= 0) continue;
                  e += t2 * bw / chan.h[static_cast<std::size_t>(last)] *
                       std::expm1(pay_last / (t2 * bw));
                }
              }
              if (e < best * den) {
                best = e / den;
                bt1 = t1;
                bt2 = t2;
                bt3 = t3;
                bt4 = t4;
                best_ir = ir;
                best_ib = ib;
              }
            } while (detail::advance_odometer(ib, bs) && n > 1);
          } while (detail::advance_odometer(ir, rs));
        }
      }
    }
  }

  OracleResult res;
  if (!std::isfinite(best)) return res;
  res.avg_power_w = best;
  Schedule& s = res.schedule;
  s.t1_s = bt1;
  s.t2_s = bt2;
  s.t3_s = bt3;
  s.t4_s = spec.finite_capacity ? bt4 : 0.0;
  s.r.assign(static_cast<std::size_t>(n), 0.0);
  s.b.assign(static_cast<std::size_t>(n), 0.0);
  double frac = 0;
  for (int u = 0; u < n; ++u) {
    const double ru = vr[static_cast<std::size_t>(best_ir[static_cast<std::size_t>(u)])];
    double beta;
    if (u + 1 < n) {
      beta = vb[static_cast<std::size_t>(best_ib[static_cast<std::size_t>(u)])];
      frac += beta;
    } else {
      beta = std::max(0.0, 1 - frac);
    }
    if (ru > 0) {
      s.r[static_cast<std::size_t>(u)] = ru;
      s.b[static_cast<std::size_t>(u)] = beta * band;
    }
  }
  return res;
}

namespace detail {

// Average power over the fraction parameterization, with infeasible
// combinations mapped to +inf instead of exceptions.
struct DescentSpace {
  const SystemConfig* cfg = nullptr;
  const ChannelRealization* chan = nullptr;
  bool finite = false;
  int n = 0;

  // v layout: t1, f2, f3, [f4,] r_0..r_{n-1}, beta_0..beta_{n-1}
  int dim() const { return (finite ? 4 : 3) + 2 * n; }
  int r_at(int u) const { return (finite ? 4 : 3) + u; }
  int beta_at(int u) const { return (finite ? 4 : 3) + n + u; }

  double eval(const std::vector<double>& v) const {
    const double inf = std::numeric_limits<double>::infinity();
    const double t1 = v[0], t2 = v[1] * t1, t3 = v[2] * t1;
    const double t4 = finite ? v[3] * t1 : 0.0;
    if (v[1] + v[2] + (finite ? v[3] : 0.0) > 1 + 1e-12) return inf;
    double beta_sum = 0;
    for (int u = 0; u < n; ++u) beta_sum += v[static_cast<std::size_t>(beta_at(u))];
    if (beta_sum > 1 + 1e-12) return inf;

    double e = 0, sumcr = 0;
    for (int u = 0; u < n; ++u) {
      const double ru = v[static_cast<std::size_t>(r_at(u))];
      e += local_energy(*cfg, u, t1, ru);
      const double pay = t1 * cfg->rate_nat_per_s[u] * ru;
      if (pay > 0) {
        const double bw = v[static_cast<std::size_t>(beta_at(u))] * cfg->bandwidth_hz;
        if (bw <= 0 || t2 <= 0) return inf;
        e += t2 * bw / chan->h[static_cast<std::size_t>(u)] * std::expm1(pay / (t2 * bw));
        sumcr += cfg->rate_nat_per_s[u] * ru;
      }
    }
    if (sumcr > 0) {
      if (t3 <= 0) return inf;
      if (finite && cfg->cycles_per_nat * t1 * sumcr > cfg->bs_capacity_hz * t4) return inf;
      e += t3 * cfg->bandwidth_hz / chan->g * std::expm1(t1 * sumcr / (t3 * cfg->bandwidth_hz));
    }
    return e / (t1 + t2 + t3 + (finite ? t4 : 0.0));
  }

  // feasible interval of coordinate i holding the rest of v fixed
  std::pair<double, double> range(const std::vector<double>& v, int i) const {
    if (i == 0) return {cfg->t_min_s, cfg->t_max_s};
    const int nf = finite ? 3 : 2;
    if (i <= nf) {  // slot fractions share the unit budget
      double others = 0;
      for (int j = 1; j <= nf; ++j)
        if (j != i) others += v[static_cast<std::size_t>(j)];
      return {0.0, std::max(0.0, 1 - others)};
    }
    if (i < beta_at(0)) return {0.0, 1.0};
    double others = 0;
    for (int u = 0; u < n; ++u)
      if (beta_at(u) != i) others += v[static_cast<std::size_t>(beta_at(u))];
    return {0.0, std::max(0.0, 1 - others)};
  }
};

inline double golden_section(const std::function<double(double)>& f, double lo, double hi,
                             double& arg_best) {
  const double phi = (std::sqrt(5.0) - 1) / 2;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 60 && b - a > 1e-12 * (1 + std::abs(a) + std::abs(b)); ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    }
  }
  // endpoints are candidates too: boundary minima matter here
  double xs[4] = {lo, hi, x1, x2};
  double vs[4] = {f(lo), f(hi), f1, f2};
  int k = 0;
  for (int i = 1; i < 4; ++i)
    if (vs[i] < vs[k]) k = i;
  arg_best = xs[k];
  return vs[k];
}

inline std::vector<double> descent_vector(const DescentSpace& space, const Schedule& s) {
  std::vector<double> v(static_cast<std::size_t>(space.dim()), 0.0);
  v[0] = s.t1_s;
  v[1] = s.t2_s / s.t1_s;
  v[2] = s.t3_s / s.t1_s;
  if (space.finite) v[3] = s.t4_s / s.t1_s;
  for (int u = 0; u < space.n; ++u) {
    v[static_cast<std::size_t>(space.r_at(u))] = s.r[static_cast<std::size_t>(u)];
    v[static_cast<std::size_t>(space.beta_at(u))] =
        s.b[static_cast<std::size_t>(u)] / space.cfg->bandwidth_hz;
  }
  return v;
}

inline Schedule descent_schedule(const DescentSpace& space, const std::vector<double>& v) {
  Schedule s;
  s.t1_s = v[0];
  s.t2_s = v[1] * v[0];
  s.t3_s = v[2] * v[0];
  s.t4_s = space.finite ? v[3] * v[0] : 0.0;
  const auto n = static_cast<std::size_t>(space.n);
  s.r.assign(n, 0.0);
  s.b.assign(n, 0.0);
  for (int u = 0; u < space.n; ++u) {
    const double ru = v[static_cast<std::size_t>(space.r_at(u))];
    if (ru > 1e-12) {
      s.r[static_cast<std::size_t>(u)] = ru;
      s.b[static_cast<std::size_t>(u)] =
          v[static_cast<std::size_t>(space.beta_at(u))] * space.cfg->bandwidth_hz;
    }
  }
  return s;
}

}  // namespace detail

// Projected coordinate descent (golden section per coordinate) from several
// feasible starts; a local-search cross-check for the grid oracle.  Starts in
// `extra` (e.g. a solver's answer, to certify it cannot be descended from)
// run before the deterministic and random ones.
inline OracleResult multistart_descent(const SystemConfig& cfg, const ChannelRealization& chan,
                                       bool finite_capacity, int n_starts,
                                       std::uint64_t seed = 1776,
                                       const std::vector<Schedule>& extra = {}) {
  if (n_starts < 1) throw std::invalid_argument("multistart_descent: n_starts must be >= 1");
  detail::DescentSpace space{&cfg, &chan, finite_capacity, cfg.n_users};
  Rng rng(seed);

  OracleResult best;
  const int n_extra = static_cast<int>(extra.size());
  for (int s = -n_extra; s < n_starts; ++s) {
    std::vector<double> v(static_cast<std::size_t>(space.dim()));
    const int nf = finite_capacity ? 3 : 2;
    if (s < 0) {
      v = detail::descent_vector(space, extra[static_cast<std::size_t>(s + n_extra)]);
    } else if (s == 0) {
      v[0] = 0.5 * (cfg.t_min_s + cfg.t_max_s);
      for (int j = 1; j <= nf; ++j) v[static_cast<std::size_t>(j)] = 1.0 / (nf + 1);
      for (int u = 0; u < cfg.n_users; ++u) {
        v[static_cast<std::size_t>(space.r_at(u))] = 0.25;
        v[static_cast<std::size_t>(space.beta_at(u))] = 1.0 / (2 * cfg.n_users);
      }
    } else {
      v[0] = rng.uniform(cfg.t_min_s, cfg.t_max_s);
      for (int j = 1; j <= nf; ++j) v[static_cast<std::size_t>(j)] = rng.uniform(0.0, 1.0 / (nf + 1));
      for (int u = 0; u < cfg.n_users; ++u) {
        v[static_cast<std::size_t>(space.r_at(u))] = rng.uniform();
        v[static_cast<std::size_t>(space.beta_at(u))] = rng.uniform(0.0, 1.0 / cfg.n_users);
      }
    }

    double val = space.eval(v);
    for (int sweep = 0; sweep < 40; ++sweep) {
      const double before = val;
      for (int i = 0; i < space.dim(); ++i) {
        auto [lo, hi] = space.range(v, i);
        if (!(hi > lo)) continue;
        auto slice = [&](double x) {
          std::vector<double> w = v;
          w[static_cast<std::size_t>(i)] = x;
          return space.eval(w);
        };
        double arg = v[static_cast<std::size_t>(i)];
        const double fv = detail::golden_section(slice, lo, hi, arg);
        if (fv < val) {
          val = fv;
          v[static_cast<std::size_t>(i)] = arg;
        }
      }
      if (sweep >= 2 && before - val <= 1e-10 * (1 + std::abs(before))) break;
    }
    if (val < best.avg_power_w) {
      best.avg_power_w = val;
      best.schedule = detail::descent_schedule(space, v);
    }
  }
  return best;
}

// Signed residuals of every optimality condition at a dual point, in a flat
// vector: per-user rate stationarity, per-user bandwidth stationarity, relay
// payload stationarity, bandwidth complementarity, payload balance.
inline std::vector<double> kkt_residual(const SystemConfig& cfg, const ChannelRealization& chan,
                                        const Schedule& sched, const DualPoint& dual) {
  const KktReport rep =
      kkt_conditions(cfg, chan, sched.t1_s, sched.t2_s, sched.t3_s, dual);
  std::vector<double> out;
  out.insert(out.end(), rep.stationarity_r.begin(), rep.stationarity_r.end());
  out.insert(out.end(), rep.stationarity_b.begin(), rep.stationarity_b.end());
  out.push_back(rep.stationarity_z);
  out.push_back(rep.bandwidth_gap);
  out.push_back(rep.payload_gap);
  return out;
}

}  // namespace coopmec
