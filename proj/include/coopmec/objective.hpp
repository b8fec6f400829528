#pragma once

#include <cmath>
#include <stdexcept>

#include <coopmec/types.hpp>

namespace coopmec {

// Compute energy for the task fraction kept on the handset, plus the fixed
// per-slot overhead: kappa_n * t1 * X^3 * c_n^3 * (1 - r_n)^3 + E0_n.
inline double local_energy(const SystemConfig& cfg, int n, double t1, double r_n) {
  const double x = cfg.cycles_per_nat;
  const double c = cfg.rate_nat_per_s[n];
  const double keep = 1.0 - r_n;
  return cfg.kappa[n] * t1 * (x * c) * (x * c) * (x * c) * keep * keep * keep +
         cfg.overhead_j[n];
}

// Minimal uplink energy to move t1*c_n*r_n nats in time t2 over bandwidth
// b_n: (t2*b_n/h_n) * (e^{t1 c_n r_n / (t2 b_n)} - 1).  Zero payload costs
// nothing; positive payload with zero bandwidth or zero time is impossible.
inline double user_tx_energy(const SystemConfig& cfg, const ChannelRealization& chan, int n,
                             double t1, double t2, double r_n, double b_n) {
  const double payload = t1 * cfg.rate_nat_per_s[n] * r_n;
  if (payload <= 0) return 0.0;
  if (!(b_n > 0) || !(t2 > 0))
    throw std::invalid_argument("user_tx_energy: positive payload needs positive t2 and b_n");
  const double bt = t2 * b_n;
  return bt / chan.h[n] * std::expm1(payload / bt);
}

// Relay hop carrying the pooled payload t1 * sum_n c_n r_n over the full band.
inline double coop_tx_energy(const SystemConfig& cfg, const ChannelRealization& chan,
                             double t1, double t3, const std::vector<double>& r) {
  double rate_sum = 0;
  for (int n = 0; n < cfg.n_users; ++n) rate_sum += cfg.rate_nat_per_s[n] * r[n];
  const double payload = t1 * rate_sum;
  if (payload <= 0) return 0.0;
  if (!(t3 > 0))
    throw std::invalid_argument("coop_tx_energy: positive payload needs positive t3");
  const double bt = t3 * cfg.bandwidth_hz;
  return bt / chan.g * std::expm1(payload / bt);
}

struct EnergyBreakdown {
  std::vector<double> local_j;
  std::vector<double> user_tx_j;
  double coop_tx_j = 0;
  double total_j = 0;
};

inline EnergyBreakdown energy_breakdown(const SystemConfig& cfg, const ChannelRealization& chan,
                                        const Schedule& s) {
  EnergyBreakdown out;
  out.local_j.resize(static_cast<std::size_t>(cfg.n_users));
  out.user_tx_j.resize(static_cast<std::size_t>(cfg.n_users));
  for (int n = 0; n < cfg.n_users; ++n) {
    out.local_j[n] = local_energy(cfg, n, s.t1_s, s.r[n]);
    out.user_tx_j[n] = user_tx_energy(cfg, chan, n, s.t1_s, s.t2_s, s.r[n], s.b[n]);
    out.total_j += out.local_j[n] + out.user_tx_j[n];
  }
  out.coop_tx_j = coop_tx_energy(cfg, chan, s.t1_s, s.t3_s, s.r);
  out.total_j += out.coop_tx_j;
  return out;
}

inline double numerator(const SystemConfig& cfg, const ChannelRealization& chan, const Schedule& s) {
  return energy_breakdown(cfg, chan, s).total_j;
}

// Slot span: arrivals overlap the next period's compute, so the span is
// t1 + t2 + t3 (+ t4 when the cooperative node computes at finite speed).
inline double denominator(const SystemConfig& cfg, const Schedule& s) {
  double d = s.t1_s + s.t2_s + s.t3_s;
  if (!cfg.abundant_capacity()) d += s.t4_s;
  return d;
}

inline double avg_power(const SystemConfig& cfg, const ChannelRealization& chan, const Schedule& s) {
  return numerator(cfg, chan, s) / denominator(cfg, s);
}

// Parametric objective N(x) - theta * D(x) whose root in theta is the
// minimum average power.
inline double dinkelbach_objective(const SystemConfig& cfg, const ChannelRealization& chan,
                                   const Schedule& s, double theta) {
  return numerator(cfg, chan, s) - theta * denominator(cfg, s);
}

}  // namespace coopmec
