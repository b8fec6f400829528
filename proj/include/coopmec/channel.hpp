#pragma once

#include <cmath>
#include <stdexcept>

#include <coopmec/config_io.hpp>
#include <coopmec/rng.hpp>
#include <coopmec/types.hpp>

namespace coopmec {

struct Topology {
  std::vector<double> user_dist_m;
  double coop_bs_dist_m = 0;
};

// Sub-streams of the per-experiment seed; keeping them apart means toggling
// fading never changes which distances a random topology draws.
inline constexpr std::uint64_t kTopologyStream = 0;
inline constexpr std::uint64_t kFadingStream = 1;

inline double pathloss(const SystemConfig& cfg, double dist_m) {
  if (!(dist_m > 0)) throw std::invalid_argument("pathloss: distance must be positive");
  return cfg.pathloss_ref_gain * std::pow(dist_m / cfg.pathloss_ref_dist_m, -cfg.pathloss_exponent);
}

// Squared magnitude of a Rayleigh fade, i.e. unit-mean exponential.
inline double sample_rayleigh(Rng& rng) { return rng.exponential(); }

inline Topology resolve_topology(const TopologySpec& spec, int n_users, std::uint64_t seed) {
  Topology topo;
  topo.coop_bs_dist_m = spec.coop_bs_dist_m;
  if (spec.random) {
    Rng rng = Rng(seed).child(kTopologyStream);
    topo.user_dist_m.reserve(static_cast<std::size_t>(n_users));
    for (int n = 0; n < n_users; ++n)
      topo.user_dist_m.push_back(rng.uniform(spec.random_lo, spec.random_hi));
  } else {
    if (spec.user_dist_m.size() != static_cast<std::size_t>(n_users))
      throw std::invalid_argument("topology: distance list length differs from n_users");
    topo.user_dist_m = spec.user_dist_m;
  }
  return topo;
}

// Noise-normalized gains h_n = PL(d_n) * F_n / sigma^2 (and g for the
// BS -> cooperative-node hop).  Draw order: users in index order, then the
// cooperative link, so a fixed seed pins every gain.
inline ChannelRealization realize(const SystemConfig& cfg, const Topology& topo,
                                  std::uint64_t seed, bool fading_on) {
  if (topo.user_dist_m.size() != static_cast<std::size_t>(cfg.n_users))
    throw std::invalid_argument("realize: topology size differs from n_users");
  ChannelRealization chan;
  chan.seed = seed;
  chan.h.reserve(topo.user_dist_m.size());
  Rng rng = Rng(seed).child(kFadingStream);
  for (double d : topo.user_dist_m) {
    double fade = fading_on ? sample_rayleigh(rng) : 1.0;
    chan.h.push_back(pathloss(cfg, d) * fade / cfg.noise_density_w_per_hz);
  }
  double fade = fading_on ? sample_rayleigh(rng) : 1.0;
  chan.g = pathloss(cfg, topo.coop_bs_dist_m) * fade / cfg.noise_density_w_per_hz;
  return chan;
}

}  // namespace coopmec
