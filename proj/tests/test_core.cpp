#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include <coopmec/barrier.hpp>
#include <coopmec/channel.hpp>
#include <coopmec/config_io.hpp>
#include <coopmec/objective.hpp>
#include <coopmec/rng.hpp>
#include <coopmec/types.hpp>

using namespace coopmec;

namespace {

const char* kDefaultText = R"(
n_users = 5
bandwidth_mhz = 1
cycles_per_nat = 100
kappa = 1e-24
rate_nat_per_s = 1.5e6
overhead_j = 0
t_min_s = 0.5
t_max_s = 2
bs_capacity_ghz = 5
sigma2_mw_per_hz = 1e-10
pathloss_ref_gain = 1e-6
pathloss_ref_dist_m = 10
pathloss_exponent = 3
user_dist_m = uniform(5, 50)
coop_bs_dist_m = 30
)";

SystemConfig small_config() {
  SystemConfig cfg;
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

}  // namespace

TEST_CASE("rng is deterministic and child streams are independent", "[core][rng]") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) REQUIRE(a.uniform() == b.uniform());

  Rng c(42);
  Rng child0 = Rng(42).child(0);
  Rng child1 = Rng(42).child(1);
  REQUIRE(child0.uniform() != child1.uniform());

  Rng d(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = d.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("unit-mean exponential draws average to one", "[core][rng]") {
  Rng rng(2024);
  double sum = 0;
  const int draws = 1000000;
  for (int i = 0; i < draws; ++i) sum += sample_rayleigh(rng);
  REQUIRE_THAT(sum / draws, Catch::Matchers::WithinAbs(1.0, 0.01));
}

TEST_CASE("config text round-trips into a validated system", "[core][config]") {
  const LoadedConfig loaded = parse_config(kDefaultText);
  const SystemConfig& cfg = loaded.cfg;
  REQUIRE(cfg.n_users == 5);
  REQUIRE(cfg.bandwidth_hz == 1e6);
  REQUIRE(cfg.bs_capacity_hz == 5e9);
  REQUIRE_THAT(cfg.noise_density_w_per_hz, Catch::Matchers::WithinRel(1e-13, 1e-12));
  REQUIRE(cfg.kappa == std::vector<double>(5, 1e-24));
  REQUIRE(cfg.rate_nat_per_s == std::vector<double>(5, 1.5e6));
  REQUIRE(loaded.topo.random);
  REQUIRE(loaded.topo.random_lo == 5.0);
  REQUIRE(loaded.topo.random_hi == 50.0);
  REQUIRE(loaded.topo.coop_bs_dist_m == 30.0);
  REQUIRE(validate_config(cfg).empty());
}

TEST_CASE("config rejects malformed input", "[core][config]") {
  REQUIRE_THROWS_AS(parse_config("n_users = 5\nn_users = 6\n"), std::invalid_argument);
  REQUIRE_THROWS_AS(parse_config("mystery_key = 1\n"), std::invalid_argument);
  REQUIRE_THROWS_AS(parse_config("just some words\n"), std::invalid_argument);

  std::string text = kDefaultText;
  text += "bandwidth_hz = 2e6\n";  // conflicts with bandwidth_mhz
  REQUIRE_THROWS_AS(parse_config(text), std::invalid_argument);

  std::string bad = kDefaultText;
  bad.replace(bad.find("uniform(5, 50)"), 14, "uniform(50, 5)");
  REQUIRE_THROWS_AS(parse_config(bad), std::invalid_argument);
}

TEST_CASE("explicit distance lists must match the user count", "[core][config]") {
  std::string text = kDefaultText;
  text.replace(text.find("uniform(5, 50)"), 14, "10, 20, 30");
  REQUIRE_THROWS_AS(parse_config(text), std::invalid_argument);
  text.replace(text.find("10, 20, 30"), 10, "10, 20, 30, 40, 50");
  const LoadedConfig loaded = parse_config(text);
  REQUIRE(loaded.topo.user_dist_m == std::vector<double>{10, 20, 30, 40, 50});
}

TEST_CASE("infinite capacity spelled in text selects the abundant case", "[core][config]") {
  std::string text = kDefaultText;
  text.replace(text.find("bs_capacity_ghz = 5"), 19, "bs_capacity_hz = inf");
  const LoadedConfig loaded = parse_config(text);
  REQUIRE(loaded.cfg.abundant_capacity());
  REQUIRE(validate_config(loaded.cfg).empty());
}

TEST_CASE("validate_config names each broken field", "[core][config]") {
  SystemConfig cfg = small_config();
  REQUIRE(validate_config(cfg).empty());

  cfg.n_users = 0;
  REQUIRE_FALSE(validate_config(cfg).empty());

  cfg = small_config();
  cfg.t_max_s = 0.1;  // below t_min
  REQUIRE_FALSE(validate_config(cfg).empty());

  cfg = small_config();
  cfg.kappa.pop_back();
  REQUIRE_FALSE(validate_config(cfg).empty());

  cfg = small_config();
  cfg.bs_capacity_hz = -1;
  REQUIRE_FALSE(validate_config(cfg).empty());
}

TEST_CASE("schedule feasibility checks catch each violation", "[core][types]") {
  SystemConfig cfg = small_config();
  Schedule s{1.0, 0.25, 0.25, 0.0, {0.5, 0.0}, {1e6, 0.0}};
  REQUIRE(check_feasible(cfg, s).empty());

  SECTION("slot budget") {
    s.t2_s = 0.9;
    s.t3_s = 0.9;
    REQUIRE_FALSE(check_feasible(cfg, s).empty());
  }
  SECTION("t1 range") {
    s.t1_s = 3.0;
    REQUIRE_FALSE(check_feasible(cfg, s).empty());
  }
  SECTION("bandwidth for a silent user") {
    s.b[1] = 1.0;  // r_2 = 0 but b_2 > 0
    REQUIRE_FALSE(check_feasible(cfg, s).empty());
  }
  SECTION("no bandwidth for a transmitting user") {
    s.r[1] = 0.5;
    REQUIRE_FALSE(check_feasible(cfg, s).empty());
  }
  SECTION("band budget") {
    s.b[0] = 2e6;
    REQUIRE_FALSE(check_feasible(cfg, s).empty());
  }
  SECTION("relay slot under abundant capacity") {
    s.t4_s = 0.1;
    REQUIRE_FALSE(check_feasible(cfg, s).empty());
  }
  SECTION("relay capacity when finite") {
    cfg.bs_capacity_hz = 1e3;  // far below the offloaded cycle load
    s.t4_s = 0.1;
    REQUIRE_FALSE(check_feasible(cfg, s).empty());
    cfg.bs_capacity_hz = 1e12;
    REQUIRE(check_feasible(cfg, s).empty());
  }
}

TEST_CASE("pathloss follows the reference-distance power law", "[core][channel]") {
  const SystemConfig cfg = small_config();
  REQUIRE_THAT(pathloss(cfg, 10.0), Catch::Matchers::WithinRel(1e-6, 1e-12));
  REQUIRE_THAT(pathloss(cfg, 30.0), Catch::Matchers::WithinRel(3.7037037037037037e-8, 1e-12));
  REQUIRE_THAT(pathloss(cfg, 5.0), Catch::Matchers::WithinRel(8e-6, 1e-12));
  REQUIRE_THROWS_AS(pathloss(cfg, 0.0), std::invalid_argument);
}

TEST_CASE("random topologies are seed-deterministic and in range", "[core][channel]") {
  TopologySpec spec;
  spec.random = true;
  spec.random_lo = 5;
  spec.random_hi = 50;
  spec.coop_bs_dist_m = 30;
  const Topology a = resolve_topology(spec, 8, 99);
  const Topology b = resolve_topology(spec, 8, 99);
  const Topology c = resolve_topology(spec, 8, 100);
  REQUIRE(a.user_dist_m == b.user_dist_m);
  REQUIRE(a.user_dist_m != c.user_dist_m);
  for (double d : a.user_dist_m) {
    REQUIRE(d >= 5.0);
    REQUIRE(d <= 50.0);
  }
}

TEST_CASE("without fading the gain order is the reverse distance order", "[core][channel]") {
  SystemConfig cfg = small_config();
  cfg.n_users = 10;
  cfg.kappa.assign(10, 1e-24);
  cfg.rate_nat_per_s.assign(10, 1.5e6);
  cfg.overhead_j.assign(10, 0.0);
  Topology topo;
  topo.user_dist_m = {17.42, 31.58, 38.47, 12.31, 8.35, 27.42, 48.18, 20.31, 42.33, 15.07};
  topo.coop_bs_dist_m = 30;
  const ChannelRealization chan = realize(cfg, topo, 1, false);
  // user 5 sits closest, so its normalized gain dominates
  for (std::size_t i = 0; i < chan.h.size(); ++i)
    if (i != 4) REQUIRE(chan.h[4] > chan.h[i]);
  for (std::size_t i = 0; i < chan.h.size(); ++i)
    for (std::size_t j = 0; j < chan.h.size(); ++j)
      if (topo.user_dist_m[i] < topo.user_dist_m[j]) REQUIRE(chan.h[i] > chan.h[j]);
  // h = pathloss / noise density exactly when fading is off
  REQUIRE_THAT(chan.h[4], Catch::Matchers::WithinRel(pathloss(cfg, 8.35) / 1e-13, 1e-12));
  REQUIRE_THAT(chan.g, Catch::Matchers::WithinRel(pathloss(cfg, 30.0) / 1e-13, 1e-12));
}

TEST_CASE("channel draws are reproducible per seed", "[core][channel]") {
  const SystemConfig cfg = small_config();
  Topology topo;
  topo.user_dist_m = {10, 20};
  topo.coop_bs_dist_m = 30;
  const ChannelRealization a = realize(cfg, topo, 5, true);
  const ChannelRealization b = realize(cfg, topo, 5, true);
  const ChannelRealization c = realize(cfg, topo, 6, true);
  REQUIRE(a.h == b.h);
  REQUIRE(a.g == b.g);
  REQUIRE(a.h != c.h);
}

TEST_CASE("energy terms match hand calculations", "[core][objective]") {
  SystemConfig cfg = small_config();
  ChannelRealization chan;
  chan.h = {1e5, 1e5};
  chan.g = 1e6;

  // handset compute: kappa * t1 * (X c)^3 * (1-r)^3
  REQUIRE_THAT(local_energy(cfg, 0, 1.0, 0.0), Catch::Matchers::WithinRel(3.375, 1e-12));
  REQUIRE_THAT(local_energy(cfg, 0, 1.0, 0.5), Catch::Matchers::WithinRel(0.421875, 1e-12));
  REQUIRE_THAT(local_energy(cfg, 0, 2.0, 0.0), Catch::Matchers::WithinRel(6.75, 1e-12));
  REQUIRE(local_energy(cfg, 0, 1.0, 1.0) == 0.0);

  // uplink: payload 1.5e5 nats in 0.5 s over 2e5 Hz -> (1e5/1e5)(e^1.5 - 1)
  REQUIRE_THAT(user_tx_energy(cfg, chan, 0, 1.0, 0.5, 0.1, 2e5),
               Catch::Matchers::WithinRel(3.4816890703380645, 1e-12));
  REQUIRE(user_tx_energy(cfg, chan, 0, 1.0, 0.5, 0.0, 0.0) == 0.0);
  REQUIRE_THROWS_AS(user_tx_energy(cfg, chan, 0, 1.0, 0.5, 0.1, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(user_tx_energy(cfg, chan, 0, 1.0, 0.0, 0.1, 2e5), std::invalid_argument);

  // relay hop: pooled 5e5 nat/s for 1 s in 0.5 s over 1 MHz -> 0.5 (e - 1)
  cfg.rate_nat_per_s = {2.5e6, 2.5e6};
  REQUIRE_THAT(coop_tx_energy(cfg, chan, 1.0, 0.5, {0.1, 0.1}),
               Catch::Matchers::WithinRel(0.8591409142295225, 1e-12));
  REQUIRE(coop_tx_energy(cfg, chan, 1.0, 0.0, {0.0, 0.0}) == 0.0);
  REQUIRE_THROWS_AS(coop_tx_energy(cfg, chan, 1.0, 0.0, {0.1, 0.1}), std::invalid_argument);
}

TEST_CASE("average power divides energy by the active slot span", "[core][objective]") {
  SystemConfig cfg = small_config();
  ChannelRealization chan;
  chan.h = {1e5, 1e5};
  chan.g = 1e6;
  Schedule s{1.0, 0.25, 0.25, 0.0, {0.0, 0.0}, {0.0, 0.0}};

  const double num = numerator(cfg, chan, s);
  REQUIRE_THAT(num, Catch::Matchers::WithinRel(6.75, 1e-12));
  REQUIRE_THAT(denominator(cfg, s), Catch::Matchers::WithinRel(1.5, 1e-12));
  REQUIRE_THAT(avg_power(cfg, chan, s), Catch::Matchers::WithinRel(4.5, 1e-12));

  // the relay compute slot joins the span only under finite capacity
  s.t4_s = 0.5;
  REQUIRE_THAT(denominator(cfg, s), Catch::Matchers::WithinRel(1.5, 1e-12));
  cfg.bs_capacity_hz = 5e9;
  REQUIRE_THAT(denominator(cfg, s), Catch::Matchers::WithinRel(2.0, 1e-12));

  REQUIRE_THAT(dinkelbach_objective(cfg, chan, s, 2.0),
               Catch::Matchers::WithinRel(6.75 - 2.0 * 2.0, 1e-12));
}

TEST_CASE("interior-point core solves quadratics to their known optima", "[core][barrier]") {
  convex::SmoothProgram prog;
  prog.dim = 2;
  prog.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(2);
    g[0] = 2 * (x[0] - 1);
    g[1] = 2 * (x[1] + 2);
    return (x[0] - 1) * (x[0] - 1) + (x[1] + 2) * (x[1] + 2);
  };
  prog.hessian = [](const Eigen::VectorXd&, Eigen::MatrixXd& h) {
    h = 2 * Eigen::MatrixXd::Identity(2, 2);
  };

  SECTION("unconstrained interior minimum") {
    prog.lower = Eigen::Vector2d(-10, -10);
    prog.upper = Eigen::Vector2d(10, 10);
    prog.interior = Eigen::Vector2d(0, 0);
    const auto sol = convex::minimize(prog, 1e-10);
    REQUIRE_THAT(sol.x_star[0], Catch::Matchers::WithinAbs(1.0, 1e-6));
    REQUIRE_THAT(sol.x_star[1], Catch::Matchers::WithinAbs(-2.0, 1e-6));
  }
  SECTION("bound-constrained minimum lands on the face") {
    prog.lower = Eigen::Vector2d(0, 0);
    prog.upper = Eigen::Vector2d(10, 10);
    prog.interior = Eigen::Vector2d(1, 1);
    const auto sol = convex::minimize(prog, 1e-10);
    REQUIRE_THAT(sol.x_star[0], Catch::Matchers::WithinAbs(1.0, 1e-6));
    REQUIRE_THAT(sol.x_star[1], Catch::Matchers::WithinAbs(0.0, 1e-5));
  }
  SECTION("start outside the feasible set is rejected") {
    prog.lower = Eigen::Vector2d(0, 0);
    prog.upper = Eigen::Vector2d(10, 10);
    prog.interior = Eigen::Vector2d(-1, 1);
    REQUIRE_THROWS_AS(convex::minimize(prog, 1e-10), std::invalid_argument);
  }
}

TEST_CASE("entropy over a budget splits evenly", "[core][barrier]") {
  convex::SmoothProgram prog;
  prog.dim = 3;
  prog.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(3);
    double v = 0;
    for (int i = 0; i < 3; ++i) {
      v += x[i] * std::log(x[i]);
      g[i] = std::log(x[i]) + 1;
    }
    return v;
  };
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(3);
  prog.constraints.push_back({ones, 1.0});
  prog.lower = Eigen::VectorXd::Zero(3);
  prog.interior = Eigen::VectorXd::Constant(3, 0.2);
  const auto sol = convex::minimize(prog, 1e-10);  // finite-differenced hessian
  for (int i = 0; i < 3; ++i)
    REQUIRE_THAT(sol.x_star[i], Catch::Matchers::WithinAbs(1.0 / 3, 1e-5));
}

TEST_CASE("affine substitution maps rows and drops satisfied constants", "[core][barrier]") {
  convex::SmoothProgram prog;
  prog.dim = 2;
  prog.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(2);
    g[0] = 2 * x[0];
    g[1] = 2 * x[1];
    return x.squaredNorm();
  };
  prog.lower = Eigen::Vector2d(-5, 1);
  prog.upper = Eigen::Vector2d(5, 5);

  // restrict to the line x = (y, 3): the x2 bounds become constant and vanish
  Eigen::MatrixXd map(2, 1);
  map << 1, 0;
  Eigen::Vector2d offset(0, 3);
  const auto red =
      convex::substitute(prog, map, offset, Eigen::VectorXd::Constant(1, 0.5));
  REQUIRE(red.dim == 1);
  REQUIRE(red.constraints.size() == 2);  // only the x1 bounds survive
  const auto sol = convex::minimize(red, 1e-10);
  REQUIRE_THAT(sol.x_star[0], Catch::Matchers::WithinAbs(0.0, 1e-6));

  // an eliminated row that the offset violates must throw
  Eigen::Vector2d bad_offset(0, 9);
  REQUIRE_THROWS_AS(convex::substitute(prog, map, bad_offset, Eigen::VectorXd::Constant(1, 0.5)),
                    std::invalid_argument);
}
