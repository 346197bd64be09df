#include <cmath>

#include "doctest.h"
#include "rootsa/errors.hpp"
#include "rootsa/problem_io.hpp"
#include "rootsa/solver.hpp"

using namespace rootsa;

namespace {

// h(theta) = 0.5 theta: one state, one action, zero reward, gamma = 0.5
TabularMDP halving(NoiseModel noise = {NoiseFamily::none, 0.0}) {
  TabularMDP m;
  m.states = 1;
  m.actions = 1;
  m.kernel = {Matrix::Ones(1, 1)};
  m.reward = Matrix::Zero(1, 1);
  m.discount = 0.5;
  m.noise = noise;
  return m;
}

Vector scalar(double x) { return Vector::Constant(1, x); }

Problem random_mdp(std::uint64_t seed, NoiseModel noise) {
  GeneratorSpec g;
  g.states = 5;
  g.actions = 3;
  g.discount = 0.8;
  g.noise = noise;
  g.seed = seed;
  return generate_problem(g);
}

RootSaConfig config(double alpha, long b0, long n, int restarts = 0) {
  RootSaConfig c;
  c.alpha = alpha;
  c.burn_in = b0;
  c.horizon = n;
  c.restarts = restarts;
  c.checkpoints = default_checkpoints(b0, n);
  return c;
}

constexpr NoiseModel kSilent{NoiseFamily::none, 0.0};

}  // namespace

TEST_CASE("vanilla SA hand examples") {
  GenerativeOracle o(halving(), OracleMode::exact, 1, 1);
  auto trace = vanilla_sa_run(o, scalar(1.0), constant_stepsize(0.5), 1, {1});
  CHECK(trace.theta_final[0] == 0.75);
  CHECK(trace.samples_used == 1);

  GenerativeOracle full(halving(), OracleMode::exact, 1, 1);
  CHECK(vanilla_sa_run(full, scalar(3.0), constant_stepsize(1.0), 1, {1}).theta_final[0] == 1.5);

  const Problem p = random_mdp(2, kSilent);
  const Vector qs = fixed_point_oracle(p);
  GenerativeOracle fixed(p, OracleMode::exact, 1, 1);
  const auto t = vanilla_sa_run(fixed, qs, rescaled_linear_stepsize(0.8), 100, {10, 100});
  CHECK((t.theta_final - qs).cwiseAbs().maxCoeff() <= 1e-11);
}

TEST_CASE("stepsize schedules") {
  CHECK(rescaled_linear_stepsize(0.9)(10) == doctest::Approx(0.5));
  CHECK(polynomial_stepsize(1.0, 0.5)(4) == 0.5);
  CHECK(constant_stepsize(0.3)(1000) == 0.3);
}

TEST_CASE("vanilla SA reports divergence") {
  GenerativeOracle o(halving(), OracleMode::generative, 1, 1);
  const auto t = vanilla_sa_run(o, scalar(1e13), constant_stepsize(0.5), 50, {10, 50});
  CHECK(t.diverged);
  CHECK(!t.message.empty());
}

TEST_CASE("burn-in hand examples") {
  GenerativeOracle o(halving(), OracleMode::exact, 1, 1);
  const auto s = rootsa_burn_in(o, scalar(1.0), 2);
  CHECK(s.v[0] == -0.5);
  CHECK(s.theta[0] == 1.0);
  CHECK(s.theta_prev[0] == 1.0);
  CHECK(s.t == 2);
  CHECK(o.samples_drawn() == 2u);
  CHECK_THROWS_AS(rootsa_burn_in(o, scalar(1.0), 1), InvalidArgumentError);

  const Problem p = random_mdp(3, kSilent);
  GenerativeOracle q(p, OracleMode::exact, 1, 1);
  const Vector qs = fixed_point_oracle(p);
  CHECK(rootsa_burn_in(q, qs, 5).v.cwiseAbs().maxCoeff() <= 1e-11);
  const Vector theta0 = Vector::LinSpaced(15, -1.0, 1.0);
  CHECK((rootsa_burn_in(q, theta0, 5).v - (population_operator(p, theta0) - theta0)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("recursive step hand examples") {
  GenerativeOracle o(halving(), OracleMode::generative, 1, 1);
  auto s = rootsa_burn_in(o, scalar(1.0), 2);
  s = rootsa_step(s, o, 0.1);
  CHECK(s.t == 3);
  CHECK(s.v[0] == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(s.theta[0] == doctest::Approx(0.95).epsilon(1e-15));
  s = rootsa_step(s, o, 0.1);
  CHECK(s.v[0] == doctest::Approx(-0.475).epsilon(1e-15));
  CHECK(s.theta[0] == doctest::Approx(0.9025).epsilon(1e-15));
  CHECK(s.theta[0] == doctest::Approx(std::pow(1.0 - 0.1 * 0.5, 2)).epsilon(1e-15));
  CHECK(o.samples_drawn() == 4u);
}

TEST_CASE("recursive step stays at the fixed point") {
  const Problem p = random_mdp(4, kSilent);
  const Vector qs = fixed_point_oracle(p);
  GenerativeOracle o(p, OracleMode::exact, 1, 1);
  RootSaState s{10, qs, Vector::Zero(15), qs};
  s = rootsa_step(s, o, 0.3);
  CHECK(s.v.cwiseAbs().maxCoeff() <= 1e-11);
  CHECK((s.theta - qs).cwiseAbs().maxCoeff() <= 1e-11);
}

TEST_CASE("one recursive step draws one sample") {
  const Problem p = random_mdp(5, {NoiseFamily::rademacher, 1.0});
  GenerativeOracle o(p, OracleMode::generative, 3, 1);
  auto s = rootsa_burn_in(o, Vector::Zero(15), 4);
  for (int i = 1; i <= 10; ++i) {
    s = rootsa_step(s, o, 0.1);
    REQUIRE(o.samples_drawn() == static_cast<std::uint64_t>(4 + i));
  }
}

TEST_CASE("noiseless run reduces to damped fixed-point iteration") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Problem p = random_mdp(seed, kSilent);
    GenerativeOracle o(p, OracleMode::exact, seed, 1);
    const double alpha = 0.2;
    const Vector theta0 = Vector::LinSpaced(15, -3.0, 2.0);
    auto s = rootsa_burn_in(o, theta0, 8);
    Vector damped = theta0;
    for (int k = 0; k < 200; ++k) {
      const Vector defect = population_operator(p, s.theta) - s.theta;
      s = rootsa_step(s, o, alpha);
      REQUIRE((s.v - defect).cwiseAbs().maxCoeff() <= 1e-12);
      damped += alpha * (population_operator(p, damped) - damped);
      REQUIRE((s.theta - damped).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("noiseless run meets the geometric defect bound") {
  const Problem p = random_mdp(6, kSilent);
  const auto c = config(0.25, 16, 400);
  const Vector theta0 = Vector::LinSpaced(15, 0.0, 4.0);
  GenerativeOracle o(p, OracleMode::exact, 1, 1);
  TraceOptions opts;
  opts.theta_star = fixed_point_oracle(p);
  const auto t = rootsa_run(c, o, theta0, opts);
  const double d0 = (population_operator(p, theta0) - theta0).cwiseAbs().maxCoeff();
  const double bound = std::pow(1.0 - c.alpha * 0.2, double(c.horizon - c.burn_in)) * d0;
  CHECK(t.checkpoints.back().defect <= bound * (1.0 + 1e-9));
  CHECK(t.samples_used == 400);
  CHECK(t.checkpoints.back().t == 400);
  CHECK(t.checkpoints.back().error.has_value());
  for (const auto& r : t.checkpoints) {
    if (r.t > c.burn_in) {
      REQUIRE(r.z.has_value());
      REQUIRE(*r.z <= 1e-12);
    }
  }
}

TEST_CASE("shifted fixed point decays exactly at the damped rate") {
  const Problem p = random_mdp(7, kSilent);
  const Vector theta0 = (fixed_point_oracle(p).array() + 5.0).matrix();
  const auto c = config(0.3, 10, 70);
  GenerativeOracle o(p, OracleMode::exact, 1, 1);
  const auto t = rootsa_run(c, o, theta0);
  const double expected = std::pow(1.0 - 0.3 * 0.2, 60.0) * 5.0 * 0.2;
  CHECK(std::abs(t.checkpoints.back().defect - expected) <= 1e-9 * expected);
}

TEST_CASE("n = 2 B0 takes exactly B0 recursive steps") {
  GenerativeOracle o(halving(), OracleMode::generative, 1, 1);
  const auto t = rootsa_run(config(0.1, 6, 12), o, scalar(1.0));
  CHECK(t.theta_final[0] == doctest::Approx(std::pow(0.95, 6)).epsilon(1e-14));
  CHECK(t.samples_used == 12);
}

TEST_CASE("runs are reproducible and checkpoints increase") {
  const Problem p = random_mdp(8, {NoiseFamily::rademacher, 1.0});
  auto c = config(0.05, 40, 1000);
  c.checkpoints.insert(c.checkpoints.begin(), 10);
  GenerativeOracle a(p, OracleMode::generative, 5, 1000), b(p, OracleMode::generative, 5, 1000);
  const auto ta = rootsa_run(c, a, Vector::Zero(15)), tb = rootsa_run(c, b, Vector::Zero(15));
  CHECK(ta.theta_final == tb.theta_final);
  REQUIRE(ta.checkpoints.size() == tb.checkpoints.size());
  for (std::size_t i = 0; i < ta.checkpoints.size(); ++i) {
    CHECK(ta.checkpoints[i].defect == tb.checkpoints[i].defect);
    if (i > 0) CHECK(ta.checkpoints[i].t > ta.checkpoints[i - 1].t);
  }
  // before the first recursive step the iterate is still theta0
  CHECK(ta.checkpoints.front().t == 10);
  CHECK(!ta.checkpoints.front().z.has_value());
  CHECK(ta.checkpoints[1].z.has_value());
}

TEST_CASE("noise-driven z satisfies the averaged recursion") {
  // t z_t = B0 z_B0 + sum of zero-mean terms, so z_t shrinks roughly like 1/sqrt(t)
  const Problem p = random_mdp(9, {NoiseFamily::rademacher, 1.0});
  auto c = config(0.02, 50, 20000);
  c.checkpoints = {100, 20000};
  double early = 0.0, late = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GenerativeOracle o(p, OracleMode::generative, seed, 1);
    const auto t = rootsa_run(c, o, Vector::Zero(15));
    early += *t.checkpoints[0].z;
    late += *t.checkpoints[1].z;
  }
  CHECK(late < early);
}

TEST_CASE("restart with R = 0 equals the plain run") {
  const Problem p = random_mdp(10, {NoiseFamily::uniform, 1.0});
  const auto c = config(0.05, 30, 900);
  GenerativeOracle a(p, OracleMode::generative, 2, 900), b(p, OracleMode::generative, 2, 900);
  const auto ta = rootsa_run(c, a, Vector::Zero(15)), tb = rootsa_restart_run(c, b, Vector::Zero(15));
  CHECK(ta.theta_final == tb.theta_final);
  REQUIRE(ta.checkpoints.size() == tb.checkpoints.size());
  for (std::size_t i = 0; i < ta.checkpoints.size(); ++i) CHECK(ta.checkpoints[i].defect == tb.checkpoints[i].defect);
}

TEST_CASE("noiseless restarts halve the defect every epoch") {
  const Problem p = random_mdp(11, kSilent);
  const auto c = config(0.5, 20, 1000, 3);
  GenerativeOracle o(p, OracleMode::exact, 1, 1);
  const auto t = rootsa_restart_run(c, o, Vector::Constant(15, 10.0));
  REQUIRE(t.epoch_start_defects.size() == 5u);
  for (std::size_t e = 1; e < 4; ++e) CHECK(t.epoch_start_defects[e] <= 0.5 * t.epoch_start_defects[e - 1]);
  CHECK(t.samples_used == 1000);
}

TEST_CASE("restarts from the fixed point stay there") {
  const Problem p = random_mdp(12, kSilent);
  const Vector qs = fixed_point_oracle(p);
  GenerativeOracle o(p, OracleMode::exact, 1, 1);
  const auto t = rootsa_restart_run(config(0.5, 20, 500, 2), o, qs);
  CHECK((t.theta_final - qs).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("restart budget must cover the final epoch") {
  GenerativeOracle o(halving(), OracleMode::generative, 1, 1);
  CHECK_THROWS_AS(rootsa_restart_run(config(0.1, 10, 100, 5), o, scalar(1.0)), InvalidArgumentError);
  GenerativeOracle fresh(halving(), OracleMode::generative, 1, 1);
  CHECK_NOTHROW(rootsa_restart_run(config(0.1, 10, 100, 4), fresh, scalar(1.0)));
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(validate(config(0.1, 10, 19)), InvalidArgumentError);
  CHECK_THROWS_AS(validate(config(0.0, 10, 100)), InvalidArgumentError);
  CHECK_THROWS_AS(validate(config(1.5, 10, 100)), InvalidArgumentError);
  CHECK_THROWS_AS(validate(config(0.1, 1, 100)), InvalidArgumentError);
  auto c = config(0.1, 10, 100);
  c.checkpoints = {5, 101};
  CHECK_THROWS_AS(validate(c), InvalidArgumentError);
  CHECK_NOTHROW(validate(config(1.0, 10, 20)));
}

TEST_CASE("divergence aborts the recursive run") {
  GenerativeOracle o(halving(), OracleMode::generative, 1, 1);
  RootSaState s{10, scalar(1e11), scalar(1e13), scalar(1e11)};
  CHECK_THROWS_AS(rootsa_step(s, o, 1.0), ConvergenceError);
}

TEST_CASE("stepsize rules") {
  CHECK(default_stepsize(StepsizeKind::discounted, 10000, 0.1, 10.0) == doctest::Approx(5.724e-4).epsilon(1e-3));
  CHECK(default_stepsize(StepsizeKind::discounted, 20000, 0.1, 10.0) <
        default_stepsize(StepsizeKind::discounted, 10000, 0.1, 10.0));
  CHECK(default_stepsize(StepsizeKind::avgcost, 1, 1.0 / std::exp(1.0), std::exp(1.0)) ==
        doctest::Approx(1.0).epsilon(1e-12));
  const double generic = default_stepsize(StepsizeKind::generic, 10000, 0.1, 10.0, {2.0, 4.0, 1});
  CHECK(generic == doctest::Approx(2.0 / (4.0 * std::sqrt(std::log(10.0)) * std::log(1e5) * 100.0)).epsilon(1e-12));
  const double ms = default_stepsize(StepsizeKind::multistep, 10000, 0.1, 10.0, {1.0, 1.0, 3});
  CHECK(ms == doctest::Approx(1.0 / (3.0 * std::log(10.0) * std::pow(std::log(1e5), 2))).epsilon(1e-12));
  CHECK(default_stepsize(StepsizeKind::multistep, 10000, 0.1, 10.0, {1.0, 1.0, 3}) ==
        default_stepsize(StepsizeKind::multistep, 40000, 0.1, 10.0, {1.0, 1.0, 3}) *
            std::pow(std::log(4e5) / std::log(1e5), 2));
  CHECK(default_stepsize(StepsizeKind::discounted, 4, 0.9, 2.0, {1e6, 1.0, 1}) == 1.0);
  CHECK_THROWS_AS(default_stepsize(StepsizeKind::discounted, 100, 1.0, 10.0), InvalidArgumentError);
  CHECK(stepsize_kind_from_string(to_string(StepsizeKind::multistep)) == StepsizeKind::multistep);
}

TEST_CASE("burn-in rules") {
  const long n = 1000;
  const double delta = 0.1;
  const double unit = 1.0 / std::log(n / delta);
  CHECK(default_burnin(1.0, BurnInRule::contractive(0.75), n, delta, unit) == 16);
  CHECK(default_burnin(0.5, BurnInRule::multistep(1), n, delta, unit) == 2);
  CHECK(default_burnin(0.5, BurnInRule::contractive(0.75), n, delta, unit) == 32);
  CHECK(default_burnin(0.25, BurnInRule::contractive(0.75), n, delta, unit) == 64);
  CHECK(default_burnin(1.0, BurnInRule::multistep(1), n, delta, 1e-6) == 2);
  CHECK_THROWS_AS(default_burnin(0.5, BurnInRule::contractive(1.0), n, delta, 1.0), InvalidArgumentError);
}

TEST_CASE("default schedules") {
  CHECK(default_checkpoints(100, 1000) == std::vector<long>{100, 200, 400, 800, 1000});
  CHECK(default_checkpoints(3, 3) == std::vector<long>{3});
  CHECK(default_restarts(1000) == static_cast<int>(std::ceil(2.0 * std::log(1000.0))));
}
