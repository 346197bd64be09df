#include <cmath>

#include "doctest.h"
#include "rootsa/diagnostics.hpp"
#include "rootsa/errors.hpp"
#include "rootsa/oracle.hpp"
#include "rootsa/problem_io.hpp"
#include "rootsa/solver.hpp"

using namespace rootsa;

namespace {

const double kHalfNormalMean = std::sqrt(2.0 / M_PI);

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Problem mdp(std::uint64_t seed, double gamma = 0.8, NoiseModel noise = {NoiseFamily::rademacher, 1.0},
            int states = 4, int actions = 2) {
  GeneratorSpec g;
  g.states = states;
  g.actions = actions;
  g.discount = gamma;
  g.noise = noise;
  g.seed = seed;
  return generate_problem(g);
}

// deterministic 2-cycle, one action, Rademacher rewards
TabularMDP deterministic_mdp(double amplitude) {
  TabularMDP m;
  m.states = 2;
  m.actions = 1;
  m.kernel = {(Matrix(2, 2) << 0, 1, 1, 0).finished()};
  m.reward = (Matrix(2, 1) << 1, 0).finished();
  m.discount = 0.5;
  m.noise = {amplitude == 0.0 ? NoiseFamily::none : NoiseFamily::rademacher, amplitude};
  return m;
}

SSPInstance ssp_chain() {
  SSPInstance s;
  s.states = 3;
  s.actions = 1;
  Matrix k = Matrix::Zero(3, 3);
  k(0, 0) = 1.0;
  k(1, 0) = 1.0;
  k(2, 1) = 1.0;
  s.kernel = {k};
  s.cost = (Matrix(3, 1) << 0, 1, 1).finished();
  s.noise = {NoiseFamily::none, 0.0};
  return s;
}

CovEstimate unit_scalar(double variance = 1.0) { return covariance_from_matrix(Matrix::Constant(1, 1, variance)); }

}  // namespace

TEST_CASE("operator defect") {
  const auto p = mdp(1);
  const Vector qs = fixed_point_oracle(p);
  CHECK(operator_defect(p, qs, NormSpec::sup()) <= 1e-11);
  CHECK(operator_defect(ssp_chain(), Vector::Zero(2), NormSpec::sup()) == 1.0);
  CHECK(operator_defect(ssp_chain(), Vector::Zero(2), NormSpec::weighted_sup(vec({1, 2}))) == 1.0);
  CHECK_THROWS_AS(operator_defect(p, Vector::Zero(3), NormSpec::sup()), DimensionError);
  RngStream rng(1, 0, 0);
  for (int k = 0; k < 200; ++k) {
    Vector theta(8);
    for (int i = 0; i < 8; ++i) theta[i] = 10.0 * rng.uniform() - 5.0;
    const double d0 = operator_defect(p, theta, NormSpec::sup());
    REQUIRE(operator_defect(p, population_operator(p, theta), NormSpec::sup()) <= 0.8 * d0 + 1e-12);
  }
}

TEST_CASE("estimation error and the defect conversion") {
  CHECK(estimation_error(vec({1, 2}), vec({1, 2}), NormSpec::sup()) == 0.0);
  CHECK(defect_to_error_bound(0.3, 0.0) == 0.3);
  CHECK(defect_to_error_bound(0.3, 0.7) == doctest::Approx(1.0));
  CHECK_THROWS_AS(defect_to_error_bound(0.3, 1.0), InvalidArgumentError);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto p = mdp(seed, 0.7);
    const Vector qs = fixed_point_oracle(p);
    GenerativeOracle o(p, OracleMode::generative, seed, 4096);
    RootSaConfig c;
    c.alpha = 0.05;
    c.burn_in = 64;
    c.horizon = 4096;
    c.checkpoints = default_checkpoints(64, 4096);
    const auto t = rootsa_run(c, o, Vector::Zero(8));
    const double defect = operator_defect(p, t.theta_final, NormSpec::sup());
    CHECK(estimation_error(t.theta_final, qs, NormSpec::sup()) <= defect_to_error_bound(defect, 0.7) + 1e-10);
  }
}

TEST_CASE("noise covariance") {
  RngStream rng(2, 0, 0);
  const auto silent = deterministic_mdp(0.0);
  const auto zero = noise_covariance(silent, fixed_point_oracle(silent), 100, rng);
  CHECK(zero.covariance.cwiseAbs().maxCoeff() == 0.0);

  const auto noisy = deterministic_mdp(1.0);
  const long k = 1'000'000;
  const auto cov = noise_covariance(noisy, fixed_point_oracle(noisy), k, rng);
  CHECK(cov.samples == k);
  CHECK(std::abs(cov.covariance(0, 0) - 1.0) <= 0.02);
  CHECK(std::abs(cov.covariance(1, 1) - 1.0) <= 0.02);
  CHECK(std::abs(cov.covariance(0, 1)) <= 0.02);
  CHECK((cov.covariance - cov.covariance.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  for (int i = 0; i < 2; ++i) CHECK(std::abs(cov.mean[i]) <= 5.0 * std::sqrt(cov.covariance(i, i) / k));
  CHECK_THROWS_AS(noise_covariance(noisy, Vector::Zero(2), 1, rng), InvalidArgumentError);
}

TEST_CASE("covariance factor reproduces the covariance") {
  const Matrix s = (Matrix(3, 3) << 2, 1, 0, 1, 2, 1, 0, 1, 2).finished();
  const Matrix f = covariance_factor(s);
  CHECK((f * f.transpose() - s).cwiseAbs().maxCoeff() <= 1e-9);
  const Matrix singular = (Matrix(2, 2) << 1, 1, 1, 1).finished();
  const Matrix g = covariance_factor(singular);
  CHECK(g.allFinite());
  CHECK((g * g.transpose() - singular).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("gaussian complexity closed forms") {
  RngStream rng(3, 0, 0);
  const auto z = gaussian_complexity(covariance_from_matrix(Matrix::Zero(3, 3)), NormSpec::sup(), 1000, rng);
  CHECK(z.wbar == 0.0);
  CHECK(z.nu == 0.0);

  const auto g = gaussian_complexity(unit_scalar(), NormSpec::sup(), 100000, rng);
  CHECK(std::abs(g.wbar - kHalfNormalMean) <= 3.0 * g.wbar_stderr);
  CHECK(g.nu == 1.0);
  CHECK(g.mc == 100000);

  const auto g4 = gaussian_complexity(unit_scalar(4.0), NormSpec::sup(), 100000, rng);
  CHECK(g4.nu == 2.0);
  CHECK(std::abs(g4.wbar - 2.0 * g.wbar) <= 3.0 * std::hypot(g4.wbar_stderr, 2.0 * g.wbar_stderr));
}

TEST_CASE("gaussian complexity scales with the covariance") {
  const Matrix s = (Matrix(3, 3) << 1, 0.3, 0, 0.3, 2, -0.2, 0, -0.2, 0.5).finished();
  for (const auto& norm : {NormSpec::sup(), NormSpec::span(), NormSpec::weighted_sup(vec({1, 2, 0.5}))}) {
    RngStream a(4, 0, 0), b(4, 1, 0);
    const auto g1 = gaussian_complexity(covariance_from_matrix(s), norm, 50000, a);
    const auto g9 = gaussian_complexity(covariance_from_matrix(9.0 * s), norm, 50000, b);
    CHECK(g9.nu == doctest::Approx(3.0 * g1.nu).epsilon(1e-12));
    CHECK(std::abs(g9.wbar - 3.0 * g1.wbar) <= 3.0 * std::hypot(g9.wbar_stderr, 3.0 * g1.wbar_stderr));
  }
  // span: the largest pairwise difference variance, var(W1 - W2) = 2 + 0.5 + 0.4
  CHECK(maximal_deviation(s, NormSpec::span()) == doctest::Approx(std::sqrt(2.9)).epsilon(1e-12));
  CHECK(maximal_deviation(s, NormSpec::sup()) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("resolvent functional") {
  RngStream rng(5, 0, 0);
  const auto cov = unit_scalar();
  const auto half = resolvent_functional(Matrix::Constant(1, 1, 0.5), cov, NormSpec::sup(), 100000, rng);
  CHECK(std::abs(half.wbar - 2.0 * kHalfNormalMean) <= 3.0 * half.wbar_stderr);
  CHECK(half.nu == doctest::Approx(2.0).epsilon(1e-12));

  const Matrix s = (Matrix(2, 2) << 1, 0.5, 0.5, 2).finished();
  RngStream a(6, 0, 0), b(6, 1, 0);
  const auto r0 = resolvent_functional(Matrix::Zero(2, 2), covariance_from_matrix(s), NormSpec::sup(), 50000, a);
  const auto g0 = gaussian_complexity(covariance_from_matrix(s), NormSpec::sup(), 50000, b);
  CHECK(std::abs(r0.wbar - g0.wbar) <= 3.0 * std::hypot(r0.wbar_stderr, g0.wbar_stderr));
  CHECK(r0.nu == doctest::Approx(g0.nu).epsilon(1e-12));

  CHECK(resolvent_functional(Matrix::Constant(2, 2, 0.3), covariance_from_matrix(Matrix::Zero(2, 2)),
                             NormSpec::sup(), 100, rng)
            .wbar == 0.0);
}

TEST_CASE("resolvent functional respects the operator-norm bound") {
  RngStream rng(7, 0, 0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = mdp(seed, 0.9);
    const auto& m = std::get<TabularMDP>(p);
    const Vector qs = fixed_point_oracle(p);
    const auto cov = noise_covariance(p, qs, 20000, rng);
    const auto g = gaussian_complexity(cov, NormSpec::sup(), 20000, rng);
    const Matrix a = local_linear_operator(p, greedy_policy(p, qs));
    CHECK(sup_operator_norm(a) <= m.discount + 1e-12);
    const auto r = resolvent_functional(a, cov, NormSpec::sup(), 20000, rng);
    CHECK(r.wbar <= g.wbar / (1.0 - m.discount) + 3.0 * (r.wbar_stderr + g.wbar_stderr / (1.0 - m.discount)));
    CHECK(r.nu <= g.nu / (1.0 - m.discount) + 1e-12);
  }
}

TEST_CASE("quotient resolvent of a rank-one chain is centering") {
  const Vector xi = vec({0.2, 0.3, 0.5});
  const Matrix p = Vector::Ones(3) * xi.transpose();
  const Matrix s = (Matrix(3, 3) << 1, 0.2, 0, 0.2, 1, 0.1, 0, 0.1, 3).finished();
  RngStream a(8, 0, 0), b(8, 1, 0);
  const auto q = quotient_resolvent_functional(p, xi, covariance_from_matrix(s), 50000, a);
  const auto g = gaussian_complexity(covariance_from_matrix(s), NormSpec::span(), 50000, b);
  CHECK(std::abs(q.wbar - g.wbar) <= 3.0 * std::hypot(q.wbar_stderr, g.wbar_stderr));
  CHECK(q.nu == doctest::Approx(g.nu).epsilon(1e-9));
}

TEST_CASE("linearization set hand examples") {
  TabularMDP m;
  m.states = 1;
  m.actions = 2;
  m.kernel = {Matrix::Ones(1, 1), Matrix::Ones(1, 1)};
  m.reward = (Matrix(1, 2) << 0.4, 0.0).finished();
  m.discount = 0.5;
  m.noise = {NoiseFamily::none, 0.0};
  const Vector q = vec({1.0, 0.6});
  CHECK(linearization_set_q(m, q, 0.1).policies == std::vector<Policy>{{0}});
  CHECK(linearization_set_q(m, q, 0.25).policies == std::vector<Policy>{{0}, {1}});
  CHECK(linearization_set_q(m, q, 0.0).policies == std::vector<Policy>{{0}});
  CHECK(linearization_set_q(m, q, 0.25).candidates_per_state == std::vector<int>{2});
}

TEST_CASE("linearization set grows with the radius and respects the cap") {
  const auto p = mdp(9, 0.8, {NoiseFamily::rademacher, 1.0}, 6, 3);
  const Vector qs = fixed_point_oracle(p);
  std::size_t prev = 0;
  for (double s : {0.0, 0.01, 0.05, 0.1, 0.3, 1.0, 10.0}) {
    const auto set = linearization_set(p, qs, s);
    CHECK(set.policies.size() >= prev);
    prev = set.policies.size();
  }
  CHECK(prev == 729u);  // 3^6: every policy
  CHECK_THROWS_AS(linearization_set(p, qs, 10.0, 100), InvalidArgumentError);
  // SSP mirror uses the smallest cost
  const auto chain = ssp_chain();
  CHECK(linearization_set(chain, fixed_point_oracle(chain), 0.0).policies.size() == 1u);
}

TEST_CASE("local complexity") {
  RngStream rng(10, 0, 0);
  const auto p = mdp(11, 0.8, {NoiseFamily::rademacher, 1.0}, 4, 3);
  const Vector qs = fixed_point_oracle(p);
  const auto cov = noise_covariance(p, qs, 20000, rng);

  LocalComplexityModel model(p, qs, cov, NormSpec::sup(), 20000, rng);
  const auto single = model.singleton();
  CHECK(single.set_size == 1u);
  const auto r = resolvent_functional(local_linear_operator(p, greedy_policy(p, qs)), cov, NormSpec::sup(), 20000, rng);
  CHECK(std::abs(single.g - r.wbar) <= 3.0 * std::hypot(single.g_stderr, r.wbar_stderr));
  CHECK(single.nu == doctest::Approx(r.nu).epsilon(1e-9));
  CHECK(model.at(0.0).g == single.g);

  double prev_g = 0.0, prev_nu = 0.0;
  for (double s : {0.0, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 3.0}) {
    const auto lc = model.at(s);
    CHECK(lc.g >= prev_g);
    CHECK(lc.nu >= prev_nu);
    prev_g = lc.g;
    prev_nu = lc.nu;
  }

  const auto none = local_complexity(p, qs, covariance_from_matrix(Matrix::Zero(12, 12)), 0.5, 1000, rng);
  CHECK(none.g == 0.0);
  CHECK(none.nu == 0.0);
}

TEST_CASE("rate solver analytic examples") {
  CHECK(solve_rate_fixed_point([](double) { return 0.3; }, 1e-6, 10.0).s_star ==
        doctest::Approx(0.3).epsilon(1e-6));
  CHECK(solve_rate_fixed_point([](double s) { return 0.5 * s + 1.0; }, 1e-6, 100.0).s_star ==
        doctest::Approx(2.0).epsilon(1e-6));
  // only crossing is the jump at 1
  CHECK(solve_rate_fixed_point([](double s) { return s < 1.0 ? 2.0 : 0.5; }, 1e-6, 100.0).s_star ==
        doctest::Approx(1.0).epsilon(1e-6));
  // fixed points 0.5 and 2; the largest wins
  CHECK(solve_rate_fixed_point([](double s) { return s >= 1.0 ? 2.0 : 0.5; }, 1e-6, 100.0).s_star ==
        doctest::Approx(2.0).epsilon(1e-6));
  CHECK_THROWS_AS(solve_rate_fixed_point([](double s) { return 2.0 * s + 1.0; }, 1e-6, 100.0), ConvergenceError);
  CHECK_THROWS_AS(solve_rate_fixed_point([](double) { return 1e-9; }, 1e-6, 100.0), ConvergenceError);
  const auto sol = solve_rate_fixed_point([](double) { return 0.3; }, 1e-6, 10.0);
  CHECK(sol.scan.front().first == 10.0);
}

TEST_CASE("higher-order term") {
  HigherOrderParams p;
  p.gamma = 0.5;
  p.alpha = 0.01;
  p.log_dim = 4.0;
  p.wbar = 2.0;
  p.b_star = 1.0;
  const long n = 10000;
  const double delta = 0.1, log_nd = std::log(1e5);
  const double expected = log_nd / 0.25 *
                          ((2.0 * std::sqrt(0.01 / n) + 1.0 / (n * 0.1)) * 2.0 +
                           (2.0 * 0.01 / 100.0 + 1.0 / n) * (4.0 + log_nd));
  CHECK(higher_order_term(n, delta, p) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(higher_order_term(4 * n, delta, p) < higher_order_term(n, delta, p));
}

TEST_CASE("rate fixed point lies in the uniform bracket") {
  RngStream rng(12, 0, 0);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const double gamma = 0.6;
    const auto p = mdp(seed, gamma, {NoiseFamily::uniform, 1.0}, 4, 2);
    const Vector qs = fixed_point_oracle(p);
    const auto cov = noise_covariance(p, qs, 20000, rng);
    const auto w = gaussian_complexity(cov, NormSpec::sup(), 40000, rng);
    LocalComplexityModel model(p, qs, cov, NormSpec::sup(), 40000, rng);
    const long n = 1L << 16;
    const double delta = 0.05;
    HigherOrderParams hp;
    hp.gamma = gamma;
    hp.alpha = default_stepsize(StepsizeKind::discounted, n, delta, 8.0, {10.0, 1.0, 1});
    hp.log_dim = std::log(8.0);
    hp.wbar = w.wbar;
    hp.b_star = cov.noise_bound;
    const double hn = higher_order_term(n, delta, hp);
    const double root = std::sqrt(1.0 / n), tail = std::sqrt(std::log(1.0 / delta) / n);
    const double upper = (w.wbar + 3.0 * w.wbar_stderr) / (1.0 - gamma) * root + w.nu / (1.0 - gamma) * tail + hn;
    const double lower = (w.wbar - 3.0 * w.wbar_stderr) / (1.0 + gamma) * root + w.nu / (1.0 + gamma) * tail + hn;
    const auto sol = solve_rate_fixed_point(rate_rhs(model, n, delta, hn), 1e-9, 10.0 * upper);
    CHECK(sol.s_star <= upper * (1.0 + 1e-6));
    CHECK(sol.s_star >= lower * (1.0 - 1e-6));
    CHECK(sol.s_star >= (1.0 - gamma) / (1.0 + gamma) * upper * (1.0 - 1e-3));
  }
}

TEST_CASE("mixing time examples") {
  CHECK(*mixing_time(Matrix::Constant(3, 3, 1.0 / 3.0), 100).t_mix == 1);
  const auto id = mixing_time(Matrix::Identity(3, 3), 500);
  CHECK(!id.t_mix.has_value());
  CHECK(id.tv == 1.0);
  const Matrix lazy = (Matrix(2, 2) << 0.9, 0.1, 0.1, 0.9).finished();
  const auto m = mixing_time(lazy, 100);
  CHECK(*m.t_mix == 4);
  CHECK(m.tv == doctest::Approx(0.4096).epsilon(1e-12));
  CHECK(max_pairwise_tv(lazy) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("mixing time is monotone on generated chains") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GeneratorSpec g;
    g.family = Family::avgcost;
    g.states = 6;
    g.seed = seed;
    const auto mrp = std::get<AvgCostMRP>(generate_problem(g));
    const auto est = mixing_time(mrp.kernel, 1000);
    REQUIRE(est.t_mix.has_value());
    CHECK(est.tv <= 0.5);
    Matrix pt = Matrix::Identity(6, 6);
    for (int t = 1; t <= *est.t_mix + 20; ++t) {
      pt = pt * mrp.kernel;
      if (t < *est.t_mix) CHECK(max_pairwise_tv(pt) > 0.5);
      if (t >= *est.t_mix) CHECK(max_pairwise_tv(pt) <= 0.5);
    }
  }
}

TEST_CASE("contraction audit examples") {
  RngStream rng(13, 0, 0);
  const auto p = mdp(14, 0.9);
  CHECK(contraction_audit(p, NormSpec::sup(), 1000, rng).max_ratio <= 0.9 + 1e-12);

  GeneratorSpec g;
  g.family = Family::avgcost;
  g.states = 5;
  g.seed = 15;
  const auto avg = generate_problem(g);
  const int t_mix = *mixing_time(std::get<AvgCostMRP>(avg).kernel, 1000).t_mix;
  CHECK(contraction_audit(avg, NormSpec::span(), 1000, rng, 2 * t_mix).max_ratio <= 0.5 + 1e-12);

  AvgCostMRP still;
  still.states = 3;
  still.kernel = Matrix::Identity(3, 3);
  still.cost = vec({1, 2, 3});
  still.stationary = Vector::Constant(3, 1.0 / 3.0);
  still.noise = {NoiseFamily::none, 0.0};
  const auto audit = contraction_audit(still, NormSpec::span(), 100, rng);
  CHECK(audit.max_ratio == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(audit.pairs_used == 100);
}
