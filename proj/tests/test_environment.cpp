#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "sinai/environment.hpp"
#include "sinai/errors.hpp"
#include "sinai/rng.hpp"

using namespace sinai;

TEST_CASE("rho0 must lie strictly inside (0, 1/2)") {
  CHECK_THROWS_AS(EnvDistribution::make(EnvKind::two_point_symmetric, 0.5), ConfigError);
  CHECK_THROWS_AS(EnvDistribution::make(EnvKind::uniform_symmetric, 0.0), ConfigError);
  CHECK_THROWS_AS(EnvDistribution::make(EnvKind::two_point_symmetric, -0.1), ConfigError);
  CHECK_NOTHROW(EnvDistribution::make(EnvKind::uniform_symmetric, 0.1));
}

TEST_CASE("env kind names round trip") {
  for (auto k : {EnvKind::two_point_symmetric, EnvKind::uniform_symmetric})
    CHECK(env_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(env_kind_from_string("gaussian"), ConfigError);
}

TEST_CASE("two-point support") {
  const auto d = EnvDistribution::make(EnvKind::two_point_symmetric, 0.25);
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    const auto env = sample_environment(d, -200, 200, seed);
    for (double a : env.values()) CHECK((a == 0.25 || a == 0.75));
  }
}

TEST_CASE("uniform law stays in [rho0, 1 - rho0]") {
  const auto d = EnvDistribution::make(EnvKind::uniform_symmetric, 0.3);
  const auto env = sample_environment(d, -500, 500, 7);
  for (double a : env.values()) {
    CHECK(a >= 0.3);
    CHECK(a <= 0.7);
  }
}

TEST_CASE("sampling rejects an inverted window") {
  const auto d = EnvDistribution::make(EnvKind::two_point_symmetric, 0.25);
  CHECK_THROWS_AS(sample_environment(d, 5, 4, 1), ConfigError);
}

TEST_CASE("windows are regenerable") {
  const auto d = EnvDistribution::make(EnvKind::uniform_symmetric, 0.25);
  const auto small = sample_environment(d, -10, 10, 42);
  const auto big = sample_environment(d, -20, 20, 42);
  for (Site i = -10; i <= 10; ++i) CHECK(small.alpha(i) == big.alpha(i));
  CHECK(small.alpha(3) == site_alpha(d, 42, 3));
  CHECK_THROWS_AS(small.alpha(11), RangeError);
}

TEST_CASE("extend_environment") {
  const auto d = EnvDistribution::make(EnvKind::two_point_symmetric, 0.25);
  const auto env = sample_environment(d, -5, 5, 3);
  CHECK(extend_environment(env, -5, 5) == env);
  const auto wide = extend_environment(env, -10, 10);
  CHECK(wide == sample_environment(d, -10, 10, 3));
  for (Site i = -5; i <= 5; ++i) CHECK(wide.alpha(i) == env.alpha(i));
  CHECK_THROWS_AS(extend_environment(env, -4, 5), ConfigError);
  const auto custom = Environment::custom(-1, {0.5, 0.5, 0.5});
  CHECK_THROWS(extend_environment(custom, -2, 2));
}

TEST_CASE("potential of constant environments") {
  const auto flat = compute_potential(Environment::custom(-4, std::vector<double>(9, 0.5)));
  for (double s : flat.values()) CHECK(s == 0.0);

  const double a = 1.0 / (1.0 + std::numbers::e);
  const auto ramp = compute_potential(Environment::custom(-4, std::vector<double>(9, a)));
  for (Site k = -4; k <= 4; ++k) CHECK(ramp.at(k) == doctest::Approx(static_cast<double>(k)).epsilon(1e-12));
}

TEST_CASE("potential sign convention on the left") {
  // alpha_{-1..2} = 0.75, 0.25, 0.25, 0.75
  const auto P = compute_potential(Environment::custom(-1, {0.75, 0.25, 0.25, 0.75}));
  const double l3 = std::log(3.0);
  CHECK(P.at(0) == 0.0);
  CHECK(P.at(1) == doctest::Approx(l3));
  CHECK(P.at(2) == doctest::Approx(0.0));
  CHECK(P.at(-1) == doctest::Approx(-l3));
  CHECK(P.increment(1) == doctest::Approx(l3));
}

TEST_CASE("two-point potentials are exact multiples of the step") {
  const auto d = EnvDistribution::make(EnvKind::two_point_symmetric, 0.25);
  const auto P = compute_potential(sample_environment(d, -300, 300, 11));
  const double c = d.max_increment();
  for (double s : P.values()) CHECK(s == c * std::round(s / c));
  for (Site k = -299; k <= 300; ++k) CHECK(std::abs(P.increment(k)) == doctest::Approx(c));
}

TEST_CASE("potential of a translated window agrees") {
  const auto d = EnvDistribution::make(EnvKind::uniform_symmetric, 0.25);
  const auto a = compute_potential(sample_environment(d, -50, 50, 5));
  const auto b = compute_potential(sample_environment(d, -80, 120, 5));
  for (Site k = -50; k <= 50; ++k) CHECK(a.at(k) == b.at(k));
}

TEST_CASE("sigma2 of the two-point law") {
  const auto d = EnvDistribution::make(EnvKind::two_point_symmetric, 0.25);
  CHECK(sigma2_analytic(d) == doctest::Approx(std::log(3.0) * std::log(3.0)).epsilon(1e-14));
  CHECK(sigma2_analytic(d) == doctest::Approx(1.2069).epsilon(1e-4));
  const auto near = EnvDistribution::make(EnvKind::two_point_symmetric, 0.4999);
  CHECK(sigma2_analytic(near) < 1e-6);
}

TEST_CASE("sigma2 of the uniform law against independent quadrature") {
  for (double rho0 : {0.1, 0.25, 0.35, 0.45}) {
    const auto d = EnvDistribution::make(EnvKind::uniform_symmetric, rho0);
    const auto g = [](double a) {
      const double e = std::log((1.0 - a) / a);
      return e * e;
    };
    // Composite Simpson on a fine grid.
    const int n = 20000;
    const double h = (1.0 - 2.0 * rho0) / n;
    double s = g(rho0) + g(1.0 - rho0);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * g(rho0 + i * h);
    const double simpson = s * h / 3.0 / (1.0 - 2.0 * rho0);
    CHECK(sigma2_analytic(d) == doctest::Approx(simpson).epsilon(1e-9));
  }
}

TEST_CASE("empirical variance of increments matches sigma2") {
  const auto d = EnvDistribution::make(EnvKind::uniform_symmetric, 0.25);
  const auto env = sample_environment(d, 0, 199999, 17);
  double s = 0.0, q = 0.0;
  for (double a : env.values()) {
    const double e = std::log((1.0 - a) / a);
    s += e;
    q += e * e;
  }
  const double n = static_cast<double>(env.size());
  const double var = q / n - (s / n) * (s / n);
  CHECK(std::abs(s / n) < 4.0 * std::sqrt(sigma2_analytic(d) / n));
  CHECK(var == doctest::Approx(sigma2_analytic(d)).epsilon(0.01));
}

TEST_CASE("verify_hypotheses") {
  const auto r = verify_hypotheses(EnvDistribution::make(EnvKind::two_point_symmetric, 0.25));
  CHECK(r.ok);
  CHECK(r.mean_eps == 0.0);
  CHECK(r.sigma2 == doctest::Approx(1.2069).epsilon(1e-4));
  CHECK(r.rho0 == 0.25);
  CHECK(verify_hypotheses(EnvDistribution::make(EnvKind::uniform_symmetric, 0.1)).ok);
}

TEST_CASE("counter rng is random access and stream separated") {
  CounterRng a(1, Stream::dynamics, 4);
  const auto first = a();
  const auto second = a();
  CHECK(a.at(0) == first);
  CHECK(a.at(1) == second);
  CHECK(CounterRng(1, Stream::dynamics, 5).at(0) != first);
  CHECK(CounterRng(1, Stream::environment, 4).at(0) != first);
  CHECK(derive_key(1, Stream::dynamics, 4) == a.key());
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}
