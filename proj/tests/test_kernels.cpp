#include "doctest.h"
#include "test_util.hpp"

#include "crn/kernels.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace crn;

TEST_CASE("lambda_B values and domain") {
  CHECK(lambda_B(1.0) == 0.0);
  CHECK(lambda_B(0.0) == 1.0);
  CHECK(lambda_B(std::numbers::e) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(lambda_B(-1e-3), std::invalid_argument);
  for (double z : {1e-300, 1e-10, 0.3, 2.0, 50.0}) CHECK(lambda_B(z) > 0.0);
}

TEST_CASE("log_mean against quadrature of its integral form") {
  CHECK(log_mean(3.0, 3.0) == 3.0);
  CHECK(log_mean(5.0, 0.0) == 0.0);
  CHECK(log_mean(0.0, 5.0) == 0.0);
  CHECK(log_mean(4.0, 1.0) == doctest::Approx(testing::log_mean_quadrature(4.0, 1.0)).epsilon(1e-13));
  CHECK(log_mean(4.0, 1.0) == doctest::Approx(2.1640425613334453).epsilon(1e-14));
  CHECK_THROWS_AS(log_mean(-1.0, 1.0), std::invalid_argument);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-6.0, 6.0);
  for (int k = 0; k < 300; ++k) {
    const double a = std::exp(d(rng)), b = std::exp(d(rng));
    const double L = log_mean(a, b);
    CHECK(L == doctest::Approx(testing::log_mean_quadrature(a, b)).epsilon(1e-12));
    CHECK(L == doctest::Approx(log_mean(b, a)).epsilon(1e-15));
    CHECK(L >= std::sqrt(a * b) * (1.0 - 1e-14));
    CHECK(L <= 0.5 * (a + b) * (1.0 + 1e-14));
  }
}

TEST_CASE("log_mean is continuous across the series switch") {
  for (double rel : {1e-3, 1e-5, 1e-7, 1e-8, 1e-10, 1e-13}) {
    const double a = 2.0 * (1.0 + rel), b = 2.0;
    // Quadrature oracle is exact to rounding here.
    CHECK(log_mean(a, b) == doctest::Approx(testing::log_mean_quadrature(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("log_mean is jointly concave on random samples") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(0.01, 10.0);
  for (int k = 0; k < 1000; ++k) {
    const double a1 = d(rng), a2 = d(rng), b1 = d(rng), b2 = d(rng);
    const double lhs = log_mean(0.5 * (a1 + a2), 0.5 * (b1 + b2));
    const double rhs = 0.5 * (log_mean(a1, b1) + log_mean(a2, b2));
    CHECK(lhs >= rhs * (1.0 - 1e-13));
  }
}

TEST_CASE("log_mean gradient matches finite differences") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.1, 5.0);
  for (int k = 0; k < 50; ++k) {
    Eigen::VectorXd x(2);
    x << d(rng), d(rng);
    const auto [ga, gb] = log_mean_grad(x(0), x(1));
    const Eigen::VectorXd fd = testing::numeric_gradient([](const Eigen::VectorXd& y) { return log_mean(y(0), y(1)); }, x);
    CHECK(ga == doctest::Approx(fd(0)).epsilon(1e-7));
    CHECK(gb == doctest::Approx(fd(1)).epsilon(1e-7));
  }
}

TEST_CASE("G and its relation to the log-mean") {
  CHECK(G(2.0, 2.0) == 0.0);
  CHECK(G(std::numbers::e, 1.0) == doctest::Approx(std::numbers::e - 1.0).epsilon(1e-15));
  CHECK_THROWS(G(0.0, 1.0));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-8.0, 8.0);
  for (int k = 0; k < 10000; ++k) {
    const double a = std::exp(d(rng)), b = std::exp(d(rng));
    const double s = std::log(a) - std::log(b);
    CHECK(log_mean(a, b) * s * s == doctest::Approx(G(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("affine lower bound for G") {
  CHECK(g_affine(0.0) == 0.0);
  for (double w = -10.0; w <= 10.0; w += 0.25) CHECK(g_affine(w) + g_affine(-w) <= 1e-15);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(-4.0, 4.0);
  for (int k = 0; k < 500; ++k) {
    const double a = std::exp(d(rng)), b = std::exp(d(rng)), w = 3.0 * d(rng);
    CHECK(affine_lower_bound_check(a, b, w));
    const double eq = std::log(a / b);
    CHECK(g_affine(eq) * a + g_affine(-eq) * b == doctest::Approx(G(a, b)).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("cosh-type potential and identities") {
  CHECK(cosh_star(0.0) == 0.0);
  CHECK(std::abs(cosh_star(1e-3) - 5e-7) <= 1e-13);
  CHECK(cosh_star(2.0) == doctest::Approx(4.0 * std::cosh(1.0) - 4.0).epsilon(1e-15));
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> d(-5.0, 5.0);
  for (int k = 0; k < 500; ++k) {
    const double a = std::exp(d(rng)), b = std::exp(d(rng));
    CHECK(std::sqrt(a * b) * cosh_star_d1(std::log(a / b)) == doctest::Approx(a - b).epsilon(1e-12).scale(a + b));
    CHECK(std::sqrt(a * b) * cosh_star_d2(std::log(b / a)) == doctest::Approx(0.5 * (a + b)).epsilon(1e-12));
    const double z = d(rng);
    const double fd = (cosh_star(z + 1e-6) - cosh_star(z - 1e-6)) / 2e-6;
    CHECK(cosh_star_d1(z) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("Phi for the generator presets") {
  const auto boltz = ConvexGenerator::boltzmann();
  const auto quad = ConvexGenerator::quadratic();
  const auto pw = ConvexGenerator::power(1.5);
  CHECK(Phi(boltz, 4.0, 1.0) == doctest::Approx(log_mean(4.0, 1.0)).epsilon(1e-15));
  CHECK(Phi(quad, 4.0, 1.0) == 1.0);
  CHECK(Phi(quad, 0.3, 7.0) == 1.0);
  for (double a : {0.2, 1.0, 3.5}) {
    CHECK(Phi(pw, a, a) == doctest::Approx(1.0 / pw.phi_double_prime(a)).epsilon(1e-14));
    CHECK(Phi(boltz, a, a) == doctest::Approx(1.0 / boltz.phi_double_prime(a)).epsilon(1e-14));
    // Continuity of the near-diagonal branch
    CHECK(Phi(pw, a * (1.0 + 1e-7), a) == doctest::Approx((a * 1e-7) / (pw.phi_prime(a * (1.0 + 1e-7)) - pw.phi_prime(a))).epsilon(1e-6));
  }
  CHECK(Phi(pw, 3.0, 1.0) == doctest::Approx(2.0 / (pw.phi_prime(3.0) - pw.phi_prime(1.0))).epsilon(1e-15));
  CHECK_THROWS(Phi(pw, 0.0, 1.0));
  CHECK_THROWS(ConvexGenerator::power(2.5));
  for (const auto& g : {boltz, quad, pw}) CHECK(g.phi(1.0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("Stirling correction bracket") {
  const auto [l0, u0] = stirling_kn_bounds(0);
  CHECK(l0 == 1.0 / (2.0 * std::numbers::pi));
  CHECK(u0 == l0);
  // k with sqrt(2 pi k)(n/e)^n = n!
  for (int n : {1, 2, 5, 10, 40, 150}) {
    const double logk = 2.0 * (std::lgamma(n + 1.0) - n * (std::log(n) - 1.0)) - std::log(2.0 * std::numbers::pi);
    const double k = std::exp(logk);
    const auto [lo, hi] = stirling_kn_bounds(n);
    CHECK(lo <= k * (1.0 + 1e-12));
    CHECK(k <= hi * (1.0 + 1e-12));
  }
  const double k5 = 120.0 * 120.0 / (2.0 * std::numbers::pi * std::pow(5.0 / std::numbers::e, 10.0));
  CHECK(stirling_kn_bounds(5).first <= k5);
  CHECK(k5 <= stirling_kn_bounds(5).second);
  CHECK(stirling_kn_bounds(1000).second - 1000.0 - 1.0 / 6.0 < 1e-4);
}
