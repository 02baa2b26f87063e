#pragma once

// Shared fixtures and independent reference computations for the test suites.

#include "crn/network.hpp"
#include "crn/rre.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <random>

namespace crn::testing {

// X <-> 0 (k_fw = 4b, k_bw = 2a) and 2X <-> 0 (unit rates).
inline ReactionNetwork example_two_pairs(double a, double b) {
  return make_network({"X"}, {Reaction{{1}, {0}, 4.0 * b, 2.0 * a}, Reaction{{2}, {0}, 1.0, 1.0}});
}

// Production 0 -> X at rate 2 and the irreversible 2X -> 0, so c' = 2(1 - c^2).
inline ReactionNetwork example_irreversible() {
  return make_network({"X"}, {Reaction{{0}, {1}, 2.0, 0.0}, Reaction{{2}, {0}, 1.0, 0.0}}, RatePolicy::allow_zero);
}

// 0 <-> X with production a and decay b, written as X <-> 0.
inline ReactionNetwork birth_death(double a, double b) { return make_network({"X"}, {Reaction{{1}, {0}, b, a}}); }

inline ReactionNetwork dimerization() { return make_network({"X1", "X2"}, {Reaction{{1, 0}, {0, 2}, 1.0, 1.0}}); }

// Random network with detailed balance built in: pick c* and kappa, then set
// k_fw = kappa / c*^alpha and k_bw = kappa / c*^beta.
inline ReactionNetwork random_db_network(std::mt19937_64& rng, int max_species = 4, int max_reactions = 5) {
  std::uniform_int_distribution<int> Id(1, max_species), Rd(1, max_reactions), coef(0, 2);
  std::uniform_real_distribution<double> pos(0.3, 3.0);
  const int I = Id(rng), R = Rd(rng);
  std::vector<std::string> names;
  for (int i = 0; i < I; ++i) names.push_back("S" + std::to_string(i));
  Eigen::VectorXd cs(I);
  for (int i = 0; i < I; ++i) cs(i) = pos(rng);
  std::vector<Reaction> rx;
  while (static_cast<int>(rx.size()) < R) {
    Reaction r;
    r.alpha.resize(I);
    r.beta.resize(I);
    for (int i = 0; i < I; ++i) {
      r.alpha[i] = coef(rng);
      r.beta[i] = coef(rng);
    }
    if (r.alpha == r.beta) continue;
    const double kappa = pos(rng);
    double ma = 1.0, mb = 1.0;
    for (int i = 0; i < I; ++i) {
      ma *= std::pow(cs(i), r.alpha[i]);
      mb *= std::pow(cs(i), r.beta[i]);
    }
    r.k_fw = kappa / ma;
    r.k_bw = kappa / mb;
    rx.push_back(r);
  }
  return make_network(names, rx);
}

inline Eigen::VectorXd random_point(std::mt19937_64& rng, std::size_t I, double lo = 0.05, double hi = 5.0) {
  std::uniform_real_distribution<double> d(std::log(lo), std::log(hi));
  Eigen::VectorXd c(I);
  for (std::size_t i = 0; i < I; ++i) c(i) = std::exp(d(rng));
  return c;
}

// Log-mean by adaptive quadrature of int_0^1 a^s b^{1-s} ds.
inline double log_mean_quadrature(double a, double b) {
  auto f = [&](double s) { return std::pow(a, s) * std::pow(b, 1.0 - s); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 15, 1e-15);
}

// Dense matrix exponential applied to a vector.
inline Eigen::VectorXd dense_expv(const Eigen::MatrixXd& A, const Eigen::VectorXd& v, double t) {
  const Eigen::MatrixXd E = (A * t).exp();
  return E * v;
}

// Poisson pmf by recursion in n, independent of lgamma.
inline std::vector<double> poisson_pmf_table(double mean, int n_max) {
  std::vector<double> p(n_max + 1);
  p[0] = std::exp(-mean);
  for (int n = 1; n <= n_max; ++n) p[n] = p[n - 1] * mean / n;
  return p;
}

// Numerical gradient by central differences.
template <class F>
Eigen::VectorXd numeric_gradient(F&& f, const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

}  // namespace crn::testing
