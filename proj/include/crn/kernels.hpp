#pragma once

#include <utility>

namespace crn {

// Boltzmann function z log z - z + 1, extended by continuity to z = 0.
double lambda_B(double z);

// Logarithmic mean (a - b) / (log a - log b). Switches to a symmetric series
// near the diagonal; Lambda(a, 0) = 0.
double log_mean(double a, double b);

// Partial derivatives (d/da, d/db) of the logarithmic mean, a, b > 0.
std::pair<double, double> log_mean_grad(double a, double b);

// (a - b)(log a - log b). Both arguments must be positive.
double G(double a, double b);

double g_affine(double omega);
// G(a, b) >= g(omega) a + g(-omega) b, up to a relative rounding slack.
bool affine_lower_bound_check(double a, double b, double omega);

// 4 cosh(zeta/2) - 4 and its first two derivatives.
double cosh_star(double zeta);
double cosh_star_d1(double zeta);
double cosh_star_d2(double zeta);

struct ConvexGenerator {
  enum class Kind { boltzmann, quadratic, power };
  Kind kind = Kind::boltzmann;
  double p = 2.0;  // only for Kind::power, p in (1, 2]

  static ConvexGenerator boltzmann() { return {Kind::boltzmann, 1.0}; }
  static ConvexGenerator quadratic() { return {Kind::quadratic, 2.0}; }
  static ConvexGenerator power(double p);

  double phi(double z) const;
  double phi_prime(double z) const;
  double phi_double_prime(double z) const;
  double phi_fourth(double z) const;
};

// (a - b) / (phi'(a) - phi'(b)), with 1/phi''(a) on the diagonal.
double Phi(const ConvexGenerator& gen, double a, double b);

// Bracket [k_n(0.9), k_n(1)] of the Stirling-type correction k_n.
std::pair<double, double> stirling_kn_bounds(int n);

}  // namespace crn
