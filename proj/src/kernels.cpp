#include "crn/kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace crn {

namespace {

constexpr double kSeriesSwitch = 1e-4;

void require_nonnegative(double x, const char* what) {
  if (!(x >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative argument");
}

void require_positive(double x, const char* what) {
  if (!(x > 0.0)) throw std::invalid_argument(std::string(what) + ": nonpositive argument");
}

// log(a/b) without losing digits when a and b are close.
double log_ratio(double a, double b) {
  const double d = (a - b) / b;
  if (std::abs(d) < 0.5) return std::log1p(d);
  return std::log(a) - std::log(b);
}

}  // namespace

double lambda_B(double z) {
  require_nonnegative(z, "lambda_B");
  if (z == 0.0) return 1.0;
  return z * std::log(z) - z + 1.0;
}

double log_mean(double a, double b) {
  require_nonnegative(a, "log_mean");
  require_nonnegative(b, "log_mean");
  if (a == 0.0 || b == 0.0) return 0.0;
  if (a == b) return a;
  const double m = 0.5 * (a + b);
  const double u = (a - b) / (a + b);
  if (std::abs(u) < kSeriesSwitch) {
    const double u2 = u * u;
    return m * (1.0 - u2 * (1.0 / 3.0 + u2 * (4.0 / 45.0 + u2 * 44.0 / 945.0)));
  }
  return (a - b) / log_ratio(a, b);
}

std::pair<double, double> log_mean_grad(double a, double b) {
  require_positive(a, "log_mean_grad");
  require_positive(b, "log_mean_grad");
  // d/db; the d/da part follows from symmetry Lambda(a,b) = Lambda(b,a).
  auto d2 = [](double x, double y) {
    const double v = (x - y) / (x + y);
    if (std::abs(v) < kSeriesSwitch) {
      const double v2 = v * v;
      const double s = 1.0 - v2 / 3.0 - 4.0 * v2 * v2 / 45.0;
      const double ds = 2.0 * v / 3.0 + 16.0 * v * v2 / 45.0 + 264.0 * v * v2 * v2 / 945.0;
      return 0.5 * s + 0.5 * (1.0 + v) * ds;
    }
    const double L = log_ratio(x, y);
    return ((x - y) / y - L) / (L * L);
  };
  return {d2(b, a), d2(a, b)};
}

double G(double a, double b) {
  require_positive(a, "G");
  require_positive(b, "G");
  if (a == b) return 0.0;
  return (a - b) * log_ratio(a, b);
}

double g_affine(double omega) { return 1.0 - std::exp(-omega) + omega; }

bool affine_lower_bound_check(double a, double b, double omega) {
  const double lhs = G(a, b);
  const double rhs = g_affine(omega) * a + g_affine(-omega) * b;
  const double slack = 1e-12 * (std::abs(lhs) + std::abs(g_affine(omega) * a) + std::abs(g_affine(-omega) * b) + 1e-300);
  return lhs + slack >= rhs;
}

double cosh_star(double zeta) {
  const double s = std::sinh(0.25 * zeta);
  return 8.0 * s * s;
}

double cosh_star_d1(double zeta) { return 2.0 * std::sinh(0.5 * zeta); }

double cosh_star_d2(double zeta) { return std::cosh(0.5 * zeta); }

ConvexGenerator ConvexGenerator::power(double p) {
  if (!(p > 1.0 && p <= 2.0)) throw std::invalid_argument("power generator: p must lie in (1, 2]");
  return {Kind::power, p};
}

double ConvexGenerator::phi(double z) const {
  switch (kind) {
    case Kind::boltzmann: return lambda_B(z);
    case Kind::quadratic: return 0.5 * (z - 1.0) * (z - 1.0);
    case Kind::power: return (std::pow(z, p) - 1.0 - p * (z - 1.0)) / (p * (p - 1.0));
  }
  return 0.0;
}

double ConvexGenerator::phi_prime(double z) const {
  switch (kind) {
    case Kind::boltzmann: return std::log(z);
    case Kind::quadratic: return z - 1.0;
    case Kind::power: return (std::pow(z, p - 1.0) - 1.0) / (p - 1.0);
  }
  return 0.0;
}

double ConvexGenerator::phi_double_prime(double z) const {
  switch (kind) {
    case Kind::boltzmann: return 1.0 / z;
    case Kind::quadratic: return 1.0;
    case Kind::power: return std::pow(z, p - 2.0);
  }
  return 0.0;
}

double ConvexGenerator::phi_fourth(double z) const {
  switch (kind) {
    case Kind::boltzmann: return 2.0 / (z * z * z);
    case Kind::quadratic: return 0.0;
    case Kind::power: return (p - 2.0) * (p - 3.0) * std::pow(z, p - 4.0);
  }
  return 0.0;
}

double Phi(const ConvexGenerator& gen, double a, double b) {
  require_positive(a, "Phi");
  require_positive(b, "Phi");
  if (gen.kind == ConvexGenerator::Kind::boltzmann) return log_mean(a, b);
  if (gen.kind == ConvexGenerator::Kind::quadratic) return 1.0;
  if (a == b) return 1.0 / gen.phi_double_prime(a);
  const double m = 0.5 * (a + b);
  const double h = 0.5 * (a - b);
  if (std::abs(h) < 1e-5 * m) {
    // phi'(m+h) - phi'(m-h) = 2h phi''(m) + h^3 phi''''(m)/3 + O(h^5)
    return 1.0 / (gen.phi_double_prime(m) + h * h * gen.phi_fourth(m) / 6.0);
  }
  return (a - b) / (gen.phi_prime(a) - gen.phi_prime(b));
}

std::pair<double, double> stirling_kn_bounds(int n) {
  if (n < 0) throw std::invalid_argument("stirling_kn_bounds: negative n");
  if (n == 0) {
    const double k0 = 1.0 / (2.0 * std::numbers::pi);
    return {k0, k0};
  }
  const double base = n + 1.0 / 6.0;
  const double denom = 124.0 / 5.0 + 72.0 * n;
  return {base + 0.9 / denom, base + 1.0 / denom};
}

}  // namespace crn
