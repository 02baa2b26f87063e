#pragma once

#include <vector>

namespace crn {

struct QuadRule {
  std::vector<double> x;  // nodes on [0, 1]
  std::vector<double> w;  // weights summing to 1
};

// Gauss-Legendre rule with n in {2, 4, 8, 16, 32} points, mapped to [0, 1].
const QuadRule& gauss_legendre01(int n);

// Integral of f over [a, b] with the composite n-point rule on `panels` panels.
template <class F>
double integrate_gl(F&& f, double a, double b, int n = 16, int panels = 1) {
  const QuadRule& q = gauss_legendre01(n);
  const double h = (b - a) / panels;
  double s = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double x0 = a + p * h;
    for (std::size_t k = 0; k < q.x.size(); ++k) s += q.w[k] * f(x0 + q.x[k] * h);
  }
  return s * h;
}

}  // namespace crn
