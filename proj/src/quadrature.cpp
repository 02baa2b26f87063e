#include "crn/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <stdexcept>

namespace crn {

namespace {

template <unsigned N>
QuadRule make_rule() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& xs = G::abscissa();
  const auto& ws = G::weights();
  QuadRule q;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (xs[k] == 0.0) {
      q.x.push_back(0.5);
      q.w.push_back(0.5 * ws[k]);
      continue;
    }
    q.x.push_back(0.5 * (1.0 - xs[k]));
    q.w.push_back(0.5 * ws[k]);
    q.x.push_back(0.5 * (1.0 + xs[k]));
    q.w.push_back(0.5 * ws[k]);
  }
  return q;
}

}  // namespace

const QuadRule& gauss_legendre01(int n) {
  static const QuadRule r2 = make_rule<2>(), r4 = make_rule<4>(), r8 = make_rule<8>(), r16 = make_rule<16>(),
                        r32 = make_rule<32>();
  switch (n) {
    case 2: return r2;
    case 4: return r4;
    case 8: return r8;
    case 16: return r16;
    case 32: return r32;
    default: throw std::invalid_argument("gauss_legendre01: unsupported point count");
  }
}

}  // namespace crn
