#include "crn/ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crn {

namespace {

// Dormand-Prince coefficients
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

}  // namespace

OdeResult dopri5(const OdeRhs& f, double t0, const Eigen::VectorXd& y0, double t1, const OdeOptions& opt,
                 const std::vector<double>& output_times) {
  if (!(t1 >= t0)) throw std::invalid_argument("dopri5: t1 < t0");
  const Eigen::Index n = y0.size();
  OdeResult res;
  std::vector<double> targets = output_times;
  std::sort(targets.begin(), targets.end());
  std::size_t next_out = 0;
  const bool dense_record = targets.empty();

  double t = t0;
  Eigen::VectorXd y = y0;
  auto record = [&](double tt, const Eigen::VectorXd& yy) {
    res.t.push_back(tt);
    res.y.push_back(yy);
  };
  if (dense_record) {
    record(t, y);
  } else {
    while (next_out < targets.size() && targets[next_out] <= t0) record(targets[next_out++], y);
  }
  if (t1 == t0) return res;

  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  f(t, y, k1);

  double h = opt.initial_step;
  if (h <= 0.0) {
    const Eigen::ArrayXd sc = opt.atol + opt.rtol * y.array().abs();
    const double d0 = std::sqrt((y.array() / sc).square().mean());
    const double d1 = std::sqrt((k1.array() / sc).square().mean());
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, t1 - t0);
  }
  h = std::min(h, opt.max_step);

  double err_prev = 1e-4;
  constexpr double safety = 0.9;

  while (t < t1) {
    if (res.accepted + res.rejected >= opt.max_steps) {
      res.ok = false;
      res.message = "maximum number of steps exceeded";
      break;
    }
    double stop = t1;
    if (!dense_record && next_out < targets.size()) stop = std::min(stop, targets[next_out]);
    bool landing = false;
    if (t + h >= stop) {
      h = stop - t;
      landing = true;
    }
    if (h < opt.min_step * std::max(1.0, std::abs(t))) {
      res.ok = false;
      res.message = "step size underflow at t=" + std::to_string(t);
      break;
    }

    ytmp = y + h * a21 * k1;
    f(t + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    f(t + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(t + h, ytmp, k6);
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    f(t + h, ynew, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    const Eigen::ArrayXd sc = opt.atol + opt.rtol * y.array().abs().max(ynew.array().abs());
    double en = n > 0 ? std::sqrt((err.array() / sc).square().mean()) : 0.0;
    if (!std::isfinite(en)) en = 1e10;

    bool negative = false;
    if (opt.nonnegative && n > 0 && ynew.minCoeff() < -opt.atol) negative = true;

    if (en <= 1.0 && !negative) {
      t = landing ? stop : t + h;
      y = ynew;
      if (opt.nonnegative) y = y.cwiseMax(0.0);
      k1 = opt.nonnegative ? Eigen::VectorXd() : k7;
      if (opt.nonnegative) {
        k1.resize(n);
        f(t, y, k1);
      }
      ++res.accepted;
      if (dense_record) {
        record(t, y);
      } else {
        while (next_out < targets.size() && targets[next_out] <= t + 1e-15 * std::max(1.0, std::abs(t))) {
          record(targets[next_out++], y);
        }
      }
      const double fac = en == 0.0 ? 5.0 : safety * std::pow(en, -0.7 / 5) * std::pow(err_prev, 0.4 / 5);
      err_prev = std::max(en, 1e-4);
      h = std::min(h * std::clamp(fac, 0.2, 5.0), opt.max_step);
    } else {
      ++res.rejected;
      if (negative && en <= 1.0) {
        h *= 0.5;
      } else {
        h *= std::clamp(safety * std::pow(en, -0.2), 0.1, 0.9);
      }
    }
  }
  return res;
}

}  // namespace crn
