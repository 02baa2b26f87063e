#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace crn {

using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;

struct OdeOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double initial_step = 0.0;  // 0 picks a step from the derivative scale
  double max_step = std::numeric_limits<double>::infinity();
  double min_step = 1e-14;
  std::size_t max_steps = 5'000'000;
  // Reject steps that would push a component below -atol, halve, and clamp
  // the remaining small negatives to zero.
  bool nonnegative = false;
};

struct OdeResult {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> y;
  bool ok = true;
  std::string message;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

// Dormand-Prince 5(4) with PI step control. If `output_times` is nonempty the
// result holds exactly those times (steps are shortened to land on them);
// otherwise every accepted step is recorded.
OdeResult dopri5(const OdeRhs& f, double t0, const Eigen::VectorXd& y0, double t1, const OdeOptions& opt,
                 const std::vector<double>& output_times = {});

}  // namespace crn
