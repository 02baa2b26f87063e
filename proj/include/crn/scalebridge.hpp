#pragma once

#include "crn/cme.hpp"
#include "crn/grid.hpp"
#include "crn/rre.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace crn {

// Atomic measure sum_k weight_k delta_{point_k}.
struct ParticleEnsemble {
  std::vector<double> weights;
  std::vector<Eigen::VectorXd> points;

  void validate() const;
};

// Lattice distribution -> density that is V^I u_n on the cube [n/V, (n+1)/V).
// `refine` subdivides each cube into refine^I cells.
GridDensity embed(const LatticeBox& box, const Eigen::VectorXd& u, int refine = 1);
// Cube masses of a density. Throws when more than `slack` of the mass falls
// outside the box.
Eigen::VectorXd project(const GridDensity& rho, const LatticeBox& box, double slack = 1e-12);
// Cube averages V^I int_{A_n} xi, by a tensor Gauss-Legendre rule.
Eigen::VectorXd dual_embed(const std::function<double(const Eigen::VectorXd&)>& xi, const LatticeBox& box,
                           int points = 8);

// -I log V / V - (1/V) log w_n for c in the cube of n, with the untruncated
// Poisson weights of mean V c_*.
double stirling_entropy_density(const Eigen::VectorXd& c, double V, const Eigen::VectorXd& c_star);

// Grid-side entropy int ((1/V) rho log rho + rho E_V) for densities whose
// cells subdivide the lattice cubes.
double grid_entropy(const GridDensity& rho, double V, const Eigen::VectorXd& c_star);

double limit_energy(const GridDensity& rho, const RreSystem& sys);
double limit_energy(const ParticleEnsemble& ens, const RreSystem& sys);

// 1/2 int sum_r kappa_r G(a_r, b_r) drho, i.e. the dual potential at -DE.
double liouville_dissipation(const ParticleEnsemble& ens, const RreSystem& sys);
double liouville_dissipation(const GridDensity& rho, const RreSystem& sys);
// 1/2 int grad xi . K grad xi drho for a general smooth xi.
double liouville_dual_potential(const ParticleEnsemble& ens, const RreSystem& sys,
                                const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad_xi);

struct LiouvilleTrajectory {
  std::vector<double> times;
  std::vector<ParticleEnsemble> states;
  std::vector<double> energy;
  std::vector<double> dissipation;  // 2 Psi*_Lio(rho, DE)
  std::vector<double> residual;     // E(t) - E(0) + int_0^t dissipation
};

// Transport by characteristics. The energy identity is accumulated on a
// uniform internal grid of `quad_steps` steps with Simpson's rule per step.
LiouvilleTrajectory solve_liouville(const RreSystem& sys, const ParticleEnsemble& rho0, const std::vector<double>& times,
                                    double tol = 1e-12, int quad_steps = 4000);

struct AuditSeries {
  std::vector<double> t;
  std::vector<double> energy;
  std::vector<double> dissipation;  // 2 Psi*_V(u, -DE_V(u))
  std::vector<double> residual;     // E(t) - E(0) + int dissipation
  std::vector<double> leak;         // cumulative int leak . u dt
  std::string csv() const;
};

AuditSeries cme_energy_audit(const TruncatedCme& cme, const CmeSolution& sol);

struct ConvergenceRow {
  double V = 0.0;
  double mean_err = 0.0;
  double energy_err = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double slope = 0.0;  // least-squares slope of log mean_err against log V
  std::string csv() const;
};

ConvergenceTable convergence_experiment(const RreSystem& sys, const Eigen::VectorXd& c0, double t_eval,
                                        const std::vector<double>& V_list);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Smallest K with |E_V(c) - E(c)| <= K (log V + E(c)) / V over the samples.
double stirling_bound_constant(const RreSystem& sys, double V, const std::vector<Eigen::VectorXd>& samples);

}  // namespace crn
