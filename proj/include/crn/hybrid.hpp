#pragma once

#include "crn/cme.hpp"
#include "crn/fpe.hpp"
#include "crn/grid.hpp"
#include "crn/rre.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace crn {

// ------------------------------------------------------------ reduction

// Quadratic dual potential Psi*(xi) = 1/2 xi . M^{-1} xi on R^n and a linear
// map A : R^m -> R^n from reduced velocities to full velocities.
struct ReductionProblem {
  Eigen::MatrixXd M;  // n x n, symmetric positive definite
  Eigen::MatrixXd A;  // n x m
  Eigen::VectorXd eta;
};

struct ReductionResult {
  double constrained_min = 0.0;  // inf { Psi*(xi) : A^T xi = eta }
  double pullback_dual = 0.0;    // Legendre dual of y -> 1/2 (Ay) . M (Ay)
  bool feasible = true;          // eta in Ran A^T; both values are +inf otherwise
};

ReductionResult reduce_dual_potential(const ReductionProblem& prob);

struct PoissonReduction {
  double reduced_value = 0.0;  // dual potential of the master equation at (Poisson(Vc), zeta . n / V)
  double target = 0.0;         // 1/2 zeta . K(c) zeta
  double tail_mass = 0.0;
  Eigen::VectorXd adjoint;     // sum_n mu_n d_c u_n, should reproduce zeta
  double entropy_pullback = 0.0;  // relative entropy of Poisson(Vc) per volume
  double rre_entropy = 0.0;       // E(c)
};

PoissonReduction cme_to_rre_reduction(const RreSystem& sys, const Eigen::VectorXd& c, const Eigen::VectorXd& zeta,
                                      double V, const LatticeBox& box);

// ------------------------------------------------------------ FP-RR

// The first J species are resolved by a density, the rest by concentrations.
struct FpRrState {
  GridDensity rho_s;
  Eigen::VectorXd c_m;
  std::size_t J = 1;
};

struct FpRrTrajectory {
  std::vector<double> times;
  std::vector<FpRrState> states;
  std::vector<double> energy;
  std::vector<Eigen::VectorXd> mean;  // (mean of rho_s, c_m)
  double max_energy_increase = 0.0;
  double max_mass_drift = 0.0;
  double max_conservation_drift = 0.0;  // over the rows of Q applied to the mean
  std::string csv(const std::vector<std::string>& species) const;
};

double fp_rr_energy(const RreSystem& sys, const FpRrState& s, double V);

// Semi-implicit: each step freezes c_m in the density operator, takes an
// implicit Euler step for rho_s and feeds the resulting fluxes to c_m.
FpRrTrajectory solve_fp_rr(const RreSystem& sys, const FpRrState& state0, double V, const std::vector<double>& times,
                           double dt);

// Z(v) = int_0^inf exp(-v lambda_B(z)) dz and A(v) = int z exp(-v lambda_B(z)) dz / Z(v).
double fp_rr_Z(double v);
double fp_rr_A(double v);
double fp_rr_e_hat(double a_hat, double a_star, double V);

// ------------------------------------------------------------ CM-RR

// X1 <-> beta X2 with unit rates: counts of X1 stay discrete on {0, ..., M},
// X2 is a concentration.
struct CmRrState {
  Eigen::VectorXd v;
  double c2 = 1.0;
  int beta = 1;
};

struct CmRrTrajectory {
  std::vector<double> times;
  std::vector<CmRrState> states;
  std::vector<double> c1;
  std::vector<double> energy;
  double max_conservation_drift = 0.0;  // |beta c1 + c2 - q0|
  double max_probability_drift = 0.0;
  double max_boundary_mass = 0.0;       // largest v_M seen
  std::string csv() const;
};

Eigen::VectorXd cm_rr_rhs(const CmRrState& s, double V);  // (dv, dc2) stacked
double cm_rr_energy(const CmRrState& s, double V);
CmRrTrajectory solve_cm_rr(const CmRrState& state0, double V, const std::vector<double>& times, double tol = 1e-10);

// ------------------------------------------------------------ merged CME / FPE

// Discrete counts 0..N-1 and a density on [N/V, c_max] for 0 <-> X with
// production a and decay b.
struct MergedModel {
  double a = 1.0, b = 1.0, V = 1.0, a_hat = 1.0;
  int N = 1;
  RectGrid grid;                      // continuous part, lo = N/V
  Eigen::SparseMatrix<double> G;      // generator on (u_0..u_{N-1}, cell masses)
  Eigen::VectorXd w_discrete;         // Poisson weights below N
  Eigen::VectorXd W_cont;             // equilibrium density on the cells
  double Z = 1.0;                     // normalizer of the continuous equilibrium
  double scale_ratio = 1.0;           // W(first cell) / (V w_{N-1})

  std::size_t size() const { return static_cast<std::size_t>(N) + grid.size(); }
  Eigen::VectorXd equilibrium() const;  // in mass variables
};

struct MergedState {
  Eigen::VectorXd u_disc;
  Eigen::VectorXd U;  // densities on the cells
  double V = 1.0;
  int N = 1;
  double a_hat = 1.0;
};

MergedModel build_merged(double a_rate, double b_rate, double V, int N, double a_hat, const RectGrid& grid);

Eigen::VectorXd merged_pack(const MergedModel& m, const MergedState& s);
MergedState merged_unpack(const MergedModel& m, const Eigen::VectorXd& x);
double merged_entropy(const MergedModel& m, const Eigen::VectorXd& x);
double merged_mean(const MergedModel& m, const Eigen::VectorXd& x);
// Approximate Robin condition (1/V) Lambda(a, bN/V) U' + b (N/V) U - a V u_{N-1},
// relative to the size of its terms.
double merged_robin_residual(const MergedModel& m, const Eigen::VectorXd& x);

struct MergedTrajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;  // mass variables
  std::vector<double> entropy, mean, robin_residual;
  double max_mass_drift = 0.0;
  double max_entropy_increase = 0.0;
  std::string csv() const;
  std::string snapshot_csv(const MergedModel& m, std::size_t k) const;
};

MergedTrajectory solve_merged(const MergedModel& m, const Eigen::VectorXd& x0, const std::vector<double>& times,
                              double dt);

}  // namespace crn
