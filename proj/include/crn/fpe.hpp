#pragma once

#include "crn/grid.hpp"
#include "crn/rre.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace crn {

// Stationary densities of the diffusion approximations. `simple` is
// proportional to exp(-V E(c)); `refined` is the product of the one-species
// Stirling-corrected profiles What(V, c, c*) / Z(V, c*).
struct FpeEquilibrium {
  enum class Kind { simple, refined };
  Kind kind = Kind::refined;
  double V = 1.0;
  Eigen::VectorXd c_star;
  Eigen::VectorXd Z;  // per species (refined) or a single entry (simple)

  double density(const Eigen::VectorXd& c) const;
  // Constant plus (1/2) sum log(V c_i + 1/6); refined kind only.
  double E1(const Eigen::VectorXd& c) const;
};

// Unnormalized one-species profile V exp(-V c* lambda_B(c/c*)) / sqrt(2 pi (V c + 1/6)).
double refined_profile(double V, double c, double c_star);

// The window upper bounds must leave a tail mass below 1e-12 per species.
FpeEquilibrium refined_equilibrium(const RreSystem& sys, double V, const std::vector<double>& window_hi);
FpeEquilibrium simple_equilibrium(const RreSystem& sys, double V, const std::vector<double>& window_hi);

enum class FpeVariant { Simple, SimpleCorrected, CLE, Corrected, CoshCorrected };
FpeVariant parse_variant(const std::string& name);
std::string variant_name(FpeVariant v);

// Per-reaction coefficient fields at a point (raw-rate convention).
struct ReactionCoefficients {
  double a_hat = 0.0;   // k_fw c^alpha - k_bw c^beta
  double b_hat0 = 0.0;
  double b_hat1 = 0.0;  // (k_fw c^alpha + k_bw c^beta) / 2
  double Lambda0 = 0.0; // Lambda(k_fw c^alpha, k_bw c^beta)
};
ReactionCoefficients reaction_coefficients(const RreSystem& sys, std::size_t r, const Eigen::VectorXd& c);

// Continuous fields in divergence form: rho' = div(diffusion grad rho + rho (drift + correction)).
struct FieldParts {
  Eigen::MatrixXd diffusion;
  Eigen::VectorXd drift;
  Eigen::VectorXd correction;
};
FieldParts variant_fields(const RreSystem& sys, FpeVariant variant, double V, const Eigen::VectorXd& c);
// Leading-order fields obtained by expanding the cosh-type potential.
FieldParts cosh_corrected_operator(const RreSystem& sys, double V, const Eigen::VectorXd& c);

struct FpeEdge {
  std::size_t r = 0;
  std::size_t x = 0, y = 0;  // y = x + g in index units, g = gamma / k
  int k = 1;                 // gcd of the stoichiometric vector
  double D = 0.0;            // diffusion coefficient along the edge
  double dpsi = 0.0;         // potential difference psi(y) - psi(x)
};

struct FpeModel {
  RreSystem sys;
  double V = 1.0;
  FpeVariant variant = FpeVariant::Simple;
  RectGrid grid;
  std::vector<FpeEdge> edges;
  Eigen::SparseMatrix<double> L;  // rho' = L rho on cell densities, no-flux boundary
};

FpeModel build_fpe(const RreSystem& sys, double V, FpeVariant variant, const RectGrid& grid);

// Bernoulli function z / (exp(z) - 1).
double bernoulli(double z);

// max_i |(L rho)_i| / max_i (|L| |rho|)_i
double relative_stationarity_residual(const FpeModel& m, const Eigen::VectorXd& rho);

struct FpeSolution {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  double max_mass_drift = 0.0;  // per step, absolute
  double min_value = 0.0;
};

// Implicit Euler with a fixed step; the output times are reached exactly.
FpeSolution solve_fpe(const FpeModel& m, const Eigen::VectorXd& rho0, const std::vector<double>& times, double dt);
Eigen::VectorXd stationary_density(const FpeModel& m);

struct HigherOrderCoefficients {
  double Lambda0 = 0.0;
  double Upsilon0 = 0.0, Upsilon1 = 0.0, Upsilon2 = 0.0, Upsilon3 = 0.0;
  double Lambda_Upsilon = 0.0;
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  double b_hat1 = 0.0;
  double b_hat1_identity = 0.0;  // Lambda0 + Upsilon1 grad_gamma E
  bool coercive = false;
  bool monotone = false;
  bool enlarged = false;  // Upsilon2 was increased beyond its closed form
};

std::vector<HigherOrderCoefficients> higher_order_coefficients(const RreSystem& sys, const Eigen::VectorXd& c, double V,
                                                               double theta1 = 0.25, double theta2 = 0.75);

// Limit form of Upsilon1 near the diagonal is handled internally; exposed for tests.
double upsilon1(double A, double B);

struct GaussianMoments {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> mean;
  std::vector<Eigen::MatrixXd> cov;  // A; the covariance of rho is A / V
  bool ok = true;
  std::string message;
};

enum class MomentKind { CLE, FP };
GaussianMoments gaussian_moment_flow(const RreSystem& sys, MomentKind kind, double V, const Eigen::VectorXd& a0,
                                     const Eigen::MatrixXd& A0, const std::vector<double>& times, double tol = 1e-12);

struct ModelSeries {
  std::string model;
  std::vector<double> mean, variance;
};

struct ComparisonReport {
  double a = 1.0, b = 1.0, V = 1.0, c0 = 0.0;
  std::vector<double> times;
  std::vector<ModelSeries> series;
  std::vector<double> tail_c, tail_slope_fp, tail_slope_cle;
  double simple_stationarity = 0.0;   // relative residual of exp(-V E) under the Simple scheme
  double cle_equilibrium_sup_error = 0.0;
  double max_log_mean_gap = 0.0;      // on [1/3, 3]
  double cme_mean_error = 0.0;        // against 1 + (c0 - 1) e^{-t} scaled to a, b
  double cle_mean_gap = 0.0;          // Gaussian CLE vs CME moments
  double cle_var_gap = 0.0;
  double fp_pde_mass_drift = 0.0;

  std::string csv() const;
  std::string json() const;
};

// Linear model X <-> 0 with production rate a and decay rate b.
ComparisonReport compare_birth_death_models(double a_rate, double b_rate, double V, const std::vector<double>& t_grid,
                                   double c0 = 0.0);

// Closed-form potential of the one-species CLE equilibrium.
double birth_death_cle_potential(double a_rate, double b_rate, double V, double c);

}  // namespace crn
