#pragma once

#include "crn/network.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstddef>
#include <string>
#include <vector>

namespace crn {

// Box prod_i [0, n_max_i] of particle numbers at volume V.
class LatticeBox {
 public:
  LatticeBox() = default;
  LatticeBox(IntVec n_max, double V);

  std::size_t dim() const { return n_max_.size(); }
  std::size_t size() const { return size_; }
  double V() const { return V_; }
  const IntVec& n_max() const { return n_max_; }

  bool contains(const IntVec& n) const;
  std::size_t flat(const IntVec& n) const;  // throws outside the box
  IntVec multi(std::size_t k) const;

 private:
  IntVec n_max_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
  double V_ = 1.0;
};

// Smallest box whose product-Poisson tail mass (means V c_i) is below tail.
LatticeBox poisson_box(const Eigen::VectorXd& c, double V, double tail = 1e-12);
// 1 - (Poisson mass inside the box).
double poisson_tail_mass(const LatticeBox& box, const Eigen::VectorXd& c);
// Product Poisson weights with means V c on the box, optionally renormalized.
Eigen::VectorXd poisson_weights(const LatticeBox& box, const Eigen::VectorXd& c, bool renormalize = true);

// Reaction intensity V (n+alpha)! / (V^|alpha| n!), zero for n outside N_0^I.
double intensity(double V, const IntVec& alpha, const IntVec& n);

// Renormalized Poisson equilibrium with means V c_*. Requires detailed balance.
Eigen::VectorXd poisson_equilibrium(const ReactionNetwork& net, const DetailedBalanceReport& db, const LatticeBox& box);

// One in-box reaction edge between the states n+alpha and n+beta.
struct CmeEdge {
  std::size_t r = 0;
  std::size_t ia = 0;    // flat index of n + alpha
  std::size_t ib = 0;    // flat index of n + beta
  std::size_t n = 0;     // flat index of n
  double fw_rate = 0.0;  // k_fw B^alpha(n), transition ia -> ib
  double bw_rate = 0.0;  // k_bw B^beta(n),  transition ib -> ia
  double nu_hat = 0.0;   // kappa_* V w_n (detailed-balance networks only)
};

struct TruncatedCme {
  ReactionNetwork net;
  LatticeBox box;
  // u' = generator * u. Transitions leaving the box are dropped; their rate is
  // recorded per source state in `leak`, so column sums equal -leak.
  Eigen::SparseMatrix<double> generator;
  Eigen::VectorXd leak;
  std::vector<CmeEdge> edges;
  bool detailed_balance = false;
  Eigen::VectorXd w;  // equilibrium when detailed_balance
  double tail_mass = 0.0;

  double V() const { return box.V(); }
  double leak_flux(const Eigen::VectorXd& u) const { return leak.dot(u); }
  double max_exit_rate() const;
};

// With db (must hold) the Poisson equilibrium and nu_hat are attached, and the
// box is rejected when its equilibrium tail mass exceeds max_tail.
TruncatedCme assemble_generator(const ReactionNetwork& net, const LatticeBox& box,
                                const DetailedBalanceReport* db = nullptr, double max_tail = 1e-12);

Eigen::VectorXd stationarity_residual(const TruncatedCme& cme, const Eigen::VectorXd& w);

enum class CmeStepper { uniformization, krylov };

struct CmeSolveOptions {
  double tol = 1e-12;
  CmeStepper stepper = CmeStepper::uniformization;
  // Abort when the probability lost through the box boundary exceeds this.
  double max_leak = 1e-6;
};

struct CmeSolution {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<double> mass_lost;  // 1^T u0 - 1^T u(t)
};

CmeSolution solve_cme(const TruncatedCme& cme, const Eigen::VectorXd& u0, const std::vector<double>& times,
                      const CmeSolveOptions& opt = {});

// exp(t A) v by restarted Arnoldi, for a general sparse A.
Eigen::VectorXd expv_krylov(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& v, double t, double tol = 1e-12,
                            int m = 30);

struct Moments {
  Eigen::VectorXd e_hat;  // (1/V) sum n u_n
  Eigen::MatrixXd v_hat;  // (1/V^2) sum n n^T u_n - e_hat e_hat^T
};
Moments moments(const TruncatedCme& cme, const Eigen::VectorXd& u);

// Gradient structures (detailed-balance networks only).
double cme_entropy(const TruncatedCme& cme, const Eigen::VectorXd& u);
Eigen::VectorXd cme_entropy_gradient(const TruncatedCme& cme, const Eigen::VectorXd& u);
// Onsager operator of the quadratic structure applied to a lattice covector.
Eigen::VectorXd apply_onsager(const TruncatedCme& cme, const Eigen::VectorXd& u, const Eigen::VectorXd& mu);
double psi_star_quadratic(const TruncatedCme& cme, const Eigen::VectorXd& u, const Eigen::VectorXd& mu);
// Same potential written through the raw reaction intensities; needs no w.
double psi_star_intensity(const TruncatedCme& cme, const Eigen::VectorXd& u, const Eigen::VectorXd& mu);
double psi_star_cosh(const TruncatedCme& cme, const Eigen::VectorXd& u, const Eigen::VectorXd& mu);
Eigen::VectorXd psi_star_cosh_gradient(const TruncatedCme& cme, const Eigen::VectorXd& u, const Eigen::VectorXd& mu);
// (1/2V) sum nu_hat G(u_a/w_a, u_b/w_b): the dissipation along the flow.
double cme_dissipation(const TruncatedCme& cme, const Eigen::VectorXd& u);

// Generator applied to u with the leak added back, i.e. the in-box part of
// the master equation that the gradient structures reproduce.
Eigen::VectorXd inbox_rate(const TruncatedCme& cme, const Eigen::VectorXd& u);

struct ReuterDiagnostic {
  std::vector<double> log_summands;  // log r_{0,k}
  std::vector<double> partial_sums;  // sum_{j<=k} r_{0,j}, may overflow to inf
  bool increasing = false;
  IntVec start;
};

// Birth-death chain of a single reaction started at the lowest state of one
// infinite component. Throws for two-signed stoichiometric vectors.
ReuterDiagnostic reuter_diagnostic(const ReactionNetwork& net, double V, int k_terms);

std::string distribution_csv(const TruncatedCme& cme, const Eigen::VectorXd& u);
std::string generator_triplets(const TruncatedCme& cme);

}  // namespace crn
