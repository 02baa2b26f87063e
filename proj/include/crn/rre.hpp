#pragma once

#include "crn/kernels.hpp"
#include "crn/network.hpp"
#include "crn/ode.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace crn {

// Reaction-rate equation c' = -R(c) together with its entropy gradient
// structure. Construction fails unless the network is in detailed balance.
struct RreSystem {
  ReactionNetwork net;
  StoichiometryReport stoich;
  DetailedBalanceReport db;

  std::size_t I() const { return net.num_species(); }
  std::size_t R() const { return net.num_reactions(); }
  const Eigen::VectorXd& c_star() const { return db.c_star; }
  const Eigen::VectorXd& kappa_star() const { return db.kappa_star; }
};

RreSystem make_rre_system(const ReactionNetwork& net, double tol = 1e-9);

Eigen::VectorXd rate_vector(const RreSystem& sys, const Eigen::VectorXd& c);

double entropy(const RreSystem& sys, const Eigen::VectorXd& c);
Eigen::VectorXd entropy_gradient(const RreSystem& sys, const Eigen::VectorXd& c);

// Normalized monomials a_r = c^alpha / c*^alpha and b_r = c^beta / c*^beta.
void normalized_monomials(const RreSystem& sys, const Eigen::VectorXd& c, Eigen::VectorXd& a, Eigen::VectorXd& b);

Eigen::MatrixXd onsager_matrix(const RreSystem& sys, const Eigen::VectorXd& c);
// Divergence sum_j d_j K_ij of the Onsager matrix.
Eigen::VectorXd onsager_divergence(const RreSystem& sys, const Eigen::VectorXd& c);
// Arithmetic-mean diffusion matrix sum_r kappa_r (a_r + b_r)/2 gamma x gamma.
Eigen::MatrixXd cle_matrix(const RreSystem& sys, const Eigen::VectorXd& c);

// Networks whose reactions are all of the form X_i <-> X_j.
bool is_ctmc(const ReactionNetwork& net);
Eigen::MatrixXd ctmc_generator(const ReactionNetwork& net);  // c' = A c
double entropy_phi(const RreSystem& sys, const Eigen::VectorXd& c, const ConvexGenerator& gen);
Eigen::VectorXd entropy_phi_gradient(const RreSystem& sys, const Eigen::VectorXd& c, const ConvexGenerator& gen);
Eigen::MatrixXd markov_onsager(const RreSystem& sys, const Eigen::VectorXd& c, const ConvexGenerator& gen);

// Even convex per-reaction dissipation functions psi.
enum class PsiKind { quadratic, cosh_star, cosh_minus_one, quartic };
double psi_value(PsiKind k, double s);
double psi_prime(PsiKind k, double s);

struct DissipationSpec {
  enum class Kind { quadratic, cosh, general };
  Kind kind = Kind::quadratic;
  std::vector<PsiKind> psi;  // per reaction, Kind::general only

  static DissipationSpec quadratic() { return {Kind::quadratic, {}}; }
  static DissipationSpec cosh() { return {Kind::cosh, {}}; }
  static DissipationSpec general(std::vector<PsiKind> psi) { return {Kind::general, std::move(psi)}; }
  PsiKind psi_for(std::size_t r) const;
};

// Mobility L_r(c) so that Psi*(c, zeta) = sum_r L_r psi_r(gamma^r . zeta).
Eigen::VectorXd mobilities(const RreSystem& sys, const DissipationSpec& spec, const Eigen::VectorXd& c);
double dual_dissipation(const RreSystem& sys, const DissipationSpec& spec, const Eigen::VectorXd& c,
                        const Eigen::VectorXd& zeta);
Eigen::VectorXd dual_dissipation_gradient(const RreSystem& sys, const DissipationSpec& spec, const Eigen::VectorXd& c,
                                          const Eigen::VectorXd& zeta);
// d_zeta Psi*(c, -DE(c)); equals -R(c).
Eigen::VectorXd force_to_rate(const RreSystem& sys, const DissipationSpec& spec, const Eigen::VectorXd& c);

struct Trajectory {
  std::vector<std::string> species;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<double> energy;                 // empty without detailed balance
  std::vector<Eigen::VectorXd> conserved;     // Qc
  std::vector<double> dissipation;            // -dE/dt = DE . R at each state
  std::vector<double> step_residual;          // E_{k+1} - E_k + trapezoid of dissipation
  bool ok = true;
  std::string message;
};

struct RreOptions {
  double tol = 1e-10;
  double max_step = std::numeric_limits<double>::infinity();
  std::vector<double> output_times;  // empty: record every accepted step
};

Trajectory integrate_rre(const ReactionNetwork& net, const Eigen::VectorXd& c0, double t_end, const RreOptions& opt,
                         const RreSystem* sys = nullptr);
Trajectory integrate_rre(const RreSystem& sys, const Eigen::VectorXd& c0, double t_end, double tol);

// Positive zero of R(c) in the stoichiometric class of c_guess (Newton in log c).
Eigen::VectorXd find_steady_state(const ReactionNetwork& net, const StoichiometryReport& st,
                                  const Eigen::VectorXd& c_guess, double tol = 1e-14);

std::string trajectory_csv(const Trajectory& traj);

}  // namespace crn
