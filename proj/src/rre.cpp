#include "crn/rre.hpp"

#include "crn/io.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace crn {

namespace {

void require_dim(const RreSystem& sys, const Eigen::VectorXd& c, const char* what) {
  if (static_cast<std::size_t>(c.size()) != sys.I()) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

void require_interior(const Eigen::VectorXd& c, const char* what) {
  for (Eigen::Index i = 0; i < c.size(); ++i)
    if (!(c(i) > 0.0)) throw std::domain_error(std::string(what) + ": requires strictly positive concentrations");
}

Eigen::VectorXd gamma_vec(const ReactionNetwork& net, std::size_t r) {
  const auto g = net.gamma(r);
  Eigen::VectorXd v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v(i) = g[i];
  return v;
}

}  // namespace

RreSystem make_rre_system(const ReactionNetwork& net, double tol) {
  RreSystem sys;
  sys.net = net;
  sys.stoich = stoichiometric_analysis(net);
  sys.db = check_detailed_balance(net, sys.stoich, tol);
  if (!sys.db.holds) throw std::invalid_argument("network violates the detailed-balance condition");
  return sys;
}

Eigen::VectorXd rate_vector(const RreSystem& sys, const Eigen::VectorXd& c) {
  require_dim(sys, c, "rate_vector");
  return mass_action_rate(sys.net, c);
}

double entropy(const RreSystem& sys, const Eigen::VectorXd& c) {
  require_dim(sys, c, "entropy");
  double E = 0.0;
  for (std::size_t i = 0; i < sys.I(); ++i) E += sys.c_star()(i) * lambda_B(c(i) / sys.c_star()(i));
  return E;
}

Eigen::VectorXd entropy_gradient(const RreSystem& sys, const Eigen::VectorXd& c) {
  require_dim(sys, c, "entropy_gradient");
  require_interior(c, "entropy_gradient");
  return (c.array() / sys.c_star().array()).log().matrix();
}

void normalized_monomials(const RreSystem& sys, const Eigen::VectorXd& c, Eigen::VectorXd& a, Eigen::VectorXd& b) {
  a.resize(sys.R());
  b.resize(sys.R());
  const Eigen::VectorXd x = c.array() / sys.c_star().array();
  for (std::size_t r = 0; r < sys.R(); ++r) {
    a(r) = monomial(x, sys.net.reactions[r].alpha);
    b(r) = monomial(x, sys.net.reactions[r].beta);
  }
}

Eigen::MatrixXd onsager_matrix(const RreSystem& sys, const Eigen::VectorXd& c) {
  require_dim(sys, c, "onsager_matrix");
  require_interior(c, "onsager_matrix");
  Eigen::VectorXd a, b;
  normalized_monomials(sys, c, a, b);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(sys.I(), sys.I());
  for (std::size_t r = 0; r < sys.R(); ++r) {
    const Eigen::VectorXd g = gamma_vec(sys.net, r);
    K += sys.kappa_star()(r) * log_mean(a(r), b(r)) * g * g.transpose();
  }
  return K;
}

Eigen::VectorXd onsager_divergence(const RreSystem& sys, const Eigen::VectorXd& c) {
  require_interior(c, "onsager_divergence");
  Eigen::VectorXd a, b;
  normalized_monomials(sys, c, a, b);
  Eigen::VectorXd div = Eigen::VectorXd::Zero(sys.I());
  for (std::size_t r = 0; r < sys.R(); ++r) {
    const auto& rx = sys.net.reactions[r];
    const Eigen::VectorXd g = gamma_vec(sys.net, r);
    const auto [da, db] = log_mean_grad(a(r), b(r));
    double s = 0.0;  // gamma . grad Lambda(a(c), b(c))
    for (std::size_t j = 0; j < sys.I(); ++j)
      s += g(j) * (da * rx.alpha[j] * a(r) + db * rx.beta[j] * b(r)) / c(j);
    div += sys.kappa_star()(r) * s * g;
  }
  return div;
}

Eigen::MatrixXd cle_matrix(const RreSystem& sys, const Eigen::VectorXd& c) {
  require_dim(sys, c, "cle_matrix");
  Eigen::VectorXd a, b;
  normalized_monomials(sys, c, a, b);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(sys.I(), sys.I());
  for (std::size_t r = 0; r < sys.R(); ++r) {
    const Eigen::VectorXd g = gamma_vec(sys.net, r);
    K += sys.kappa_star()(r) * 0.5 * (a(r) + b(r)) * g * g.transpose();
  }
  return K;
}

// ----------------------------------------------------------- Markov chains

namespace {

// (i, j) for a reaction X_i <-> X_j, or (-1, -1).
std::pair<int, int> ctmc_pair(const Reaction& rx) {
  int i = -1, j = -1;
  for (std::size_t s = 0; s < rx.alpha.size(); ++s) {
    if (rx.alpha[s] == 1 && i < 0) {
      i = static_cast<int>(s);
    } else if (rx.alpha[s] != 0) {
      return {-1, -1};
    }
  }
  for (std::size_t s = 0; s < rx.beta.size(); ++s) {
    if (rx.beta[s] == 1 && j < 0) {
      j = static_cast<int>(s);
    } else if (rx.beta[s] != 0) {
      return {-1, -1};
    }
  }
  if (i < 0 || j < 0 || i == j) return {-1, -1};
  return {i, j};
}

}  // namespace

bool is_ctmc(const ReactionNetwork& net) {
  for (const auto& rx : net.reactions)
    if (ctmc_pair(rx).first < 0) return false;
  return true;
}

Eigen::MatrixXd ctmc_generator(const ReactionNetwork& net) {
  if (!is_ctmc(net)) throw std::invalid_argument("ctmc_generator: network is not a Markov chain");
  const std::size_t I = net.num_species();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(I, I);
  for (const auto& rx : net.reactions) {
    const auto [i, j] = ctmc_pair(rx);
    A(j, i) += rx.k_fw;
    A(i, i) -= rx.k_fw;
    A(i, j) += rx.k_bw;
    A(j, j) -= rx.k_bw;
  }
  return A;
}

double entropy_phi(const RreSystem& sys, const Eigen::VectorXd& c, const ConvexGenerator& gen) {
  double E = 0.0;
  for (std::size_t i = 0; i < sys.I(); ++i) E += sys.c_star()(i) * gen.phi(c(i) / sys.c_star()(i));
  return E;
}

Eigen::VectorXd entropy_phi_gradient(const RreSystem& sys, const Eigen::VectorXd& c, const ConvexGenerator& gen) {
  require_interior(c, "entropy_phi_gradient");
  Eigen::VectorXd g(sys.I());
  for (std::size_t i = 0; i < sys.I(); ++i) g(i) = gen.phi_prime(c(i) / sys.c_star()(i));
  return g;
}

Eigen::MatrixXd markov_onsager(const RreSystem& sys, const Eigen::VectorXd& c, const ConvexGenerator& gen) {
  if (!is_ctmc(sys.net)) throw std::invalid_argument("markov_onsager: network is not a Markov chain");
  require_dim(sys, c, "markov_onsager");
  require_interior(c, "markov_onsager");
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(sys.I(), sys.I());
  for (std::size_t r = 0; r < sys.R(); ++r) {
    const auto [i, j] = ctmc_pair(sys.net.reactions[r]);
    const double w = sys.kappa_star()(r) * Phi(gen, c(i) / sys.c_star()(i), c(j) / sys.c_star()(j));
    K(i, i) += w;
    K(j, j) += w;
    K(i, j) -= w;
    K(j, i) -= w;
  }
  return K;
}

// ------------------------------------------------------------ dissipation

double psi_value(PsiKind k, double s) {
  switch (k) {
    case PsiKind::quadratic: return 0.5 * s * s;
    case PsiKind::cosh_star: return cosh_star(s);
    case PsiKind::cosh_minus_one: {
      const double h = std::sinh(0.5 * s);
      return 2.0 * h * h;
    }
    case PsiKind::quartic: return 0.5 * s * s + s * s * s * s / 12.0;
  }
  return 0.0;
}

double psi_prime(PsiKind k, double s) {
  switch (k) {
    case PsiKind::quadratic: return s;
    case PsiKind::cosh_star: return cosh_star_d1(s);
    case PsiKind::cosh_minus_one: return std::sinh(s);
    case PsiKind::quartic: return s + s * s * s / 3.0;
  }
  return 0.0;
}

namespace {

// s / psi'(s), continuous at s = 0 with value 1/psi''(0).
double slope_ratio(PsiKind k, double s) {
  if (s == 0.0) {
    return k == PsiKind::cosh_star ? 1.0 : 1.0;
  }
  switch (k) {
    case PsiKind::quadratic: return 1.0;
    case PsiKind::cosh_star: return 0.5 * s / std::sinh(0.5 * s);
    case PsiKind::cosh_minus_one: return s / std::sinh(s);
    case PsiKind::quartic: return 1.0 / (1.0 + s * s / 3.0);
  }
  return 1.0;
}

}  // namespace

PsiKind DissipationSpec::psi_for(std::size_t r) const {
  switch (kind) {
    case Kind::quadratic: return PsiKind::quadratic;
    case Kind::cosh: return PsiKind::cosh_star;
    case Kind::general:
      if (psi.empty()) return PsiKind::quartic;
      return psi.at(r < psi.size() ? r : psi.size() - 1);
  }
  return PsiKind::quadratic;
}

Eigen::VectorXd mobilities(const RreSystem& sys, const DissipationSpec& spec, const Eigen::VectorXd& c) {
  require_interior(c, "mobilities");
  Eigen::VectorXd a, b;
  normalized_monomials(sys, c, a, b);
  Eigen::VectorXd L(sys.R());
  for (std::size_t r = 0; r < sys.R(); ++r) {
    // kappa (b - a) / psi'(log b - log a) written as kappa Lambda(a,b) s/psi'(s),
    // which has no 0/0 on the diagonal.
    const PsiKind k = spec.psi_for(r);
    if (k == PsiKind::cosh_star) {
      L(r) = sys.kappa_star()(r) * std::sqrt(a(r) * b(r));
    } else {
      const double s = std::log(b(r)) - std::log(a(r));
      L(r) = sys.kappa_star()(r) * log_mean(a(r), b(r)) * slope_ratio(k, s);
    }
  }
  return L;
}

double dual_dissipation(const RreSystem& sys, const DissipationSpec& spec, const Eigen::VectorXd& c,
                        const Eigen::VectorXd& zeta) {
  const Eigen::VectorXd L = mobilities(sys, spec, c);
  double v = 0.0;
  for (std::size_t r = 0; r < sys.R(); ++r) v += L(r) * psi_value(spec.psi_for(r), gamma_vec(sys.net, r).dot(zeta));
  return v;
}

Eigen::VectorXd dual_dissipation_gradient(const RreSystem& sys, const DissipationSpec& spec, const Eigen::VectorXd& c,
                                          const Eigen::VectorXd& zeta) {
  const Eigen::VectorXd L = mobilities(sys, spec, c);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(sys.I());
  for (std::size_t r = 0; r < sys.R(); ++r) {
    const Eigen::VectorXd gr = gamma_vec(sys.net, r);
    g += L(r) * psi_prime(spec.psi_for(r), gr.dot(zeta)) * gr;
  }
  return g;
}

Eigen::VectorXd force_to_rate(const RreSystem& sys, const DissipationSpec& spec, const Eigen::VectorXd& c) {
  return dual_dissipation_gradient(sys, spec, c, -entropy_gradient(sys, c));
}

// ------------------------------------------------------------ integration

namespace {

double dissipation_rate(const RreSystem& sys, const Eigen::VectorXd& c) {
  for (Eigen::Index i = 0; i < c.size(); ++i)
    if (!(c(i) > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd a, b;
  normalized_monomials(sys, c, a, b);
  double d = 0.0;
  for (std::size_t r = 0; r < sys.R(); ++r) d += sys.kappa_star()(r) * G(a(r), b(r));
  return d;
}

}  // namespace

Trajectory integrate_rre(const ReactionNetwork& net, const Eigen::VectorXd& c0, double t_end, const RreOptions& opt,
                         const RreSystem* sys) {
  if (static_cast<std::size_t>(c0.size()) != net.num_species()) throw std::invalid_argument("integrate_rre: dimension mismatch");
  if (c0.size() > 0 && c0.minCoeff() < 0.0) throw std::invalid_argument("integrate_rre: negative initial state");
  const StoichiometryReport st = sys ? sys->stoich : stoichiometric_analysis(net);
  const Eigen::MatrixXd Q = st.Q_matrix();

  OdeOptions o;
  o.rtol = opt.tol;
  o.atol = opt.tol;
  o.max_step = opt.max_step;
  o.nonnegative = true;
  auto rhs = [&net](double, const Eigen::VectorXd& c, Eigen::VectorXd& dc) { dc = -mass_action_rate(net, c); };
  const OdeResult res = dopri5(rhs, 0.0, c0, t_end, o, opt.output_times);

  Trajectory tr;
  tr.species = net.species;
  tr.times = res.t;
  tr.states = res.y;
  tr.ok = res.ok;
  tr.message = res.ok ? "" : res.message + " (last good state retained)";
  for (const auto& c : tr.states) {
    tr.conserved.push_back(Q.rows() ? Eigen::VectorXd(Q * c) : Eigen::VectorXd());
    if (sys) {
      tr.energy.push_back(entropy(*sys, c));
      tr.dissipation.push_back(dissipation_rate(*sys, c));
    }
  }
  if (sys) {
    tr.step_residual.push_back(0.0);
    for (std::size_t k = 1; k < tr.states.size(); ++k) {
      const double dt = tr.times[k] - tr.times[k - 1];
      tr.step_residual.push_back(tr.energy[k] - tr.energy[k - 1] + 0.5 * dt * (tr.dissipation[k] + tr.dissipation[k - 1]));
    }
  }
  return tr;
}

Trajectory integrate_rre(const RreSystem& sys, const Eigen::VectorXd& c0, double t_end, double tol) {
  RreOptions opt;
  opt.tol = tol;
  return integrate_rre(sys.net, c0, t_end, opt, &sys);
}

Eigen::VectorXd find_steady_state(const ReactionNetwork& net, const StoichiometryReport& st, const Eigen::VectorXd& c_guess,
                                  double tol) {
  const std::size_t I = net.num_species();
  if (static_cast<std::size_t>(c_guess.size()) != I) throw std::invalid_argument("find_steady_state: dimension mismatch");
  Eigen::MatrixXd S(st.S_basis.size(), I);
  for (std::size_t k = 0; k < st.S_basis.size(); ++k)
    for (std::size_t i = 0; i < I; ++i) S(k, i) = static_cast<double>(st.S_basis[k][i]);
  const Eigen::MatrixXd Q = st.Q_matrix();
  const Eigen::VectorXd q = Q * c_guess;

  Eigen::VectorXd x = c_guess.cwiseMax(1e-8).array().log().matrix();
  auto residual = [&](const Eigen::VectorXd& xx) {
    const Eigen::VectorXd c = xx.array().exp();
    Eigen::VectorXd F(S.rows() + Q.rows());
    F << S * mass_action_rate(net, c), Q * c - q;
    return F;
  };
  Eigen::VectorXd F = residual(x);
  for (int it = 0; it < 200 && F.norm() > tol; ++it) {
    const Eigen::VectorXd c = x.array().exp();
    Eigen::MatrixXd J(S.rows() + Q.rows(), I);
    J << S * mass_action_jacobian(net, c) * c.asDiagonal(), Q * c.asDiagonal();
    const Eigen::VectorXd dx = J.colPivHouseholderQr().solve(-F);
    double lambda = 1.0;
    Eigen::VectorXd xn = x + dx;
    Eigen::VectorXd Fn = residual(xn);
    while (Fn.norm() > (1.0 - 1e-4 * lambda) * F.norm() && lambda > 1e-6) {
      lambda *= 0.5;
      xn = x + lambda * dx;
      Fn = residual(xn);
    }
    if (Fn.norm() >= F.norm()) break;
    x = xn;
    F = Fn;
  }
  return x.array().exp();
}

std::string trajectory_csv(const Trajectory& tr) {
  std::vector<std::string> header{"t"};
  for (const auto& s : tr.species) header.push_back("c_" + s);
  header.push_back("E");
  const std::size_t mW = tr.conserved.empty() ? 0 : static_cast<std::size_t>(tr.conserved.front().size());
  for (std::size_t k = 0; k < mW; ++k) header.push_back("Qc_" + std::to_string(k + 1));
  header.push_back("dissipation");
  CsvTable table(header);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    std::vector<double> row{tr.times[k]};
    for (Eigen::Index i = 0; i < tr.states[k].size(); ++i) row.push_back(tr.states[k](i));
    row.push_back(tr.energy.empty() ? nan : tr.energy[k]);
    for (std::size_t j = 0; j < mW; ++j) row.push_back(tr.conserved[k](j));
    row.push_back(tr.dissipation.empty() ? nan : tr.dissipation[k]);
    table.add_row(row);
  }
  return table.str();
}

}  // namespace crn
