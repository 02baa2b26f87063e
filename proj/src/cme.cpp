#include "crn/cme.hpp"

#include "crn/io.hpp"
#include "crn/kernels.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace crn {

LatticeBox::LatticeBox(IntVec n_max, double V) : n_max_(std::move(n_max)), V_(V) {
  if (!(V > 0.0)) throw std::invalid_argument("LatticeBox: volume must be positive");
  stride_.resize(n_max_.size());
  size_ = 1;
  for (std::size_t a = n_max_.size(); a-- > 0;) {
    if (n_max_[a] < 0) throw std::invalid_argument("LatticeBox: negative bound");
    stride_[a] = size_;
    size_ *= static_cast<std::size_t>(n_max_[a]) + 1;
  }
}

bool LatticeBox::contains(const IntVec& n) const {
  if (n.size() != n_max_.size()) return false;
  for (std::size_t a = 0; a < n.size(); ++a)
    if (n[a] < 0 || n[a] > n_max_[a]) return false;
  return true;
}

std::size_t LatticeBox::flat(const IntVec& n) const {
  if (!contains(n)) throw std::out_of_range("LatticeBox: state outside the box");
  std::size_t k = 0;
  for (std::size_t a = 0; a < n.size(); ++a) k += stride_[a] * static_cast<std::size_t>(n[a]);
  return k;
}

IntVec LatticeBox::multi(std::size_t k) const {
  IntVec n(n_max_.size());
  for (std::size_t a = 0; a < n.size(); ++a) {
    n[a] = static_cast<int>(k / stride_[a]);
    k %= stride_[a];
  }
  return n;
}

LatticeBox poisson_box(const Eigen::VectorXd& c, double V, double tail) {
  const std::size_t I = static_cast<std::size_t>(c.size());
  IntVec n_max(I, 0);
  const double per_axis = tail / std::max<std::size_t>(I, 1);
  for (std::size_t i = 0; i < I; ++i) {
    const double lam = V * c(i);
    if (lam <= 0.0) continue;
    int n = static_cast<int>(std::floor(lam));
    // P(N > n) = P(Gamma(n+1) < lam)
    while (boost::math::gamma_p(n + 1.0, lam) >= per_axis) ++n;
    n_max[i] = n;
  }
  return LatticeBox(n_max, V);
}

namespace {

double log_poisson(int n, double lam) {
  if (lam == 0.0) return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return n * std::log(lam) - lam - std::lgamma(n + 1.0);
}

}  // namespace

double poisson_tail_mass(const LatticeBox& box, const Eigen::VectorXd& c) {
  double inside = 1.0;
  for (std::size_t i = 0; i < box.dim(); ++i) {
    const double lam = box.V() * c(i);
    if (lam > 0.0) inside *= boost::math::gamma_q(box.n_max()[i] + 1.0, lam);
  }
  return 1.0 - inside;
}

Eigen::VectorXd poisson_weights(const LatticeBox& box, const Eigen::VectorXd& c, bool renormalize) {
  if (static_cast<std::size_t>(c.size()) != box.dim()) throw std::invalid_argument("poisson_weights: dimension mismatch");
  Eigen::VectorXd w(box.size());
  for (std::size_t k = 0; k < box.size(); ++k) {
    const IntVec n = box.multi(k);
    double lw = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) lw += log_poisson(n[i], box.V() * c(i));
    w(k) = std::exp(lw);
  }
  if (renormalize) w /= w.sum();
  return w;
}

double intensity(double V, const IntVec& alpha, const IntVec& n) {
  double lg = std::log(V);
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] < 0) return 0.0;
    if (alpha[i] == 0) continue;
    lg += std::lgamma(n[i] + alpha[i] + 1.0) - std::lgamma(n[i] + 1.0) - alpha[i] * std::log(V);
  }
  return std::exp(lg);
}

Eigen::VectorXd poisson_equilibrium(const ReactionNetwork& net, const DetailedBalanceReport& db, const LatticeBox& box) {
  if (!db.holds) throw std::invalid_argument("poisson_equilibrium: detailed balance fails");
  if (box.dim() != net.num_species()) throw std::invalid_argument("poisson_equilibrium: dimension mismatch");
  return poisson_weights(box, db.c_star, true);
}

double TruncatedCme::max_exit_rate() const {
  double m = 0.0;
  for (int k = 0; k < generator.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(generator, k); it; ++it)
      if (it.row() == it.col()) m = std::max(m, -it.value());
  return m;
}

namespace {

IntVec add(const IntVec& a, const IntVec& b) {
  IntVec c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
  return c;
}

}  // namespace

TruncatedCme assemble_generator(const ReactionNetwork& net, const LatticeBox& box, const DetailedBalanceReport* db,
                                double max_tail) {
  validate(net, RatePolicy::allow_zero);
  if (box.dim() != net.num_species()) throw std::invalid_argument("assemble_generator: dimension mismatch");
  TruncatedCme cme;
  cme.net = net;
  cme.box = box;
  cme.leak = Eigen::VectorXd::Zero(box.size());
  const double V = box.V();

  if (db) {
    if (!db->holds) throw std::invalid_argument("assemble_generator: detailed balance fails");
    cme.tail_mass = poisson_tail_mass(box, db->c_star);
    if (cme.tail_mass > max_tail)
      throw std::runtime_error("assemble_generator: box too small, equilibrium tail mass " + fmt_num(cme.tail_mass));
    cme.w = poisson_equilibrium(net, *db, box);
    cme.detailed_balance = true;
  }

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(box.size());
  for (std::size_t r = 0; r < net.num_reactions(); ++r) {
    const Reaction& rx = net.reactions[r];
    for (std::size_t k = 0; k < box.size(); ++k) {
      const IntVec n = box.multi(k);
      const IntVec na = add(n, rx.alpha);
      const IntVec nb = add(n, rx.beta);
      const bool in_a = box.contains(na), in_b = box.contains(nb);
      const double f = rx.k_fw > 0.0 ? rx.k_fw * intensity(V, rx.alpha, n) : 0.0;
      const double b = rx.k_bw > 0.0 ? rx.k_bw * intensity(V, rx.beta, n) : 0.0;
      if (in_a && in_b) {
        const std::size_t ia = box.flat(na), ib = box.flat(nb);
        CmeEdge e{r, ia, ib, k, f, b, 0.0};
        if (cme.detailed_balance) e.nu_hat = db->kappa_star(r) * V * cme.w(k);
        cme.edges.push_back(e);
        if (f > 0.0) trip.emplace_back(ib, ia, f);
        if (b > 0.0) trip.emplace_back(ia, ib, b);
        diag(ia) -= f;
        diag(ib) -= b;
      } else if (in_a) {
        diag(box.flat(na)) -= f;
        cme.leak(box.flat(na)) += f;
      } else if (in_b) {
        diag(box.flat(nb)) -= b;
        cme.leak(box.flat(nb)) += b;
      }
    }
  }
  for (std::size_t k = 0; k < box.size(); ++k)
    if (diag(k) != 0.0) trip.emplace_back(k, k, diag(k));
  cme.generator.resize(box.size(), box.size());
  cme.generator.setFromTriplets(trip.begin(), trip.end());
  return cme;
}

Eigen::VectorXd stationarity_residual(const TruncatedCme& cme, const Eigen::VectorXd& w) {
  if (static_cast<std::size_t>(w.size()) != cme.box.size()) throw std::invalid_argument("stationarity_residual: size");
  return cme.generator * w;
}

// ------------------------------------------------------------- time stepping

namespace {

// exp(dt G) u by uniformization; exact positivity, truncation error <= tol
// in l1 for a substochastic G.
void uniformization_step(const Eigen::SparseMatrix<double>& G, double rate, Eigen::VectorXd& u, double dt, double tol) {
  if (dt <= 0.0 || rate <= 0.0) return;
  const double lam = rate * 1.000001;
  const int nsub = std::max(1, static_cast<int>(std::ceil(lam * dt / 40.0)));
  const double q = lam * dt / nsub;
  const double step_tol = std::max(tol / nsub, 1e-16);
  Eigen::VectorXd term(u.size()), acc(u.size());
  for (int s = 0; s < nsub; ++s) {
    term = u;
    double weight = std::exp(-q);
    acc = weight * term;
    for (int k = 1; k < 100000; ++k) {
      term += (G * term) / lam;
      weight *= q / k;
      acc += weight * term;
      if (k + 2 > q) {
        const double tail = weight * (q / (k + 1)) / (1.0 - q / (k + 2));
        if (tail < step_tol) break;
      }
    }
    u = acc;
  }
}

}  // namespace

Eigen::VectorXd expv_krylov(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& v, double t, double tol, int m) {
  const Eigen::Index n = v.size();
  m = static_cast<int>(std::min<Eigen::Index>(m, n));
  Eigen::VectorXd w = v;
  double t_now = 0.0;
  double anorm = 0.0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) anorm = std::max(anorm, std::abs(it.value()));
  anorm *= 2.0;
  double tau = std::min(t, anorm > 0.0 ? 10.0 / anorm : t);
  while (t_now < t) {
    const double beta = w.norm();
    if (beta == 0.0) break;
    Eigen::MatrixXd Vb = Eigen::MatrixXd::Zero(n, m + 1);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
    Vb.col(0) = w / beta;
    int mm = m;
    bool happy = false;
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd p = A * Vb.col(j);
      for (int i = 0; i <= j; ++i) {
        H(i, j) = Vb.col(i).dot(p);
        p -= H(i, j) * Vb.col(i);
      }
      for (int i = 0; i <= j; ++i) {  // reorthogonalize
        const double c = Vb.col(i).dot(p);
        H(i, j) += c;
        p -= c * Vb.col(i);
      }
      H(j + 1, j) = p.norm();
      if (H(j + 1, j) <= 1e-13 * beta * std::max(1.0, anorm)) {
        mm = j + 1;
        happy = true;
        break;
      }
      Vb.col(j + 1) = p / H(j + 1, j);
    }
    const double hnext = happy ? 0.0 : H(mm, mm - 1);
    const Eigen::MatrixXd Hm = H.topLeftCorner(mm, mm);
    double step = happy ? t - t_now : std::min(tau, t - t_now);
    Eigen::MatrixXd F;
    for (int attempt = 0; attempt < 60; ++attempt) {
      F = (step * Hm).exp();
      const double err = beta * hnext * step * std::abs(F(mm - 1, 0));
      if (happy || err <= tol * step / t * std::max(beta, 1e-300) || attempt == 59) break;
      step *= 0.5;
    }
    w = beta * (Vb.leftCols(mm) * F.col(0));
    t_now += step;
    tau = step * 1.5;
  }
  return w;
}

CmeSolution solve_cme(const TruncatedCme& cme, const Eigen::VectorXd& u0, const std::vector<double>& times,
                      const CmeSolveOptions& opt) {
  if (static_cast<std::size_t>(u0.size()) != cme.box.size()) throw std::invalid_argument("solve_cme: size mismatch");
  if (u0.minCoeff() < 0.0) throw std::invalid_argument("solve_cme: negative initial weights");
  std::vector<double> ts = times;
  std::sort(ts.begin(), ts.end());
  if (!ts.empty() && ts.front() < 0.0) throw std::invalid_argument("solve_cme: negative output time");
  const double rate = cme.max_exit_rate();
  const double m0 = u0.sum();
  CmeSolution sol;
  Eigen::VectorXd u = u0;
  double t = 0.0;
  for (double target : ts) {
    const double dt = target - t;
    if (opt.stepper == CmeStepper::uniformization) {
      uniformization_step(cme.generator, rate, u, dt, opt.tol);
    } else if (dt > 0.0) {
      u = expv_krylov(cme.generator, u, dt, opt.tol);
    }
    t = target;
    const double lost = m0 - u.sum();
    if (lost > opt.max_leak)
      throw std::runtime_error("solve_cme: probability leak " + fmt_num(lost) + " exceeds limit; enlarge the box");
    sol.times.push_back(t);
    sol.states.push_back(u);
    sol.mass_lost.push_back(lost);
  }
  return sol;
}

Moments moments(const TruncatedCme& cme, const Eigen::VectorXd& u) {
  const std::size_t I = cme.box.dim();
  const double V = cme.V();
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(I);
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(I, I);
  for (std::size_t k = 0; k < cme.box.size(); ++k) {
    if (u(k) == 0.0) continue;
    const IntVec n = cme.box.multi(k);
    Eigen::VectorXd nv(I);
    for (std::size_t i = 0; i < I; ++i) nv(i) = n[i];
    m1 += u(k) * nv;
    m2 += u(k) * nv * nv.transpose();
  }
  Moments m;
  m.e_hat = m1 / V;
  m.v_hat = m2 / (V * V) - m.e_hat * m.e_hat.transpose();
  return m;
}

// ----------------------------------------------------- gradient structures

namespace {

void require_db(const TruncatedCme& cme, const char* what) {
  if (!cme.detailed_balance) throw std::invalid_argument(std::string(what) + ": requires a detailed-balance CME");
}

void require_positive(const Eigen::VectorXd& u, const char* what) {
  if (!(u.minCoeff() > 0.0)) throw std::domain_error(std::string(what) + ": requires strictly positive weights");
}

}  // namespace

double cme_entropy(const TruncatedCme& cme, const Eigen::VectorXd& u) {
  require_db(cme, "cme_entropy");
  double s = 0.0;
  for (Eigen::Index k = 0; k < u.size(); ++k)
    if (u(k) > 0.0) s += u(k) * std::log(u(k) / cme.w(k));
  return s / cme.V();
}

Eigen::VectorXd cme_entropy_gradient(const TruncatedCme& cme, const Eigen::VectorXd& u) {
  require_db(cme, "cme_entropy_gradient");
  require_positive(u, "cme_entropy_gradient");
  return (u.array() / cme.w.array()).log().matrix() / cme.V();
}

Eigen::VectorXd apply_onsager(const TruncatedCme& cme, const Eigen::VectorXd& u, const Eigen::VectorXd& mu) {
  require_db(cme, "apply_onsager");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(u.size());
  for (const auto& e : cme.edges) {
    const double x = u(e.ia) / cme.w(e.ia), y = u(e.ib) / cme.w(e.ib);
    const double flux = cme.V() * e.nu_hat * log_mean(x, y) * (mu(e.ia) - mu(e.ib));
    out(e.ia) += flux;
    out(e.ib) -= flux;
  }
  return out;
}

double psi_star_quadratic(const TruncatedCme& cme, const Eigen::VectorXd& u, const Eigen::VectorXd& mu) {
  require_db(cme, "psi_star_quadratic");
  double s = 0.0;
  for (const auto& e : cme.edges) {
    const double d = mu(e.ia) - mu(e.ib);
    s += e.nu_hat * log_mean(u(e.ia) / cme.w(e.ia), u(e.ib) / cme.w(e.ib)) * d * d;
  }
  return 0.5 * cme.V() * s;
}

double psi_star_intensity(const TruncatedCme& cme, const Eigen::VectorXd& u, const Eigen::VectorXd& mu) {
  double s = 0.0;
  for (const auto& e : cme.edges) {
    const double d = mu(e.ia) - mu(e.ib);
    s += log_mean(e.fw_rate * u(e.ia), e.bw_rate * u(e.ib)) * d * d;
  }
  return 0.5 * cme.V() * s;
}

double psi_star_cosh(const TruncatedCme& cme, const Eigen::VectorXd& u, const Eigen::VectorXd& mu) {
  require_db(cme, "psi_star_cosh");
  double s = 0.0;
  for (const auto& e : cme.edges) {
    const double xy = (u(e.ia) / cme.w(e.ia)) * (u(e.ib) / cme.w(e.ib));
    s += e.nu_hat * std::sqrt(xy) * cosh_star(cme.V() * (mu(e.ib) - mu(e.ia)));
  }
  return s / cme.V();
}

Eigen::VectorXd psi_star_cosh_gradient(const TruncatedCme& cme, const Eigen::VectorXd& u, const Eigen::VectorXd& mu) {
  require_db(cme, "psi_star_cosh_gradient");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(u.size());
  for (const auto& e : cme.edges) {
    const double xy = (u(e.ia) / cme.w(e.ia)) * (u(e.ib) / cme.w(e.ib));
    const double f = e.nu_hat * std::sqrt(xy) * cosh_star_d1(cme.V() * (mu(e.ib) - mu(e.ia)));
    g(e.ib) += f;
    g(e.ia) -= f;
  }
  return g;
}

double cme_dissipation(const TruncatedCme& cme, const Eigen::VectorXd& u) {
  require_db(cme, "cme_dissipation");
  require_positive(u, "cme_dissipation");
  double s = 0.0;
  for (const auto& e : cme.edges) s += e.nu_hat * G(u(e.ia) / cme.w(e.ia), u(e.ib) / cme.w(e.ib));
  return s / (2.0 * cme.V());
}

Eigen::VectorXd inbox_rate(const TruncatedCme& cme, const Eigen::VectorXd& u) {
  return cme.generator * u + cme.leak.cwiseProduct(u);
}

// ------------------------------------------------------------ diagnostics

ReuterDiagnostic reuter_diagnostic(const ReactionNetwork& net, double V, int k_terms) {
  if (net.num_reactions() != 1) throw std::invalid_argument("reuter_diagnostic: needs exactly one reaction");
  if (k_terms < 0) throw std::invalid_argument("reuter_diagnostic: negative term count");
  Reaction rx = net.reactions[0];
  IntVec g = net.gamma(0);
  bool pos = false, neg = false;
  for (int x : g) {
    pos = pos || x > 0;
    neg = neg || x < 0;
  }
  if (pos && neg) throw std::invalid_argument("reuter_diagnostic: two-signed stoichiometry gives finite components");
  if (neg) {
    std::swap(rx.alpha, rx.beta);
    std::swap(rx.k_fw, rx.k_bw);
    for (int& x : g) x = -x;
  }
  ReuterDiagnostic out;
  out.start = rx.beta;
  auto state = [&](int k) {
    IntVec n(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) n[i] = k * g[i];  // n_k - beta
    return n;
  };
  auto up = [&](int k) { return rx.k_bw * intensity(V, rx.beta, state(k)); };
  auto down = [&](int k) {
    IntVec m = state(k);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += rx.beta[i] - rx.alpha[i];
    return rx.k_fw * intensity(V, rx.alpha, m);
  };
  double log_r = 0.0;
  double sum = 0.0;
  for (int k = 0; k < k_terms; ++k) {
    if (k > 0) log_r += std::log(down(k));
    log_r -= std::log(up(k));
    out.log_summands.push_back(log_r);
    sum += std::exp(log_r);
    out.partial_sums.push_back(sum);
  }
  if (k_terms >= 2) {
    out.increasing = true;
    for (int k = std::max(1, k_terms / 2); k < k_terms; ++k)
      if (!(out.log_summands[k] > out.log_summands[k - 1])) out.increasing = false;
  }
  return out;
}

std::string distribution_csv(const TruncatedCme& cme, const Eigen::VectorXd& u) {
  std::vector<std::string> header{"flat"};
  for (const auto& s : cme.net.species) header.push_back("n_" + s);
  header.push_back("u");
  header.push_back("w");
  CsvTable t(header);
  for (std::size_t k = 0; k < cme.box.size(); ++k) {
    std::vector<std::string> row{std::to_string(k)};
    for (int x : cme.box.multi(k)) row.push_back(std::to_string(x));
    row.push_back(fmt_num(u(k)));
    row.push_back(cme.detailed_balance ? fmt_num(cme.w(k)) : "nan");
    t.add_row(row);
  }
  return t.str();
}

std::string generator_triplets(const TruncatedCme& cme) {
  std::string out = "# row col value\n";
  for (int k = 0; k < cme.generator.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(cme.generator, k); it; ++it)
      out += std::to_string(it.row()) + " " + std::to_string(it.col()) + " " + fmt_num(it.value()) + "\n";
  return out;
}

}  // namespace crn
