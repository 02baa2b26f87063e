#include "crn/hybrid.hpp"

#include "crn/io.hpp"
#include "crn/kernels.hpp"
#include "crn/quadrature.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace crn {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double xlogx_ratio(double x, double y) { return x > 0.0 ? x * std::log(x / y) : 0.0; }
}  // namespace

// ------------------------------------------------------------ reduction

ReductionResult reduce_dual_potential(const ReductionProblem& p) {
  const Eigen::Index n = p.M.rows(), m = p.A.cols();
  if (p.M.cols() != n || p.A.rows() != n || p.eta.size() != m)
    throw std::invalid_argument("reduce_dual_potential: dimension mismatch");
  if ((p.M - p.M.transpose()).norm() > 1e-12 * std::max(1.0, p.M.norm()))
    throw std::invalid_argument("reduce_dual_potential: M must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(p.M);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("reduce_dual_potential: M must be positive definite");
  const double feas_tol = 1e-9 * std::max(1.0, p.eta.norm());

  ReductionResult out;

  // Saddle-point system for min 1/2 xi.M^{-1}xi subject to A^T xi = eta.
  const Eigen::MatrixXd Minv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
  kkt.topLeftCorner(n, n) = Minv;
  kkt.topRightCorner(n, m) = p.A;
  kkt.bottomLeftCorner(m, n) = p.A.transpose();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
  rhs.tail(m) = p.eta;
  const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  const Eigen::VectorXd xi = sol.head(n);
  const bool f1 = (p.A.transpose() * xi - p.eta).norm() <= feas_tol;
  out.constrained_min = f1 ? 0.5 * xi.dot(llt.solve(xi)) : kInf;

  // Dual of the pulled-back quadratic y -> 1/2 y.(A^T M A) y.
  const Eigen::MatrixXd S = p.A.transpose() * p.M * p.A;
  const Eigen::VectorXd y = S.completeOrthogonalDecomposition().solve(p.eta);
  const bool f2 = (S * y - p.eta).norm() <= feas_tol;
  out.pullback_dual = f2 ? 0.5 * p.eta.dot(y) : kInf;

  out.feasible = f1 && f2;
  return out;
}

PoissonReduction cme_to_rre_reduction(const RreSystem& sys, const Eigen::VectorXd& c, const Eigen::VectorXd& zeta,
                                      double V, const LatticeBox& box) {
  const std::size_t I = sys.I();
  if (static_cast<std::size_t>(c.size()) != I || static_cast<std::size_t>(zeta.size()) != I || box.dim() != I)
    throw std::invalid_argument("cme_to_rre_reduction: dimension mismatch");
  if (!(c.minCoeff() > 0.0)) throw std::invalid_argument("cme_to_rre_reduction: c must be positive");
  if (std::abs(box.V() - V) > 1e-12 * V) throw std::invalid_argument("cme_to_rre_reduction: box volume differs from V");
  PoissonReduction out;
  out.tail_mass = poisson_tail_mass(box, c);
  if (out.tail_mass > 1e-10) throw std::runtime_error("cme_to_rre_reduction: truncation tail " + fmt_num(out.tail_mass));

  const TruncatedCme cme = assemble_generator(sys.net, box, &sys.db, 1e-10);
  const Eigen::VectorXd u = poisson_weights(box, c, true);
  const Eigen::VectorXd raw = poisson_weights(box, c, false);
  Eigen::VectorXd mu(box.size());
  out.adjoint = Eigen::VectorXd::Zero(I);
  for (std::size_t k = 0; k < box.size(); ++k) {
    const IntVec n = box.multi(k);
    double s = 0.0;
    for (std::size_t i = 0; i < I; ++i) s += zeta(i) * n[i];
    mu(k) = s / V;
    for (std::size_t i = 0; i < I; ++i) out.adjoint(i) += mu(k) * raw(k) * (n[i] / c(i) - V);
  }
  out.reduced_value = psi_star_intensity(cme, u, mu);
  out.target = 0.5 * zeta.dot(onsager_matrix(sys, c) * zeta);
  out.entropy_pullback = cme_entropy(cme, u);
  out.rre_entropy = entropy(sys, c);
  return out;
}

// ------------------------------------------------------------ FP-RR

namespace {

struct SplitEdge {
  std::size_t r, x, y;
  double k, h, w, dpsi, bp, bm;
};

double partial_entropy(const RreSystem& sys, const Eigen::VectorXd& c, std::size_t from, std::size_t to) {
  double e = 0.0;
  for (std::size_t i = from; i < to; ++i) e += sys.c_star()(i) * lambda_B(c(i - from) / sys.c_star()(i));
  return e;
}

Eigen::VectorXd join(const Eigen::VectorXd& cs, const Eigen::VectorXd& cm) {
  Eigen::VectorXd c(cs.size() + cm.size());
  c << cs, cm;
  return c;
}

}  // namespace

double fp_rr_energy(const RreSystem& sys, const FpRrState& s, double V) {
  const std::size_t J = s.J;
  const double vol = s.rho_s.grid.cell_volume();
  double e = 0.0;
  for (std::size_t k = 0; k < s.rho_s.grid.size(); ++k) {
    const double r = s.rho_s.values(k);
    const Eigen::VectorXd c = s.rho_s.grid.center(k);
    e += vol * ((r > 0.0 ? r * std::log(r) / V : 0.0) + r * partial_entropy(sys, c, 0, J));
  }
  return e + partial_entropy(sys, s.c_m, J, sys.I());
}

std::string FpRrTrajectory::csv(const std::vector<std::string>& species) const {
  std::vector<std::string> head{"t", "energy"};
  for (const auto& s : species) head.push_back("mean_" + s);
  CsvTable tab(head);
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<double> row{times[k], energy[k]};
    for (Eigen::Index i = 0; i < mean[k].size(); ++i) row.push_back(mean[k](i));
    tab.add_row(row);
  }
  return tab.str();
}

FpRrTrajectory solve_fp_rr(const RreSystem& sys, const FpRrState& state0, double V, const std::vector<double>& times,
                           double dt) {
  const std::size_t J = state0.J, I = sys.I();
  const RectGrid& grid = state0.rho_s.grid;
  if (J == 0 || J >= I) throw std::invalid_argument("solve_fp_rr: need 0 < J < I");
  if (J > 2) throw std::invalid_argument("solve_fp_rr: at most two resolved species");
  if (grid.dim() != J || static_cast<std::size_t>(state0.c_m.size()) != I - J)
    throw std::invalid_argument("solve_fp_rr: state dimension mismatch");
  if (!(state0.c_m.minCoeff() > 0.0)) throw std::invalid_argument("solve_fp_rr: c_m must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("solve_fp_rr: step must be positive");
  if (std::abs(state0.rho_s.mass() - 1.0) > 1e-10) throw std::invalid_argument("solve_fp_rr: rho_s must be normalized");

  const std::size_t n = grid.size();
  const double vol = grid.cell_volume();

  // Geometry of the reaction directions projected onto the resolved species.
  struct Dir {
    bool resolved = false;
    int k = 1;
    IntVec g;
    double h = 0.0;
    Eigen::VectorXd gamma_m;
  };
  std::vector<Dir> dirs(sys.R());
  for (std::size_t r = 0; r < sys.R(); ++r) {
    const IntVec gam = sys.net.gamma(r);
    Dir& d = dirs[r];
    d.gamma_m.resize(I - J);
    for (std::size_t i = J; i < I; ++i) d.gamma_m(i - J) = gam[i];
    int k = 0;
    for (std::size_t i = 0; i < J; ++i) k = std::gcd(k, std::abs(gam[i]));
    if (k == 0) continue;
    d.resolved = true;
    d.k = k;
    d.g.resize(J);
    int nz = 0;
    for (std::size_t i = 0; i < J; ++i) {
      d.g[i] = gam[i] / k;
      if (d.g[i] != 0) {
        ++nz;
        d.h = grid.h(i);
      }
    }
    if (nz == 2 && std::abs(grid.h(0) - grid.h(1)) > 1e-12 * grid.h(0))
      throw std::invalid_argument("solve_fp_rr: oblique directions need equal spacing");
  }

  auto assemble = [&](const Eigen::VectorXd& cm, std::vector<SplitEdge>& edges) {
    edges.clear();
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd logm(I - J);
    for (std::size_t i = J; i < I; ++i) logm(i - J) = std::log(cm(i - J) / sys.c_star()(i));
    for (std::size_t r = 0; r < sys.R(); ++r) {
      const Dir& d = dirs[r];
      if (!d.resolved) continue;
      const double m_part = V * d.h / d.k * d.gamma_m.dot(logm);
      for (std::size_t x = 0; x < n; ++x) {
        auto iy = grid.multi(x);
        for (std::size_t i = 0; i < J; ++i) iy[i] += d.g[i];
        if (!grid.contains(iy)) continue;
        const std::size_t y = grid.flat(iy);
        const Eigen::VectorXd cx = grid.center(x), cy = grid.center(y);
        Eigen::VectorXd a, b;
        normalized_monomials(sys, join(0.5 * (cx + cy), cm), a, b);
        SplitEdge e;
        e.r = r;
        e.x = x;
        e.y = y;
        e.k = d.k;
        e.h = d.h;
        e.w = d.k * d.k * sys.kappa_star()(r) * log_mean(a(r), b(r)) / V / (d.h * d.h);
        e.dpsi = V * (partial_entropy(sys, cy, 0, J) - partial_entropy(sys, cx, 0, J)) + m_part;
        e.bp = bernoulli(e.dpsi);
        e.bm = bernoulli(-e.dpsi);
        trip.emplace_back(x, y, e.w * e.bm);
        trip.emplace_back(x, x, -e.w * e.bp);
        trip.emplace_back(y, x, e.w * e.bp);
        trip.emplace_back(y, y, -e.w * e.bm);
        edges.push_back(e);
      }
    }
    Eigen::SparseMatrix<double> L(n, n);
    L.setFromTriplets(trip.begin(), trip.end());
    return L;
  };

  auto cm_velocity = [&](const std::vector<SplitEdge>& edges, const Eigen::VectorXd& rho, const Eigen::VectorXd& cm) {
    Eigen::VectorXd dc = Eigen::VectorXd::Zero(I - J);
    for (const auto& e : edges) {
      // Mass per unit time moving from y back to x.
      const double F = vol * e.w * (e.bm * rho(e.y) - e.bp * rho(e.x));
      dc -= dirs[e.r].gamma_m * (F * e.h / e.k);
    }
    for (std::size_t r = 0; r < sys.R(); ++r) {
      if (dirs[r].resolved) continue;
      double flux = 0.0;
      for (std::size_t x = 0; x < n; ++x) {
        Eigen::VectorXd a, b;
        normalized_monomials(sys, join(grid.center(x), cm), a, b);
        flux += vol * rho(x) * sys.kappa_star()(r) * (a(r) - b(r));
      }
      dc -= dirs[r].gamma_m * flux;
    }
    return dc;
  };

  auto full_mean = [&](const FpRrState& s) { return join(s.rho_s.mean(), s.c_m); };

  std::vector<double> ts = times;
  std::sort(ts.begin(), ts.end());
  FpRrTrajectory out;
  FpRrState s = state0;
  const Eigen::VectorXd q0 = Eigen::VectorXd(sys.stoich.Q_matrix() * full_mean(s));
  double t = 0.0;
  double e_prev = fp_rr_energy(sys, s, V);
  std::vector<SplitEdge> edges;
  Eigen::SparseMatrix<double> Id(n, n);
  Id.setIdentity();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (double target : ts) {
    const double span = target - t;
    if (span > 0.0) {
      const int steps = static_cast<int>(std::ceil(span / dt - 1e-9));
      const double step = span / steps;
      for (int j = 0; j < steps; ++j) {
        const Eigen::SparseMatrix<double> L = assemble(s.c_m, edges);
        Eigen::SparseMatrix<double> A = Id - step * L;
        lu.compute(A);
        if (lu.info() != Eigen::Success) throw std::runtime_error("solve_fp_rr: factorization failed");
        const double before = s.rho_s.mass();
        s.rho_s.values = lu.solve(s.rho_s.values);
        s.c_m += step * cm_velocity(edges, s.rho_s.values, s.c_m);
        if (!(s.c_m.minCoeff() > 0.0)) throw std::runtime_error("solve_fp_rr: c_m left the positive orthant, reduce dt");
        out.max_mass_drift = std::max(out.max_mass_drift, std::abs(s.rho_s.mass() - before));
        const double e = fp_rr_energy(sys, s, V);
        out.max_energy_increase = std::max(out.max_energy_increase, e - e_prev);
        e_prev = e;
      }
    }
    t = target;
    out.times.push_back(t);
    out.states.push_back(s);
    out.energy.push_back(fp_rr_energy(sys, s, V));
    out.mean.push_back(full_mean(s));
    if (q0.size() > 0)
      out.max_conservation_drift =
          std::max(out.max_conservation_drift, (sys.stoich.Q_matrix() * out.mean.back() - q0).cwiseAbs().maxCoeff());
  }
  return out;
}

double fp_rr_Z(double v) {
  if (!(v > 0.0)) throw std::invalid_argument("fp_rr_Z: v must be positive");
  double zmax = 2.0;
  while (v * lambda_B(zmax) < 60.0) zmax *= 2.0;
  auto f = [&](double z) { return std::exp(-v * lambda_B(z)); };
  return integrate_gl(f, 0.0, 1.0, 16, 400) + integrate_gl(f, 1.0, zmax, 16, 400);
}

double fp_rr_A(double v) {
  if (!(v > 0.0)) throw std::invalid_argument("fp_rr_A: v must be positive");
  double zmax = 2.0;
  while (v * lambda_B(zmax) < 60.0) zmax *= 2.0;
  auto f = [&](double z) { return z * std::exp(-v * lambda_B(z)); };
  const double num = integrate_gl(f, 0.0, 1.0, 16, 400) + integrate_gl(f, 1.0, zmax, 16, 400);
  return num / fp_rr_Z(v);
}

double fp_rr_e_hat(double a_hat, double a_star, double V) {
  if (!(a_hat > 0.0 && a_star > 0.0 && V > 0.0)) throw std::invalid_argument("fp_rr_e_hat: arguments must be positive");
  const double v = V * a_hat;
  return fp_rr_A(v) * a_hat * std::log(a_hat / a_star) - a_hat + a_star - std::log(a_hat * fp_rr_Z(v)) / V;
}

// ------------------------------------------------------------ CM-RR

Eigen::VectorXd cm_rr_rhs(const CmRrState& s, double V) {
  const Eigen::Index M = s.v.size() - 1;
  const double p = std::pow(s.c2, s.beta);
  const double lam = V * p;
  Eigen::VectorXd d(M + 2);
  double first = 0.0, below = 0.0;
  for (Eigen::Index m = 0; m <= M; ++m) {
    double dv = -static_cast<double>(m) * s.v(m);
    if (m > 0) dv += lam * s.v(m - 1);
    if (m < M) {
      dv += -lam * s.v(m) + (m + 1) * s.v(m + 1);
      below += s.v(m);
    }
    d(m) = dv;
    first += m * s.v(m);
  }
  // The birth rate is switched off at M, so the c2 sink only counts m < M.
  d(M + 1) = s.beta * (first / V - p * below);
  return d;
}

double cm_rr_energy(const CmRrState& s, double V) {
  double e = lambda_B(s.c2);
  for (Eigen::Index m = 0; m < s.v.size(); ++m) {
    const double logw = -V + m * std::log(V) - std::lgamma(m + 1.0);
    if (s.v(m) > 0.0) e += s.v(m) * (std::log(s.v(m)) - logw) / V;
  }
  return e;
}

std::string CmRrTrajectory::csv() const {
  CsvTable tab({"t", "c1", "c2", "energy"});
  for (std::size_t k = 0; k < times.size(); ++k) tab.add_row({times[k], c1[k], states[k].c2, energy[k]});
  return tab.str();
}

CmRrTrajectory solve_cm_rr(const CmRrState& s0, double V, const std::vector<double>& times, double tol) {
  if (s0.beta < 1) throw std::invalid_argument("solve_cm_rr: beta must be a positive integer");
  if (s0.v.size() < 2) throw std::invalid_argument("solve_cm_rr: support needs at least two states");
  if (!(V > 0.0) || s0.c2 < 0.0) throw std::invalid_argument("solve_cm_rr: invalid volume or concentration");
  if (s0.v.minCoeff() < 0.0 || std::abs(s0.v.sum() - 1.0) > 1e-10)
    throw std::invalid_argument("solve_cm_rr: v must be a probability vector");
  const Eigen::Index M = s0.v.size() - 1;
  Eigen::VectorXd y0(M + 2);
  y0 << s0.v, s0.c2;
  auto rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    CmRrState s{y.head(M + 1), std::max(y(M + 1), 0.0), s0.beta};
    dy = cm_rr_rhs(s, V);
  };
  std::vector<double> ts = times;
  std::sort(ts.begin(), ts.end());
  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = tol * 1e-2;
  const OdeResult res = dopri5(rhs, 0.0, y0, ts.empty() ? 0.0 : ts.back(), opt, ts);
  if (!res.ok) throw std::runtime_error("solve_cm_rr: " + res.message);

  auto c1_of = [&](const Eigen::VectorXd& v) {
    double s = 0.0;
    for (Eigen::Index m = 0; m <= M; ++m) s += m * v(m);
    return s / V;
  };
  const double q0 = s0.beta * c1_of(s0.v) + s0.c2;
  CmRrTrajectory out;
  for (std::size_t k = 0; k < res.t.size(); ++k) {
    CmRrState s{res.y[k].head(M + 1), res.y[k](M + 1), s0.beta};
    out.times.push_back(res.t[k]);
    out.c1.push_back(c1_of(s.v));
    out.energy.push_back(cm_rr_energy(s, V));
    out.max_conservation_drift = std::max(out.max_conservation_drift, std::abs(s0.beta * out.c1.back() + s.c2 - q0));
    out.max_probability_drift = std::max(out.max_probability_drift, std::abs(s.v.sum() - 1.0));
    out.max_boundary_mass = std::max(out.max_boundary_mass, std::abs(s.v(M)));
    out.states.push_back(std::move(s));
  }
  if (out.max_boundary_mass > 1e-8)
    throw std::runtime_error("solve_cm_rr: mass " + fmt_num(out.max_boundary_mass) + " reached the truncation level");
  return out;
}

// ------------------------------------------------------------ merged CME / FPE

MergedModel build_merged(double a_rate, double b_rate, double V, int N, double a_hat, const RectGrid& grid) {
  if (!(a_rate > 0.0 && b_rate > 0.0 && V > 0.0 && a_hat > 0.0))
    throw std::invalid_argument("build_merged: rates and volume must be positive");
  if (N < 1) throw std::invalid_argument("build_merged: N must be at least 1");
  if (grid.dim() != 1) throw std::invalid_argument("build_merged: continuous part must be one-dimensional");
  const double edge = N / V;
  if (std::abs(grid.lo(0) - edge) > 1e-12 * std::max(1.0, edge))
    throw std::invalid_argument("build_merged: grid must start at N/V");
  const double h = grid.h(0);
  if (h > (1.0 + 1e-12) / V) throw std::invalid_argument("build_merged: cell width exceeds 1/V");
  if (grid.cells(0) < 2) throw std::invalid_argument("build_merged: need at least two cells");

  MergedModel m;
  m.a = a_rate;
  m.b = b_rate;
  m.V = V;
  m.N = N;
  m.a_hat = a_hat;
  m.grid = grid;
  const double cs = a_rate / b_rate;

  m.w_discrete.resize(N);
  for (int n = 0; n < N; ++n) m.w_discrete(n) = std::exp(-V * cs + n * std::log(V * cs) - std::lgamma(n + 1.0));
  const double rest = 1.0 - m.w_discrete.sum();
  if (!(rest > 1e-300)) throw std::runtime_error("build_merged: no equilibrium mass left above N");

  const std::size_t J = grid.size();
  m.W_cont.resize(J);
  for (std::size_t j = 0; j < J; ++j) m.W_cont(j) = refined_profile(V, grid.center(j)(0), cs);
  m.Z = m.W_cont.sum() * h / rest;
  m.W_cont /= m.Z;
  if (m.W_cont(J - 1) * h > 1e-10) throw std::runtime_error("build_merged: window too small for the equilibrium");

  m.scale_ratio = m.W_cont(0) / (V * m.w_discrete(N - 1));
  if (!(m.scale_ratio >= 1e-3 && m.scale_ratio <= 1e3))
    throw std::runtime_error("build_merged: scale mismatch at the junction, W/(V w_{N-1}) = " + fmt_num(m.scale_ratio));

  std::vector<Eigen::Triplet<double>> trip;
  auto rate = [&](std::size_t from, std::size_t to, double k) {
    trip.emplace_back(to, from, k);
    trip.emplace_back(from, from, -k);
  };
  for (int n = 0; n + 1 < N; ++n) rate(n, n + 1, V * a_rate);
  for (int n = 1; n < N; ++n) rate(n, n - 1, b_rate * n);
  const std::size_t j0 = static_cast<std::size_t>(N);
  rate(N - 1, j0, V * a_hat);
  rate(j0, N - 1, V * a_hat * m.w_discrete(N - 1) / (m.W_cont(0) * h));

  // Continuous part: the corrected scheme has exp(-psi) proportional to the
  // refined profile, so its cell equilibrium matches W_cont exactly.
  const ReactionNetwork net = make_network({"X"}, {Reaction{{0}, {1}, a_rate, b_rate}});
  const RreSystem sys = make_rre_system(net);
  const FpeModel fp = build_fpe(sys, V, FpeVariant::SimpleCorrected, grid);
  for (int k = 0; k < fp.L.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(fp.L, k); it; ++it)
      trip.emplace_back(j0 + it.row(), j0 + it.col(), it.value());

  m.G.resize(m.size(), m.size());
  m.G.setFromTriplets(trip.begin(), trip.end());
  return m;
}

Eigen::VectorXd MergedModel::equilibrium() const {
  Eigen::VectorXd x(size());
  x << w_discrete, W_cont * grid.h(0);
  return x;
}

Eigen::VectorXd merged_pack(const MergedModel& m, const MergedState& s) {
  if (s.u_disc.size() != m.N || static_cast<std::size_t>(s.U.size()) != m.grid.size())
    throw std::invalid_argument("merged_pack: state does not fit the model");
  Eigen::VectorXd x(m.size());
  x << s.u_disc, s.U * m.grid.h(0);
  return x;
}

MergedState merged_unpack(const MergedModel& m, const Eigen::VectorXd& x) {
  MergedState s;
  s.u_disc = x.head(m.N);
  s.U = x.tail(m.grid.size()) / m.grid.h(0);
  s.V = m.V;
  s.N = m.N;
  s.a_hat = m.a_hat;
  return s;
}

double merged_entropy(const MergedModel& m, const Eigen::VectorXd& x) {
  const Eigen::VectorXd w = m.equilibrium();
  double e = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) e += xlogx_ratio(x(k), w(k));
  return e / m.V;
}

double merged_mean(const MergedModel& m, const Eigen::VectorXd& x) {
  double s = 0.0;
  for (int n = 0; n < m.N; ++n) s += n / m.V * x(n);
  for (std::size_t j = 0; j < m.grid.size(); ++j) s += m.grid.center(j)(0) * x(m.N + j);
  return s;
}

double merged_robin_residual(const MergedModel& m, const Eigen::VectorXd& x) {
  const double h = m.grid.h(0);
  const double U0 = x(m.N) / h, U1 = x(m.N + 1) / h;
  const double c = m.N / m.V;
  const double t1 = log_mean(m.a, m.b * c) * (U1 - U0) / h / m.V;
  const double t2 = m.b * c * U0;
  const double t3 = m.a * m.V * x(m.N - 1);
  const double scale = std::max({std::abs(t1), std::abs(t2), std::abs(t3), 1e-300});
  return std::abs(t1 + t2 - t3) / scale;
}

std::string MergedTrajectory::csv() const {
  CsvTable tab({"t", "mean", "entropy", "robin_residual"});
  for (std::size_t k = 0; k < times.size(); ++k) tab.add_row({times[k], mean[k], entropy[k], robin_residual[k]});
  return tab.str();
}

std::string MergedTrajectory::snapshot_csv(const MergedModel& m, std::size_t k) const {
  const MergedState s = merged_unpack(m, states.at(k));
  std::string out = "# discrete\nn,u\n";
  for (int n = 0; n < m.N; ++n) out += std::to_string(n) + "," + fmt_num(s.u_disc(n)) + "\n";
  out += "# continuous\nc,U\n";
  for (std::size_t j = 0; j < m.grid.size(); ++j) out += fmt_num(m.grid.center(j)(0)) + "," + fmt_num(s.U(j)) + "\n";
  return out;
}

MergedTrajectory solve_merged(const MergedModel& m, const Eigen::VectorXd& x0, const std::vector<double>& times,
                              double dt) {
  if (static_cast<std::size_t>(x0.size()) != m.size()) throw std::invalid_argument("solve_merged: size mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("solve_merged: step must be positive");
  if (x0.minCoeff() < 0.0) throw std::invalid_argument("solve_merged: negative initial mass");
  std::vector<double> ts = times;
  std::sort(ts.begin(), ts.end());
  MergedTrajectory out;
  Eigen::VectorXd x = x0;
  Eigen::SparseMatrix<double> Id(m.size(), m.size());
  Id.setIdentity();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  double cached = -1.0, t = 0.0, e_prev = merged_entropy(m, x);
  for (double target : ts) {
    const double span = target - t;
    if (span > 0.0) {
      const int steps = static_cast<int>(std::ceil(span / dt - 1e-9));
      const double step = span / steps;
      if (std::abs(step - cached) > 1e-15 * step) {
        Eigen::SparseMatrix<double> A = Id - step * m.G;
        lu.compute(A);
        if (lu.info() != Eigen::Success) throw std::runtime_error("solve_merged: factorization failed");
        cached = step;
      }
      for (int j = 0; j < steps; ++j) {
        const double before = x.sum();
        x = lu.solve(x);
        out.max_mass_drift = std::max(out.max_mass_drift, std::abs(x.sum() - before));
        const double e = merged_entropy(m, x.cwiseMax(0.0));
        out.max_entropy_increase = std::max(out.max_entropy_increase, e - e_prev);
        e_prev = e;
      }
    }
    t = target;
    out.times.push_back(t);
    out.states.push_back(x);
    out.entropy.push_back(merged_entropy(m, x.cwiseMax(0.0)));
    out.mean.push_back(merged_mean(m, x));
    out.robin_residual.push_back(merged_robin_residual(m, x));
  }
  return out;
}

}  // namespace crn
