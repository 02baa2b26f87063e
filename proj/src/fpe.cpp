#include "crn/fpe.hpp"

#include "crn/cme.hpp"
#include "crn/io.hpp"
#include "crn/kernels.hpp"
#include "crn/quadrature.hpp"
#include "crn/scalebridge.hpp"

#include "json.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace crn {

// ------------------------------------------------------------- equilibria

double refined_profile(double V, double c, double c_star) {
  return V * std::exp(-V * c_star * lambda_B(c / c_star)) / std::sqrt(2.0 * std::numbers::pi * (V * c + 1.0 / 6.0));
}

namespace {

double simple_profile(double V, double c, double c_star) { return std::exp(-V * c_star * lambda_B(c / c_star)); }

// Point beyond which exp(-V c* lambda_B(c/c*)) < e^-50.
double support_end(double V, double c_star) {
  double hi = c_star * 2.0 + 1.0 / V;
  while (V * c_star * lambda_B(hi / c_star) < 50.0) hi *= 1.5;
  return hi;
}

template <class F>
double profile_integral(F&& f, double a, double b) {
  return integrate_gl(f, a, b, 16, 400);
}

FpeEquilibrium make_equilibrium(const RreSystem& sys, double V, const std::vector<double>& window_hi,
                                FpeEquilibrium::Kind kind) {
  if (window_hi.size() != sys.I()) throw std::invalid_argument("equilibrium: window dimension mismatch");
  FpeEquilibrium eq;
  eq.kind = kind;
  eq.V = V;
  eq.c_star = sys.c_star();
  eq.Z.resize(sys.I());
  for (std::size_t i = 0; i < sys.I(); ++i) {
    const double cs = sys.c_star()(i);
    auto f = [&](double c) {
      return kind == FpeEquilibrium::Kind::refined ? refined_profile(V, c, cs) : simple_profile(V, c, cs);
    };
    const double end = support_end(V, cs);
    eq.Z(i) = profile_integral(f, 0.0, end);
    if (window_hi[i] < end) {
      const double tail = profile_integral(f, window_hi[i], end) / eq.Z(i);
      if (tail > 1e-12) throw std::runtime_error("equilibrium: window too small, tail mass " + fmt_num(tail));
    }
  }
  return eq;
}

}  // namespace

FpeEquilibrium refined_equilibrium(const RreSystem& sys, double V, const std::vector<double>& window_hi) {
  return make_equilibrium(sys, V, window_hi, FpeEquilibrium::Kind::refined);
}

FpeEquilibrium simple_equilibrium(const RreSystem& sys, double V, const std::vector<double>& window_hi) {
  return make_equilibrium(sys, V, window_hi, FpeEquilibrium::Kind::simple);
}

double FpeEquilibrium::density(const Eigen::VectorXd& c) const {
  double d = 1.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double p = kind == Kind::refined ? refined_profile(V, c(i), c_star(i)) : simple_profile(V, c(i), c_star(i));
    d *= p / Z(i);
  }
  return d;
}

double FpeEquilibrium::E1(const Eigen::VectorXd& c) const {
  if (kind != Kind::refined) throw std::logic_error("E1 is defined for the refined equilibrium");
  double s = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    s += std::log(std::sqrt(2.0 * std::numbers::pi) * Z(i) / V);
    s += 0.5 * std::log(V * c(i) + 1.0 / 6.0);
  }
  return s;
}

// ---------------------------------------------------------------- variants

FpeVariant parse_variant(const std::string& name) {
  if (name == "simple") return FpeVariant::Simple;
  if (name == "simple_corrected") return FpeVariant::SimpleCorrected;
  if (name == "cle") return FpeVariant::CLE;
  if (name == "corrected") return FpeVariant::Corrected;
  if (name == "cosh_corrected") return FpeVariant::CoshCorrected;
  throw std::invalid_argument("unknown FPE variant '" + name + "'");
}

std::string variant_name(FpeVariant v) {
  switch (v) {
    case FpeVariant::Simple: return "simple";
    case FpeVariant::SimpleCorrected: return "simple_corrected";
    case FpeVariant::CLE: return "cle";
    case FpeVariant::Corrected: return "corrected";
    case FpeVariant::CoshCorrected: return "cosh_corrected";
  }
  return "?";
}

ReactionCoefficients reaction_coefficients(const RreSystem& sys, std::size_t r, const Eigen::VectorXd& c) {
  const Reaction& rx = sys.net.reactions[r];
  const double A = rx.k_fw * monomial(c, rx.alpha);
  const double B = rx.k_bw * monomial(c, rx.beta);
  double g_delta = 0.0, a_c_b = 0.0;
  for (std::size_t i = 0; i < sys.I(); ++i) {
    g_delta += 0.5 * (rx.alpha[i] - rx.beta[i]) / c(i);
    a_c_b += rx.alpha[i] * rx.beta[i] / c(i);
  }
  ReactionCoefficients rc;
  rc.a_hat = A - B;
  rc.b_hat1 = 0.5 * (A + B);
  rc.Lambda0 = log_mean(A, B);
  rc.b_hat0 = rc.Lambda0 * g_delta - 0.5 * rc.a_hat * a_c_b;
  return rc;
}

namespace {

Eigen::VectorXd gamma_of(const ReactionNetwork& net, std::size_t r) {
  const auto g = net.gamma(r);
  Eigen::VectorXd v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v(i) = g[i];
  return v;
}

Eigen::VectorXd cle_divergence(const RreSystem& sys, const Eigen::VectorXd& c) {
  Eigen::VectorXd a, b;
  normalized_monomials(sys, c, a, b);
  Eigen::VectorXd div = Eigen::VectorXd::Zero(sys.I());
  for (std::size_t r = 0; r < sys.R(); ++r) {
    const auto& rx = sys.net.reactions[r];
    const Eigen::VectorXd g = gamma_of(sys.net, r);
    double s = 0.0;
    for (std::size_t j = 0; j < sys.I(); ++j) s += g(j) * (rx.alpha[j] * a(r) + rx.beta[j] * b(r)) / c(j);
    div += sys.kappa_star()(r) * 0.5 * s * g;
  }
  return div;
}

}  // namespace

FieldParts variant_fields(const RreSystem& sys, FpeVariant variant, double V, const Eigen::VectorXd& c) {
  FieldParts f;
  f.drift = rate_vector(sys, c);
  f.correction = Eigen::VectorXd::Zero(sys.I());
  switch (variant) {
    case FpeVariant::Simple:
      f.diffusion = onsager_matrix(sys, c) / V;
      break;
    case FpeVariant::SimpleCorrected: {
      const Eigen::MatrixXd K = onsager_matrix(sys, c);
      f.diffusion = K / V;
      const Eigen::VectorXd inv = (V * c.array() + 1.0 / 6.0).inverse().matrix();
      f.correction = 0.5 * K * inv;
      break;
    }
    case FpeVariant::CLE:
      f.diffusion = cle_matrix(sys, c) / V;
      f.correction = cle_divergence(sys, c) / V;
      break;
    case FpeVariant::Corrected:
      f.diffusion = cle_matrix(sys, c) / V;
      for (std::size_t r = 0; r < sys.R(); ++r) f.correction += reaction_coefficients(sys, r, c).b_hat0 * gamma_of(sys.net, r) / V;
      break;
    case FpeVariant::CoshCorrected:
      f.diffusion = cle_matrix(sys, c) / V;
      break;
  }
  return f;
}

FieldParts cosh_corrected_operator(const RreSystem& sys, double V, const Eigen::VectorXd& c) {
  Eigen::VectorXd a, b;
  normalized_monomials(sys, c, a, b);
  FieldParts f;
  f.diffusion = Eigen::MatrixXd::Zero(sys.I(), sys.I());
  f.drift = Eigen::VectorXd::Zero(sys.I());
  f.correction = Eigen::VectorXd::Zero(sys.I());
  for (std::size_t r = 0; r < sys.R(); ++r) {
    const Eigen::VectorXd g = gamma_of(sys.net, r);
    const double root = std::sqrt(a(r) * b(r));
    const double ratio = std::log(a(r)) - std::log(b(r));
    f.drift += sys.kappa_star()(r) * root * cosh_star_d1(ratio) * g;
    f.diffusion += sys.kappa_star()(r) * root * cosh_star_d2(-ratio) * g * g.transpose() / V;
  }
  return f;
}

// ---------------------------------------------------------- discretization

double bernoulli(double z) {
  if (std::abs(z) < 1e-6) return 1.0 - 0.5 * z + z * z / 12.0;
  return z / std::expm1(z);
}

FpeModel build_fpe(const RreSystem& sys, double V, FpeVariant variant, const RectGrid& grid) {
  const std::size_t I = sys.I();
  if (I > 2) throw std::invalid_argument("build_fpe: the PDE path supports at most two species");
  if (grid.dim() != I) throw std::invalid_argument("build_fpe: grid dimension mismatch");
  if (!(V > 0.0)) throw std::invalid_argument("build_fpe: volume must be positive");
  FpeModel m;
  m.sys = sys;
  m.V = V;
  m.variant = variant;
  m.grid = grid;

  auto E1s = [&](const Eigen::VectorXd& c) { return 0.5 * (V * c.array() + 1.0 / 6.0).log().sum(); };

  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t r = 0; r < sys.R(); ++r) {
    const IntVec gam = sys.net.gamma(r);
    int k = 0;
    for (int x : gam) k = std::gcd(k, std::abs(x));
    IntVec g(I);
    int nz = 0;
    std::size_t axis = 0;
    for (std::size_t i = 0; i < I; ++i) {
      g[i] = gam[i] / k;
      if (g[i] != 0) {
        ++nz;
        axis = i;
      }
    }
    if (nz == 2 && std::abs(grid.h(0) - grid.h(1)) > 1e-12 * grid.h(0))
      throw std::invalid_argument("build_fpe: oblique reaction directions need equal spacing on both axes");
    const double h = grid.h(axis);
    Eigen::VectorXd gv(I);
    for (std::size_t i = 0; i < I; ++i) gv(i) = g[i];

    for (std::size_t x = 0; x < grid.size(); ++x) {
      auto iy = grid.multi(x);
      for (std::size_t i = 0; i < I; ++i) iy[i] += g[i];
      if (!grid.contains(iy)) continue;
      const std::size_t y = grid.flat(iy);
      const Eigen::VectorXd cx = grid.center(x), cy = grid.center(y);
      const Eigen::VectorXd mid = 0.5 * (cx + cy);
      FpeEdge e;
      e.r = r;
      e.x = x;
      e.y = y;
      e.k = k;
      auto along = [&](double t) { return Eigen::VectorXd(cx + t * gv); };
      switch (variant) {
        case FpeVariant::Simple:
        case FpeVariant::SimpleCorrected: {
          Eigen::VectorXd a, b;
          normalized_monomials(sys, mid, a, b);
          e.D = k * k * sys.kappa_star()(r) * log_mean(a(r), b(r)) / V;
          e.dpsi = V * (entropy(sys, cy) - entropy(sys, cx));
          if (variant == FpeVariant::SimpleCorrected) e.dpsi += E1s(cy) - E1s(cx);
          break;
        }
        case FpeVariant::CLE: {
          e.D = k * k * reaction_coefficients(sys, r, mid).b_hat1 / V;
          const double integral = integrate_gl(
              [&](double t) {
                const auto rc = reaction_coefficients(sys, r, along(t));
                return rc.a_hat / rc.b_hat1;
              },
              0.0, h, 16);
          e.dpsi = std::log(reaction_coefficients(sys, r, cy).b_hat1 / reaction_coefficients(sys, r, cx).b_hat1) +
                   V / k * integral;
          break;
        }
        case FpeVariant::Corrected:
        case FpeVariant::CoshCorrected: {
          e.D = k * k * reaction_coefficients(sys, r, mid).b_hat1 / V;
          const bool with_b0 = variant == FpeVariant::Corrected;
          const double integral = integrate_gl(
              [&](double t) {
                const auto rc = reaction_coefficients(sys, r, along(t));
                return (rc.a_hat + (with_b0 ? rc.b_hat0 / V : 0.0)) / rc.b_hat1;
              },
              0.0, h, 16);
          e.dpsi = V / k * integral;
          break;
        }
      }
      const double w = e.D / (h * h);
      const double bp = bernoulli(e.dpsi), bm = bernoulli(-e.dpsi);
      trip.emplace_back(x, y, w * bm);
      trip.emplace_back(x, x, -w * bp);
      trip.emplace_back(y, x, w * bp);
      trip.emplace_back(y, y, -w * bm);
      m.edges.push_back(e);
    }
  }
  m.L.resize(grid.size(), grid.size());
  m.L.setFromTriplets(trip.begin(), trip.end());
  return m;
}

double relative_stationarity_residual(const FpeModel& m, const Eigen::VectorXd& rho) {
  const Eigen::VectorXd res = m.L * rho;
  Eigen::SparseMatrix<double> absL = m.L.cwiseAbs();
  const Eigen::VectorXd scale = absL * rho.cwiseAbs();
  double worst = 0.0;
  const double floor = scale.maxCoeff() * 1e-300;
  for (Eigen::Index i = 0; i < res.size(); ++i) worst = std::max(worst, std::abs(res(i)) / std::max(scale.maxCoeff(), floor));
  return worst;
}

FpeSolution solve_fpe(const FpeModel& m, const Eigen::VectorXd& rho0, const std::vector<double>& times, double dt) {
  if (static_cast<std::size_t>(rho0.size()) != m.grid.size()) throw std::invalid_argument("solve_fpe: size mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("solve_fpe: step must be positive");
  std::vector<double> ts = times;
  std::sort(ts.begin(), ts.end());
  FpeSolution sol;
  Eigen::VectorXd rho = rho0;
  double t = 0.0;
  double cached_dt = -1.0;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  Eigen::SparseMatrix<double> Id(m.grid.size(), m.grid.size());
  Id.setIdentity();
  const double vol = m.grid.cell_volume();
  sol.min_value = rho.minCoeff();
  for (double target : ts) {
    const double span = target - t;
    if (span > 0.0) {
      const int n = static_cast<int>(std::ceil(span / dt - 1e-9));
      const double step = span / n;
      if (std::abs(step - cached_dt) > 1e-15 * step) {
        Eigen::SparseMatrix<double> A = Id - step * m.L;
        lu.compute(A);
        if (lu.info() != Eigen::Success) throw std::runtime_error("solve_fpe: factorization failed");
        cached_dt = step;
      }
      for (int s = 0; s < n; ++s) {
        const double before = rho.sum() * vol;
        rho = lu.solve(rho);
        sol.max_mass_drift = std::max(sol.max_mass_drift, std::abs(rho.sum() * vol - before));
        sol.min_value = std::min(sol.min_value, rho.minCoeff());
      }
    }
    t = target;
    sol.times.push_back(t);
    sol.states.push_back(rho);
  }
  return sol;
}

Eigen::VectorXd stationary_density(const FpeModel& m) {
  const std::size_t n = m.grid.size();
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < m.L.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m.L, k); it; ++it)
      if (it.row() != 0) trip.emplace_back(it.row(), it.col(), it.value());
  const double vol = m.grid.cell_volume();
  for (std::size_t j = 0; j < n; ++j) trip.emplace_back(0, j, vol);
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(0) = 1.0;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw std::runtime_error("stationary_density: singular operator");
  return lu.solve(rhs);
}

// ------------------------------------------------- higher-order coefficients

double upsilon1(double A, double B) {
  const double L0 = log_mean(A, B);
  const double u = (A - B) / (A + B);
  if (std::abs(u) < 1e-3) {
    const double u2 = u * u;
    return L0 * u * (1.0 / 6.0 + u2 * (2.0 / 45.0 + u2 * 22.0 / 945.0));
  }
  return L0 * (A + B - 2.0 * L0) / (2.0 * (A - B));
}

std::vector<HigherOrderCoefficients> higher_order_coefficients(const RreSystem& sys, const Eigen::VectorXd& c, double V,
                                                               double theta1, double theta2) {
  if (!(0.0 < theta1 && theta1 < theta2 && theta2 < 1.0))
    throw std::invalid_argument("higher_order_coefficients: need 0 < theta1 < theta2 < 1");
  if (!(c.minCoeff() > 0.0)) throw std::domain_error("higher_order_coefficients: requires c > 0");
  std::vector<HigherOrderCoefficients> out;
  for (std::size_t r = 0; r < sys.R(); ++r) {
    const Reaction& rx = sys.net.reactions[r];
    const double A = rx.k_fw * monomial(c, rx.alpha);
    const double B = rx.k_bw * monomial(c, rx.beta);
    double acb = 0.0, grad_E = 0.0, grad_E1 = 0.0;
    for (std::size_t i = 0; i < sys.I(); ++i) {
      const int gi = rx.alpha[i] - rx.beta[i];
      acb += rx.alpha[i] * rx.beta[i] / c(i);
      grad_E += gi * std::log(c(i) / sys.c_star()(i));
      grad_E1 += 0.5 * gi * V / (V * c(i) + 1.0 / 6.0);
    }
    HigherOrderCoefficients h;
    h.Lambda0 = log_mean(A, B);
    h.Upsilon0 = -0.5 * h.Lambda0 * acb;
    h.Upsilon1 = upsilon1(A, B);
    h.Upsilon2 = h.Lambda0 * acb * acb / (16.0 * (1.0 - theta2));
    h.Upsilon3 = h.Upsilon1 * h.Upsilon1 / (4.0 * theta1 * h.Lambda0);
    h.b_hat1 = 0.5 * (A + B);
    h.b_hat1_identity = h.Lambda0 + h.Upsilon1 * grad_E;
    const double g = grad_E + grad_E1 / V;

    auto refresh = [&]() {
      h.Lambda_Upsilon = h.Lambda0 + h.Upsilon0 / V + h.Upsilon2 / (V * V);
      h.a0 = h.Lambda_Upsilon * g;
      h.a1 = h.Lambda_Upsilon + h.Upsilon1 * g;
      h.a2 = h.Upsilon1 + h.Upsilon3 * g;
      h.a3 = h.Upsilon3;
    };
    refresh();
    // a1 + 2 a2 q + 3 a3 q^2 >= 0 for all q; only a1 moves with Upsilon2.
    double need = 0.0;
    if (h.a3 > 0.0) {
      need = h.a2 * h.a2 / (3.0 * h.a3) * (1.0 + 1e-12);
    } else if (h.a2 != 0.0) {
      throw std::runtime_error("higher_order_coefficients: cannot monotonize at reaction " + std::to_string(r));
    }
    if (h.a1 < need) {
      h.Upsilon2 += (need - h.a1) * V * V;
      h.enlarged = true;
      refresh();
    }
    if (!std::isfinite(h.a0) || !std::isfinite(h.a1) || !std::isfinite(h.a2) || !std::isfinite(h.a3))
      throw std::runtime_error("higher_order_coefficients: non-finite coefficient at reaction " + std::to_string(r));
    h.monotone = h.a3 > 0.0 ? (h.a1 > 0.0 && h.a2 * h.a2 <= 3.0 * h.a1 * h.a3 * (1.0 + 1e-10)) : (h.a2 == 0.0 && h.a1 >= 0.0);
    h.coercive = h.Lambda_Upsilon >= theta2 * h.Lambda0 * (1.0 - 1e-12) &&
                 4.0 * theta1 * h.Lambda0 * h.Upsilon3 >= h.Upsilon1 * h.Upsilon1 * (1.0 - 1e-12);
    out.push_back(h);
  }
  return out;
}

// ---------------------------------------------------------- moment closure

GaussianMoments gaussian_moment_flow(const RreSystem& sys, MomentKind kind, double V, const Eigen::VectorXd& a0,
                                     const Eigen::MatrixXd& A0, const std::vector<double>& times, double tol) {
  const Eigen::Index I = static_cast<Eigen::Index>(sys.I());
  if (a0.size() != I || A0.rows() != I || A0.cols() != I) throw std::invalid_argument("gaussian_moment_flow: dimensions");
  Eigen::VectorXd y0(I + I * I);
  y0.head(I) = a0;
  y0.tail(I * I) = Eigen::Map<const Eigen::VectorXd>(A0.data(), I * I);
  auto rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    const Eigen::VectorXd a = y.head(I);
    const Eigen::Map<const Eigen::MatrixXd> A(y.data() + I, I, I);
    const Eigen::MatrixXd J = mass_action_jacobian(sys.net, a);
    dy.resize(y.size());
    Eigen::MatrixXd M;
    if (kind == MomentKind::CLE) {
      dy.head(I) = -mass_action_rate(sys.net, a);
      M = cle_matrix(sys, a);
    } else {
      dy.head(I) = -mass_action_rate(sys.net, a) + onsager_divergence(sys, a) / V;
      M = onsager_matrix(sys, a);
    }
    const Eigen::MatrixXd dA = -J * A - A * J.transpose() + 2.0 * M;
    dy.tail(I * I) = Eigen::Map<const Eigen::VectorXd>(dA.data(), I * I);
  };
  std::vector<double> ts = times;
  std::sort(ts.begin(), ts.end());
  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = tol;
  GaussianMoments out;
  OdeResult res;
  try {
    res = dopri5(rhs, 0.0, y0, ts.empty() ? 0.0 : ts.back(), opt, ts);
  } catch (const std::exception& e) {
    out.ok = false;
    out.message = e.what();
    return out;
  }
  for (std::size_t k = 0; k < res.t.size(); ++k) {
    const Eigen::VectorXd& y = res.y[k];
    Eigen::MatrixXd A = Eigen::Map<const Eigen::MatrixXd>(y.data() + I, I, I);
    A = 0.5 * (A + A.transpose());
    const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A).eigenvalues().minCoeff();
    if (lmin < -1e-10 * std::max(1.0, A.norm())) {
      out.ok = false;
      out.message = "covariance lost positive semidefiniteness at t=" + fmt_num(res.t[k]);
      break;
    }
    out.times.push_back(res.t[k]);
    out.mean.push_back(y.head(I));
    out.cov.push_back(A);
  }
  if (!res.ok) {
    out.ok = false;
    out.message = res.message;
  }
  return out;
}

// ------------------------------------------------------- model comparison

double birth_death_cle_potential(double a_rate, double b_rate, double V, double c) {
  const double cs = a_rate / b_rate;
  return 2.0 * (c - cs) - (4.0 * a_rate / b_rate - 1.0 / V) * std::log((a_rate + b_rate * c) / (a_rate + b_rate * cs));
}

std::string ComparisonReport::csv() const {
  CsvTable tab({"t", "model", "mean", "variance"});
  for (const auto& s : series)
    for (std::size_t k = 0; k < times.size(); ++k) tab.add_row({fmt_num(times[k]), s.model, fmt_num(s.mean[k]), fmt_num(s.variance[k])});
  return tab.str();
}

std::string ComparisonReport::json() const {
  nlohmann::json j;
  j["a"] = a;
  j["b"] = b;
  j["V"] = V;
  j["c0"] = c0;
  j["tail"]["c"] = tail_c;
  j["tail"]["slope_fp"] = tail_slope_fp;
  j["tail"]["slope_cle"] = tail_slope_cle;
  j["simple_stationarity_residual"] = simple_stationarity;
  j["cle_equilibrium_sup_error"] = cle_equilibrium_sup_error;
  j["max_relative_log_mean_gap"] = max_log_mean_gap;
  j["cme_mean_error"] = cme_mean_error;
  j["cle_gaussian_mean_gap"] = cle_mean_gap;
  j["cle_gaussian_variance_gap"] = cle_var_gap;
  j["fp_pde_mass_drift"] = fp_pde_mass_drift;
  return j.dump(2);
}

ComparisonReport compare_birth_death_models(double a_rate, double b_rate, double V, const std::vector<double>& t_grid, double c0) {
  if (!(a_rate > 0.0 && b_rate > 0.0)) throw std::invalid_argument("compare_birth_death_models: rates must be positive");
  if (!(c0 > 0.0)) throw std::invalid_argument("compare_birth_death_models: initial concentration must be positive");
  ComparisonReport rep;
  rep.a = a_rate;
  rep.b = b_rate;
  rep.V = V;
  rep.c0 = c0;
  rep.times = t_grid;
  std::sort(rep.times.begin(), rep.times.end());
  const auto& ts = rep.times;

  const ReactionNetwork net = make_network({"X"}, {Reaction{{1}, {0}, b_rate, a_rate}});
  const RreSystem sys = make_rre_system(net);
  const double cs = a_rate / b_rate;
  auto exact = [&](double t) { return cs + (c0 - cs) * std::exp(-b_rate * t); };

  // Master equation
  Eigen::VectorXd cbox(1);
  cbox << std::max(c0, cs);
  const LatticeBox box = poisson_box(cbox, V, 1e-14);
  const TruncatedCme cme = assemble_generator(net, box, &sys.db);
  Eigen::VectorXd cinit(1);
  cinit << c0;
  const Eigen::VectorXd u0 = poisson_weights(box, cinit, true);
  CmeSolveOptions so;
  so.tol = 1e-14;
  const CmeSolution sol = solve_cme(cme, u0, ts, so);
  ModelSeries s_cme{"CME", {}, {}}, s_lio{"Lio", {}, {}};
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const Moments m = moments(cme, sol.states[k]);
    s_cme.mean.push_back(m.e_hat(0));
    s_cme.variance.push_back(m.v_hat(0, 0));
    rep.cme_mean_error = std::max(rep.cme_mean_error, std::abs(m.e_hat(0) - exact(ts[k])));
    s_lio.mean.push_back(exact(ts[k]));
    s_lio.variance.push_back(0.0);
  }

  // Gaussian closures started from the Poisson moments
  Eigen::MatrixXd A0(1, 1);
  A0 << c0;
  const GaussianMoments g_cle = gaussian_moment_flow(sys, MomentKind::CLE, V, cinit, A0, ts);
  const GaussianMoments g_fp = gaussian_moment_flow(sys, MomentKind::FP, V, cinit, A0, ts);
  if (!g_cle.ok || !g_fp.ok) throw std::runtime_error("compare_birth_death_models: moment closure failed");
  ModelSeries s_gcle{"FP_CLE_gauss", {}, {}}, s_gfp{"FP_gauss", {}, {}};
  for (std::size_t k = 0; k < ts.size(); ++k) {
    s_gcle.mean.push_back(g_cle.mean[k](0));
    s_gcle.variance.push_back(g_cle.cov[k](0, 0) / V);
    s_gfp.mean.push_back(g_fp.mean[k](0));
    s_gfp.variance.push_back(g_fp.cov[k](0, 0) / V);
    rep.cle_mean_gap = std::max(rep.cle_mean_gap, std::abs(g_cle.mean[k](0) - s_cme.mean[k]));
    rep.cle_var_gap = std::max(rep.cle_var_gap, std::abs(g_cle.cov[k](0, 0) / V - s_cme.variance[k]));
  }

  // PDE solves on the refined cube grid
  const GridDensity rho0 = embed(box, u0, 4);
  const FpeModel fp = build_fpe(sys, V, FpeVariant::Simple, rho0.grid);
  const FpeModel cle = build_fpe(sys, V, FpeVariant::CLE, rho0.grid);
  const FpeSolution p_fp = solve_fpe(fp, rho0.values, ts, 1e-3);
  const FpeSolution p_cle = solve_fpe(cle, rho0.values, ts, 1e-3);
  rep.fp_pde_mass_drift = std::max(p_fp.max_mass_drift, p_cle.max_mass_drift);
  ModelSeries s_pfp{"FP_pde", {}, {}}, s_pcle{"FP_CLE_pde", {}, {}};
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const GridDensity d1{rho0.grid, p_fp.states[k]}, d2{rho0.grid, p_cle.states[k]};
    s_pfp.mean.push_back(d1.mean()(0));
    s_pfp.variance.push_back(d1.covariance()(0, 0));
    s_pcle.mean.push_back(d2.mean()(0));
    s_pcle.variance.push_back(d2.covariance()(0, 0));
  }
  rep.series = {s_cme, s_lio, s_gfp, s_gcle, s_pfp, s_pcle};

  // Equilibria on the same grid
  Eigen::VectorXd simple_eq(fp.grid.size()), cle_ref(fp.grid.size());
  for (std::size_t k = 0; k < fp.grid.size(); ++k) {
    const Eigen::VectorXd c = fp.grid.center(k);
    simple_eq(k) = std::exp(-V * entropy(sys, c));
    cle_ref(k) = std::exp(-V * birth_death_cle_potential(a_rate, b_rate, V, c(0)));
  }
  rep.simple_stationarity = relative_stationarity_residual(fp, simple_eq);
  cle_ref /= cle_ref.sum() * fp.grid.cell_volume();
  const Eigen::VectorXd cle_eq = stationary_density(cle);
  rep.cle_equilibrium_sup_error = (cle_eq - cle_ref).cwiseAbs().maxCoeff();

  // Tail slopes -d log rho / dc read off the discrete potential differences
  const RectGrid wide({0.0}, {41.0}, {4100});
  const FpeModel fp_w = build_fpe(sys, V, FpeVariant::Simple, wide);
  const FpeModel cle_w = build_fpe(sys, V, FpeVariant::CLE, wide);
  for (double c : {5.0, 10.0, 20.0, 40.0}) {
    auto slope = [&](const FpeModel& m) {
      double best = 1e300, val = 0.0;
      for (const auto& e : m.edges) {
        const double mid = 0.5 * (m.grid.center(e.x)(0) + m.grid.center(e.y)(0));
        const double dir = m.grid.center(e.y)(0) - m.grid.center(e.x)(0);
        if (std::abs(mid - c) < best) {
          best = std::abs(mid - c);
          val = e.dpsi / dir;
        }
      }
      return val;
    };
    rep.tail_c.push_back(c);
    rep.tail_slope_fp.push_back(slope(fp_w));
    rep.tail_slope_cle.push_back(slope(cle_w));
  }

  for (int k = 0; k <= 10000; ++k) {
    const double c = 1.0 / 3.0 + (3.0 - 1.0 / 3.0) * k / 10000.0;
    const double am = 0.5 * (1.0 + c);
    rep.max_log_mean_gap = std::max(rep.max_log_mean_gap, std::abs(log_mean(1.0, c) - am) / am);
  }
  return rep;
}

}  // namespace crn
