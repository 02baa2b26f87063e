#include "crn/scalebridge.hpp"

#include "crn/io.hpp"
#include "crn/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crn {

void ParticleEnsemble::validate() const {
  if (weights.size() != points.size() || weights.empty()) throw std::invalid_argument("ParticleEnsemble: malformed");
  double s = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("ParticleEnsemble: weights must be positive");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("ParticleEnsemble: weights must sum to one");
}

GridDensity embed(const LatticeBox& box, const Eigen::VectorXd& u, int refine) {
  if (static_cast<std::size_t>(u.size()) != box.size()) throw std::invalid_argument("embed: size mismatch");
  if (refine < 1) throw std::invalid_argument("embed: refine must be >= 1");
  const std::size_t I = box.dim();
  std::vector<double> lo(I, 0.0), hi(I);
  std::vector<int> cells(I);
  for (std::size_t i = 0; i < I; ++i) {
    hi[i] = (box.n_max()[i] + 1) / box.V();
    cells[i] = (box.n_max()[i] + 1) * refine;
  }
  GridDensity rho{RectGrid(lo, hi, cells), Eigen::VectorXd(0)};
  rho.values.resize(rho.grid.size());
  const double scale = std::pow(box.V(), static_cast<double>(I));
  for (std::size_t k = 0; k < rho.grid.size(); ++k) {
    auto idx = rho.grid.multi(k);
    for (auto& x : idx) x /= refine;
    rho.values(k) = scale * u(box.flat(idx));
  }
  return rho;
}

namespace {

// Overlaps of [x0, x1) with the lattice cubes [j/V, (j+1)/V) as (j, length).
std::vector<std::pair<int, double>> cube_overlaps(double x0, double x1, double V) {
  auto snap = [](double s) {
    const double r = std::round(s);
    return std::abs(s - r) < 1e-9 ? r : s;
  };
  const double s0 = snap(x0 * V), s1 = snap(x1 * V);
  std::vector<std::pair<int, double>> out;
  for (int j = static_cast<int>(std::floor(s0)); j < s1; ++j) {
    const double a = std::max(s0, static_cast<double>(j)), b = std::min(s1, j + 1.0);
    if (b > a) out.emplace_back(j, (b - a) / V);
  }
  return out;
}

}  // namespace

Eigen::VectorXd project(const GridDensity& rho, const LatticeBox& box, double slack) {
  const std::size_t I = box.dim();
  if (rho.grid.dim() != I) throw std::invalid_argument("project: dimension mismatch");
  Eigen::VectorXd u = Eigen::VectorXd::Zero(box.size());
  double outside = 0.0, total = 0.0;
  for (std::size_t k = 0; k < rho.grid.size(); ++k) {
    if (rho.values(k) == 0.0) continue;
    const auto idx = rho.grid.multi(k);
    std::vector<std::vector<std::pair<int, double>>> ov(I);
    for (std::size_t a = 0; a < I; ++a) {
      const double x0 = rho.grid.lo(a) + idx[a] * rho.grid.h(a);
      ov[a] = cube_overlaps(x0, x0 + rho.grid.h(a), box.V());
    }
    std::vector<std::size_t> pos(I, 0);
    while (true) {
      IntVec n(I);
      double vol = 1.0;
      for (std::size_t a = 0; a < I; ++a) {
        n[a] = ov[a][pos[a]].first;
        vol *= ov[a][pos[a]].second;
      }
      const double m = rho.values(k) * vol;
      total += m;
      if (box.contains(n)) {
        u(box.flat(n)) += m;
      } else {
        outside += std::abs(m);
      }
      std::size_t a = I;
      while (a-- > 0) {
        if (++pos[a] < ov[a].size()) break;
        pos[a] = 0;
      }
      if (a == static_cast<std::size_t>(-1)) break;
    }
  }
  if (outside > slack * std::max(1.0, std::abs(total)))
    throw std::runtime_error("project: window too small, mass outside the box " + fmt_num(outside));
  return u;
}

Eigen::VectorXd dual_embed(const std::function<double(const Eigen::VectorXd&)>& xi, const LatticeBox& box, int points) {
  const QuadRule& q = gauss_legendre01(points);
  const std::size_t I = box.dim();
  const std::size_t np = q.x.size();
  Eigen::VectorXd out(box.size());
  Eigen::VectorXd c(I);
  for (std::size_t k = 0; k < box.size(); ++k) {
    const IntVec n = box.multi(k);
    std::vector<std::size_t> pos(I, 0);
    double s = 0.0;
    while (true) {
      double w = 1.0;
      for (std::size_t a = 0; a < I; ++a) {
        c(a) = (n[a] + q.x[pos[a]]) / box.V();
        w *= q.w[pos[a]];
      }
      s += w * xi(c);
      std::size_t a = I;
      while (a-- > 0) {
        if (++pos[a] < np) break;
        pos[a] = 0;
      }
      if (a == static_cast<std::size_t>(-1)) break;
    }
    out(k) = s;
  }
  return out;
}

double stirling_entropy_density(const Eigen::VectorXd& c, double V, const Eigen::VectorXd& c_star) {
  const std::size_t I = static_cast<std::size_t>(c.size());
  double log_w = 0.0;
  for (std::size_t i = 0; i < I; ++i) {
    if (c(i) < 0.0) throw std::domain_error("stirling_entropy_density: negative concentration");
    const double n = std::floor(c(i) * V);
    const double lam = V * c_star(i);
    log_w += n * std::log(lam) - lam - std::lgamma(n + 1.0);
  }
  return -static_cast<double>(I) * std::log(V) / V - log_w / V;
}

double grid_entropy(const GridDensity& rho, double V, const Eigen::VectorXd& c_star) {
  double s = 0.0;
  for (std::size_t k = 0; k < rho.grid.size(); ++k) {
    const double r = rho.values(k);
    if (r <= 0.0) continue;
    s += r * std::log(r) / V + r * stirling_entropy_density(rho.grid.center(k), V, c_star);
  }
  return s * rho.grid.cell_volume();
}

namespace {

// int f drho with a 4-point tensor Gauss rule in every cell.
double cell_quadrature(const GridDensity& rho, const std::function<double(const Eigen::VectorXd&)>& f) {
  const QuadRule& q = gauss_legendre01(4);
  const std::size_t I = rho.grid.dim();
  Eigen::VectorXd c(I);
  double total = 0.0;
  for (std::size_t k = 0; k < rho.grid.size(); ++k) {
    if (rho.values(k) == 0.0) continue;
    const auto idx = rho.grid.multi(k);
    std::vector<std::size_t> pos(I, 0);
    double s = 0.0;
    while (true) {
      double w = 1.0;
      for (std::size_t a = 0; a < I; ++a) {
        c(a) = rho.grid.lo(a) + (idx[a] + q.x[pos[a]]) * rho.grid.h(a);
        w *= q.w[pos[a]];
      }
      s += w * f(c);
      std::size_t a = I;
      while (a-- > 0) {
        if (++pos[a] < q.x.size()) break;
        pos[a] = 0;
      }
      if (a == static_cast<std::size_t>(-1)) break;
    }
    total += rho.values(k) * s;
  }
  return total * rho.grid.cell_volume();
}

double point_dissipation(const RreSystem& sys, const Eigen::VectorXd& c) {
  Eigen::VectorXd a, b;
  normalized_monomials(sys, c, a, b);
  double s = 0.0;
  for (std::size_t r = 0; r < sys.R(); ++r) s += sys.kappa_star()(r) * G(a(r), b(r));
  return s;
}

}  // namespace

double limit_energy(const GridDensity& rho, const RreSystem& sys) {
  return cell_quadrature(rho, [&](const Eigen::VectorXd& c) { return entropy(sys, c); });
}

double limit_energy(const ParticleEnsemble& ens, const RreSystem& sys) {
  ens.validate();
  double s = 0.0;
  for (std::size_t k = 0; k < ens.points.size(); ++k) s += ens.weights[k] * entropy(sys, ens.points[k]);
  return s;
}

double liouville_dissipation(const ParticleEnsemble& ens, const RreSystem& sys) {
  ens.validate();
  double s = 0.0;
  for (std::size_t k = 0; k < ens.points.size(); ++k) s += ens.weights[k] * point_dissipation(sys, ens.points[k]);
  return 0.5 * s;
}

double liouville_dissipation(const GridDensity& rho, const RreSystem& sys) {
  return 0.5 * cell_quadrature(rho, [&](const Eigen::VectorXd& c) { return point_dissipation(sys, c); });
}

double liouville_dual_potential(const ParticleEnsemble& ens, const RreSystem& sys,
                                const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad_xi) {
  ens.validate();
  double s = 0.0;
  for (std::size_t k = 0; k < ens.points.size(); ++k) {
    const Eigen::VectorXd g = grad_xi(ens.points[k]);
    s += ens.weights[k] * g.dot(onsager_matrix(sys, ens.points[k]) * g);
  }
  return 0.5 * s;
}

LiouvilleTrajectory solve_liouville(const RreSystem& sys, const ParticleEnsemble& rho0, const std::vector<double>& times,
                                    double tol, int quad_steps) {
  rho0.validate();
  for (const auto& p : rho0.points)
    if (!(p.minCoeff() > 0.0)) throw std::invalid_argument("solve_liouville: atoms must lie in the interior");
  std::vector<double> req = times;
  std::sort(req.begin(), req.end());
  const double T = req.empty() ? 0.0 : req.back();
  std::vector<double> grid;
  for (int j = 0; j <= quad_steps; ++j) grid.push_back(T * j / quad_steps);
  grid.insert(grid.end(), req.begin(), req.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(), [](double a, double b) { return std::abs(a - b) < 1e-14; }), grid.end());
  // Interleave midpoints so each interval is integrated by Simpson's rule.
  std::vector<double> fine;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (j > 0) fine.push_back(0.5 * (grid[j - 1] + grid[j]));
    fine.push_back(grid[j]);
  }

  RreOptions opt;
  opt.tol = tol;
  opt.output_times = fine;
  std::vector<Trajectory> paths;
  for (const auto& p : rho0.points) {
    paths.push_back(integrate_rre(sys.net, p, T, opt, &sys));
    if (!paths.back().ok) throw std::runtime_error("solve_liouville: " + paths.back().message);
  }

  LiouvilleTrajectory out;
  double acc = 0.0, E0 = 0.0, prev_d = 0.0, mid_d = 0.0;
  std::size_t next = 0;
  for (std::size_t j = 0; j < fine.size(); ++j) {
    ParticleEnsemble ens{rho0.weights, {}};
    for (const auto& tr : paths) ens.points.push_back(tr.states[j]);
    const double d = 2.0 * liouville_dissipation(ens, sys);
    if (j % 2 == 1) {
      mid_d = d;
      continue;
    }
    const double E = limit_energy(ens, sys);
    if (j == 0) {
      E0 = E;
    } else {
      acc += (fine[j] - fine[j - 2]) / 6.0 * (prev_d + 4.0 * mid_d + d);
    }
    prev_d = d;
    while (next < req.size() && std::abs(req[next] - fine[j]) < 1e-14) {
      out.times.push_back(req[next++]);
      out.states.push_back(ens);
      out.energy.push_back(E);
      out.dissipation.push_back(d);
      out.residual.push_back(E - E0 + acc);
    }
  }
  return out;
}

std::string AuditSeries::csv() const {
  CsvTable tab({"t", "E_V", "dissipation", "residual"});
  for (std::size_t k = 0; k < t.size(); ++k) tab.add_row(std::vector<double>{t[k], energy[k], dissipation[k], residual[k]});
  return tab.str();
}

AuditSeries cme_energy_audit(const TruncatedCme& cme, const CmeSolution& sol) {
  AuditSeries a;
  double acc = 0.0, leak = 0.0;
  for (std::size_t k = 0; k < sol.times.size(); ++k) {
    const Eigen::VectorXd& u = sol.states[k];
    if (!(u.minCoeff() > 0.0)) throw std::runtime_error("cme_energy_audit: zero-mass states encountered");
    const double E = cme_entropy(cme, u);
    const double d = 2.0 * cme_dissipation(cme, u);
    const double lf = cme.leak_flux(u);
    if (k > 0) {
      const double dt = sol.times[k] - sol.times[k - 1];
      acc += 0.5 * dt * (d + a.dissipation.back());
      leak += 0.5 * dt * (lf + cme.leak_flux(sol.states[k - 1]));
    }
    a.t.push_back(sol.times[k]);
    a.energy.push_back(E);
    a.dissipation.push_back(d);
    a.residual.push_back(E - a.energy.front() + acc);
    a.leak.push_back(leak);
  }
  return a;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need two or more points");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += std::log(x[k]) / n;
    my += std::log(y[k]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = std::log(x[k]) - mx;
    sxy += dx * (std::log(y[k]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

std::string ConvergenceTable::csv() const {
  CsvTable tab({"V", "mean_err", "energy_err", "slope_estimate"});
  for (const auto& r : rows) tab.add_row(std::vector<double>{r.V, r.mean_err, r.energy_err, slope});
  return tab.str();
}

ConvergenceTable convergence_experiment(const RreSystem& sys, const Eigen::VectorXd& c0, double t_eval,
                                        const std::vector<double>& V_list) {
  if (V_list.empty()) throw std::invalid_argument("convergence_experiment: empty volume list");
  RreOptions opt;
  opt.tol = 1e-12;
  const Trajectory path = integrate_rre(sys.net, c0, t_eval, opt, &sys);
  Eigen::VectorXd cmax = sys.c_star();
  for (const auto& c : path.states) cmax = cmax.cwiseMax(c);
  const Eigen::VectorXd c_t = path.states.back();
  const double E_t = entropy(sys, c_t);

  ConvergenceTable table;
  std::vector<double> Vs, errs;
  for (double V : V_list) {
    const LatticeBox box = poisson_box(cmax, V, 1e-13);
    const TruncatedCme cme = assemble_generator(sys.net, box, &sys.db);
    const Eigen::VectorXd u0 = poisson_weights(box, c0, true);
    CmeSolveOptions so;
    so.tol = 1e-13;
    const CmeSolution sol = solve_cme(cme, u0, {t_eval}, so);
    const Eigen::VectorXd& u = sol.states.back();
    const Moments m = moments(cme, u);
    const Eigen::VectorXd mean = m.e_hat.array() + 0.5 / V;  // mean of the cube-embedded density
    ConvergenceRow row;
    row.V = V;
    row.mean_err = (mean - c_t).cwiseAbs().maxCoeff();
    row.energy_err = std::abs(cme_entropy(cme, u) - E_t);
    table.rows.push_back(row);
    Vs.push_back(V);
    errs.push_back(row.mean_err);
  }
  table.slope = Vs.size() >= 2 ? loglog_slope(Vs, errs) : 0.0;
  return table;
}

double stirling_bound_constant(const RreSystem& sys, double V, const std::vector<Eigen::VectorXd>& samples) {
  double K = 0.0;
  for (const auto& c : samples) {
    const double E = entropy(sys, c);
    const double gap = std::abs(stirling_entropy_density(c, V, sys.c_star()) - E);
    K = std::max(K, gap * V / (std::log(V) + E));
  }
  return K;
}

}  // namespace crn
