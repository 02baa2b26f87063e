#include "doctest.h"
#include "test_util.hpp"

#include "crn/hybrid.hpp"
#include "crn/kernels.hpp"

#include <cmath>
#include <random>

using namespace crn;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> t(n);
  for (int k = 0; k < n; ++k) t[k] = a + (b - a) * k / (n - 1);
  return t;
}

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = g(rng);
  return B * B.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("reduced dual potential with the identity map") {
  std::mt19937_64 rng(71);
  const Eigen::MatrixXd M = random_spd(rng, 4);
  const Eigen::VectorXd eta = Eigen::VectorXd::LinSpaced(4, -1.0, 2.0);
  const ReductionResult r = reduce_dual_potential({M, Eigen::MatrixXd::Identity(4, 4), eta});
  const double expect = 0.5 * eta.dot(M.llt().solve(eta));
  REQUIRE(r.feasible);
  CHECK(r.constrained_min == doctest::Approx(expect).epsilon(1e-12));
  CHECK(r.pullback_dual == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("reduced dual potential against the normal equations") {
  // Both sides equal 1/2 eta . (A^T M A)^{-1} eta when A has full column rank
  std::mt19937_64 rng(72);
  std::normal_distribution<double> g;
  for (int k = 0; k < 20; ++k) {
    const int n = 5 + k % 3, m = 1 + k % 4;
    const Eigen::MatrixXd M = random_spd(rng, n);
    Eigen::MatrixXd A(n, m);
    Eigen::VectorXd eta(m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) A(i, j) = g(rng);
    for (int j = 0; j < m; ++j) eta(j) = g(rng);
    const Eigen::MatrixXd S = A.transpose() * M * A;
    const double expect = 0.5 * eta.dot(S.ldlt().solve(eta));
    const ReductionResult r = reduce_dual_potential({M, A, eta});
    REQUIRE(r.feasible);
    CHECK(r.constrained_min == doctest::Approx(expect).epsilon(1e-9));
    CHECK(r.pullback_dual == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("reduced dual potential with a rank-deficient map") {
  Eigen::MatrixXd A(4, 2);
  A << 1, 2, 0, 0, -1, -2, 3, 6;  // second column is twice the first
  Eigen::VectorXd ok(2), bad(2);
  ok << 1.0, 2.0;
  bad << 1.0, 0.0;
  const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(4, 4);
  const ReductionResult r1 = reduce_dual_potential({M, A, ok});
  CHECK(r1.feasible);
  // xi = t a1 with |a1|^2 t = 1, so the minimum is 1 / (2 |a1|^2)
  CHECK(r1.constrained_min == doctest::Approx(1.0 / 22.0).epsilon(1e-10));
  CHECK(r1.pullback_dual == doctest::Approx(1.0 / 22.0).epsilon(1e-10));
  const ReductionResult r2 = reduce_dual_potential({M, A, bad});
  CHECK_FALSE(r2.feasible);
  CHECK(std::isinf(r2.constrained_min));
  CHECK(std::isinf(r2.pullback_dual));
  Eigen::MatrixXd nonsym = M;
  nonsym(0, 1) = 0.3;
  CHECK_THROWS(reduce_dual_potential({nonsym, A, ok}));
  CHECK_THROWS(reduce_dual_potential({-M, A, ok}));
}

TEST_CASE("Poisson states reduce to the rate equation") {
  for (const auto& net : {testing::birth_death(1.0, 2.0), testing::dimerization()}) {
    const RreSystem sys = make_rre_system(net);
    Eigen::VectorXd c = sys.c_star() * 1.3;
    const double V = 30.0;
    const LatticeBox box = poisson_box(c.cwiseMax(sys.c_star()), V, 1e-14);
    const PoissonReduction zero = cme_to_rre_reduction(sys, c, Eigen::VectorXd::Zero(sys.I()), V, box);
    CHECK(std::abs(zero.reduced_value) <= 1e-14);
    CHECK(zero.target == 0.0);
    CHECK(zero.entropy_pullback == doctest::Approx(zero.rre_entropy).epsilon(1e-9));
    const Eigen::VectorXd zeta = Eigen::VectorXd::LinSpaced(sys.I(), 0.4, -0.7);
    const PoissonReduction r = cme_to_rre_reduction(sys, c, zeta, V, box);
    CHECK((r.adjoint - zeta).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK(r.reduced_value >= 0.0);
    CHECK(r.target >= 0.0);
    CHECK_THROWS(cme_to_rre_reduction(sys, c, zeta, V + 1.0, box));
    CHECK_THROWS(cme_to_rre_reduction(sys, c * 6.0, zeta, V, box));
  }
}

TEST_CASE("junction integrals Z and A") {
  for (double v : {1.0, 10.0, 100.0, 1000.0}) {
    // Midpoint rule on [0, 12]; the integrand is negligible beyond
    const int n = 400000;
    const double h = 12.0 / n;
    double z = 0.0, zz = 0.0;
    for (int k = 0; k < n; ++k) {
      const double x = (k + 0.5) * h;
      const double f = std::exp(-v * lambda_B(x));
      z += f * h;
      zz += x * f * h;
    }
    CHECK(fp_rr_Z(v) == doctest::Approx(z).epsilon(1e-6));
    CHECK(fp_rr_A(v) == doctest::Approx(zz / z).epsilon(1e-6));
    CHECK(fp_rr_A(v) >= 1.0);
  }
  CHECK(fp_rr_A(10.0) > fp_rr_A(100.0));
  CHECK(std::abs(fp_rr_A(1000.0) - 1.0 - 1.0 / 2000.0) <= 1e-5);
  CHECK_THROWS(fp_rr_Z(0.0));
}

TEST_CASE("junction energy") {
  for (double ratio : {0.5, 2.0}) {
    double prev = 1e300;
    for (double V : {10.0, 100.0, 1000.0, 10000.0}) {
      const double e = fp_rr_e_hat(ratio, 1.0, V);
      CHECK(e >= lambda_B(ratio));
      CHECK(e < prev);
      prev = e;
    }
    CHECK(prev == doctest::Approx(lambda_B(ratio)).epsilon(1e-2));
  }
  CHECK(lambda_B(2.0) == doctest::Approx(0.386294).epsilon(1e-6));
  for (double V : {10.0, 100.0, 1000.0}) CHECK(fp_rr_e_hat(1.0, 1.0, V) >= 0.0);
  CHECK_THROWS(fp_rr_e_hat(-1.0, 1.0, 10.0));
}

TEST_CASE("count-concentration model") {
  const double V = 40.0;
  const int M = 200;
  for (int beta : {1, 2}) {
    // Truncated Poisson(V) with c2 = 1 is an equilibrium for every beta
    CmRrState s;
    s.beta = beta;
    s.c2 = 1.0;
    const auto p = testing::poisson_pmf_table(V, M);
    s.v = Eigen::Map<const Eigen::VectorXd>(p.data(), M + 1);
    s.v /= s.v.sum();
    const Eigen::VectorXd d = cm_rr_rhs(s, V);
    CHECK(d.lpNorm<Eigen::Infinity>() <= 1e-13);
    CHECK(std::abs(cm_rr_energy(s, V)) <= 1e-12);

    // Away from equilibrium: conservation, probability and energy decay
    CmRrState s0;
    s0.beta = beta;
    s0.c2 = 1.4;
    s0.v = Eigen::VectorXd::Zero(M + 1);
    s0.v(10) = 1.0;
    const CmRrTrajectory tr = solve_cm_rr(s0, V, linspace(0.0, 4.0, 41), 1e-11);
    CHECK(tr.max_conservation_drift <= 1e-8);
    CHECK(tr.max_probability_drift <= 1e-9);
    for (std::size_t k = 1; k < tr.energy.size(); ++k) CHECK(tr.energy[k] <= tr.energy[k - 1] + 1e-10);
    // Stoichiometry fixes beta c1 + c2 along the flow
    const double q0 = beta * tr.c1.front() + tr.states.front().c2;
    CHECK(beta * tr.c1.back() + tr.states.back().c2 == doctest::Approx(q0).epsilon(1e-8));
    CHECK(tr.csv().rfind("t,c1,c2,energy", 0) == 0);
  }
  CmRrState bad;
  bad.beta = 0;
  bad.v = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  CHECK_THROWS(solve_cm_rr(bad, V, {0.0, 1.0}));
  bad.beta = 1;
  bad.v = Eigen::VectorXd::Constant(3, 0.5);
  CHECK_THROWS(solve_cm_rr(bad, V, {0.0, 1.0}));
}

TEST_CASE("merged discrete-continuous model") {
  const double a = 1.0, b = 1.0, V = 20.0;
  const int N = 8, per = 2;
  const int cells = static_cast<int>(std::ceil((4.0 - N / V) * V * per));
  const RectGrid grid({N / V}, {N / V + cells / (V * per)}, {cells});
  const MergedModel m = build_merged(a, b, V, N, a, grid);
  REQUIRE(m.size() == static_cast<std::size_t>(N) + grid.size());

  const Eigen::VectorXd w = m.equilibrium();
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK((m.G * w).lpNorm<1>() <= 1e-10);
  CHECK(std::abs(merged_entropy(m, w)) <= 1e-14);
  const Eigen::VectorXd colsum = Eigen::RowVectorXd::Ones(m.size()) * m.G;
  CHECK(colsum.cwiseAbs().maxCoeff() <= 1e-10);
  // Discrete weights are the Poisson weights normalized over the whole model
  for (int n = 1; n < N; ++n) CHECK(m.w_discrete(n) / m.w_discrete(n - 1) == doctest::Approx(V * a / (b * n)).epsilon(1e-12));

  const MergedState st = merged_unpack(m, w);
  CHECK((merged_pack(m, st) - w).lpNorm<Eigen::Infinity>() <= 1e-15);

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(m.size());
  x0(N + 20) = 1.0;
  const MergedTrajectory tr = solve_merged(m, x0, linspace(0.0, 20.0, 21), 1e-3);
  CHECK(tr.max_mass_drift <= 1e-12);
  CHECK(tr.max_entropy_increase <= 1e-12);
  CHECK(std::abs(tr.mean.back() - merged_mean(m, w)) <= 1e-6);
  CHECK(std::abs(merged_mean(m, w) - a / b) <= 2.0 / V);
  for (double r : tr.robin_residual) CHECK(std::isfinite(r));

  const std::string snap = tr.snapshot_csv(m, tr.times.size() - 1);
  CHECK(snap.rfind("# discrete\nn,u\n", 0) == 0);
  CHECK(snap.find("# continuous\nc,U\n") != std::string::npos);
  CHECK(tr.csv().rfind("t,mean,entropy,robin_residual", 0) == 0);

  CHECK_THROWS(build_merged(a, b, V, N, a, RectGrid({0.5}, {4.0}, {140})));          // wrong start
  CHECK_THROWS(build_merged(a, b, V, N, a, RectGrid({N / V}, {4.0}, {20})));        // cells too wide
  CHECK_THROWS(build_merged(a, b, V, 0, a, grid));
  CHECK_THROWS(solve_merged(m, -x0, {0.0, 1.0}, 1e-3));
}

TEST_CASE("density-concentration hybrid") {
  // X1 <-> 2 X2 with X1 resolved by a density
  const RreSystem sys = make_rre_system(testing::dimerization());
  const double V = 150.0;
  Eigen::VectorXd c0(2);
  c0 << 1.4, 0.6;
  const RectGrid grid({0.0}, {3.0}, {300});
  FpRrState s;
  s.J = 1;
  s.rho_s.grid = grid;
  s.rho_s.values.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double x = grid.center(k)(0);
    s.rho_s.values(k) = std::exp(-V * (x - c0(0)) * (x - c0(0)) / (2.0 * c0(0)));
  }
  s.rho_s.normalize();
  s.c_m = c0.tail(1);
  const auto times = linspace(0.0, 2.0, 21);
  const FpRrTrajectory tr = solve_fp_rr(sys, s, V, times, 1e-3);
  CHECK(tr.max_energy_increase <= 1e-12);
  CHECK(tr.max_mass_drift <= 1e-12);
  CHECK(tr.max_conservation_drift <= 1e-10);
  for (std::size_t k = 1; k < tr.energy.size(); ++k) CHECK(tr.energy[k] <= tr.energy[k - 1] + 1e-12);

  RreOptions opt;
  opt.tol = 1e-12;
  opt.output_times = times;
  const Trajectory ref = integrate_rre(sys.net, c0, 2.0, opt, &sys);
  double err = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) err = std::max(err, (tr.mean[k] - ref.states[k]).lpNorm<Eigen::Infinity>());
  CHECK(err <= 5.0 / V);
  const std::string csv = tr.csv({"X1", "X2"});
  CHECK(csv.rfind("t,", 0) == 0);

  FpRrState none = s;
  none.J = 0;
  CHECK_THROWS(solve_fp_rr(sys, none, V, times, 1e-3));
  FpRrState unnormalized = s;
  unnormalized.rho_s.values *= 2.0;
  CHECK_THROWS(solve_fp_rr(sys, unnormalized, V, times, 1e-3));
}
