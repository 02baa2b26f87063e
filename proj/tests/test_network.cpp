#include "doctest.h"
#include "test_util.hpp"

#include "crn/network.hpp"
#include "crn/rre.hpp"

#include "json.hpp"

#include <algorithm>
#include <numeric>
#include <random>

using namespace crn;

namespace {

// Rational-free rank check: Q W^T = 0 in exact integer arithmetic.
bool annihilates(const StoichiometryReport& st) {
  for (const auto& q : st.Q)
    for (const auto& w : st.W) {
      long long s = 0;
      for (std::size_t i = 0; i < q.size(); ++i) s += q[i] * w[i];
      if (s != 0) return false;
    }
  return true;
}

ReactionNetwork random_network(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> Id(1, 4), Rd(0, 5), coef(0, 3);
  std::uniform_real_distribution<double> rate(0.01, 100.0);
  const int I = Id(rng), R = Rd(rng);
  std::vector<std::string> names;
  for (int i = 0; i < I; ++i) names.push_back("A" + std::to_string(i) + (i % 2 ? "_x" : ""));
  std::vector<Reaction> rx;
  while (static_cast<int>(rx.size()) < R) {
    Reaction r;
    r.alpha.resize(I);
    r.beta.resize(I);
    for (int i = 0; i < I; ++i) {
      r.alpha[i] = coef(rng);
      r.beta[i] = coef(rng);
    }
    if (r.alpha == r.beta) continue;
    r.k_fw = rate(rng);
    r.k_bw = rate(rng);
    rx.push_back(r);
  }
  return make_network(names, rx);
}

}  // namespace

TEST_CASE("parse the water example") {
  const auto net = parse_network("species H2 O2 H2O\n2 H2 + 1 O2 <-> 2 H2O : kf=1, kb=1\n");
  REQUIRE(net.num_species() == 3);
  REQUIRE(net.num_reactions() == 1);
  CHECK(net.reactions[0].alpha == IntVec{2, 1, 0});
  CHECK(net.reactions[0].beta == IntVec{0, 0, 2});
  const auto st = stoichiometric_analysis(net);
  CHECK(st.W == IntMatrix{{2, 1, -2}});
  CHECK(st.m_W == 2);
  CHECK(st.n_W == 0);
  CHECK(annihilates(st));
}

TEST_CASE("parser details and errors") {
  const auto empty = parse_network("species X\n");
  CHECK(empty.num_species() == 1);
  CHECK(empty.num_reactions() == 0);
  const auto st = stoichiometric_analysis(empty);
  CHECK(st.Q == IntMatrix{{1}});
  CHECK(st.n_W == 0);
  CHECK(st.rank == 0);

  const auto n2 = parse_network("# comment\nspecies X Y\n0 <-> X : kf=2, kb=3.5  # trailing\nX + Y <-> 0 : kf=1e-2, kb=4\n");
  CHECK(n2.reactions[0].alpha == IntVec{0, 0});
  CHECK(n2.reactions[0].beta == IntVec{1, 0});
  CHECK(n2.reactions[1].alpha == IntVec{1, 1});
  CHECK(n2.reactions[1].k_fw == 1e-2);

  auto line_of = [](const std::string& text) {
    try {
      parse_network(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("species X\nX <-> Y : kf=1, kb=1\n") == 2);          // unknown species
  CHECK(line_of("species X\n\nX <-> 0 : kf=0, kb=1\n") == 3);        // nonpositive rate
  CHECK(line_of("species X\nX <-> X : kf=1, kb=1\n") == 2);          // alpha == beta
  CHECK(line_of("species X\nX -> 0 : kf=1, kb=1\n") == 2);           // syntax
  CHECK(line_of("species X\nX <-> 0 : kf=1\n") == 2);                // missing rate
  CHECK(line_of("species X X\n") == 1);                              // duplicate
}

TEST_CASE("serialize then parse round trip on fuzzed networks") {
  std::mt19937_64 rng(2024);
  for (int k = 0; k < 100; ++k) {
    const auto net = random_network(rng);
    const auto back = parse_network(serialize_network(net));
    REQUIRE(back.species == net.species);
    REQUIRE(back.num_reactions() == net.num_reactions());
    for (std::size_t r = 0; r < net.num_reactions(); ++r) {
      CHECK(back.reactions[r].alpha == net.reactions[r].alpha);
      CHECK(back.reactions[r].beta == net.reactions[r].beta);
      CHECK(back.reactions[r].k_fw == net.reactions[r].k_fw);
      CHECK(back.reactions[r].k_bw == net.reactions[r].k_bw);
    }
  }
}

TEST_CASE("stoichiometric structure of small networks") {
  const auto ex = testing::example_two_pairs(2.0, 1.0);
  const auto st = stoichiometric_analysis(ex);
  CHECK(st.m_W == 0);
  CHECK(st.n_W == 1);
  CHECK(st.rank == 1);
  REQUIRE(st.kerWT_basis.size() == 1);
  // y . (1, 2) = 0 up to orientation
  CHECK(st.kerWT_basis[0][0] * 1 + st.kerWT_basis[0][1] * 2 == 0);

  const auto dim = parse_network("species X1 X2\nX1 <-> 2 X2 : kf=1, kb=1\n");
  const auto sd = stoichiometric_analysis(dim);
  REQUIRE(sd.m_W == 1);
  Eigen::VectorXd c(2);
  c << 1.0, 1.0;
  const auto tag = conserved_value(sd, c);
  // Q = +-(2, 1): orientation is not fixed, so compare absolute values.
  CHECK(std::abs(tag.q(0)) == doctest::Approx(3.0));
  CHECK_THROWS(conserved_value(sd, Eigen::VectorXd::Ones(3)));
  CHECK(conserved_value(st, Eigen::VectorXd::Ones(1)).q.size() == 0);

  // Dependent reaction vectors give n_W > 0, independent ones n_W = 0.
  const auto indep = parse_network("species A B C\nA <-> B : kf=1, kb=1\nB <-> C : kf=1, kb=1\n");
  CHECK(stoichiometric_analysis(indep).n_W == 0);
  const auto cyc = parse_network("species A B C\nA <-> B : kf=1, kb=1\nB <-> C : kf=1, kb=1\nC <-> A : kf=1, kb=1\n");
  const auto sc = stoichiometric_analysis(cyc);
  CHECK(sc.n_W == 1);
  CHECK(sc.m_W == 1);
}

TEST_CASE("fuzzed networks satisfy rank identities exactly") {
  std::mt19937_64 rng(99);
  for (int k = 0; k < 200; ++k) {
    const auto net = random_network(rng);
    const auto st = stoichiometric_analysis(net);
    CHECK(annihilates(st));
    CHECK(st.rank + st.m_W == static_cast<int>(net.num_species()));
    CHECK(st.n_W == static_cast<int>(net.num_reactions()) - st.rank);
    for (const auto& y : st.kerWT_basis)
      for (std::size_t i = 0; i < net.num_species(); ++i) {
        long long s = 0;
        for (std::size_t r = 0; r < net.num_reactions(); ++r) s += y[r] * st.W[r][i];
        CHECK(s == 0);
      }
    // Q R(c) = 0
    if (st.m_W > 0) {
      const Eigen::MatrixXd Q = st.Q_matrix();
      for (int j = 0; j < 5; ++j) {
        const Eigen::VectorXd c = testing::random_point(rng, net.num_species());
        const Eigen::VectorXd R = mass_action_rate(net, c);
        CHECK((Q * R).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, R.cwiseAbs().maxCoeff()));
      }
    }
  }
}

TEST_CASE("detailed balance: two-pair example") {
  const auto good = testing::example_two_pairs(2.0, 1.0);
  const auto db = check_detailed_balance(good, stoichiometric_analysis(good));
  REQUIRE(db.holds);
  CHECK(std::abs(db.c_star(0) - 1.0) <= 1e-12);

  const auto bad = testing::example_two_pairs(7.0, 1.0);
  const auto st = stoichiometric_analysis(bad);
  const auto db2 = check_detailed_balance(bad, st);
  CHECK_FALSE(db2.holds);
  REQUIRE(db2.witness.size() == 2);
  CHECK(std::abs(db2.witness_value) > 1e-3);
  CHECK(std::abs(db2.witness.dot(db2.rhs) - db2.witness_value) < 1e-14);
  Eigen::VectorXd guess(1);
  guess << 1.0;
  const auto ss = find_steady_state(bad, st, guess);
  CHECK(std::abs(ss(0) - 2.0) <= 1e-12);
}

TEST_CASE("detailed balance: birth-death and conservation families") {
  const auto bd = testing::birth_death(3.0, 1.5);
  const auto db = check_detailed_balance(bd, stoichiometric_analysis(bd));
  REQUIRE(db.holds);
  CHECK(db.c_star(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(db.kappa_star(0) == doctest::Approx(3.0).epsilon(1e-14));

  // X1 <-> 2 X2 has a one-parameter family of equilibria; the certificate
  // takes the minimum-norm logarithm.
  const auto dim = parse_network("species X1 X2\nX1 <-> 2 X2 : kf=2, kb=8\n");
  const auto dd = check_detailed_balance(dim, stoichiometric_analysis(dim));
  REQUIRE(dd.holds);
  CHECK(dd.solution_family_dim == 1);
  const Eigen::VectorXd lc = dd.c_star.array().log().matrix();
  // W log c = log(kb/kf) with W = (1, -2); min norm => log c parallel to W.
  CHECK(lc(0) - 2.0 * lc(1) == doctest::Approx(std::log(4.0)).epsilon(1e-13));
  CHECK(std::abs(2.0 * lc(0) + lc(1)) < 1e-13);

  // Wegscheider cycle: A->B->C->A with rate product != 1 fails.
  const auto cyc = parse_network("species A B C\nA <-> B : kf=1, kb=2\nB <-> C : kf=1, kb=2\nC <-> A : kf=1, kb=2\n");
  const auto dc = check_detailed_balance(cyc, stoichiometric_analysis(cyc));
  CHECK_FALSE(dc.holds);
  CHECK(std::abs(dc.witness_value) > 1.0);
  const auto cyc_ok = parse_network("species A B C\nA <-> B : kf=1, kb=2\nB <-> C : kf=1, kb=2\nC <-> A : kf=4, kb=1\n");
  CHECK(check_detailed_balance(cyc_ok, stoichiometric_analysis(cyc_ok)).holds);
}

TEST_CASE("detailed balance certificates on random networks") {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 100; ++k) {
    const auto net = testing::random_db_network(rng);
    const auto db = check_detailed_balance(net, stoichiometric_analysis(net));
    REQUIRE(db.holds);
    for (std::size_t r = 0; r < net.num_reactions(); ++r) {
      const auto& rx = net.reactions[r];
      const double f = rx.k_fw * monomial(db.c_star, rx.alpha), b = rx.k_bw * monomial(db.c_star, rx.beta);
      CHECK(std::abs(f - b) / db.kappa_star(r) <= 1e-10);
      CHECK(db.kappa_star(r) == doctest::Approx(f).epsilon(1e-12));
    }
  }
}

TEST_CASE("verdict is invariant under reaction and species permutations") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 60; ++k) {
    auto net = testing::random_db_network(rng);
    if (u(rng) < 0.5) net.reactions[0].k_fw *= 3.0;  // usually breaks balance
    const bool verdict = check_detailed_balance(net, stoichiometric_analysis(net)).holds;

    std::vector<std::size_t> sp(net.num_species());
    std::iota(sp.begin(), sp.end(), 0);
    std::shuffle(sp.begin(), sp.end(), rng);
    ReactionNetwork perm;
    for (std::size_t i : sp) perm.species.push_back(net.species[i]);
    for (const auto& r : net.reactions) {
      Reaction q = r;
      for (std::size_t i = 0; i < sp.size(); ++i) {
        q.alpha[i] = r.alpha[sp[i]];
        q.beta[i] = r.beta[sp[i]];
      }
      perm.reactions.push_back(q);
    }
    std::shuffle(perm.reactions.begin(), perm.reactions.end(), rng);
    CHECK(check_detailed_balance(perm, stoichiometric_analysis(perm)).holds == verdict);
  }
}

TEST_CASE("report serializes to JSON") {
  const auto bad = testing::example_two_pairs(7.0, 1.0);
  const auto st = stoichiometric_analysis(bad);
  const auto j = nlohmann::json::parse(report_to_json(bad, st, check_detailed_balance(bad, st)));
  CHECK(j.contains("detailed_balance"));
  CHECK(j.dump().find("witness") != std::string::npos);
}
