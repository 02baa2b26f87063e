#include "crn/network.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <limits>
#include <sstream>

namespace crn {

namespace mp = boost::multiprecision;
using Rational = mp::cpp_rational;
using RatMatrix = std::vector<std::vector<Rational>>;

ParseError::ParseError(int line, const std::string& msg)
    : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}

IntVec ReactionNetwork::gamma(std::size_t r) const {
  const auto& rx = reactions.at(r);
  IntVec g(species.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = rx.alpha[i] - rx.beta[i];
  return g;
}

void validate(const ReactionNetwork& net, RatePolicy policy) {
  const std::size_t I = net.num_species();
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = i + 1; j < I; ++j)
      if (net.species[i] == net.species[j]) throw std::invalid_argument("duplicate species '" + net.species[i] + "'");
  for (std::size_t r = 0; r < net.num_reactions(); ++r) {
    const auto& rx = net.reactions[r];
    const std::string tag = "reaction " + std::to_string(r + 1);
    if (rx.alpha.size() != I || rx.beta.size() != I) throw std::invalid_argument(tag + ": coefficient vector length mismatch");
    for (std::size_t i = 0; i < I; ++i)
      if (rx.alpha[i] < 0 || rx.beta[i] < 0) throw std::invalid_argument(tag + ": negative stoichiometric coefficient");
    if (rx.alpha == rx.beta) throw std::invalid_argument(tag + ": reactant and product complexes coincide");
    if (!std::isfinite(rx.k_fw) || !std::isfinite(rx.k_bw)) throw std::invalid_argument(tag + ": non-finite rate");
    if (policy == RatePolicy::strictly_positive) {
      if (!(rx.k_fw > 0.0) || !(rx.k_bw > 0.0)) throw std::invalid_argument(tag + ": rates must be positive");
    } else {
      if (rx.k_fw < 0.0 || rx.k_bw < 0.0 || (rx.k_fw == 0.0 && rx.k_bw == 0.0))
        throw std::invalid_argument(tag + ": rates must be nonnegative and not both zero");
    }
  }
}

ReactionNetwork make_network(std::vector<std::string> species, std::vector<Reaction> reactions, RatePolicy policy) {
  ReactionNetwork net{std::move(species), std::move(reactions)};
  validate(net, policy);
  return net;
}

// ---------------------------------------------------------------- parsing

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\''; }

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

IntVec parse_side(std::string_view side, const std::map<std::string, int, std::less<>>& index, std::size_t I, int line) {
  IntVec coeffs(I, 0);
  side = trim(side);
  if (side.empty()) throw ParseError(line, "empty complex (use 0 for the empty complex)");
  if (side == "0") return coeffs;
  for (auto term : split(side, '+')) {
    term = trim(term);
    if (term.empty()) throw ParseError(line, "dangling '+'");
    std::size_t pos = 0;
    int coeff = 1;
    if (std::isdigit(static_cast<unsigned char>(term[0]))) {
      while (pos < term.size() && std::isdigit(static_cast<unsigned char>(term[pos]))) ++pos;
      auto [ptr, ec] = std::from_chars(term.data(), term.data() + pos, coeff);
      if (ec != std::errc()) throw ParseError(line, "bad coefficient in '" + std::string(term) + "'");
      while (pos < term.size() && std::isspace(static_cast<unsigned char>(term[pos]))) ++pos;
    }
    auto name = term.substr(pos);
    if (name.empty() || !is_ident_start(name[0]) || !std::all_of(name.begin(), name.end(), is_ident_char))
      throw ParseError(line, "bad term '" + std::string(term) + "'");
    auto it = index.find(name);
    if (it == index.end()) throw ParseError(line, "unknown species '" + std::string(name) + "'");
    if (coeff < 0) throw ParseError(line, "negative coefficient");
    coeffs[it->second] += coeff;
  }
  return coeffs;
}

double parse_rate(std::string_view item, std::string_view key, int line) {
  auto eq = item.find('=');
  if (eq == std::string_view::npos) throw ParseError(line, "expected " + std::string(key) + "=VALUE");
  if (trim(item.substr(0, eq)) != key) throw ParseError(line, "expected key '" + std::string(key) + "'");
  const std::string value(trim(item.substr(eq + 1)));
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ParseError(line, "bad number '" + value + "'");
  }
  if (used != value.size()) throw ParseError(line, "bad number '" + value + "'");
  if (!(v > 0.0) || !std::isfinite(v)) throw ParseError(line, "nonpositive rate " + std::string(key) + "=" + value);
  return v;
}

}  // namespace

ReactionNetwork parse_network(std::string_view text) {
  ReactionNetwork net;
  std::map<std::string, int, std::less<>> index;
  struct Pending {
    std::string_view lhs, rhs, rates;
    int line;
  };
  std::vector<Pending> pending;

  int line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    auto line = trim(raw);
    if (line.empty()) continue;
    if (line.substr(0, 7) == "species" && (line.size() == 7 || std::isspace(static_cast<unsigned char>(line[7])))) {
      std::istringstream in{std::string(line.substr(7))};
      std::string name;
      while (in >> name) {
        if (!is_ident_start(name[0]) || !std::all_of(name.begin(), name.end(), is_ident_char))
          throw ParseError(line_no, "bad species name '" + name + "'");
        if (index.count(name)) throw ParseError(line_no, "species '" + name + "' declared twice");
        index.emplace(name, static_cast<int>(net.species.size()));
        net.species.push_back(name);
      }
      continue;
    }
    auto arrow = line.find("<->");
    if (arrow == std::string_view::npos) throw ParseError(line_no, "expected 'species ...' or a reaction 'lhs <-> rhs : kf=.., kb=..'");
    auto colon = line.find(':', arrow);
    if (colon == std::string_view::npos) throw ParseError(line_no, "missing ':' before rates");
    pending.push_back({line.substr(0, arrow), line.substr(arrow + 3, colon - arrow - 3), line.substr(colon + 1), line_no});
  }

  const std::size_t I = net.species.size();
  for (const auto& p : pending) {
    Reaction rx;
    rx.alpha = parse_side(p.lhs, index, I, p.line);
    rx.beta = parse_side(p.rhs, index, I, p.line);
    auto items = split(p.rates, ',');
    if (items.size() != 2) throw ParseError(p.line, "expected 'kf=VALUE, kb=VALUE'");
    rx.k_fw = parse_rate(items[0], "kf", p.line);
    rx.k_bw = parse_rate(items[1], "kb", p.line);
    if (rx.alpha == rx.beta) throw ParseError(p.line, "reactant and product complexes coincide");
    net.reactions.push_back(std::move(rx));
  }
  return net;
}

ReactionNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open network file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str());
}

std::string serialize_network(const ReactionNetwork& net) {
  std::ostringstream out;
  out << "species";
  for (const auto& s : net.species) out << ' ' << s;
  out << '\n';
  auto side = [&](const IntVec& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] == 0) continue;
      if (!s.empty()) s += " + ";
      s += std::to_string(v[i]) + " " + net.species[i];
    }
    return s.empty() ? std::string("0") : s;
  };
  char buf[64];
  for (const auto& rx : net.reactions) {
    out << side(rx.alpha) << " <-> " << side(rx.beta) << " : ";
    std::snprintf(buf, sizeof buf, "kf=%.17g, ", rx.k_fw);
    out << buf;
    std::snprintf(buf, sizeof buf, "kb=%.17g", rx.k_bw);
    out << buf << '\n';
  }
  return out.str();
}

// ---------------------------------------------------- exact linear algebra

namespace {

// Reduced row echelon form over Q. Returns pivot columns.
std::vector<std::size_t> rref(RatMatrix& A, std::size_t cols) {
  std::vector<std::size_t> pivots;
  std::size_t row = 0;
  for (std::size_t col = 0; col < cols && row < A.size(); ++col) {
    std::size_t sel = row;
    while (sel < A.size() && A[sel][col] == 0) ++sel;
    if (sel == A.size()) continue;
    std::swap(A[row], A[sel]);
    const Rational piv = A[row][col];
    for (auto& x : A[row]) x /= piv;
    for (std::size_t r = 0; r < A.size(); ++r) {
      if (r == row || A[r][col] == 0) continue;
      const Rational f = A[r][col];
      for (std::size_t k = 0; k < cols; ++k) A[r][k] -= f * A[row][k];
    }
    pivots.push_back(col);
    ++row;
  }
  return pivots;
}

// Scale a rational vector to the primitive integer vector on the same ray.
std::vector<long long> primitive(const std::vector<Rational>& v) {
  mp::cpp_int l = 1;
  for (const auto& x : v) {
    const mp::cpp_int d = mp::denominator(x);
    l = l / mp::gcd(l, d) * d;
  }
  std::vector<mp::cpp_int> ints;
  mp::cpp_int g = 0;
  for (const auto& x : v) {
    ints.push_back(mp::numerator(x) * (l / mp::denominator(x)));
    g = mp::gcd(g, mp::abs(ints.back()));
  }
  std::vector<long long> out;
  // first nonzero entry positive, for a canonical orientation
  int sign = 0;
  for (const auto& x : ints)
    if (x != 0) {
      sign = x > 0 ? 1 : -1;
      break;
    }
  for (const auto& x : ints) out.push_back(static_cast<long long>(g == 0 ? x : sign * x / g));
  return out;
}

// Basis of {x : A x = 0} for an r x cols integer matrix.
IntMatrix kernel(const IntMatrix& A, std::size_t cols) {
  RatMatrix M(A.size(), std::vector<Rational>(cols));
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) M[i][j] = A[i][j];
  const auto pivots = rref(M, cols);
  std::vector<bool> is_pivot(cols, false);
  for (auto p : pivots) is_pivot[p] = true;
  IntMatrix basis;
  for (std::size_t f = 0; f < cols; ++f) {
    if (is_pivot[f]) continue;
    std::vector<Rational> v(cols, 0);
    v[f] = 1;
    for (std::size_t k = 0; k < pivots.size(); ++k) v[pivots[k]] = -M[k][f];
    basis.push_back(primitive(v));
  }
  return basis;
}

IntMatrix transpose(const IntMatrix& A, std::size_t cols) {
  IntMatrix T(cols, std::vector<long long>(A.size()));
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) T[j][i] = A[i][j];
  return T;
}

}  // namespace

Eigen::MatrixXd StoichiometryReport::Q_matrix() const {
  const std::size_t cols = W.empty() ? (Q.empty() ? 0 : Q[0].size()) : W[0].size();
  Eigen::MatrixXd M(Q.size(), cols);
  for (std::size_t i = 0; i < Q.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) M(i, j) = static_cast<double>(Q[i][j]);
  return M;
}

StoichiometryReport stoichiometric_analysis(const ReactionNetwork& net) {
  const std::size_t I = net.num_species();
  const std::size_t R = net.num_reactions();
  StoichiometryReport rep;
  for (std::size_t r = 0; r < R; ++r) {
    const auto g = net.gamma(r);
    rep.W.emplace_back(g.begin(), g.end());
  }
  RatMatrix M(R, std::vector<Rational>(I));
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t i = 0; i < I; ++i) M[r][i] = rep.W[r][i];
  const auto pivots = rref(M, I);
  rep.rank = static_cast<int>(pivots.size());
  for (std::size_t k = 0; k < pivots.size(); ++k) rep.S_basis.push_back(primitive(M[k]));

  if (R == 0) {
    for (std::size_t i = 0; i < I; ++i) {
      std::vector<long long> e(I, 0);
      e[i] = 1;
      rep.Q.push_back(e);
    }
  } else {
    rep.Q = kernel(rep.W, I);
    rep.kerWT_basis = kernel(transpose(rep.W, I), R);
  }
  rep.m_W = static_cast<int>(rep.Q.size());
  rep.n_W = static_cast<int>(R) - rep.rank;
  return rep;
}

// ------------------------------------------------------- detailed balance

DetailedBalanceReport check_detailed_balance(const ReactionNetwork& net, const StoichiometryReport& rep, double tol) {
  const std::size_t I = net.num_species();
  const std::size_t R = net.num_reactions();
  DetailedBalanceReport db;
  db.tolerance = tol;
  db.solution_family_dim = rep.m_W;
  db.rhs.resize(R);
  for (std::size_t r = 0; r < R; ++r) {
    const auto& rx = net.reactions[r];
    if (!(rx.k_fw > 0.0) || !(rx.k_bw > 0.0)) {
      // an irreversible reaction can never be balanced individually
      db.holds = false;
      db.witness = Eigen::VectorXd::Unit(R, r);
      db.witness_value = std::numeric_limits<double>::infinity();
      return db;
    }
    db.rhs(r) = std::log(rx.k_bw / rx.k_fw);
  }

  double best = 0.0;
  for (const auto& y : rep.kerWT_basis) {
    Eigen::VectorXd v(R);
    for (std::size_t r = 0; r < R; ++r) v(r) = static_cast<double>(y[r]);
    v.normalize();
    const double val = v.dot(db.rhs);
    if (std::abs(val) > std::abs(best) || db.witness.size() == 0) {
      best = val;
      db.witness = v;
    }
  }
  db.witness_value = best;
  if (std::abs(best) > tol) {
    db.holds = false;
    return db;
  }
  db.witness.resize(0);
  db.witness_value = 0.0;

  Eigen::MatrixXd W(R, I);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t i = 0; i < I; ++i) W(r, i) = static_cast<double>(rep.W[r][i]);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(I);
  if (R > 0) x = W.completeOrthogonalDecomposition().solve(db.rhs);
  db.residual = R > 0 ? (W * x - db.rhs).cwiseAbs().maxCoeff() : 0.0;
  db.holds = db.residual <= std::max(tol, 1e-12);
  db.c_star = x.array().exp();
  db.kappa_star.resize(R);
  for (std::size_t r = 0; r < R; ++r) db.kappa_star(r) = net.reactions[r].k_fw * monomial(db.c_star, net.reactions[r].alpha);
  return db;
}

InvariantSetTag conserved_value(const StoichiometryReport& rep, const Eigen::VectorXd& c) {
  const std::size_t I = rep.W.empty() ? (rep.Q.empty() ? 0 : rep.Q[0].size()) : rep.W[0].size();
  if (static_cast<std::size_t>(c.size()) != I && !(rep.W.empty() && rep.Q.empty()))
    throw std::invalid_argument("conserved_value: dimension mismatch");
  return {rep.Q_matrix() * c};
}

bool same_invariant_set(const InvariantSetTag& a, const InvariantSetTag& b, double tol) {
  if (a.q.size() != b.q.size()) return false;
  if (a.q.size() == 0) return true;
  return (a.q - b.q).cwiseAbs().maxCoeff() <= tol * (1.0 + a.q.cwiseAbs().maxCoeff());
}

// ------------------------------------------------------------ mass action

double monomial(const Eigen::VectorXd& c, const IntVec& e) {
  double v = 1.0;
  for (std::size_t i = 0; i < e.size(); ++i)
    for (int k = 0; k < e[i]; ++k) v *= c(i);
  return v;
}

Eigen::VectorXd reaction_fluxes(const ReactionNetwork& net, const Eigen::VectorXd& c) {
  if (static_cast<std::size_t>(c.size()) != net.num_species()) throw std::invalid_argument("reaction_fluxes: dimension mismatch");
  Eigen::VectorXd f(net.num_reactions());
  for (std::size_t r = 0; r < net.num_reactions(); ++r) {
    const auto& rx = net.reactions[r];
    f(r) = rx.k_fw * monomial(c, rx.alpha) - rx.k_bw * monomial(c, rx.beta);
  }
  return f;
}

Eigen::VectorXd mass_action_rate(const ReactionNetwork& net, const Eigen::VectorXd& c) {
  const Eigen::VectorXd f = reaction_fluxes(net, c);
  Eigen::VectorXd R = Eigen::VectorXd::Zero(net.num_species());
  for (std::size_t r = 0; r < net.num_reactions(); ++r) {
    const auto g = net.gamma(r);
    for (std::size_t i = 0; i < g.size(); ++i) R(i) += f(r) * g[i];
  }
  return R;
}

Eigen::MatrixXd mass_action_jacobian(const ReactionNetwork& net, const Eigen::VectorXd& c) {
  const std::size_t I = net.num_species();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(I, I);
  for (std::size_t r = 0; r < net.num_reactions(); ++r) {
    const auto& rx = net.reactions[r];
    const auto g = net.gamma(r);
    for (std::size_t j = 0; j < I; ++j) {
      // d/dc_j of k c^e, computed without dividing by c_j
      auto dmono = [&](const IntVec& e) {
        if (e[j] == 0) return 0.0;
        IntVec e2 = e;
        e2[j] -= 1;
        return e[j] * monomial(c, e2);
      };
      const double df = rx.k_fw * dmono(rx.alpha) - rx.k_bw * dmono(rx.beta);
      for (std::size_t i = 0; i < I; ++i) J(i, j) += df * g[i];
    }
  }
  return J;
}

std::string report_to_json(const ReactionNetwork& net, const StoichiometryReport& st, const DetailedBalanceReport& db) {
  using nlohmann::json;
  auto vec = [](const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
  };
  json j;
  j["species"] = net.species;
  j["stoichiometry"] = {{"W", st.W}, {"S_basis", st.S_basis}, {"Q", st.Q}, {"kerWT_basis", st.kerWT_basis},
                        {"rank", st.rank}, {"m_W", st.m_W}, {"n_W", st.n_W}};
  json d;
  d["holds"] = db.holds;
  d["tolerance"] = db.tolerance;
  d["log_rate_rhs"] = vec(db.rhs);
  if (db.holds) {
    d["c_star"] = vec(db.c_star);
    d["kappa_star"] = vec(db.kappa_star);
    d["residual"] = db.residual;
    d["solution_family_dim"] = db.solution_family_dim;
  } else {
    d["witness"] = vec(db.witness);
    d["witness_value"] = std::isfinite(db.witness_value) ? json(db.witness_value) : json("inf");
  }
  j["detailed_balance"] = d;
  return j.dump(2);
}

}  // namespace crn
