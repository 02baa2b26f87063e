#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace crn {

using IntVec = std::vector<int>;
using IntMatrix = std::vector<std::vector<long long>>;

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& msg);
  int line() const { return line_; }

 private:
  int line_;
};

struct Reaction {
  IntVec alpha;
  IntVec beta;
  double k_fw = 1.0;
  double k_bw = 1.0;
};

struct ReactionNetwork {
  std::vector<std::string> species;
  std::vector<Reaction> reactions;

  std::size_t num_species() const { return species.size(); }
  std::size_t num_reactions() const { return reactions.size(); }
  IntVec gamma(std::size_t r) const;  // alpha^r - beta^r
};

// Irreversible reactions (a zero rate on one side) cannot come from the text
// format but are needed to represent some master equations.
enum class RatePolicy { strictly_positive, allow_zero };

void validate(const ReactionNetwork& net, RatePolicy policy = RatePolicy::strictly_positive);

// Programmatic construction; validates before returning.
ReactionNetwork make_network(std::vector<std::string> species, std::vector<Reaction> reactions,
                             RatePolicy policy = RatePolicy::strictly_positive);

ReactionNetwork parse_network(std::string_view text);
ReactionNetwork load_network(const std::string& path);
std::string serialize_network(const ReactionNetwork& net);

struct StoichiometryReport {
  IntMatrix W;            // R x I, rows gamma^r
  IntMatrix S_basis;      // rows span Ran W^T (primitive integer rows)
  IntMatrix Q;            // m_W x I, rows span Ker W
  IntMatrix kerWT_basis;  // rows span Ker W^T (primitive integer vectors)
  int rank = 0;
  int m_W = 0;
  int n_W = 0;

  Eigen::MatrixXd Q_matrix() const;
};

StoichiometryReport stoichiometric_analysis(const ReactionNetwork& net);

struct DetailedBalanceReport {
  bool holds = false;
  Eigen::VectorXd c_star;
  Eigen::VectorXd kappa_star;
  Eigen::VectorXd rhs;        // log(k_bw / k_fw) per reaction
  Eigen::VectorXd witness;    // unit kernel vector of W^T when the check fails
  double witness_value = 0.0; // witness . rhs
  double residual = 0.0;      // max_r |(W log c*)_r - rhs_r|
  int solution_family_dim = 0;
  double tolerance = 1e-9;
};

DetailedBalanceReport check_detailed_balance(const ReactionNetwork& net, const StoichiometryReport& report,
                                             double tol = 1e-9);

struct InvariantSetTag {
  Eigen::VectorXd q;
};

InvariantSetTag conserved_value(const StoichiometryReport& report, const Eigen::VectorXd& c);
bool same_invariant_set(const InvariantSetTag& a, const InvariantSetTag& b, double tol = 1e-10);

// Mass-action kinetics, valid for any network (detailed balance not needed).
double monomial(const Eigen::VectorXd& c, const IntVec& exponents);
Eigen::VectorXd reaction_fluxes(const ReactionNetwork& net, const Eigen::VectorXd& c);
Eigen::VectorXd mass_action_rate(const ReactionNetwork& net, const Eigen::VectorXd& c);
Eigen::MatrixXd mass_action_jacobian(const ReactionNetwork& net, const Eigen::VectorXd& c);

std::string report_to_json(const ReactionNetwork& net, const StoichiometryReport& st,
                           const DetailedBalanceReport& db);

}  // namespace crn
