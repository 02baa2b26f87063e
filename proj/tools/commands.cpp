#include "commands.hpp"

#include "crn/cme.hpp"
#include "crn/fpe.hpp"
#include "crn/hybrid.hpp"
#include "crn/io.hpp"
#include "crn/network.hpp"
#include "crn/rre.hpp"
#include "crn/scalebridge.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <boost/property_tree/ini_parser.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>

namespace crn::cli {

namespace fs = std::filesystem;
using boost::property_tree::ptree;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

ptree load_config(const std::string& path) {
  ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(path, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::runtime_error("config: " + std::string(e.what()));
  }
  return pt;
}

std::string resolve_out_dir(const std::string& flag, const ptree& config) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("CRN_OUT_DIR"); env && *env) return env;
  return config.get<std::string>("output.dir", ".");
}

namespace {

// ---------------------------------------------------------------- config access

double get_num(const ptree& pt, const std::string& key, double fallback) {
  const auto v = pt.get_optional<std::string>(key);
  if (!v) return fallback;
  try {
    std::size_t pos = 0;
    const double x = std::stod(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw std::runtime_error("config: " + key + " is not a number: '" + *v + "'");
  }
}

int get_int(const ptree& pt, const std::string& key, int fallback) {
  const double x = get_num(pt, key, fallback);
  if (x != std::floor(x)) throw std::runtime_error("config: " + key + " must be an integer");
  return static_cast<int>(x);
}

std::vector<double> get_list(const ptree& pt, const std::string& key) {
  std::vector<double> out;
  const auto v = pt.get_optional<std::string>(key);
  if (!v) return out;
  std::string s = *v;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw std::runtime_error("config: " + key + " has a non-numeric entry '" + tok + "'");
    }
  }
  return out;
}

double positive(double x, const std::string& what) {
  if (!(x > 0.0)) throw std::runtime_error("config: " + what + " must be positive");
  return x;
}

double volume(const ptree& pt, const std::string& key, double fallback) {
  const double V = get_num(pt, key, fallback);
  if (!(V >= 1.0)) throw std::runtime_error("config: " + key + " must be at least 1");
  return V;
}

Eigen::VectorXd to_vec(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

std::vector<double> linspace(double t_end, int points) {
  if (points < 2) throw std::runtime_error("config: need at least two output points");
  std::vector<double> t(points);
  for (int k = 0; k < points; ++k) t[k] = t_end * k / (points - 1);
  return t;
}

std::string network_path(const RunContext& ctx) {
  const auto p = ctx.config.get_optional<std::string>("network.file");
  if (!p) throw std::runtime_error("config: [network] file is required");
  fs::path path(*p);
  if (path.is_relative()) path = fs::path(ctx.config_dir) / path;
  return path.string();
}

ReactionNetwork load_net(const RunContext& ctx) { return load_network(network_path(ctx)); }

Eigen::VectorXd initial_state(const RunContext& ctx, const std::string& key, std::size_t I) {
  const auto v = get_list(ctx.config, key);
  if (v.size() != I) throw std::runtime_error("config: " + key + " needs " + std::to_string(I) + " entries");
  return to_vec(v);
}

json ptree_to_json(const ptree& pt) {
  json j = json::object();
  for (const auto& [k, child] : pt) {
    if (child.empty())
      j[k] = child.data();
    else
      j[k] = ptree_to_json(child);
  }
  return j;
}

// ---------------------------------------------------------------- output

class Output {
 public:
  Output(const RunContext& ctx, std::string command) : ctx_(ctx) {
    fs::create_directories(ctx.out_dir);
    meta_["command"] = std::move(command);
    meta_["version"] = kVersion;
    meta_["seed"] = ctx.seed;
    meta_["config_path"] = ctx.config_path;
    meta_["config"] = ptree_to_json(ctx.config);
    meta_["files"] = json::array();
    meta_["audits"] = json::object();
  }

  void write(const std::string& name, const std::string& content) {
    atomic_write((fs::path(ctx_.out_dir) / name).string(), content);
    meta_["files"].push_back(name);
  }
  json& audits() { return meta_["audits"]; }
  json& meta() { return meta_; }

  void finish(int status) {
    meta_["exit_code"] = status;
    atomic_write((fs::path(ctx_.out_dir) / "metadata.json").string(), meta_.dump(2) + "\n");
  }

 private:
  const RunContext& ctx_;
  json meta_;
};

std::ostream& say(const RunContext& ctx) { return *ctx.out; }

std::string vec_str(const Eigen::VectorXd& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt_num(v(i));
  return s + ")";
}

// ---------------------------------------------------------------- simulate parts

int simulate_rre(const RunContext& ctx, Output& out) {
  const ptree& c = ctx.config;
  const ReactionNetwork net = load_net(ctx);
  const Eigen::VectorXd c0 = initial_state(ctx, "simulate.c0", net.num_species());
  RreOptions opt;
  opt.tol = positive(get_num(c, "simulate.tol", 1e-10), "tol");
  opt.output_times = linspace(positive(get_num(c, "simulate.t_end", 1.0), "t_end"), get_int(c, "simulate.points", 101));
  const StoichiometryReport st = stoichiometric_analysis(net);
  const DetailedBalanceReport db = check_detailed_balance(net, st);
  std::optional<RreSystem> sys;
  if (db.holds) sys = make_rre_system(net);
  const Trajectory tr = integrate_rre(net, c0, opt.output_times.back(), opt, sys ? &*sys : nullptr);
  out.write("trajectory.csv", trajectory_csv(tr));
  out.audits()["ok"] = tr.ok;
  out.audits()["detailed_balance"] = db.holds;
  if (!tr.ok) throw std::runtime_error("rre: " + tr.message);
  say(ctx) << "rre: " << tr.times.size() << " samples, final state " << vec_str(tr.states.back()) << "\n";
  return kOk;
}

int simulate_cme(const RunContext& ctx, Output& out) {
  const ptree& c = ctx.config;
  const ReactionNetwork net = load_net(ctx);
  const RreSystem sys = make_rre_system(net);
  const double V = volume(c, "simulate.V", 30.0);
  const Eigen::VectorXd c0 = initial_state(ctx, "simulate.c0", net.num_species());
  const double tail = positive(get_num(c, "simulate.tail", 1e-12), "tail");
  const LatticeBox box = poisson_box(c0.cwiseMax(sys.c_star()), V, tail);
  const TruncatedCme cme = assemble_generator(net, box, &sys.db, tail);
  const auto times = linspace(positive(get_num(c, "simulate.t_end", 1.0), "t_end"), get_int(c, "simulate.points", 31));
  CmeSolveOptions so;
  so.tol = positive(get_num(c, "simulate.tol", 1e-12), "tol");
  if (c.get<std::string>("simulate.stepper", "uniformization") == "krylov") so.stepper = CmeStepper::krylov;
  const CmeSolution sol = solve_cme(cme, poisson_weights(box, c0, true), times, so);

  std::vector<std::string> head{"t"};
  for (const auto& s : net.species) head.push_back("mean_" + s);
  for (const auto& s : net.species) head.push_back("var_" + s);
  head.push_back("mass_lost");
  CsvTable tab(head);
  for (std::size_t k = 0; k < sol.times.size(); ++k) {
    const Moments m = moments(cme, sol.states[k]);
    std::vector<double> row{sol.times[k]};
    for (Eigen::Index i = 0; i < m.e_hat.size(); ++i) row.push_back(m.e_hat(i));
    for (Eigen::Index i = 0; i < m.e_hat.size(); ++i) row.push_back(m.v_hat(i, i));
    row.push_back(sol.mass_lost[k]);
    tab.add_row(row);
  }
  out.write("moments.csv", tab.str());
  out.write("distribution_initial.csv", distribution_csv(cme, sol.states.front()));
  out.write("distribution_final.csv", distribution_csv(cme, sol.states.back()));
  out.audits()["box_states"] = box.size();
  out.audits()["equilibrium_tail_mass"] = cme.tail_mass;
  out.audits()["mass_lost"] = sol.mass_lost.back();
  say(ctx) << "cme: " << box.size() << " states, mass lost " << fmt_num(sol.mass_lost.back()) << "\n";
  return kOk;
}

int simulate_liouville(const RunContext& ctx, Output& out) {
  const ptree& c = ctx.config;
  const ReactionNetwork net = load_net(ctx);
  const RreSystem sys = make_rre_system(net);
  const Eigen::VectorXd c0 = initial_state(ctx, "simulate.c0", net.num_species());
  const int particles = get_int(c, "simulate.particles", 16);
  const double spread = get_num(c, "simulate.spread", 0.1);
  if (particles < 1 || spread < 0.0) throw std::runtime_error("config: invalid particle ensemble");
  std::mt19937_64 rng(ctx.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  ParticleEnsemble ens;
  for (int p = 0; p < particles; ++p) {
    Eigen::VectorXd x = c0;
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = std::max(1e-6, x(i) * (1.0 + spread * unif(rng)));
    ens.points.push_back(x);
    ens.weights.push_back(1.0 / particles);
  }
  const auto times = linspace(positive(get_num(c, "simulate.t_end", 1.0), "t_end"), get_int(c, "simulate.points", 21));
  const LiouvilleTrajectory tr = solve_liouville(sys, ens, times);
  CsvTable tab({"t", "energy", "dissipation", "residual"});
  double worst = 0.0;
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    tab.add_row({tr.times[k], tr.energy[k], tr.dissipation[k], tr.residual[k]});
    worst = std::max(worst, std::abs(tr.residual[k]));
  }
  out.write("liouville.csv", tab.str());
  out.audits()["max_energy_residual"] = worst;
  say(ctx) << "liouville: " << particles << " particles, energy residual " << fmt_num(worst) << "\n";
  return kOk;
}

int simulate_fpe(const RunContext& ctx, Output& out, const std::string& variant) {
  const ptree& c = ctx.config;
  const ReactionNetwork net = load_net(ctx);
  const RreSystem sys = make_rre_system(net);
  const double V = volume(c, "simulate.V", 30.0);
  const Eigen::VectorXd c0 = initial_state(ctx, "simulate.c0", net.num_species());
  const int refine = get_int(c, "simulate.refine", 2);
  if (refine < 1) throw std::runtime_error("config: refine must be at least 1");
  const LatticeBox box = poisson_box(c0.cwiseMax(sys.c_star()), V, positive(get_num(c, "simulate.tail", 1e-12), "tail"));
  const GridDensity rho0 = embed(box, poisson_weights(box, c0, true), refine);
  const FpeModel m = build_fpe(sys, V, parse_variant(variant), rho0.grid);
  const auto times = linspace(positive(get_num(c, "simulate.t_end", 1.0), "t_end"), get_int(c, "simulate.points", 21));
  const FpeSolution sol = solve_fpe(m, rho0.values, times, positive(get_num(c, "simulate.dt", 1e-3), "dt"));

  std::vector<std::string> head{"t", "mass"};
  for (const auto& s : net.species) head.push_back("mean_" + s);
  CsvTable tab(head);
  for (std::size_t k = 0; k < sol.times.size(); ++k) {
    const GridDensity d{rho0.grid, sol.states[k]};
    std::vector<double> row{sol.times[k], d.mass()};
    const Eigen::VectorXd mu = d.mean();
    for (Eigen::Index i = 0; i < mu.size(); ++i) row.push_back(mu(i));
    tab.add_row(row);
  }
  out.write("fpe.csv", tab.str());
  std::vector<std::string> dh;
  for (const auto& s : net.species) dh.push_back("c_" + s);
  dh.push_back("rho");
  CsvTable dens(dh);
  for (std::size_t k = 0; k < rho0.grid.size(); ++k) {
    std::vector<double> row;
    const Eigen::VectorXd x = rho0.grid.center(k);
    for (Eigen::Index i = 0; i < x.size(); ++i) row.push_back(x(i));
    row.push_back(sol.states.back()(k));
    dens.add_row(row);
  }
  out.write("density_final.csv", dens.str());
  out.audits()["max_mass_drift"] = sol.max_mass_drift;
  out.audits()["min_value"] = sol.min_value;
  say(ctx) << "fpe:" << variant << ": " << rho0.grid.size() << " cells, mass drift " << fmt_num(sol.max_mass_drift) << "\n";
  return kOk;
}

int simulate_cmrr(const RunContext& ctx, Output& out) {
  const ptree& c = ctx.config;
  const double V = volume(c, "hybrid.V", 50.0);
  const int beta = get_int(c, "hybrid.beta", 1);
  const double c1 = positive(get_num(c, "hybrid.c1", 0.5), "c1");
  const int M = get_int(c, "hybrid.M", static_cast<int>(std::ceil(4.0 * V + 40.0)));
  CmRrState s;
  s.beta = beta;
  s.c2 = get_num(c, "hybrid.c2", 1.5);
  s.v.resize(M + 1);
  for (int m = 0; m <= M; ++m) s.v(m) = std::exp(-V * c1 + m * std::log(V * c1) - std::lgamma(m + 1.0));
  s.v /= s.v.sum();
  const auto times = linspace(positive(get_num(c, "hybrid.t_end", 5.0), "t_end"), get_int(c, "hybrid.points", 51));
  const CmRrTrajectory tr = solve_cm_rr(s, V, times, positive(get_num(c, "hybrid.tol", 1e-10), "tol"));
  out.write("cm_rr.csv", tr.csv());
  out.audits()["max_conservation_drift"] = tr.max_conservation_drift;
  out.audits()["max_probability_drift"] = tr.max_probability_drift;
  out.audits()["max_boundary_mass"] = tr.max_boundary_mass;
  say(ctx) << "hybrid:cmrr: conservation drift " << fmt_num(tr.max_conservation_drift) << "\n";
  return kOk;
}

int simulate_merged(const RunContext& ctx, Output& out) {
  const ptree& c = ctx.config;
  const double a = positive(get_num(c, "hybrid.a", 1.0), "a");
  const double b = positive(get_num(c, "hybrid.b", 1.0), "b");
  const double V = volume(c, "hybrid.V", 50.0);
  const int N = get_int(c, "hybrid.N", 20);
  const double a_hat = positive(get_num(c, "hybrid.a_hat", a), "a_hat");
  const double c_max = positive(get_num(c, "hybrid.c_max", 3.0 * a / b + 2.0), "c_max");
  const int per_unit = get_int(c, "hybrid.cells_per_count", 2);
  if (per_unit < 1 || c_max <= N / V) throw std::runtime_error("config: invalid merged grid");
  const int cells = static_cast<int>(std::ceil((c_max - N / V) * V * per_unit));
  const RectGrid grid({N / V}, {N / V + cells / (V * per_unit)}, {cells});
  const MergedModel m = build_merged(a, b, V, N, a_hat, grid);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(m.size());
  x0(0) = 1.0;
  const auto times = linspace(positive(get_num(c, "hybrid.t_end", 5.0), "t_end"), get_int(c, "hybrid.points", 51));
  const MergedTrajectory tr = solve_merged(m, x0, times, positive(get_num(c, "hybrid.dt", 1e-3), "dt"));
  out.write("merged.csv", tr.csv());
  out.write("merged_final.csv", tr.snapshot_csv(m, tr.times.size() - 1));
  out.audits()["max_mass_drift"] = tr.max_mass_drift;
  out.audits()["max_entropy_increase"] = tr.max_entropy_increase;
  out.audits()["junction_scale_ratio"] = m.scale_ratio;
  say(ctx) << "hybrid:merged: final mean " << fmt_num(tr.mean.back()) << ", mass drift " << fmt_num(tr.max_mass_drift)
           << "\n";
  return kOk;
}

int simulate_fprr(const RunContext& ctx, Output& out) {
  const ptree& c = ctx.config;
  const ReactionNetwork net = load_net(ctx);
  const RreSystem sys = make_rre_system(net);
  const double V = volume(c, "hybrid.V", 200.0);
  const std::size_t J = static_cast<std::size_t>(get_int(c, "hybrid.J", 1));
  const Eigen::VectorXd c0 = initial_state(ctx, "hybrid.c0", net.num_species());
  if (J == 0 || J >= net.num_species()) throw std::runtime_error("config: J must split the species");
  const double hi = positive(get_num(c, "hybrid.c_max", 2.0 * c0.head(J).maxCoeff() + 1.0), "c_max");
  const int cells = get_int(c, "hybrid.cells", 400);
  const RectGrid grid(std::vector<double>(J, 0.0), std::vector<double>(J, hi), std::vector<int>(J, cells));
  FpRrState s;
  s.J = J;
  s.rho_s.grid = grid;
  s.rho_s.values.resize(grid.size());
  // Gaussian start with the Poisson variance c/V per resolved species.
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Eigen::VectorXd x = grid.center(k);
    double e = 0.0;
    for (std::size_t i = 0; i < J; ++i) e += V * (x(i) - c0(i)) * (x(i) - c0(i)) / (2.0 * c0(i));
    s.rho_s.values(k) = std::exp(-e);
  }
  s.rho_s.normalize();
  s.c_m = c0.tail(net.num_species() - J);
  const auto times = linspace(positive(get_num(c, "hybrid.t_end", 2.0), "t_end"), get_int(c, "hybrid.points", 41));
  const FpRrTrajectory tr = solve_fp_rr(sys, s, V, times, positive(get_num(c, "hybrid.dt", 1e-3), "dt"));
  out.write("fp_rr.csv", tr.csv(net.species));
  out.audits()["max_energy_increase"] = tr.max_energy_increase;
  out.audits()["max_mass_drift"] = tr.max_mass_drift;
  out.audits()["max_conservation_drift"] = tr.max_conservation_drift;
  say(ctx) << "hybrid:fprr: final mean " << vec_str(tr.mean.back()) << "\n";
  return kOk;
}

template <class F>
int guarded(const RunContext& ctx, const std::string& command, F&& body) {
  Output out(ctx, command);
  int status = kError;
  try {
    status = body(out);
  } catch (...) {
    out.meta()["error"] = "failed";
    out.finish(kError);
    throw;
  }
  out.finish(status);
  return status;
}

}  // namespace

// ---------------------------------------------------------------- commands

int cmd_analyze(const RunContext& ctx) {
  return guarded(ctx, "analyze", [&](Output& out) {
    const ReactionNetwork net = load_net(ctx);
    const StoichiometryReport st = stoichiometric_analysis(net);
    const DetailedBalanceReport db = check_detailed_balance(net, st, positive(get_num(ctx.config, "analyze.tol", 1e-9), "tol"));
    json report = json::parse(report_to_json(net, st, db));
    auto& os = say(ctx);
    os << "species: " << net.num_species() << ", reactions: " << net.num_reactions() << ", rank W: " << st.rank
       << ", m_W: " << st.m_W << ", n_W: " << st.n_W << "\n";
    if (db.holds) {
      os << "detailed balance holds, c* = " << vec_str(db.c_star) << "\n";
    } else {
      os << "detailed balance fails, witness y = (";
      for (Eigen::Index i = 0; i < db.witness.size(); ++i) os << (i ? ", " : "") << db.witness(i);
      os << "), y . log(k_bw/k_fw) = " << fmt_num(db.witness_value) << "\n";
      // A positive rest point may still exist; report it when Newton converges.
      try {
        Eigen::VectorXd guess = Eigen::VectorXd::Ones(net.num_species());
        const auto g = get_list(ctx.config, "analyze.guess");
        if (!g.empty()) guess = to_vec(g);
        const Eigen::VectorXd ss = find_steady_state(net, st, guess);
        report["steady_state"] = std::vector<double>(ss.data(), ss.data() + ss.size());
        os << "steady state of the rate equation: " << vec_str(ss) << "\n";
      } catch (const std::exception& e) {
        report["steady_state_error"] = e.what();
      }
    }
    out.write("analysis.json", report.dump(2) + "\n");
    out.audits()["detailed_balance"] = db.holds;
    return db.holds ? kOk : kNegative;
  });
}

int cmd_simulate(const RunContext& ctx, const std::string& model) {
  return guarded(ctx, "simulate", [&](Output& out) {
    out.meta()["model"] = model;
    if (model == "rre") return simulate_rre(ctx, out);
    if (model == "cme") return simulate_cme(ctx, out);
    if (model == "liouville") return simulate_liouville(ctx, out);
    if (model.rfind("fpe:", 0) == 0) return simulate_fpe(ctx, out, model.substr(4));
    if (model == "hybrid:cmrr") return simulate_cmrr(ctx, out);
    if (model == "hybrid:merged") return simulate_merged(ctx, out);
    if (model == "hybrid:fprr") return simulate_fprr(ctx, out);
    throw std::runtime_error("unknown model '" + model + "'");
  });
}

int cmd_compare(const RunContext& ctx) {
  return guarded(ctx, "compare", [&](Output& out) {
    const ptree& c = ctx.config;
    const double a = positive(get_num(c, "compare.a", 1.0), "a");
    const double b = positive(get_num(c, "compare.b", 1.0), "b");
    const double V = volume(c, "compare.V", 30.0);
    const auto times = linspace(positive(get_num(c, "compare.t_end", 3.0), "t_end"), get_int(c, "compare.points", 31));
    const ComparisonReport rep = compare_birth_death_models(a, b, V, times, positive(get_num(c, "compare.c0", 0.2), "c0"));
    out.write("compare.csv", rep.csv());
    out.write("compare.json", rep.json() + "\n");
    out.audits() = json::parse(rep.json());
    say(ctx) << "compare: CLE mean gap " << fmt_num(rep.cle_mean_gap) << ", variance gap " << fmt_num(rep.cle_var_gap)
             << ", CLE equilibrium error " << fmt_num(rep.cle_equilibrium_sup_error) << "\n";
    return kOk;
  });
}

int cmd_converge(const RunContext& ctx) {
  return guarded(ctx, "converge", [&](Output& out) {
    const ptree& c = ctx.config;
    const ReactionNetwork net = load_net(ctx);
    const RreSystem sys = make_rre_system(net);
    const Eigen::VectorXd c0 = initial_state(ctx, "converge.c0", net.num_species());
    const auto Vs = get_list(c, "converge.V_list");
    if (Vs.empty()) throw std::runtime_error("config: converge.V_list is empty");
    for (double V : Vs)
      if (!(V >= 1.0)) throw std::runtime_error("config: every volume in V_list must be at least 1");
    const ConvergenceTable tab = convergence_experiment(sys, c0, positive(get_num(c, "converge.t", 1.0), "t"), Vs);
    out.write("converge.csv", tab.csv());
    out.audits()["slope"] = tab.slope;
    say(ctx) << "converge: fitted log-log slope " << fmt_num(tab.slope) << "\n";
    return kOk;
  });
}

int cmd_audit(const RunContext& ctx) {
  return guarded(ctx, "audit", [&](Output& out) {
    const ptree& c = ctx.config;
    const ReactionNetwork net = load_net(ctx);
    const RreSystem sys = make_rre_system(net);
    const double V = volume(c, "audit.V", 20.0);
    const Eigen::VectorXd c0 = initial_state(ctx, "audit.c0", net.num_species());
    const double tail = positive(get_num(c, "audit.tail", 1e-12), "tail");
    const LatticeBox box = poisson_box(c0.cwiseMax(sys.c_star()), V, tail);
    const TruncatedCme cme = assemble_generator(net, box, &sys.db, tail);
    const auto times = linspace(positive(get_num(c, "audit.t_end", 2.0), "t_end"), get_int(c, "audit.points", 201));
    const CmeSolution sol = solve_cme(cme, poisson_weights(box, c0, true), times);
    const AuditSeries a = cme_energy_audit(cme, sol);
    out.write("audit.csv", a.csv());
    double worst = 0.0, rise = 0.0;
    for (std::size_t k = 0; k < a.t.size(); ++k) {
      worst = std::max(worst, std::abs(a.residual[k]));
      if (k) rise = std::max(rise, a.energy[k] - a.energy[k - 1]);
    }
    out.audits()["max_residual"] = worst;
    out.audits()["max_energy_increase"] = rise;
    out.audits()["leak"] = a.leak.back();
    say(ctx) << "audit: energy identity residual " << fmt_num(worst) << ", leak " << fmt_num(a.leak.back()) << "\n";
    return kOk;
  });
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reaction network gradient-structure toolkit"};
  app.require_subcommand(1);
  std::string config_path, out_flag, model;
  std::uint64_t seed = 12345;
  app.add_option("--config", config_path, "INI configuration file")->required();
  app.add_option("--out", out_flag, "output directory");
  app.add_option("--seed", seed, "seed for randomized components");
  auto* analyze = app.add_subcommand("analyze", "stoichiometry and detailed-balance certificate");
  auto* simulate = app.add_subcommand("simulate", "run one model");
  simulate->add_option("--model", model, "rre | cme | liouville | fpe:<variant> | hybrid:<cmrr|merged|fprr>");
  auto* compare = app.add_subcommand("compare", "linear birth-death model comparison");
  auto* converge = app.add_subcommand("converge", "volume sweep of the master equation");
  auto* audit = app.add_subcommand("audit", "energy-dissipation audit of a master-equation solve");
  app.fallthrough();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }

  try {
    RunContext ctx;
    ctx.config_path = config_path;
    ctx.config = load_config(config_path);
    ctx.config_dir = fs::absolute(config_path).parent_path().string();
    ctx.out_dir = resolve_out_dir(out_flag, ctx.config);
    ctx.seed = seed;
    ctx.out = &out;
    if (*analyze) return cmd_analyze(ctx);
    if (*simulate) {
      if (model.empty()) model = ctx.config.get<std::string>("simulate.model", "");
      if (model.empty()) throw std::runtime_error("simulate: no model given (--model or [simulate] model)");
      return cmd_simulate(ctx, model);
    }
    if (*compare) return cmd_compare(ctx);
    if (*converge) return cmd_converge(ctx);
    if (*audit) return cmd_audit(ctx);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}

}  // namespace crn::cli
