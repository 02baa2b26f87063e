#include "doctest.h"

#include "commands.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

// Scratch files live under the working directory (the build tree under ctest).
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::current_path() / ("cli_scratch_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }

  std::string put(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  }
  std::string read(const std::string& name) const {
    std::ifstream in(dir / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = crn::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

const char* kBirthDeath = "species X\nX <-> 0 : kf=1, kb=1\n";

}  // namespace

TEST_CASE("analyze reports detailed balance through the exit code") {
  Scratch s("analyze");
  s.put("db.net", "species X\n# two routes between 0 and X\n0 <-> X : kf=2, kb=1\n0 <-> 2 X : kf=4, kb=1\n");
  s.put("nodb.net", "species X\n0 <-> X : kf=7, kb=1\n0 <-> 2 X : kf=1, kb=1\n");
  s.put("bad.net", "species X\nX <-> 0 : kf=1, kb=1\nX -> 0 : kf=1\n");
  const std::string out = (s.dir / "out").string();
  auto cfg = [&](const std::string& net) { return s.put(net + ".ini", "[network]\nfile = " + net + ".net\n"); };

  const Result ok = run({"--config", cfg("db"), "--out", out, "analyze"});
  CHECK(ok.code == 0);
  const auto rep = nlohmann::json::parse(s.read("out/analysis.json"));
  CHECK(rep.is_object());
  const auto meta = nlohmann::json::parse(s.read("out/metadata.json"));
  CHECK(meta["command"] == "analyze");
  CHECK(meta["exit_code"] == 0);

  const Result neg = run({"--config", cfg("nodb"), "--out", out, "analyze"});
  CHECK(neg.code == 2);
  CHECK(nlohmann::json::parse(s.read("out/metadata.json"))["exit_code"] == 2);

  const Result bad = run({"--config", cfg("bad"), "--out", out, "analyze"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("line 3") != std::string::npos);

  const Result missing = run({"--config", (s.dir / "absent.ini").string(), "analyze"});
  CHECK(missing.code == 1);
}

TEST_CASE("argument and configuration errors exit with 1") {
  Scratch s("errors");
  s.put("bd.net", kBirthDeath);
  const std::string out = (s.dir / "out").string();
  const std::string sim = s.put("sim.ini", "[network]\nfile = bd.net\n[simulate]\nc0 = 0.5\n");
  CHECK(run({"--config", sim, "--out", out, "simulate", "--model", "langevin"}).code == 1);
  CHECK(run({"--config", sim, "--out", out, "simulate", "--model", "fpe:bogus"}).code == 1);
  CHECK(run({"--config", sim, "--out", out, "simulate"}).code == 1);  // no model anywhere
  CHECK(run({"--config", sim, "--out", out}).code == 1);              // no subcommand
  CHECK(run({"--out", out, "analyze"}).code == 1);                    // no config
  const std::string conv = s.put("conv.ini", "[network]\nfile = bd.net\n[converge]\nc0 = 0.5\nV_list =\n");
  const Result empty = run({"--config", conv, "--out", out, "converge"});
  CHECK(empty.code == 1);
  CHECK(empty.err.find("V_list") != std::string::npos);
  const std::string nan = s.put("nan.ini", "[network]\nfile = bd.net\n[simulate]\nc0 = 0.5\nt_end = soon\n");
  CHECK(run({"--config", nan, "--out", out, "simulate", "--model", "rre"}).code == 1);
}

TEST_CASE("rre trajectory follows the closed form") {
  Scratch s("rre");
  s.put("bd.net", kBirthDeath);
  const std::string cfg =
      s.put("rre.ini", "[network]\nfile = bd.net\n[simulate]\nmodel = rre\nc0 = 3\nt_end = 2\npoints = 21\ntol = 1e-12\n");
  REQUIRE(run({"--config", cfg, "--out", (s.dir / "out").string(), "simulate"}).code == 0);
  std::istringstream csv(s.read("out/trajectory.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line.rfind("t,", 0) == 0);
  int rows = 0;
  while (std::getline(csv, line)) {
    std::istringstream row(line);
    std::string t, c;
    std::getline(row, t, ',');
    std::getline(row, c, ',');
    CHECK(std::stod(c) == doctest::Approx(1.0 + 2.0 * std::exp(-std::stod(t))).epsilon(1e-9));
    ++rows;
  }
  CHECK(rows == 21);
  const auto meta = nlohmann::json::parse(s.read("out/metadata.json"));
  CHECK(meta["command"] == "simulate");
  CHECK(meta["files"].size() >= 1);
}

TEST_CASE("outputs are deterministic across runs") {
  Scratch s("determinism");
  s.put("bd.net", kBirthDeath);
  const std::string cfg = s.put("run.ini",
                                "[network]\nfile = bd.net\n[simulate]\nc0 = 0.4\nV = 20\nt_end = 1\npoints = 11\n"
                                "[converge]\nc0 = 0.4\nt = 0.5\nV_list = 10, 20\n[compare]\nV = 20\nt_end = 1\npoints = 11\n");
  struct Job {
    std::vector<std::string> args;
    std::string file;
  };
  const std::vector<Job> jobs = {{{"simulate", "--model", "cme"}, "moments.csv"},
                                 {{"simulate", "--model", "fpe:simple"}, "fpe.csv"},
                                 {{"converge"}, "converge.csv"},
                                 {{"compare"}, "compare.csv"}};
  for (const auto& job : jobs) {
    std::string first;
    for (const std::string out : {"a", "b"}) {
      std::vector<std::string> args = {"--config", cfg, "--out", (s.dir / out).string()};
      args.insert(args.end(), job.args.begin(), job.args.end());
      const Result r = run(args);
      REQUIRE_MESSAGE(r.code == 0, r.err);
      REQUIRE(fs::exists(s.dir / out / "metadata.json"));
      const std::string text = s.read(out + "/" + job.file);
      CHECK(!text.empty());
      if (first.empty())
        first = text;
      else
        CHECK(text == first);
    }
  }
}

TEST_CASE("output directory precedence") {
  boost::property_tree::ptree pt;
  pt.put("output.dir", "from_config");
  CHECK(crn::cli::resolve_out_dir("flag", pt) == "flag");
  if (!std::getenv("CRN_OUT_DIR")) CHECK(crn::cli::resolve_out_dir("", pt) == "from_config");
  CHECK(crn::cli::resolve_out_dir("", boost::property_tree::ptree{}) == (std::getenv("CRN_OUT_DIR") ? std::getenv("CRN_OUT_DIR") : "."));
}

TEST_CASE("every model runs from a configuration file") {
  Scratch s("models");
  s.put("bd.net", kBirthDeath);
  s.put("iso.net", "species A B\nA <-> B : kf=1, kb=1\n");
  const std::string bd = s.put("bd.ini",
                               "[network]\nfile = bd.net\n[simulate]\nc0 = 0.6\nV = 15\nt_end = 0.5\npoints = 6\n"
                               "particles = 8\n[audit]\nc0 = 0.6\nV = 15\nt_end = 0.5\npoints = 11\n"
                               "[hybrid]\nV = 20\nN = 8\nt_end = 0.5\npoints = 6\nc_max = 4\n");
  const std::string iso = s.put("iso.ini", "[network]\nfile = iso.net\n[hybrid]\nV = 50\nc0 = 1.2, 0.8\ncells = 120\n"
                                           "t_end = 0.5\npoints = 6\n");
  const std::vector<std::pair<std::vector<std::string>, std::string>> jobs = {
      {{"--config", bd, "simulate", "--model", "liouville"}, "liouville.csv"},
      {{"--config", bd, "simulate", "--model", "fpe:cosh_corrected"}, "density_final.csv"},
      {{"--config", bd, "simulate", "--model", "hybrid:cmrr"}, "cm_rr.csv"},
      {{"--config", bd, "simulate", "--model", "hybrid:merged"}, "merged_final.csv"},
      {{"--config", iso, "simulate", "--model", "hybrid:fprr"}, "fp_rr.csv"},
      {{"--config", bd, "audit"}, "audit.csv"}};
  for (const auto& [args, file] : jobs) {
    std::vector<std::string> full = args;
    full.insert(full.begin() + 2, {"--out", (s.dir / "out").string()});
    const Result r = run(full);
    CHECK_MESSAGE(r.code == 0, file << ": " << r.err);
    CHECK(fs::exists(s.dir / "out" / file));
  }
}
