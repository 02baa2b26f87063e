#pragma once

#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace crn::cli {

enum ExitCode : int { kOk = 0, kError = 1, kNegative = 2 };

struct RunContext {
  boost::property_tree::ptree config;
  std::string config_path;
  std::string config_dir;  // base for relative paths inside the config
  std::string out_dir;
  std::uint64_t seed = 0;
  std::ostream* out = nullptr;
};

// Reads an INI document. Throws std::runtime_error on IO or syntax errors.
boost::property_tree::ptree load_config(const std::string& path);

// Output directory precedence: --out, then CRN_OUT_DIR, then [output] dir, then ".".
std::string resolve_out_dir(const std::string& flag, const boost::property_tree::ptree& config);

int cmd_analyze(const RunContext& ctx);
int cmd_simulate(const RunContext& ctx, const std::string& model);
int cmd_compare(const RunContext& ctx);
int cmd_converge(const RunContext& ctx);
int cmd_audit(const RunContext& ctx);

// Full command line entry point; never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crn::cli
