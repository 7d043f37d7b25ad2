#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "polyrand/cli.hpp"

namespace {

// --set key=value: the value is parsed as JSON when possible, else taken as a string.
void apply_assignment(nlohmann::json& params, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw polyrand::cli::ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  try {
    params[key] = nlohmann::json::parse(value);
  } catch (const nlohmann::json::exception&) {
    params[key] = value;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical verification suites for polynomial characteristic functions, Vinogradov mean values "
               "and Gaussian quadratic forms"};
  app.footer(polyrand::cli::describe_suites());

  std::string suite, config_path, out, format;
  std::uint64_t seed = 0;
  unsigned jobs = 0;
  bool dry = false;
  std::vector<std::string> assignments;
  app.add_option("--suite", suite, "Suite to run")->check(CLI::IsMember(polyrand::cli::suite_names()));
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (default 0)");
  app.add_option("--out", out, "Output file (default: standard output)");
  app.add_option("--format", format, "csv or json (default csv)")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--jobs", jobs, "Worker threads (default 1); never changes results")->check(CLI::Range(1u, 1024u));
  app.add_flag("--dry-run", dry, "Print the predicted cost and exit");
  app.add_option("--set", assignments, "Suite parameter as key=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : polyrand::cli::kConfigError;
  }

  polyrand::cli::RunConfig cfg;
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      std::stringstream buf;
      buf << in.rdbuf();
      cfg = polyrand::cli::RunConfig::from_json(buf.str());
    }
    if (!suite.empty()) cfg.suite = suite;
    if (*seed_opt) cfg.seed = seed;
    if (!out.empty()) cfg.out = out;
    if (!format.empty()) cfg.format = format == "json" ? polyrand::cli::Format::json : polyrand::cli::Format::csv;
    if (jobs > 0) cfg.jobs = jobs;
    cfg.dry_run = dry;
    for (const auto& a : assignments) apply_assignment(cfg.params, a);
    if (cfg.suite.empty()) throw polyrand::cli::ConfigError("no suite given (use --suite or the config file)");
  } catch (const polyrand::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return polyrand::cli::kConfigError;
  }

  auto result = polyrand::cli::run(cfg);
  const bool to_file = cfg.out && !cfg.out->empty();
  if (!result.artifact.empty()) {
    if (to_file) {
      std::ofstream f(*cfg.out, std::ios::binary);
      if (!f) {
        std::cerr << "cannot write " << *cfg.out << "\n";
        return polyrand::cli::kConfigError;
      }
      f << result.artifact;
    } else {
      std::cout << result.artifact;
    }
  }
  (to_file || result.artifact.empty() ? std::cout : std::cerr) << result.summary;
  return result.exit_code;
}
