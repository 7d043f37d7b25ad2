#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "polyrand/error.hpp"

namespace polyrand::cli {

enum class Format { csv, json };

enum ExitCode : int { kPass = 0, kViolation = 1, kConfigError = 2, kInfeasible = 3 };

/// Bad suite name, unknown key, or a value of the wrong type.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string suite;
  /// Suite parameters; every key must be known to the suite.
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::optional<std::string> out;
  Format format = Format::csv;
  unsigned jobs = 1;
  bool dry_run = false;

  /// {"suite", "seed", "format", "jobs", "out", "params"}; other keys are rejected.
  static RunConfig from_json(const std::string& text);
};

struct RunOutcome {
  int exit_code = kPass;
  /// CSV or JSON report (empty for dry runs and errors).
  std::string artifact;
  /// Human-readable lines: the headline result, pass/fail, or the error.
  std::string summary;
  std::optional<CostEstimate> cost;
};

const std::vector<std::string>& suite_names();

/// Parameters and defaults of every suite, used as --help text.
std::string describe_suites();

/// Predicted cost; never runs a heavy kernel. Throws ConfigError.
CostEstimate dry_run(const RunConfig& config);

/// Runs the suite. Never throws: configuration problems map to exit code 2,
/// work beyond the limits to 3, failed checks to 1.
RunOutcome run(const RunConfig& config);

}  // namespace polyrand::cli
