#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace polyrand {

struct EnvelopeRow {
  double abscissa = 0.0;
  double statistic = 0.0;
  std::optional<double> lower;
  std::optional<double> upper;
  bool pass = true;
  std::vector<double> extra;
};

/// Grid of (abscissa, statistic, bounds, pass) rows produced by every
/// verification routine, plus named summary scalars.
struct EnvelopeReport {
  std::string suite;
  std::string abscissa_name = "abscissa";
  std::vector<std::string> extra_columns;
  std::vector<EnvelopeRow> rows;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> notes;

  /// Appends a row whose pass flag is lower <= statistic <= upper.
  EnvelopeRow& add(double abscissa, double statistic, std::optional<double> lower, std::optional<double> upper,
                   std::vector<double> extra = {});
  /// Appends a row with an explicitly decided pass flag.
  EnvelopeRow& add_decided(double abscissa, double statistic, std::optional<double> lower,
                           std::optional<double> upper, bool pass, std::vector<double> extra = {});

  double min_statistic() const;
  double max_statistic() const;
  bool all_pass() const;
  void set_metric(const std::string& name, double value);
  std::optional<double> metric(const std::string& name) const;

  /// Versioned header comment, then abscissa,statistic,lower,upper,pass[,extras].
  std::string to_csv() const;
  std::string to_json() const;
};

/// Shortest round-trip decimal form used in every CSV/JSON emitter.
std::string format_number(double v);

}  // namespace polyrand
