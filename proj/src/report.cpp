#include "polyrand/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <json.hpp>
#include <sstream>

namespace polyrand {

namespace {
constexpr const char* kCsvVersion = "polyrand-envelope/1";

bool within(double v, const std::optional<double>& lo, const std::optional<double>& hi) {
  if (std::isnan(v)) return false;
  if (lo && v < *lo) return false;
  if (hi && v > *hi) return false;
  return true;
}
}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

EnvelopeRow& EnvelopeReport::add(double abscissa, double statistic, std::optional<double> lower,
                                 std::optional<double> upper, std::vector<double> extra) {
  return add_decided(abscissa, statistic, lower, upper, within(statistic, lower, upper), std::move(extra));
}

EnvelopeRow& EnvelopeReport::add_decided(double abscissa, double statistic, std::optional<double> lower,
                                         std::optional<double> upper, bool pass, std::vector<double> extra) {
  rows.push_back({abscissa, statistic, lower, upper, pass, std::move(extra)});
  return rows.back();
}

double EnvelopeReport::min_statistic() const {
  double m = std::numeric_limits<double>::infinity();
  for (auto& r : rows) m = std::min(m, r.statistic);
  return m;
}

double EnvelopeReport::max_statistic() const {
  double m = -std::numeric_limits<double>::infinity();
  for (auto& r : rows) m = std::max(m, r.statistic);
  return m;
}

bool EnvelopeReport::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const EnvelopeRow& r) { return r.pass; });
}

void EnvelopeReport::set_metric(const std::string& name, double value) {
  for (auto& [k, v] : metrics)
    if (k == name) {
      v = value;
      return;
    }
  metrics.emplace_back(name, value);
}

std::optional<double> EnvelopeReport::metric(const std::string& name) const {
  for (auto& [k, v] : metrics)
    if (k == name) return v;
  return std::nullopt;
}

std::string EnvelopeReport::to_csv() const {
  std::ostringstream out;
  out << "# " << kCsvVersion << " suite=" << suite << "\n";
  out << abscissa_name << ",statistic,lower,upper,pass";
  for (auto& c : extra_columns) out << ',' << c;
  out << '\n';
  for (auto& r : rows) {
    out << format_number(r.abscissa) << ',' << format_number(r.statistic) << ','
        << (r.lower ? format_number(*r.lower) : "") << ',' << (r.upper ? format_number(*r.upper) : "") << ','
        << (r.pass ? 1 : 0);
    for (double e : r.extra) out << ',' << format_number(e);
    out << '\n';
  }
  return out.str();
}

std::string EnvelopeReport::to_json() const {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return format_number(v);
  };
  nlohmann::ordered_json j;
  j["format"] = kCsvVersion;
  j["suite"] = suite;
  j["rows"] = rows.size();
  j["min_statistic"] = rows.empty() ? nlohmann::json(nullptr) : num(min_statistic());
  j["max_statistic"] = rows.empty() ? nlohmann::json(nullptr) : num(max_statistic());
  j["all_pass"] = all_pass();
  nlohmann::ordered_json m = nlohmann::ordered_json::object();
  for (auto& [k, v] : metrics) m[k] = num(v);
  j["metrics"] = m;
  j["notes"] = notes;
  return j.dump(2) + "\n";
}

}  // namespace polyrand
