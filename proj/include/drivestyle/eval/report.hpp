#pragma once

#include "drivestyle/eval/protocols.hpp"

#include <map>
#include <string>

namespace drivestyle::eval {

/// Serializable evaluation outcome; one of the metric blocks is populated
/// depending on `metric` ("crash" or "f1").
struct EvalReport {
  std::string metric;
  std::string policy_name;
  std::string fingerprint;
  std::uint64_t seed = 0;
  int n_scenarios = 0;

  double crash_pct = 0.0;  // percent
  std::vector<bool> crash_rows;

  double density = 0.0;
  double coverage = 0.0;
  double f1 = 0.0;
  std::vector<F1ScenarioRow> f1_rows;
  int skipped = 0;

  std::map<std::string, std::string> meta;
};

void save_report_json(const std::string& path, const EvalReport& report);
EvalReport load_report_json(const std::string& path);
/// Flat CSV, one row per scenario.
void save_report_csv(const std::string& path, const EvalReport& report);

struct Aggregate {
  double mean = 0.0;
  double two_se = 0.0;  // two standard errors over the inputs
};
Aggregate aggregate(const std::vector<double>& values);

}  // namespace drivestyle::eval
