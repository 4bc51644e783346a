#include "drivestyle/eval/report.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace drivestyle::eval {

void save_report_json(const std::string& path, const EvalReport& report) {
  nlohmann::json j;
  j["metric"] = report.metric;
  j["policy"] = report.policy_name;
  j["fingerprint"] = report.fingerprint;
  j["seed"] = report.seed;
  j["n_scenarios"] = report.n_scenarios;
  j["meta"] = report.meta;
  if (report.metric == "crash") {
    j["crash_pct"] = report.crash_pct;
    j["crashed"] = report.crash_rows;
  } else {
    j["density"] = report.density;
    j["coverage"] = report.coverage;
    j["f1"] = report.f1;
    j["skipped"] = report.skipped;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.f1_rows) {
      rows.push_back({{"trajectory", row.trajectory_index},
                      {"density", row.density},
                      {"coverage", row.coverage},
                      {"f1", row.f1},
                      {"collided", row.collided}});
    }
    j["rows"] = std::move(rows);
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_report_json: cannot open '" + path + "'");
  os << j.dump(2) << "\n";
}

EvalReport load_report_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_report_json: cannot open '" + path + "'");
  nlohmann::json j;
  is >> j;
  EvalReport report;
  report.metric = j.at("metric").get<std::string>();
  report.policy_name = j.at("policy").get<std::string>();
  report.fingerprint = j.at("fingerprint").get<std::string>();
  report.seed = j.at("seed").get<std::uint64_t>();
  report.n_scenarios = j.at("n_scenarios").get<int>();
  report.meta = j.at("meta").get<std::map<std::string, std::string>>();
  if (report.metric == "crash") {
    report.crash_pct = j.at("crash_pct").get<double>();
    report.crash_rows = j.at("crashed").get<std::vector<bool>>();
  } else {
    report.density = j.at("density").get<double>();
    report.coverage = j.at("coverage").get<double>();
    report.f1 = j.at("f1").get<double>();
    report.skipped = j.at("skipped").get<int>();
    for (const auto& row : j.at("rows")) {
      F1ScenarioRow r;
      r.trajectory_index = row.at("trajectory").get<std::size_t>();
      r.density = row.at("density").get<double>();
      r.coverage = row.at("coverage").get<double>();
      r.f1 = row.at("f1").get<double>();
      r.collided = row.at("collided").get<bool>();
      report.f1_rows.push_back(r);
    }
  }
  return report;
}

void save_report_csv(const std::string& path, const EvalReport& report) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_report_csv: cannot open '" + path + "'");
  if (report.metric == "crash") {
    os << "scenario,crashed\n";
    for (std::size_t i = 0; i < report.crash_rows.size(); ++i) {
      os << i << "," << (report.crash_rows[i] ? 1 : 0) << "\n";
    }
  } else {
    os << "scenario,trajectory,density,coverage,f1,collided\n";
    for (std::size_t i = 0; i < report.f1_rows.size(); ++i) {
      const auto& row = report.f1_rows[i];
      os << i << "," << row.trajectory_index << "," << row.density << "," << row.coverage << ","
         << row.f1 << "," << (row.collided ? 1 : 0) << "\n";
    }
  }
}

Aggregate aggregate(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("aggregate: no values");
  Aggregate out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double var = 0.0;
    for (double v : values) var += (v - out.mean) * (v - out.mean);
    var /= static_cast<double>(values.size() - 1);
    out.two_se = 2.0 * std::sqrt(var / static_cast<double>(values.size()));
  }
  return out;
}

}  // namespace drivestyle::eval
