#include "drivestyle/datasets/serialize.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>

namespace drivestyle::datasets {

void save_dataset(const Dataset& ds, const std::string& jsonl_path,
                  const std::string& stats_path) {
  {
    std::ofstream os(jsonl_path);
    if (!os) throw std::runtime_error("save_dataset: cannot open '" + jsonl_path + "'");
    for (const Trajectory& t : ds.trajectories) {
      nlohmann::json j;
      j["driver_id"] = t.driver_id;
      j["dt"] = t.dt;
      if (t.hidden_style_label_for_eval()) j["style"] = *t.hidden_style_label_for_eval();
      nlohmann::json obs = nlohmann::json::array();
      for (const Observation& o : t.obs) {
        obs.push_back({o.ego_velocity, o.space_headway, o.time_headway, o.leader_velocity,
                       o.leader_prev_velocity});
      }
      j["obs"] = std::move(obs);
      nlohmann::json act = nlohmann::json::array();
      for (const Action& a : t.act) act.push_back(a.accel);
      j["act"] = std::move(act);
      os << j.dump() << "\n";
    }
  }
  {
    std::ofstream os(stats_path);
    if (!os) throw std::runtime_error("save_dataset: cannot open '" + stats_path + "'");
    nlohmann::json j;
    j["version"] = ds.version;
    nlohmann::json obs = nlohmann::json::array();
    for (const FeatureRange& r : ds.stats.obs) obs.push_back({r.lo, r.hi});
    j["obs"] = std::move(obs);
    j["accel"] = {ds.stats.accel.lo, ds.stats.accel.hi};
    j["meta"] = ds.meta;
    os << j.dump(2) << "\n";
  }
}

Dataset load_dataset(const std::string& jsonl_path, const std::string& stats_path) {
  Dataset ds;
  {
    std::ifstream is(stats_path);
    if (!is) throw std::runtime_error("load_dataset: cannot open '" + stats_path + "'");
    nlohmann::json j;
    is >> j;
    ds.version = j.at("version").get<std::uint32_t>();
    if (ds.version != 1) {
      throw std::runtime_error("load_dataset: unsupported dataset version " +
                               std::to_string(ds.version));
    }
    const auto& obs = j.at("obs");
    if (obs.size() != ds.stats.obs.size()) {
      throw std::runtime_error("load_dataset: stats sidecar has wrong feature count");
    }
    for (std::size_t k = 0; k < ds.stats.obs.size(); ++k) {
      ds.stats.obs[k] = {obs[k][0].get<double>(), obs[k][1].get<double>()};
    }
    ds.stats.accel = {j.at("accel")[0].get<double>(), j.at("accel")[1].get<double>()};
    ds.stats.validate();
    if (j.contains("meta")) ds.meta = j.at("meta").get<std::map<std::string, std::string>>();
  }
  {
    std::ifstream is(jsonl_path);
    if (!is) throw std::runtime_error("load_dataset: cannot open '" + jsonl_path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const std::exception& e) {
        throw std::runtime_error("load_dataset: line " + std::to_string(line_no) + ": " +
                                 e.what());
      }
      Trajectory t;
      t.driver_id = j.at("driver_id").get<long>();
      t.dt = j.at("dt").get<double>();
      if (j.contains("style")) t.set_hidden_style_label(j.at("style").get<int>());
      for (const auto& row : j.at("obs")) {
        Observation o;
        o.ego_velocity = row[0].get<double>();
        o.space_headway = row[1].get<double>();
        o.time_headway = row[2].get<double>();
        o.leader_velocity = row[3].get<double>();
        o.leader_prev_velocity = row[4].get<double>();
        t.obs.push_back(o);
      }
      for (const auto& a : j.at("act")) t.act.push_back(Action{a.get<double>()});
      if (t.obs.size() != t.act.size()) {
        throw std::runtime_error("load_dataset: line " + std::to_string(line_no) +
                                 ": obs/act length mismatch");
      }
      ds.trajectories.push_back(std::move(t));
    }
  }
  return ds;
}

}  // namespace drivestyle::datasets
