#include "drivestyle/trafficsim/scenario.hpp"

#include "drivestyle/common/hash.hpp"
#include "drivestyle/common/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace drivestyle::trafficsim {

double Scenario::gap_ahead(std::size_t i) const {
  const Vehicle& leader = vehicles[i - 1];
  const Vehicle& follower = vehicles[i];
  return leader.position - leader.length - follower.position;
}

void Scenario::validate() const {
  if (vehicles.empty()) throw std::invalid_argument("Scenario: no vehicles");
  if (ego_index < 0 || ego_index >= static_cast<int>(vehicles.size())) {
    throw std::invalid_argument("Scenario: ego_index out of range");
  }
  if (!(dt > 0.0)) throw std::invalid_argument("Scenario: dt must be > 0");
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    const Vehicle& v = vehicles[i];
    if (v.velocity < 0.0) throw std::invalid_argument("Scenario: negative velocity");
    if (!(v.length > 0.0)) throw std::invalid_argument("Scenario: non-positive vehicle length");
    if (static_cast<int>(i) != ego_index) {
      if (!v.idm) throw std::invalid_argument("Scenario: non-ego vehicle lacks IDM params");
      v.idm->validate();
    }
    if (i > 0 && gap_ahead(i) <= 0.0) {
      throw std::invalid_argument("Scenario: vehicles overlap or are out of order at index " +
                                  std::to_string(i));
    }
  }
}

void step(Scenario& s, double ego_accel) {
  if (s.crashed) throw std::logic_error("step: scenario already crashed");
  const std::size_t n = s.vehicles.size();
  std::vector<double> accel(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<int>(i) == s.ego_index) {
      accel[i] = ego_accel;
      continue;
    }
    const Vehicle& v = s.vehicles[i];
    if (i == 0) {
      accel[i] = idm_free_accel(*v.idm, v.velocity);
    } else {
      const Vehicle& lead = s.vehicles[i - 1];
      accel[i] = idm_accel(*v.idm, v.velocity, s.gap_ahead(i), v.velocity - lead.velocity);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    Vehicle& v = s.vehicles[i];
    v.velocity = std::max(0.0, v.velocity + accel[i] * s.dt);
    v.position += v.velocity * s.dt;
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (s.gap_ahead(i) <= 0.0) {
      s.crashed = true;
      break;
    }
  }
}

Scenario make_equilibrium_platoon(const IdmParams& p, int n_vehicles, double v, int ego_index,
                                  double vehicle_length) {
  p.validate();
  if (n_vehicles < 1) throw std::invalid_argument("make_equilibrium_platoon: need >= 1 vehicle");
  const double gap = idm_equilibrium_gap(p, v);
  Scenario s;
  s.vehicles.resize(static_cast<std::size_t>(n_vehicles));
  double pos = 0.0;
  for (int i = n_vehicles - 1; i >= 0; --i) {
    Vehicle& veh = s.vehicles[static_cast<std::size_t>(i)];
    veh.position = pos;
    veh.velocity = v;
    veh.length = vehicle_length;
    veh.idm = p;
    pos += gap + vehicle_length;
  }
  s.ego_index = ego_index;
  s.validate();
  return s;
}

CrashEvalResult run_crash_eval(const ControllerFactory& make_controller,
                               const std::vector<Scenario>& scenarios, int steps,
                               std::uint64_t seed, int workers) {
  if (scenarios.empty()) throw std::invalid_argument("run_crash_eval: empty scenario list");
  CrashEvalResult result;
  result.crashed.assign(scenarios.size(), false);
  parallel_for(scenarios.size(), workers, [&](std::size_t idx) {
    Rng rng(splitmix64(seed ^ (0x5c3a9ull + idx)));
    Scenario s = scenarios[idx];
    s.validate();
    auto controller = make_controller(idx, s, rng);
    for (int t = 0; t < steps && !s.crashed; ++t) {
      step(s, controller->accel(s, rng));
    }
    result.crashed[idx] = s.crashed;
  });
  const auto hits = std::count(result.crashed.begin(), result.crashed.end(), true);
  result.crash_fraction = static_cast<double>(hits) / static_cast<double>(scenarios.size());
  return result;
}

namespace {

nlohmann::json idm_to_json(const IdmParams& p) {
  return {{"v0", p.v0}, {"T", p.T}, {"a_max", p.a_max}, {"b", p.b},
          {"delta", p.delta}, {"s0", p.s0}};
}

IdmParams idm_from_json(const nlohmann::json& j) {
  IdmParams p;
  p.v0 = j.at("v0").get<double>();
  p.T = j.at("T").get<double>();
  p.a_max = j.at("a_max").get<double>();
  p.b = j.at("b").get<double>();
  p.delta = j.at("delta").get<double>();
  p.s0 = j.at("s0").get<double>();
  return p;
}

}  // namespace

std::string scenarios_to_json(const std::vector<Scenario>& scenarios) {
  nlohmann::json root;
  root["version"] = 1;
  nlohmann::json list = nlohmann::json::array();
  for (const Scenario& s : scenarios) {
    nlohmann::json js;
    js["ego_index"] = s.ego_index;
    js["dt"] = s.dt;
    nlohmann::json vehicles = nlohmann::json::array();
    for (const Vehicle& v : s.vehicles) {
      nlohmann::json jv;
      jv["position"] = v.position;
      jv["velocity"] = v.velocity;
      jv["length"] = v.length;
      if (v.idm) jv["idm"] = idm_to_json(*v.idm);
      vehicles.push_back(std::move(jv));
    }
    js["vehicles"] = std::move(vehicles);
    list.push_back(std::move(js));
  }
  root["scenarios"] = std::move(list);
  return root.dump();
}

std::vector<Scenario> scenarios_from_json(const std::string& text) {
  const nlohmann::json root = nlohmann::json::parse(text);
  std::vector<Scenario> out;
  for (const auto& js : root.at("scenarios")) {
    Scenario s;
    s.ego_index = js.at("ego_index").get<int>();
    s.dt = js.at("dt").get<double>();
    for (const auto& jv : js.at("vehicles")) {
      Vehicle v;
      v.position = jv.at("position").get<double>();
      v.velocity = jv.at("velocity").get<double>();
      v.length = jv.at("length").get<double>();
      if (jv.contains("idm")) v.idm = idm_from_json(jv.at("idm"));
      s.vehicles.push_back(v);
    }
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

void save_scenarios(const std::string& path, const std::vector<Scenario>& scenarios) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_scenarios: cannot open '" + path + "'");
  os << scenarios_to_json(scenarios);
}

std::vector<Scenario> load_scenarios(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_scenarios: cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return scenarios_from_json(text);
}

}  // namespace drivestyle::trafficsim
