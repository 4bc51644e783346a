#pragma once

#include "drivestyle/common/rng.hpp"
#include "drivestyle/trafficsim/idm.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace drivestyle::trafficsim {

/// `position` is the front bumper location along the lane, so the bumper gap
/// to the leader is (leader.position - leader.length) - follower.position.
struct Vehicle {
  double position = 0.0;
  double velocity = 0.0;  // clamped at 0, no reversing
  double length = 5.0;
  std::optional<IdmParams> idm;  // nullopt only for the ego slot
};

/// Single-lane scene: vehicles ordered front to back (index 0 leads).
struct Scenario {
  std::vector<Vehicle> vehicles;
  int ego_index = 0;
  double dt = 0.1;
  bool crashed = false;

  const Vehicle& ego() const { return vehicles[static_cast<std::size_t>(ego_index)]; }
  Vehicle& ego() { return vehicles[static_cast<std::size_t>(ego_index)]; }
  bool ego_has_leader() const { return ego_index > 0; }
  const Vehicle& ego_leader() const { return vehicles[static_cast<std::size_t>(ego_index - 1)]; }

  /// Bumper gap in front of vehicle i (i >= 1).
  double gap_ahead(std::size_t i) const;

  /// Ordering, overlap, dt and controller checks. Throws on violation.
  void validate() const;
};

/// Advances one timestep. Non-ego accelerations come from idm_accel against
/// the leader (free road for the front vehicle); the ego uses `ego_accel`.
/// Semi-implicit Euler; sets `crashed` when any bumper gap reaches zero.
/// Throws if the scenario has already crashed.
void step(Scenario& s, double ego_accel);

/// Platoon at exact IDM equilibrium spacing for speed v. Handy for tests and
/// as a scenario seed.
Scenario make_equilibrium_platoon(const IdmParams& p, int n_vehicles, double v, int ego_index,
                                  double vehicle_length = 5.0);

/// Per-scenario ego controller; constructed once per scenario so styles and
/// context embeddings can be sampled a single time and held fixed.
class EgoController {
 public:
  virtual ~EgoController() = default;
  /// Returns the ego acceleration in m/s^2 for the current state.
  virtual double accel(const Scenario& s, Rng& rng) = 0;
};

using ControllerFactory =
    std::function<std::unique_ptr<EgoController>(std::size_t scenario_index, const Scenario&, Rng&)>;

struct CrashEvalResult {
  double crash_fraction = 0.0;
  std::vector<bool> crashed;  // one flag per scenario
};

/// Runs `steps` timesteps per scenario and reports the crashed fraction.
/// Scenarios are independent; per-scenario RNG streams derive from `seed`
/// and the scenario index, so results do not depend on worker count.
CrashEvalResult run_crash_eval(const ControllerFactory& make_controller,
                               const std::vector<Scenario>& scenarios, int steps = 200,
                               std::uint64_t seed = 0, int workers = 1);

/// JSON (de)serialization for reproducible evaluation suites.
std::string scenarios_to_json(const std::vector<Scenario>& scenarios);
std::vector<Scenario> scenarios_from_json(const std::string& text);
void save_scenarios(const std::string& path, const std::vector<Scenario>& scenarios);
std::vector<Scenario> load_scenarios(const std::string& path);

}  // namespace drivestyle::trafficsim
