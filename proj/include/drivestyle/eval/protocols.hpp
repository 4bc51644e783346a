#pragma once

#include "drivestyle/eval/metrics.hpp"
#include "drivestyle/policy/rollout.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace drivestyle::eval {

using HooksFactory = std::function<policy::EgoPolicyHooks(
    std::size_t scenario_index, std::size_t trajectory_index, Rng&)>;

// ---------- human-likeness (density/coverage F1) protocol ----------

struct F1Config {
  int k = 5;
  int n_scenarios = 20;
  int L_p = 5;
  int max_steps = 150;  // post-warm-up rollout horizon cap
  std::uint64_t seed = 0;
  int workers = 1;
};

struct F1ScenarioRow {
  std::size_t trajectory_index = 0;
  double density = 0.0;
  double coverage = 0.0;
  double f1 = 0.0;
  bool collided = false;  // ego ran into the replayed leader; rollout truncated
};

struct F1Result {
  double density = 0.0;
  double coverage = 0.0;
  double f1 = 0.0;  // per-scenario F1 values averaged
  std::vector<F1ScenarioRow> rows;
  int skipped = 0;  // trajectories too short for warm-up + evaluation
};

/// Per scenario: one logged test trajectory; the leader is log-replayed from
/// the trajectory's own headway/velocity series, the ego replays the logged
/// warm-up and is then driven by the policy. Rollout observations form the
/// fake cloud, the logged observations over the same steps the real cloud.
F1Result evaluate_f1(const HooksFactory& make_hooks, const datasets::Dataset& test,
                     const F1Config& config);

// ---------- crash protocol ----------

struct CrashProtocolConfig {
  int n_scenarios = 100;
  int steps = 200;  // at 10 Hz
  int L_p = 5;
  bool stopped_leader = false;  // stress variant: leaders parked ahead
  std::uint64_t seed = 0;
  int workers = 1;
};

struct CrashScenarioSet {
  std::vector<trafficsim::Scenario> scenarios;
  std::vector<std::vector<double>> warmup_accels;   // raw m/s^2 per scenario
  std::vector<std::size_t> source_trajectory;       // test trajectory each came from
};

/// Parametric platoons seeded from test trajectories: ego initial state from
/// the logs, IDM ambient traffic, the ego's leader targeting its maximum
/// recorded speed.
CrashScenarioSet build_crash_scenarios(const datasets::Dataset& test,
                                       const CrashProtocolConfig& config);

struct CrashResult {
  double crash_fraction = 0.0;
  std::vector<bool> crashed;
};

CrashResult run_crash_protocol(const HooksFactory& make_hooks, const CrashScenarioSet& set,
                               const datasets::NormStats& stats,
                               const CrashProtocolConfig& config);

// ---------- style recovery scoring (hidden labels, evaluation only) ----------

struct StyleRecovery {
  double code_purity = 0.0;           // majority-vote purity of codes
  double prior_style_accuracy = 0.0;  // held-out top-1, code mapped to style
  int distinct_codes = 0;
  int n_styles = 0;
};

/// Codes from the frozen representation over striding windows; the
/// code-to-style map comes from the labeled reference set, accuracy from the
/// held-out set. Reads hidden labels; never used in training paths.
StyleRecovery evaluate_style_recovery(const styles::ReprFunction& repr,
                                      const styles::PriorNet* prior,
                                      const datasets::Dataset& reference,
                                      const datasets::Dataset& held_out, int stride = 1);

}  // namespace drivestyle::eval
