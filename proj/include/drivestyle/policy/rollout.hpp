#pragma once

#include "drivestyle/policy/ddpm.hpp"
#include "drivestyle/styles/prior.hpp"
#include "drivestyle/trafficsim/scenario.hpp"

#include <functional>
#include <span>

namespace drivestyle::policy {

/// Ego observation from live simulator state, normalized with the dataset
/// stats. Leaderless egos see the dataset-maximum headway and zero closing
/// speed, mirroring the preprocessing fill.
datasets::Observation observe_ego(const trafficsim::Scenario& s,
                                  const datasets::NormStats& stats,
                                  double leader_prev_velocity_raw);

/// Scenario plus the logged ego behavior needed for the L_p warm-up.
struct EvalScenario {
  trafficsim::Scenario sim;
  std::vector<double> warmup_accels;  // raw m/s^2, at least L_p - 1 entries
};

struct RolloutConfig {
  int L_p = 5;
  SamplerKind sampler = SamplerKind::ddpm();
  double temperature = 1.0;
};

struct RolloutResult {
  datasets::Trajectory trajectory;      // warm-up and policy steps, normalized
  styles::StyleCode style;              // sampled once after warm-up
  std::vector<int> style_code_per_step; // logged per policy step
  bool crashed = false;
};

/// Fixed-style rollout: replay the logged warm-up (L_p - 1 actions while
/// collecting L_p observations), sample the style once from the prior, then
/// drive with the diffusion policy holding that style. `steps` counts
/// post-warm-up policy steps; 0 returns the warm-up-only trajectory.
RolloutResult rollout(const DiffusionPolicy& policy, const styles::PriorNet& prior,
                      const styles::ReprFunction& repr, const EvalScenario& scenario,
                      const datasets::NormStats& stats, int steps, const RolloutConfig& config,
                      Rng& rng);

/// Uniform per-scenario policy hooks: begin() sees the warm-up context once,
/// act() maps one normalized observation to one normalized action. Every
/// policy and baseline drives the same harness through this interface.
struct EgoPolicyHooks {
  std::function<void(const styles::ContextWindow&, Rng&)> begin;  // optional
  std::function<double(const datasets::Observation&, Rng&)> act;  // required
};

/// Controller factory for trafficsim::run_crash_eval: per scenario, replay
/// the logged warm-up, then apply the hooks. Actions are denormalized to
/// m/s^2 and clamped to the gravity cap.
trafficsim::ControllerFactory make_hooked_factory(
    const datasets::NormStats& stats, std::vector<std::vector<double>> warmup_accels, int L_p,
    std::function<EgoPolicyHooks(std::size_t scenario_index, Rng&)> make_hooks);

/// Hooks for the style-conditioned diffusion policy (prior/repr may be null
/// for unconditional policies; the warm-up replay still runs).
EgoPolicyHooks make_policy_hooks(const DiffusionPolicy& policy, const styles::PriorNet* prior,
                                 const styles::ReprFunction* repr, const RolloutConfig& config);

}  // namespace drivestyle::policy
