#include "drivestyle/policy/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace drivestyle::policy {

using datasets::kGravity;
using datasets::NormStats;
using datasets::Observation;
using styles::ContextWindow;

Observation observe_ego(const trafficsim::Scenario& s, const NormStats& stats,
                        double leader_prev_velocity_raw) {
  const double v = s.ego().velocity;
  double gap, lv;
  if (s.ego_has_leader()) {
    gap = s.gap_ahead(static_cast<std::size_t>(s.ego_index));
    lv = s.ego_leader().velocity;
  } else {
    gap = stats.denormalize_obs(1, 1.0);  // dataset-maximum headway fill
    lv = v;
  }
  Observation o;
  o.ego_velocity = stats.normalize_obs(0, v);
  o.space_headway = stats.normalize_obs(1, gap);
  o.time_headway = stats.normalize_obs(2, gap / std::max(v, 0.1));
  o.leader_velocity = stats.normalize_obs(3, lv);
  o.leader_prev_velocity = stats.normalize_obs(4, leader_prev_velocity_raw);
  return o;
}

namespace {

double raw_leader_velocity(const trafficsim::Scenario& s) {
  return s.ego_has_leader() ? s.ego_leader().velocity : s.ego().velocity;
}

/// Shared warm-up state machine for rollouts and crash-eval controllers.
class WarmupDriver {
 public:
  WarmupDriver(const NormStats& stats, std::vector<double> warmup, int L_p, EgoPolicyHooks hooks)
      : stats_(stats), warmup_(std::move(warmup)), L_p_(L_p), hooks_(std::move(hooks)) {
    if (static_cast<int>(warmup_.size()) + 1 < L_p_) {
      throw std::invalid_argument("warm-up shorter than L_p: have " +
                                  std::to_string(warmup_.size()) + " actions, need " +
                                  std::to_string(L_p_ - 1));
    }
  }

  /// Returns the raw ego acceleration and records the step.
  double accel(const trafficsim::Scenario& s, Rng& rng, Observation* obs_out,
               double* norm_action_out) {
    const Observation o = observe_ego(s, stats_, prev_leader_set_ ? prev_leader_v_ : raw_leader_velocity(s));
    prev_leader_v_ = raw_leader_velocity(s);
    prev_leader_set_ = true;
    if (obs_out) *obs_out = o;

    double a_norm;
    if (step_ < L_p_ - 1) {
      const double a_raw = warmup_[static_cast<std::size_t>(step_)];
      a_norm = stats_.normalize_accel(a_raw);
      window_.obs.push_back(o);
      window_.actions.push_back(a_norm);
    } else {
      if (step_ == L_p_ - 1) {
        window_.obs.push_back(o);
        if (hooks_.begin) hooks_.begin(window_, rng);
      }
      a_norm = hooks_.act(o, rng);
    }
    ++step_;
    if (norm_action_out) *norm_action_out = a_norm;
    return std::clamp(stats_.denormalize_accel(a_norm), -kGravity, kGravity);
  }

  int step() const { return step_; }

 private:
  const NormStats& stats_;
  std::vector<double> warmup_;
  int L_p_;
  EgoPolicyHooks hooks_;
  ContextWindow window_;
  int step_ = 0;
  double prev_leader_v_ = 0.0;
  bool prev_leader_set_ = false;
};

class HookedController : public trafficsim::EgoController {
 public:
  HookedController(const NormStats& stats, std::vector<double> warmup, int L_p,
                   EgoPolicyHooks hooks)
      : driver_(stats, std::move(warmup), L_p, std::move(hooks)) {}
  double accel(const trafficsim::Scenario& s, Rng& rng) override {
    return driver_.accel(s, rng, nullptr, nullptr);
  }

 private:
  WarmupDriver driver_;
};

}  // namespace

trafficsim::ControllerFactory make_hooked_factory(
    const NormStats& stats, std::vector<std::vector<double>> warmup_accels, int L_p,
    std::function<EgoPolicyHooks(std::size_t, Rng&)> make_hooks) {
  return [&stats, warmups = std::move(warmup_accels), L_p,
          make_hooks = std::move(make_hooks)](std::size_t idx, const trafficsim::Scenario&,
                                              Rng& rng) -> std::unique_ptr<trafficsim::EgoController> {
    if (idx >= warmups.size()) {
      throw std::invalid_argument("make_hooked_factory: missing warm-up for scenario " +
                                  std::to_string(idx));
    }
    return std::make_unique<HookedController>(stats, warmups[idx], L_p, make_hooks(idx, rng));
  };
}

EgoPolicyHooks make_policy_hooks(const DiffusionPolicy& policy, const styles::PriorNet* prior,
                                 const styles::ReprFunction* repr, const RolloutConfig& config) {
  if (policy.config().conditioned() && (prior == nullptr || repr == nullptr)) {
    throw std::invalid_argument("make_policy_hooks: conditioned policy needs prior and repr");
  }
  auto style = std::make_shared<styles::StyleVector>();
  auto has_style = std::make_shared<bool>(false);
  EgoPolicyHooks hooks;
  if (policy.config().conditioned()) {
    hooks.begin = [style, has_style, prior, repr, &policy, config](const ContextWindow& window,
                                                                   Rng& rng) {
      auto [code, c] = sample_style(*prior, *repr, window, rng, config.temperature);
      *style = c;
      *has_style = true;
    };
  }
  hooks.act = [style, has_style, &policy, config](const Observation& o, Rng& rng) {
    const styles::StyleVector* c =
        (policy.config().conditioned() && *has_style) ? style.get() : nullptr;
    return policy.sample_action(o.as_array(), c, config.sampler, rng);
  };
  return hooks;
}

RolloutResult rollout(const DiffusionPolicy& policy, const styles::PriorNet& prior,
                      const styles::ReprFunction& repr, const EvalScenario& scenario,
                      const NormStats& stats, int steps, const RolloutConfig& config, Rng& rng) {
  if (static_cast<int>(scenario.warmup_accels.size()) + 1 < config.L_p) {
    throw std::invalid_argument("rollout: scenario warm-up shorter than L_p");
  }
  RolloutResult result;
  auto code = std::make_shared<styles::StyleCode>();
  auto style_vec = std::make_shared<styles::StyleVector>();
  auto sampled = std::make_shared<bool>(false);

  EgoPolicyHooks hooks;
  hooks.begin = [code, style_vec, sampled, &prior, &repr, config](const ContextWindow& window,
                                                                  Rng& r) {
    auto [c_code, c] = styles::sample_style(prior, repr, window, r, config.temperature);
    *code = c_code;
    *style_vec = c;
    *sampled = true;
  };
  hooks.act = [style_vec, sampled, &policy, config](const Observation& o, Rng& r) {
    const styles::StyleVector* c = *sampled ? style_vec.get() : nullptr;
    return policy.sample_action(o.as_array(), c, config.sampler, r);
  };

  WarmupDriver driver(stats, scenario.warmup_accels, config.L_p, hooks);
  trafficsim::Scenario sim = scenario.sim;
  sim.validate();

  result.trajectory.driver_id = 0;
  const int total_steps = (config.L_p - 1) + steps;
  for (int i = 0; i < total_steps && !sim.crashed; ++i) {
    Observation o;
    double a_norm = 0.0;
    const double a_raw = driver.accel(sim, rng, &o, &a_norm);
    result.trajectory.obs.push_back(o);
    result.trajectory.act.push_back(datasets::Action{a_norm});
    if (i >= config.L_p - 1) result.style_code_per_step.push_back(code->index);
    trafficsim::step(sim, a_raw);
  }
  result.crashed = sim.crashed;
  result.style = *code;
  return result;
}

}  // namespace drivestyle::policy
