#include "drivestyle/eval/protocols.hpp"

#include "drivestyle/common/hash.hpp"
#include "drivestyle/common/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace drivestyle::eval {

using datasets::kGravity;
using datasets::kTimestep;
using datasets::NormStats;
using datasets::Observation;
using datasets::TrajView;

namespace {

struct ReplaySeries {
  std::vector<double> ego_velocity;   // raw logged
  std::vector<double> ego_position;   // reconstructed
  std::vector<double> leader_rear;    // raw logged position of the leader's rear bumper
  std::vector<double> leader_velocity;
  std::vector<double> leader_prev_velocity;
  std::vector<double> actions;        // raw logged accelerations
};

ReplaySeries reconstruct(const TrajView& view, const NormStats& stats) {
  ReplaySeries s;
  const std::size_t n = view.size();
  s.ego_velocity.resize(n);
  s.ego_position.resize(n);
  s.leader_rear.resize(n);
  s.leader_velocity.resize(n);
  s.leader_prev_velocity.resize(n);
  s.actions.resize(n);
  double x = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const Observation& o = view.obs[t];
    s.ego_velocity[t] = stats.denormalize_obs(0, o.ego_velocity);
    if (t > 0) x += s.ego_velocity[t] * kTimestep;  // semi-implicit reconstruction
    s.ego_position[t] = x;
    s.leader_rear[t] = x + stats.denormalize_obs(1, o.space_headway);
    s.leader_velocity[t] = stats.denormalize_obs(3, o.leader_velocity);
    s.leader_prev_velocity[t] = stats.denormalize_obs(4, o.leader_prev_velocity);
    s.actions[t] = stats.denormalize_accel(view.act[t].accel);
  }
  return s;
}

Observation simulated_observation(double v, double gap, double lv, double lpv,
                                  const NormStats& stats) {
  Observation o;
  o.ego_velocity = stats.normalize_obs(0, v);
  o.space_headway = stats.normalize_obs(1, gap);
  o.time_headway = stats.normalize_obs(2, gap / std::max(v, 0.1));
  o.leader_velocity = stats.normalize_obs(3, lv);
  o.leader_prev_velocity = stats.normalize_obs(4, lpv);
  return o;
}

PointCloud cloud_from_observations(const std::vector<Observation>& rows) {
  PointCloud cloud(static_cast<Eigen::Index>(rows.size()), Observation::kDim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto a = rows[i].as_array();
    for (int k = 0; k < Observation::kDim; ++k) {
      cloud(static_cast<Eigen::Index>(i), k) = a[static_cast<std::size_t>(k)];
    }
  }
  return cloud;
}

std::vector<std::size_t> pick_scenarios(std::size_t usable, int wanted, Rng& rng) {
  std::vector<std::size_t> order(usable);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = usable - 1; i > 0; --i) {
    std::swap(order[i], order[static_cast<std::size_t>(rng.index(i + 1))]);
  }
  std::vector<std::size_t> picks;
  picks.reserve(static_cast<std::size_t>(wanted));
  for (int i = 0; i < wanted; ++i) picks.push_back(order[static_cast<std::size_t>(i) % usable]);
  return picks;
}

}  // namespace

F1Result evaluate_f1(const HooksFactory& make_hooks, const datasets::Dataset& test,
                     const F1Config& config) {
  if (config.n_scenarios < 1) throw std::invalid_argument("evaluate_f1: n_scenarios must be >= 1");
  const auto views = test.views();
  const std::size_t min_len =
      static_cast<std::size_t>(config.L_p) + static_cast<std::size_t>(config.k) + 1;
  std::vector<std::size_t> usable;
  int skipped = 0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i].size() >= min_len) {
      usable.push_back(i);
    } else {
      ++skipped;
    }
  }
  if (usable.empty()) throw std::invalid_argument("evaluate_f1: no trajectory long enough");

  Rng pick_rng(splitmix64(config.seed ^ 0xf15ce7ull));
  const std::vector<std::size_t> picks = pick_scenarios(usable.size(), config.n_scenarios, pick_rng);

  F1Result result;
  result.skipped = skipped;
  result.rows.resize(picks.size());

  parallel_for(picks.size(), config.workers, [&](std::size_t s) {
    const std::size_t traj_idx = usable[picks[s]];
    const TrajView& view = views[traj_idx];
    const ReplaySeries series = reconstruct(view, test.stats);
    Rng rng(splitmix64(config.seed ^ (0xf1e1dull + 0x95ull * s)));
    policy::EgoPolicyHooks hooks = make_hooks(s, traj_idx, rng);

    const std::size_t warm = static_cast<std::size_t>(config.L_p) - 1;
    const std::size_t horizon =
        std::min(view.size(), warm + static_cast<std::size_t>(config.max_steps) + 1);

    double x = 0.0, v = series.ego_velocity[0];
    styles::ContextWindow window;
    std::vector<Observation> fake_rows, real_rows;
    bool collided = false;

    for (std::size_t t = 0; t < horizon; ++t) {
      const double gap = series.leader_rear[t] - x;
      if (gap <= 0.0) {
        collided = true;
        break;
      }
      const Observation o = simulated_observation(v, gap, series.leader_velocity[t],
                                                  series.leader_prev_velocity[t], test.stats);
      double accel;
      if (t < warm) {
        accel = series.actions[t];
        window.obs.push_back(o);
        window.actions.push_back(test.stats.normalize_accel(accel));
      } else {
        if (t == warm) {
          window.obs.push_back(o);
          if (hooks.begin) hooks.begin(window, rng);
        }
        fake_rows.push_back(o);
        real_rows.push_back(view.obs[t]);
        const double a_norm = hooks.act(o, rng);
        accel = std::clamp(test.stats.denormalize_accel(a_norm), -kGravity, kGravity);
      }
      v = std::max(0.0, v + accel * kTimestep);
      x += v * kTimestep;
    }

    F1ScenarioRow row;
    row.trajectory_index = traj_idx;
    row.collided = collided;
    if (!fake_rows.empty() && static_cast<int>(real_rows.size()) > config.k) {
      const PointCloud real = cloud_from_observations(real_rows);
      const PointCloud fake = cloud_from_observations(fake_rows);
      row.density = density(real, fake, config.k);
      row.coverage = coverage(real, fake, config.k);
      row.f1 = f1_score(row.density, row.coverage);
    }
    result.rows[s] = row;
  });

  for (const auto& row : result.rows) {
    result.density += row.density;
    result.coverage += row.coverage;
    result.f1 += row.f1;
  }
  const double n = static_cast<double>(result.rows.size());
  result.density /= n;
  result.coverage /= n;
  result.f1 /= n;
  return result;
}

CrashScenarioSet build_crash_scenarios(const datasets::Dataset& test,
                                       const CrashProtocolConfig& config) {
  if (config.n_scenarios < 1) {
    throw std::invalid_argument("build_crash_scenarios: n_scenarios must be >= 1");
  }
  const auto views = test.views();
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i].size() >= static_cast<std::size_t>(config.L_p)) usable.push_back(i);
  }
  if (usable.empty()) throw std::invalid_argument("build_crash_scenarios: no usable trajectory");

  Rng rng(splitmix64(config.seed ^ 0xc4a54ull));
  const std::vector<std::size_t> picks = pick_scenarios(usable.size(), config.n_scenarios, rng);

  trafficsim::IdmParams ambient;  // nominal ambient traffic
  ambient.v0 = 25.0;
  ambient.T = 1.5;
  ambient.a_max = 1.5;
  ambient.b = 2.0;
  ambient.s0 = 2.0;

  CrashScenarioSet set;
  for (std::size_t s = 0; s < picks.size(); ++s) {
    const TrajView& view = views[usable[picks[s]]];
    const NormStats& stats = test.stats;
    const double ego_v = stats.denormalize_obs(0, view.obs[0].ego_velocity);
    const double gap0 = std::max(stats.denormalize_obs(1, view.obs[0].space_headway), 2.0);
    double leader_v = stats.denormalize_obs(3, view.obs[0].leader_velocity);
    double max_leader_v = 1.0;
    for (const Observation& o : view.obs) {
      max_leader_v = std::max(max_leader_v, stats.denormalize_obs(3, o.leader_velocity));
    }

    trafficsim::Scenario scenario;
    trafficsim::Vehicle leader;
    leader.length = 5.0;
    leader.idm = ambient;
    if (config.stopped_leader) {
      leader.velocity = 0.0;
      leader.idm->v0 = 0.5;  // parked: never accelerates away
    } else {
      leader.velocity = std::max(leader_v, 0.0);
      leader.idm->v0 = max_leader_v;  // target speed: maximum recorded speed
    }
    trafficsim::Vehicle ego;
    ego.length = 5.0;
    ego.velocity = std::max(ego_v, 0.0);
    ego.position = 0.0;
    leader.position = gap0 + leader.length;
    trafficsim::Vehicle follower;
    follower.length = 5.0;
    follower.velocity = ego.velocity;
    follower.idm = ambient;
    follower.position =
        -(trafficsim::idm_equilibrium_gap(ambient, std::min(follower.velocity, 0.95 * ambient.v0)) +
          ego.length);

    scenario.vehicles = {leader, ego, follower};
    scenario.ego_index = 1;
    scenario.validate();
    set.scenarios.push_back(std::move(scenario));
    set.source_trajectory.push_back(usable[picks[s]]);

    std::vector<double> warmup;
    for (int t = 0; t + 1 < config.L_p; ++t) {
      warmup.push_back(stats.denormalize_accel(view.act[static_cast<std::size_t>(t)].accel));
    }
    set.warmup_accels.push_back(std::move(warmup));
  }
  return set;
}

CrashResult run_crash_protocol(const HooksFactory& make_hooks, const CrashScenarioSet& set,
                               const NormStats& stats, const CrashProtocolConfig& config) {
  auto adapter = [&make_hooks, &set](std::size_t idx, Rng& rng) {
    return make_hooks(idx, set.source_trajectory[idx], rng);
  };
  auto factory = policy::make_hooked_factory(stats, set.warmup_accels, config.L_p, adapter);
  const auto raw = trafficsim::run_crash_eval(factory, set.scenarios, config.steps, config.seed,
                                              config.workers);
  return CrashResult{raw.crash_fraction, raw.crashed};
}

StyleRecovery evaluate_style_recovery(const styles::ReprFunction& repr,
                                      const styles::PriorNet* prior,
                                      const datasets::Dataset& reference,
                                      const datasets::Dataset& held_out, int stride) {
  if (stride < 1) throw std::invalid_argument("evaluate_style_recovery: stride must be >= 1");
  const int L_c = repr.config().L_c;

  auto codes_for = [&](const datasets::Dataset& ds,
                       std::vector<int>& labels) -> std::vector<int> {
    std::vector<int> codes;
    const auto views = ds.views();
    for (std::size_t i = 0; i < views.size(); ++i) {
      const auto label = ds.trajectories[i].hidden_style_label_for_eval();
      if (!label || views[i].size() < static_cast<std::size_t>(L_c)) continue;
      std::vector<std::size_t> idx, starts;
      for (std::size_t h = 0; h + static_cast<std::size_t>(L_c) <= views[i].size();
           h += static_cast<std::size_t>(stride)) {
        idx.push_back(i);
        starts.push_back(h);
      }
      const numkit::Tensor z =
          repr.encode_z_batch(styles::make_window_batch(views, idx, starts, L_c, true));
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        Eigen::VectorXd row(z.cols());
        for (Eigen::Index c = 0; c < z.cols(); ++c) row(c) = z.at2(r, c);
        codes.push_back(styles::lfq_quantize(row).index);
        labels.push_back(*label);
      }
    }
    return codes;
  };

  std::vector<int> ref_labels;
  const std::vector<int> ref_codes = codes_for(reference, ref_labels);
  if (ref_codes.empty()) {
    throw std::invalid_argument("evaluate_style_recovery: reference set has no labeled windows");
  }

  // code -> per-style counts.
  std::map<int, std::map<int, int>> counts;
  std::map<int, int> style_ids;
  for (std::size_t i = 0; i < ref_codes.size(); ++i) {
    counts[ref_codes[i]][ref_labels[i]]++;
    style_ids[ref_labels[i]]++;
  }
  StyleRecovery out;
  out.n_styles = static_cast<int>(style_ids.size());
  out.distinct_codes = static_cast<int>(counts.size());

  long majority_total = 0;
  std::map<int, int> code_to_style;
  for (const auto& [code, by_style] : counts) {
    int best_style = -1, best = 0;
    for (const auto& [style, count] : by_style) {
      if (count > best) {
        best = count;
        best_style = style;
      }
    }
    code_to_style[code] = best_style;
    majority_total += best;
  }
  out.code_purity = static_cast<double>(majority_total) / static_cast<double>(ref_codes.size());

  if (prior != nullptr) {
    const int L_p = prior->L_p();
    const int span = std::max(L_c, L_p);
    long correct = 0, total = 0;
    const auto views = held_out.views();
    for (std::size_t i = 0; i < views.size(); ++i) {
      const auto label = held_out.trajectories[i].hidden_style_label_for_eval();
      if (!label || views[i].size() < static_cast<std::size_t>(span)) continue;
      std::vector<std::size_t> idx, starts;
      for (std::size_t h = 0; h + static_cast<std::size_t>(span) <= views[i].size();
           h += static_cast<std::size_t>(stride)) {
        idx.push_back(i);
        starts.push_back(h);
      }
      const numkit::Tensor logits =
          prior->logits_batch(styles::make_window_batch(views, idx, starts, L_p, false));
      for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        Eigen::Index argmax = 0;
        for (Eigen::Index c = 1; c < logits.cols(); ++c) {
          if (logits.at2(r, c) > logits.at2(r, argmax)) argmax = c;
        }
        const auto it = code_to_style.find(static_cast<int>(argmax));
        if (it != code_to_style.end() && it->second == *label) ++correct;
        ++total;
      }
    }
    out.prior_style_accuracy = total > 0 ? static_cast<double>(correct) / static_cast<double>(total)
                                         : 0.0;
  }
  return out;
}

}  // namespace drivestyle::eval
