#include "drivestyle/datasets/preprocess.hpp"

#include "drivestyle/datasets/savgol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace drivestyle::datasets {

namespace {

struct FeatureSeries {
  long vehicle_id = 0;
  std::vector<long> frames;
  std::vector<double> velocity;
  std::vector<double> accel;
  std::vector<double> space_headway;
  std::vector<double> time_headway;
  std::vector<double> leader_velocity;
  std::vector<double> leader_prev_velocity;

  std::size_t size() const { return frames.size(); }
};

Trajectory to_trajectory(const FeatureSeries& s, std::size_t begin, std::size_t end,
                         const NormStats& stats) {
  Trajectory t;
  t.driver_id = s.vehicle_id;
  t.obs.reserve(end - begin);
  t.act.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    Observation o;
    o.ego_velocity = stats.normalize_obs(0, s.velocity[i]);
    o.space_headway = stats.normalize_obs(1, s.space_headway[i]);
    o.time_headway = stats.normalize_obs(2, s.time_headway[i]);
    o.leader_velocity = stats.normalize_obs(3, s.leader_velocity[i]);
    o.leader_prev_velocity = stats.normalize_obs(4, s.leader_prev_velocity[i]);
    t.obs.push_back(o);
    t.act.push_back(Action{stats.normalize_accel(s.accel[i])});
  }
  return t;
}

}  // namespace

std::size_t replace_accel_outliers(std::vector<double>& accel, const PreprocessConfig& config) {
  const double threshold = config.outlier_accel_frac * config.gravity_cap;
  const std::size_t n = accel.size();
  std::size_t replaced = 0;
  std::size_t i = 0;
  while (i < n) {
    if (std::abs(accel[i]) <= threshold) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && std::abs(accel[j]) > threshold) ++j;
    const std::size_t run = j - i;
    if (i > 0 && j < n && run <= static_cast<std::size_t>(config.outlier_max_run)) {
      const double before = accel[i - 1];
      const double after = accel[j];
      const double denom = std::max({std::abs(before), std::abs(after), 1e-9});
      if (std::abs(before - after) <= config.outlier_bracket_tol * denom) {
        for (std::size_t k = i; k < j; ++k) {
          const double f = static_cast<double>(k - i + 1) / static_cast<double>(run + 1);
          accel[k] = before + f * (after - before);
          ++replaced;
        }
      }
    }
    i = j;
  }
  return replaced;
}

PreprocessResult preprocess(const std::vector<RawTrajectory>& raw,
                            const PreprocessConfig& config) {
  if (raw.empty()) throw std::invalid_argument("preprocess: no raw trajectories");

  PreprocessResult result;
  PreprocessReport& report = result.report;

  // Dataset max headway over records that actually have a leader.
  double max_headway = 0.0;
  bool any_leader = false;
  for (const RawTrajectory& t : raw) {
    for (const RawRecord& r : t.records) {
      if (r.preceding_id != 0) {
        max_headway = std::max(max_headway, r.space_headway);
        any_leader = true;
      }
    }
  }
  if (!any_leader) max_headway = 100.0;
  report.max_space_headway = max_headway;

  // Frame-indexed velocity lookup for leader augmentation.
  std::map<long, std::map<long, double>> velocity_at;
  for (const RawTrajectory& t : raw) {
    auto& m = velocity_at[t.vehicle_id];
    for (const RawRecord& r : t.records) m[r.frame_id] = r.velocity;
  }

  std::vector<FeatureSeries> series;
  series.reserve(raw.size());
  long min_frame = std::numeric_limits<long>::max();
  long max_frame = std::numeric_limits<long>::min();

  for (const RawTrajectory& t : raw) {
    if (t.records.size() < static_cast<std::size_t>(config.savgol_window)) {
      ++report.dropped_short;
      continue;
    }
    FeatureSeries s;
    s.vehicle_id = t.vehicle_id;
    for (const RawRecord& r : t.records) {
      s.frames.push_back(r.frame_id);
      s.velocity.push_back(r.velocity);
      const bool has_leader = r.preceding_id != 0;
      const double sh = has_leader ? r.space_headway : max_headway;
      s.space_headway.push_back(sh);
      s.time_headway.push_back(sh / std::max(r.velocity, config.headway_velocity_floor));
      double lv = r.velocity;  // neutral fill: zero closing speed
      double lpv = r.velocity;
      if (has_leader) {
        const auto it = velocity_at.find(r.preceding_id);
        if (it != velocity_at.end()) {
          const auto now = it->second.find(r.frame_id);
          if (now != it->second.end()) lv = now->second;
          const auto prev = it->second.find(r.frame_id - 1);
          lpv = (prev != it->second.end()) ? prev->second : lv;
        }
      }
      s.leader_velocity.push_back(lv);
      s.leader_prev_velocity.push_back(lpv);
      s.accel.push_back(std::clamp(r.acceleration, -config.gravity_cap, config.gravity_cap));
      min_frame = std::min(min_frame, r.frame_id);
      max_frame = std::max(max_frame, r.frame_id);
    }
    report.outliers_replaced += replace_accel_outliers(s.accel, config);
    s.velocity = savgol(s.velocity, config.savgol_window, config.savgol_polyorder);
    s.accel = savgol(s.accel, config.savgol_window, config.savgol_polyorder);
    // Smoothing can nudge accel past the cap at spike edges; re-clamp.
    for (double& a : s.accel) a = std::clamp(a, -config.gravity_cap, config.gravity_cap);
    series.push_back(std::move(s));
  }
  if (series.empty()) {
    throw std::runtime_error("preprocess: every trajectory shorter than the smoothing window");
  }

  // Chronological split: frames strictly before split_frame are train.
  const long span = max_frame - min_frame + 1;
  report.split_frame =
      min_frame + static_cast<long>(std::floor(config.train_fraction * static_cast<double>(span)));

  // Train-split stats only.
  NormStats stats;
  for (auto& r : stats.obs) {
    r.lo = std::numeric_limits<double>::infinity();
    r.hi = -std::numeric_limits<double>::infinity();
  }
  auto fold = [&](int k, double v) {
    auto& r = stats.obs[static_cast<std::size_t>(k)];
    r.lo = std::min(r.lo, v);
    r.hi = std::max(r.hi, v);
  };
  for (const FeatureSeries& s : series) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.frames[i] >= report.split_frame) continue;
      fold(0, s.velocity[i]);
      fold(1, s.space_headway[i]);
      fold(2, s.time_headway[i]);
      fold(3, s.leader_velocity[i]);
      fold(4, s.leader_prev_velocity[i]);
    }
  }
  for (auto& r : stats.obs) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi)) {
      throw std::runtime_error("preprocess: train split is empty");
    }
    if (!(r.hi > r.lo)) r.hi = r.lo + std::max(1e-9, std::abs(r.lo) * 1e-9);
  }
  stats.accel = {-config.gravity_cap, config.gravity_cap};
  stats.validate();
  result.stats = stats;

  result.train.stats = stats;
  result.test.stats = stats;
  for (const FeatureSeries& s : series) {
    const auto split_it = std::lower_bound(s.frames.begin(), s.frames.end(), report.split_frame);
    const std::size_t cut = static_cast<std::size_t>(split_it - s.frames.begin());
    if (cut >= 2) result.train.trajectories.push_back(to_trajectory(s, 0, cut, stats));
    if (s.size() - cut >= 2) result.test.trajectories.push_back(to_trajectory(s, cut, s.size(), stats));
  }
  result.train.meta["split"] = "train";
  result.test.meta["split"] = "test";
  return result;
}

}  // namespace drivestyle::datasets
