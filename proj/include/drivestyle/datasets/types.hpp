#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace drivestyle::datasets {

constexpr double kGravity = 9.81;  // m/s^2, acceleration cap
constexpr double kTimestep = 0.1;  // s, 10 Hz

/// One row of the car-following CSV schema. preceding_id == 0 means no leader.
struct RawRecord {
  long vehicle_id = 0;
  long frame_id = 0;  // 10 Hz ticks
  double position = 0.0;
  double velocity = 0.0;
  double acceleration = 0.0;
  int lane_id = 0;
  double space_headway = 0.0;
  long preceding_id = 0;
  double vehicle_length = 0.0;
};

/// Frame-sorted records of one vehicle.
struct RawTrajectory {
  long vehicle_id = 0;
  std::vector<RawRecord> records;
};

/// Normalized observation. Component order is a wire contract:
/// ego_velocity, space_headway, time_headway, leader_velocity,
/// leader_prev_velocity — all in [0,1].
struct Observation {
  static constexpr int kDim = 5;

  double ego_velocity = 0.0;
  double space_headway = 0.0;
  double time_headway = 0.0;
  double leader_velocity = 0.0;
  double leader_prev_velocity = 0.0;

  double operator[](int i) const {
    switch (i) {
      case 0: return ego_velocity;
      case 1: return space_headway;
      case 2: return time_headway;
      case 3: return leader_velocity;
      case 4: return leader_prev_velocity;
      default: throw std::out_of_range("Observation: component index");
    }
  }
  std::array<double, kDim> as_array() const {
    return {ego_velocity, space_headway, time_headway, leader_velocity, leader_prev_velocity};
  }
};

/// Normalized acceleration in [0,1]: affine map of m/s^2 clamped to +/- g.
struct Action {
  double accel = 0.5;
};

struct FeatureRange {
  double lo = 0.0;
  double hi = 1.0;
};

/// Min-max normalization stats in raw units. Observation features use
/// train-split min/max; the action range is the fixed +/- g cap.
struct NormStats {
  std::uint32_t version = 1;
  std::array<FeatureRange, Observation::kDim> obs{};
  FeatureRange accel{-kGravity, kGravity};

  void validate() const;

  /// Clamps to [0,1]; exact inverse of denormalize for in-range values.
  double normalize_obs(int k, double raw) const;
  double denormalize_obs(int k, double x) const;
  double normalize_accel(double raw) const;
  double denormalize_accel(double x) const;

  bool operator==(const NormStats& other) const;
};

/// Read-only view handed to training code. Deliberately excludes the hidden
/// style label; anything reachable from here is fair game for learners.
struct TrajView {
  long driver_id = 0;
  std::span<const Observation> obs;
  std::span<const Action> act;
  std::size_t size() const { return obs.size(); }
};

/// Observation-action trajectory of one driver at 0.1 s resolution.
/// The hidden style label exists only on synthetic data and is reachable
/// solely through the eval-only accessor, never through TrajView.
class Trajectory {
 public:
  long driver_id = 0;
  double dt = kTimestep;
  std::vector<Observation> obs;
  std::vector<Action> act;

  std::size_t size() const { return obs.size(); }

  TrajView view() const { return {driver_id, obs, act}; }

  void set_hidden_style_label(int label) { hidden_style_label_ = label; }
  std::optional<int> hidden_style_label_for_eval() const { return hidden_style_label_; }

 private:
  std::optional<int> hidden_style_label_;
};

struct Dataset {
  std::uint32_t version = 1;
  std::vector<Trajectory> trajectories;
  NormStats stats;
  std::map<std::string, std::string> meta;

  std::vector<TrajView> views() const {
    std::vector<TrajView> v;
    v.reserve(trajectories.size());
    for (const auto& t : trajectories) v.push_back(t.view());
    return v;
  }
};

}  // namespace drivestyle::datasets
