#pragma once

#include "drivestyle/datasets/types.hpp"

#include <cstdint>

namespace drivestyle::datasets {

struct PreprocessConfig {
  int savgol_window = 7;
  int savgol_polyorder = 2;
  double gravity_cap = kGravity;
  /// Outlier rule: |accel| > outlier_accel_frac * g for a run of at most
  /// outlier_max_run frames, bracketed by samples within outlier_bracket_tol
  /// of each other, is replaced by linear interpolation.
  double outlier_accel_frac = 0.9;
  int outlier_max_run = 2;  // <= 200 ms at 10 Hz
  double outlier_bracket_tol = 0.2;
  double train_fraction = 0.8;
  /// Velocity floor when deriving time headway, keeps sh/v finite at rest.
  double headway_velocity_floor = 0.1;
};

struct PreprocessReport {
  std::size_t dropped_short = 0;      // trajectories shorter than the smoothing window
  std::size_t outliers_replaced = 0;  // accel samples interpolated
  long split_frame = 0;               // first test-side frame id
  double max_space_headway = 0.0;     // dataset max used for leaderless fill
};

struct PreprocessResult {
  Dataset train;
  Dataset test;
  NormStats stats;  // derived from the train split only
  PreprocessReport report;
};

/// The full pipeline, in order: leaderless headway fill, time-headway
/// derivation, leader velocity augmentation, gravity cap, short-spike outlier
/// interpolation, Savitzky-Golay smoothing of velocity and acceleration,
/// min-max normalization with train-split stats, chronological 80/20 split
/// by frame time.
PreprocessResult preprocess(const std::vector<RawTrajectory>& raw, const PreprocessConfig& config);

/// Exposed for unit tests: interpolates short high-|accel| spikes in place,
/// returns the number of samples replaced.
std::size_t replace_accel_outliers(std::vector<double>& accel, const PreprocessConfig& config);

}  // namespace drivestyle::datasets
