#pragma once

#include "drivestyle/datasets/types.hpp"
#include "drivestyle/trafficsim/idm.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace drivestyle::datasets {

/// One driving style: an IDM parameter cluster with per-driver log-normal
/// jitter (rel_spread stddev on each field, delta held fixed).
struct StyleCluster {
  trafficsim::IdmParams mean;
  double rel_spread = 0.05;
};

/// Styled-driver generator spec. Each driver follows a shared ambient leader
/// with style-cluster IDM parameters plus Gaussian action noise; the
/// hidden style label is stored for evaluation only.
struct SyntheticSpec {
  int n_styles = 4;
  std::vector<StyleCluster> clusters;  // defaults from default_clusters(n_styles) when empty
  int n_drivers = 200;
  int traj_len = 200;          // steps at 0.1 s
  double action_noise = 0.2;   // m/s^2, stddev on the applied acceleration
  double start_speed_frac = 0.5;    // ego starts at this fraction of its v0
  double initial_gap_factor = 1.0;  // x equilibrium gap at the start speed
  double leader_speed_min = 4.0;    // ambient leader target band, m/s
  double leader_speed_max = 16.0;
  double leader_segment_duration = 4.0;  // s between leader target redraws
  std::uint64_t seed = 1;

  /// Interpolated timid-to-aggressive parameter rows. Clusters are pairwise
  /// distinguishable: v0 and T separate by >= 10% between neighbors for
  /// n <= 6.
  static std::vector<StyleCluster> default_clusters(int n);

  void validate() const;
};

/// Simulates every driver and returns a normalized dataset with hidden style
/// labels set. Deterministic in the seed, byte for byte.
Dataset generate_synthetic(const SyntheticSpec& spec);

/// Driver-level split for synthetic validation: shuffles drivers with the
/// given seed, first fraction goes to train. Stats and meta are shared.
std::pair<Dataset, Dataset> split_by_driver(const Dataset& ds, double train_fraction,
                                            std::uint64_t seed);

}  // namespace drivestyle::datasets
