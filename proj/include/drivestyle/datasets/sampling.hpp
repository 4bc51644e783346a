#pragma once

#include "drivestyle/common/rng.hpp"

#include <cstddef>

namespace drivestyle::datasets {

struct SubtrajPair {
  std::size_t anchor_start = 0;
  std::size_t positive_start = 0;
  std::size_t length = 0;
};

/// Two non-overlapping length-L_c windows, uniform over all valid ordered
/// placements. Requires traj_len >= 2 * L_c.
SubtrajPair sample_subtrajectory_pair(std::size_t traj_len, std::size_t L_c, Rng& rng);

}  // namespace drivestyle::datasets
