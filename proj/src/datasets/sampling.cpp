#include "drivestyle/datasets/sampling.hpp"

#include <stdexcept>
#include <string>

namespace drivestyle::datasets {

SubtrajPair sample_subtrajectory_pair(std::size_t traj_len, std::size_t L_c, Rng& rng) {
  if (L_c < 1) throw std::invalid_argument("sample_subtrajectory_pair: L_c must be >= 1");
  if (traj_len < 2 * L_c) {
    throw std::invalid_argument("sample_subtrajectory_pair: trajectory length " +
                                std::to_string(traj_len) + " < 2*L_c = " +
                                std::to_string(2 * L_c));
  }
  // Count ordered placements with the first window strictly ahead:
  // for s1 in [0, m], s2 ranges over [s1 + L_c, traj_len - L_c], giving
  // (m + 1 - s1) choices where m = traj_len - 2*L_c.
  const std::size_t m = traj_len - 2 * L_c;
  const std::size_t total = (m + 1) * (m + 2) / 2;
  std::size_t r = rng.index(total);
  std::size_t s1 = 0;
  while (r >= m + 1 - s1) {
    r -= m + 1 - s1;
    ++s1;
  }
  const std::size_t s2 = s1 + L_c + r;

  SubtrajPair pair;
  pair.length = L_c;
  if (rng.index(2) == 0) {
    pair.anchor_start = s1;
    pair.positive_start = s2;
  } else {
    pair.anchor_start = s2;
    pair.positive_start = s1;
  }
  return pair;
}

}  // namespace drivestyle::datasets
