#pragma once

#include <vector>

namespace drivestyle::policy {

/// DDPM noise schedule. Arrays are 1-indexed by timestep; index 0 holds the
/// empty-product convention alpha_bar[0] = 1. sigma is the DDPM posterior
/// stddev with sigma[1] = 0 (no noise on the final denoising step).
struct NoiseSchedule {
  int T = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
  std::vector<double> sigma;
};

/// Linear betas from beta_min to beta_max inclusive.
NoiseSchedule make_schedule(int T, double beta_min, double beta_max);

/// a_t = sqrt(alpha_bar_t) * a + sqrt(1 - alpha_bar_t) * eps, 1 <= t <= T.
double forward_noise(double a, int t, double eps, const NoiseSchedule& schedule);

}  // namespace drivestyle::policy
