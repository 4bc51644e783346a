#include "drivestyle/policy/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace drivestyle::policy {

NoiseSchedule make_schedule(int T, double beta_min, double beta_max) {
  if (T < 1) throw std::invalid_argument("make_schedule: T must be >= 1");
  if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0)) {
    throw std::invalid_argument("make_schedule: need 0 < beta_min <= beta_max < 1");
  }
  NoiseSchedule s;
  s.T = T;
  s.beta.assign(static_cast<std::size_t>(T) + 1, 0.0);
  s.alpha.assign(static_cast<std::size_t>(T) + 1, 1.0);
  s.alpha_bar.assign(static_cast<std::size_t>(T) + 1, 1.0);
  s.sigma.assign(static_cast<std::size_t>(T) + 1, 0.0);
  for (int t = 1; t <= T; ++t) {
    const double f = (T == 1) ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(T - 1);
    const std::size_t i = static_cast<std::size_t>(t);
    s.beta[i] = beta_min + f * (beta_max - beta_min);
    s.alpha[i] = 1.0 - s.beta[i];
    s.alpha_bar[i] = s.alpha_bar[i - 1] * s.alpha[i];
  }
  for (int t = 2; t <= T; ++t) {
    const std::size_t i = static_cast<std::size_t>(t);
    s.sigma[i] = std::sqrt(s.beta[i] * (1.0 - s.alpha_bar[i - 1]) / (1.0 - s.alpha_bar[i]));
  }
  return s;
}

double forward_noise(double a, int t, double eps, const NoiseSchedule& schedule) {
  if (t < 1 || t > schedule.T) {
    throw std::invalid_argument("forward_noise: t = " + std::to_string(t) + " outside [1," +
                                std::to_string(schedule.T) + "]");
  }
  const double ab = schedule.alpha_bar[static_cast<std::size_t>(t)];
  return std::sqrt(ab) * a + std::sqrt(1.0 - ab) * eps;
}

}  // namespace drivestyle::policy
