#include "drivestyle/trafficsim/idm.hpp"

#include <cmath>
#include <string>

namespace drivestyle::trafficsim {

double idm_accel(const IdmParams& p, double v, double gap, double dv) {
  if (!(gap > 0.0)) {
    throw std::invalid_argument("idm_accel: gap must be > 0, got " + std::to_string(gap));
  }
  const double s_star = p.s0 + v * p.T + v * dv / (2.0 * std::sqrt(p.a_max * p.b));
  const double ratio = s_star / gap;
  return p.a_max * (1.0 - std::pow(v / p.v0, p.delta) - ratio * ratio);
}

double idm_free_accel(const IdmParams& p, double v) {
  return p.a_max * (1.0 - std::pow(v / p.v0, p.delta));
}

double idm_equilibrium_gap(const IdmParams& p, double v) {
  if (!(v >= 0.0 && v < p.v0)) {
    throw std::invalid_argument("idm_equilibrium_gap: need 0 <= v < v0");
  }
  return (p.s0 + v * p.T) / std::sqrt(1.0 - std::pow(v / p.v0, p.delta));
}

}  // namespace drivestyle::trafficsim
