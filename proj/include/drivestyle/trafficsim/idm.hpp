#pragma once

#include <stdexcept>

namespace drivestyle::trafficsim {

/// Intelligent Driver Model parameters. All strictly positive.
struct IdmParams {
  double v0 = 30.0;     // desired speed, m/s
  double T = 1.5;       // time headway, s
  double a_max = 1.0;   // max acceleration, m/s^2
  double b = 2.0;       // comfortable deceleration, m/s^2
  double delta = 4.0;   // acceleration exponent
  double s0 = 2.0;      // jam distance, m

  void validate() const {
    if (!(v0 > 0 && T > 0 && a_max > 0 && b > 0 && delta > 0 && s0 > 0)) {
      throw std::invalid_argument("IdmParams: all fields must be strictly positive");
    }
  }
};

/// IDM acceleration law. `dv` is the closing speed (ego velocity minus
/// leader velocity, positive when approaching). gap must be > 0; a
/// non-positive gap means the caller missed a collision.
double idm_accel(const IdmParams& p, double v, double gap, double dv);

/// Free-road acceleration (no leader): a_max * (1 - (v/v0)^delta).
double idm_free_accel(const IdmParams& p, double v);

/// Equilibrium bumper gap at steady speed v < v0 (zero acceleration, dv=0).
double idm_equilibrium_gap(const IdmParams& p, double v);

}  // namespace drivestyle::trafficsim
