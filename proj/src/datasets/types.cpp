#include "drivestyle/datasets/types.hpp"

#include <algorithm>

namespace drivestyle::datasets {

void NormStats::validate() const {
  for (const auto& r : obs) {
    if (!(r.hi > r.lo)) throw std::invalid_argument("NormStats: feature max must exceed min");
  }
  if (!(accel.hi > accel.lo)) throw std::invalid_argument("NormStats: accel max must exceed min");
}

namespace {
double norm(const FeatureRange& r, double raw) {
  return std::clamp((raw - r.lo) / (r.hi - r.lo), 0.0, 1.0);
}
double denorm(const FeatureRange& r, double x) { return r.lo + x * (r.hi - r.lo); }
}  // namespace

double NormStats::normalize_obs(int k, double raw) const {
  return norm(obs[static_cast<std::size_t>(k)], raw);
}
double NormStats::denormalize_obs(int k, double x) const {
  return denorm(obs[static_cast<std::size_t>(k)], x);
}
double NormStats::normalize_accel(double raw) const { return norm(accel, raw); }
double NormStats::denormalize_accel(double x) const { return denorm(accel, x); }

bool NormStats::operator==(const NormStats& other) const {
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (obs[k].lo != other.obs[k].lo || obs[k].hi != other.obs[k].hi) return false;
  }
  return version == other.version && accel.lo == other.accel.lo && accel.hi == other.accel.hi;
}

}  // namespace drivestyle::datasets
