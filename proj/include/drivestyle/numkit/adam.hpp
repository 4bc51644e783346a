#pragma once

#include "drivestyle/numkit/graph.hpp"

#include <vector>

namespace drivestyle::numkit {

/// Per-parameter Adam state. m/v mirror the owning Param's shape.
struct AdamState {
  Tensor m;
  Tensor v;
  long step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  AdamState(const Shape& shape, double lr, double beta1 = 0.9, double beta2 = 0.999,
            double eps = 1e-8);
};

/// Standard Adam update with bias correction; increments step_count and
/// clears the gradient.
void adam_step(Param& param, AdamState& state);

/// Convenience wrapper applying adam_step to every param in a store.
class AdamOptimizer {
 public:
  AdamOptimizer(ParamStore& store, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void step();
  long step_count() const;

 private:
  ParamStore* store_;
  std::vector<AdamState> states_;
};

}  // namespace drivestyle::numkit
