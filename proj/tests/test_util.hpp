#pragma once

#include "drivestyle/numkit/graph.hpp"

#include <cmath>
#include <functional>
#include <string>

namespace testutil {

/// Central finite differences against accumulated analytic grads.
/// `loss` must rebuild the forward pass from current param values.
/// Returns the worst relative error over all checked entries.
inline double max_grad_rel_error(drivestyle::numkit::ParamStore& store,
                                 const std::function<double()>& loss,
                                 double h = 1e-5) {
  using drivestyle::numkit::Param;
  double worst = 0.0;
  for (const auto& p : store.all()) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double v = p->value.at(i);
      p->value.at(i) = v + h;
      const double fp = loss();
      p->value.at(i) = v - h;
      const double fm = loss();
      p->value.at(i) = v;
      const double fd = (fp - fm) / (2.0 * h);
      const double an = p->grad.at(i);
      const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
      worst = std::max(worst, std::abs(fd - an) / denom);
    }
  }
  return worst;
}

}  // namespace testutil
