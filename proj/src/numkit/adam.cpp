#include "drivestyle/numkit/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace drivestyle::numkit {

AdamState::AdamState(const Shape& shape, double lr_, double beta1_, double beta2_, double eps_)
    : m(Tensor::zeros(shape)), v(Tensor::zeros(shape)), lr(lr_), beta1(beta1_), beta2(beta2_),
      eps(eps_) {
  if (!(lr > 0.0)) throw std::invalid_argument("AdamState: lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("AdamState: betas must be in [0,1)");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("AdamState: eps must be > 0");
}

void adam_step(Param& param, AdamState& state) {
  if (!state.m.same_shape(param.value) || !state.v.same_shape(param.value)) {
    throw std::invalid_argument("adam_step: state shape does not match param '" + param.id + "'");
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  auto& g = param.grad.array();
  state.m.array() = state.beta1 * state.m.array() + (1.0 - state.beta1) * g;
  state.v.array() = state.beta2 * state.v.array() + (1.0 - state.beta2) * g.square();
  param.value.array() -=
      state.lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + state.eps);
  param.zero_grad();
}

AdamOptimizer::AdamOptimizer(ParamStore& store, double lr, double beta1, double beta2, double eps)
    : store_(&store) {
  states_.reserve(store.all().size());
  for (const auto& p : store.all()) states_.emplace_back(p->value.shape(), lr, beta1, beta2, eps);
}

void AdamOptimizer::step() {
  const auto& params = store_->all();
  if (params.size() != states_.size()) {
    throw std::runtime_error("AdamOptimizer: param store changed size after construction");
  }
  for (std::size_t i = 0; i < params.size(); ++i) adam_step(*params[i], states_[i]);
}

long AdamOptimizer::step_count() const { return states_.empty() ? 0 : states_.front().step_count; }

}  // namespace drivestyle::numkit
