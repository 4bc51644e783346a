#include "drivestyle/policy/denoiser.hpp"

#include <stdexcept>

namespace drivestyle::policy {

using namespace numkit;

void DenoiserConfig::validate() const {
  if (obs_dim < 1 || hidden < 1 || embed < 1 || n_hidden < 1) {
    throw std::invalid_argument("DenoiserConfig: bad dimensions");
  }
  if (time_embed < 2 || time_embed % 2 != 0) {
    throw std::invalid_argument("DenoiserConfig: time_embed must be even and >= 2");
  }
  if (style_dim < 0) throw std::invalid_argument("DenoiserConfig: style_dim must be >= 0");
}

DenoiserNet::DenoiserNet(ParamStore& store, const std::string& prefix,
                         const DenoiserConfig& config, Rng& rng)
    : config_(config) {
  config.validate();
  obs_embed_ = Dense(store, prefix + ".obs_embed", config.obs_dim, config.embed, rng);
  act_embed_ = Dense(store, prefix + ".act_embed", 1, config.embed, rng);
  time_embed_ = Dense(store, prefix + ".time_embed", config.time_embed, config.embed, rng);
  const Eigen::Index base = static_cast<Eigen::Index>(config.embed) * 3 + config.style_dim;
  trunk_.emplace_back(store, prefix + ".trunk0", base, config.hidden, rng);
  for (int i = 1; i < config.n_hidden; ++i) {
    trunk_.emplace_back(store, prefix + ".trunk" + std::to_string(i),
                        config.hidden + 2 * config.embed, config.hidden, rng);
  }
  out_ = Dense(store, prefix + ".out", config.hidden, 1, rng);
}

DenoiserNet DenoiserNet::bind(ParamStore& store, const std::string& prefix,
                              const DenoiserConfig& config) {
  DenoiserNet net;
  net.config_ = config;
  net.obs_embed_ = Dense::bind(store, prefix + ".obs_embed", config.obs_dim, config.embed);
  net.act_embed_ = Dense::bind(store, prefix + ".act_embed", 1, config.embed);
  net.time_embed_ = Dense::bind(store, prefix + ".time_embed", config.time_embed, config.embed);
  const Eigen::Index base = static_cast<Eigen::Index>(config.embed) * 3 + config.style_dim;
  net.trunk_.push_back(Dense::bind(store, prefix + ".trunk0", base, config.hidden));
  for (int i = 1; i < config.n_hidden; ++i) {
    net.trunk_.push_back(Dense::bind(store, prefix + ".trunk" + std::to_string(i),
                                     config.hidden + 2 * config.embed, config.hidden));
  }
  net.out_ = Dense::bind(store, prefix + ".out", config.hidden, 1);
  return net;
}

Var DenoiserNet::predict(Graph& g, Var obs, Var a_t, Var t_sin, std::optional<Var> style,
                         bool with_grad) const {
  if (config_.conditioned() != style.has_value()) {
    throw std::invalid_argument(config_.conditioned()
                                    ? "DenoiserNet: conditioned net needs a style input"
                                    : "DenoiserNet: unconditional net takes no style input");
  }
  Var oe = gelu(obs_embed_(g, obs, with_grad));
  Var ae = gelu(act_embed_(g, a_t, with_grad));
  Var te = gelu(time_embed_(g, t_sin, with_grad));
  std::vector<Var> first = {oe, ae, te};
  if (style) first.push_back(*style);
  Var h = gelu(trunk_[0](g, concat_cols(first), with_grad));
  for (std::size_t i = 1; i < trunk_.size(); ++i) {
    h = gelu(trunk_[i](g, concat_cols({h, ae, te}), with_grad));
  }
  return out_(g, h, with_grad);
}

}  // namespace drivestyle::policy
