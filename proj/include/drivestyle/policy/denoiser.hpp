#pragma once

#include "drivestyle/numkit/layers.hpp"

#include <optional>
#include <string>

namespace drivestyle::policy {

/// MLP-sieve denoiser configuration. style_dim == 0 builds the
/// unconditional variant (no style input at all).
struct DenoiserConfig {
  int obs_dim = 5;
  int style_dim = 64;
  int hidden = 128;
  int embed = 64;       // per-input embedding width
  int time_embed = 16;  // sinusoidal width before projection
  int n_hidden = 3;

  bool conditioned() const { return style_dim > 0; }
  void validate() const;
};

/// Sieve network: observation, noisy action and timestep are embedded
/// separately; the style vector is concatenated raw with the embeddings;
/// the action and time embeddings are re-concatenated after every hidden
/// layer. Layers live in an external ParamStore so callers can train the
/// denoiser jointly with other components.
class DenoiserNet {
 public:
  DenoiserNet() = default;
  DenoiserNet(numkit::ParamStore& store, const std::string& prefix, const DenoiserConfig& config,
              Rng& rng);
  static DenoiserNet bind(numkit::ParamStore& store, const std::string& prefix,
                          const DenoiserConfig& config);

  const DenoiserConfig& config() const { return config_; }

  /// obs [B,obs_dim], a_t [B,1], t_sin [B,time_embed]; style [B,style_dim]
  /// must be present iff conditioned().
  numkit::Var predict(numkit::Graph& g, numkit::Var obs, numkit::Var a_t, numkit::Var t_sin,
                      std::optional<numkit::Var> style, bool with_grad) const;

 private:
  DenoiserConfig config_;
  numkit::Dense obs_embed_, act_embed_, time_embed_;
  std::vector<numkit::Dense> trunk_;
  numkit::Dense out_;
};

}  // namespace drivestyle::policy
