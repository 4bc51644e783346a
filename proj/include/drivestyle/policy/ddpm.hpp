#pragma once

#include "drivestyle/policy/denoiser.hpp"
#include "drivestyle/policy/schedule.hpp"
#include "drivestyle/styles/repr.hpp"

#include <array>
#include <optional>
#include <vector>

namespace drivestyle::policy {

/// Reverse-process sampler selection.
struct SamplerKind {
  enum class Type { kDdpm, kDiffusionX, kKde };
  Type type = Type::kDdpm;
  int extra_steps = 0;               // Diffusion-X
  int n_samples = 0;                 // KDE draws
  std::optional<double> bandwidth;   // KDE; empty -> Silverman's rule

  static SamplerKind ddpm() { return {}; }
  static SamplerKind diffusion_x(int x);
  static SamplerKind kde(int n, std::optional<double> bw = std::nullopt);
  std::string describe() const;
  static SamplerKind parse(const std::string& text);
};

/// Per-sample draws for the DDPM loss; separable so tests can inject them.
struct DdpmDraws {
  std::vector<int> t;       // uniform in [1, T]
  std::vector<double> eps;  // standard normal
};
DdpmDraws draw_ddpm_batch(std::size_t n, const NoiseSchedule& schedule, Rng& rng);

/// Eq-style DDPM loss on the graph: mean squared error between eps and the
/// denoiser output at the noised actions. styles must have style_dim cols
/// (ignored for unconditional nets).
numkit::Var ddpm_loss_var(numkit::Graph& g, const DenoiserNet& net, const numkit::Tensor& obs,
                          const numkit::Tensor& actions, const numkit::Tensor& styles,
                          const NoiseSchedule& schedule, const DdpmDraws& draws, bool with_grad);

/// Conditioning supplied as a graph node so gradients can flow into an
/// upstream conditioning network (end-to-end baselines).
numkit::Var ddpm_loss_var(numkit::Graph& g, const DenoiserNet& net, const numkit::Tensor& obs,
                          const numkit::Tensor& actions, std::optional<numkit::Var> styles,
                          const NoiseSchedule& schedule, const DdpmDraws& draws, bool with_grad);

/// One reverse step: (a_t - (1-alpha)/sqrt(1-alpha_bar) * eps_hat)/sqrt(alpha)
/// plus sigma_t * noise (noise ignored at t == 1 where sigma is 0).
double reverse_step(double a_t, int t, double eps_hat, const NoiseSchedule& schedule,
                    double noise);

/// Gaussian-KDE pick: returns the sample with the highest kernel density
/// estimate. Empty bandwidth uses Silverman's rule over the samples.
double kde_select(const std::vector<double>& samples, std::optional<double> bandwidth);

/// Single eps_hat inference for an arbitrary sieve net (conditioning vector
/// optional, must match the net's style_dim).
double predict_eps_with_net(const DenoiserNet& net, const std::array<double, 5>& obs, double a_t,
                            int t, const Eigen::VectorXd* conditioning);

/// Full reverse-process draw for an arbitrary sieve net; final action
/// clamped to [ 0, 1 ].
double sample_action_with_net(const DenoiserNet& net, const NoiseSchedule& schedule,
                              const std::array<double, 5>& obs,
                              const Eigen::VectorXd* conditioning, const SamplerKind& sampler,
                              Rng& rng);

/// Trained style-conditioned diffusion policy: owns the denoiser parameters
/// and the schedule. Frozen policies are immutable and thread-safe.
class DiffusionPolicy {
 public:
  DiffusionPolicy(const DenoiserConfig& config, const NoiseSchedule& schedule,
                  std::uint64_t seed);

  const DenoiserConfig& config() const { return config_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  const DenoiserNet& net() const { return net_; }
  numkit::ParamStore& params();
  const numkit::ParamStore& params_const() const { return *store_; }
  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }

  /// Inference eps_hat for a single (o, a_t, t, c).
  double predict_eps(const std::array<double, 5>& obs, double a_t, int t,
                     const styles::StyleVector* style) const;

  /// Full reverse-process draw; final action clamped to [0,1].
  double sample_action(const std::array<double, 5>& obs, const styles::StyleVector* style,
                       const SamplerKind& sampler, Rng& rng) const;

  double batch_loss(const numkit::Tensor& obs, const numkit::Tensor& actions,
                    const numkit::Tensor& styles, Rng& rng) const;

  std::uint64_t param_checksum() const;

  void save(const std::string& path, const std::string& fingerprint, std::uint64_t seed,
            const SamplerKind& sampler) const;
  static DiffusionPolicy load(const std::string& path);
  static SamplerKind sampler_from_header(const numkit::CheckpointHeader& header);

 private:
  DenoiserConfig config_;
  NoiseSchedule schedule_;
  bool frozen_ = false;
  std::unique_ptr<numkit::ParamStore> store_;
  DenoiserNet net_;
};

}  // namespace drivestyle::policy
