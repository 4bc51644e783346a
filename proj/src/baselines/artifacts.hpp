#pragma once

// Internal artifact classes behind the BaselinePolicy interface.

#include "drivestyle/baselines/baselines.hpp"
#include "drivestyle/numkit/checkpoint.hpp"

namespace drivestyle::baselines::detail {

/// Sieve-style head for the non-diffusion learners: inputs embedded
/// separately (observation, and the action for the energy head), GELU trunk,
/// linear output.
class ObsHead {
 public:
  ObsHead() = default;
  ObsHead(numkit::ParamStore& store, const std::string& prefix, int in1, int in2, int embed,
          int hidden, int n_hidden, int out_dim, Rng& rng);
  static ObsHead bind(numkit::ParamStore& store, const std::string& prefix, int in1, int in2,
                      int embed, int hidden, int n_hidden, int out_dim);

  numkit::Var forward(numkit::Graph& g, numkit::Var x1, std::optional<numkit::Var> x2,
                      bool with_grad) const;
  int out_dim() const { return out_dim_; }

 private:
  int in1_ = 0, in2_ = 0, out_dim_ = 0;
  numkit::Dense embed1_, embed2_;
  std::vector<numkit::Dense> trunk_;
  numkit::Dense out_;
};

std::unique_ptr<BaselinePolicy> train_neural_baseline(BaselineKind kind,
                                                      const datasets::Dataset& train,
                                                      const datasets::Dataset& val,
                                                      const BaselineConfig& config,
                                                      std::vector<double>* loss_curve);
std::unique_ptr<BaselinePolicy> load_neural_baseline(const numkit::Checkpoint& ckpt);
std::unique_ptr<BaselinePolicy> load_idm_baseline(const numkit::Checkpoint& ckpt);

}  // namespace drivestyle::baselines::detail
