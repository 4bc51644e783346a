#pragma once

#include "drivestyle/styles/repr.hpp"

#include <utility>
#include <vector>

namespace drivestyle::styles {

struct PriorConfig {
  int L_p = 5;
  int channels = 16;
  int epochs = 30;
  int batch = 128;
  double lr = 1e-3;
  std::uint64_t seed = 1;

  void validate() const;
};

/// L_p-step context handed to the prior at evaluation: L_p observations and
/// the L_p - 1 actions taken between them (normalized units).
struct ContextWindow {
  std::vector<datasets::Observation> obs;
  std::vector<double> actions;
};

/// Index prior: conv net over an L_p window emitting K logits.
class PriorNet {
 public:
  PriorNet(const PriorConfig& config, int K);

  int K() const { return K_; }
  int L_p() const { return config_.L_p; }
  const PriorConfig& config() const { return config_; }

  numkit::ParamStore& params();
  const numkit::ParamStore& params_const() const { return *store_; }
  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }

  numkit::Var logits_var(numkit::Graph& g, numkit::Var window_batch) const;
  Eigen::VectorXd logits(const ContextWindow& window) const;
  numkit::Tensor logits_batch(const numkit::Tensor& window_batch) const;

  void save(const std::string& path, const std::string& fingerprint, std::uint64_t seed) const;
  static PriorNet load(const std::string& path);

 private:
  void build_layers(Rng& rng);
  void bind_layers();

  PriorConfig config_;
  int K_ = 0;
  bool frozen_ = false;
  std::unique_ptr<numkit::ParamStore> store_;
  numkit::Conv1dLayer conv1_, conv2_;
  numkit::Dense fc1_, fc2_;
};

numkit::Tensor context_window_tensor(const ContextWindow& window, int L_p);

struct PriorRunResult {
  PriorNet prior;
  std::vector<double> loss_curve;  // per epoch mean cross-entropy
};

/// Classification against the frozen representation: each training window's
/// target is Index(f_enc) of the L_c window sharing the same head.
/// Throws when `repr` is not frozen.
PriorRunResult train_prior(const std::vector<datasets::TrajView>& views, const ReprFunction& repr,
                           const PriorConfig& config);

/// Categorical draw over softmax(logits / temperature), decoded through the
/// representation's decoder. temperature == 0 takes the argmax.
std::pair<StyleCode, StyleVector> sample_style(const PriorNet& prior, const ReprFunction& repr,
                                               const ContextWindow& window, Rng& rng,
                                               double temperature = 1.0);

}  // namespace drivestyle::styles
