#pragma once

#include "drivestyle/policy/ddpm.hpp"

#include <utility>
#include <vector>

namespace drivestyle::policy {

struct PolicyTrainConfig {
  int epochs = 30;
  int batch = 32;
  double lr = 1e-4;
  int checkpoint_every = 5;
  int T = 50;
  double beta_min = 1e-4;
  double beta_max = 0.02;
  std::uint64_t seed = 1;
  DenoiserConfig denoiser;  // style_dim 0 -> unconditional
  std::size_t max_val_samples = 4096;
};

struct EpochCheckpoint {
  int epoch = 0;  // 0 is the untrained snapshot
  double val_loss = 0.0;
  std::vector<std::pair<std::string, numkit::Tensor>> params;
};

struct PolicyRunResult {
  DiffusionPolicy policy;  // best checkpoint loaded, frozen
  std::vector<EpochCheckpoint> checkpoints;
  std::vector<double> loss_curve;  // train loss per epoch
  int best_epoch = 0;
};

/// Adam on the DDPM loss, one (o, a) sample per timestep of every training
/// trajectory. Styles come from the frozen representation over the window
/// starting at the sample's timestep (clipped to the last full window);
/// pass repr == nullptr for the unconditional variant. Checkpoints are taken
/// at init and every `checkpoint_every` epochs; the best one by held-out
/// loss (fixed draws) is returned.
PolicyRunResult train_policy(const std::vector<datasets::TrajView>& train_views,
                             const std::vector<datasets::TrajView>& val_views,
                             const styles::ReprFunction* repr, const PolicyTrainConfig& config);

/// Per-timestep style table for a trajectory (training-time style source).
numkit::Tensor style_rows_for_trajectory(const styles::ReprFunction& repr,
                                         const datasets::TrajView& view);

}  // namespace drivestyle::policy
