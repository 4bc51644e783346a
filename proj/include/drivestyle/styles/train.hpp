#pragma once

#include "drivestyle/styles/repr.hpp"

#include <vector>

namespace drivestyle::styles {

struct ContrastiveRunResult {
  ReprFunction repr;  // frozen
  std::vector<double> loss_curve;  // one entry per pass (mean batch loss)
};

/// Contrastive pre-training: per pass, one sub-trajectory pair per eligible
/// trajectory; anchors go through the online network, positives through the
/// EMA target; InfoNCE (or the triplet ablation) plus the weighted entropy
/// penalty; straight-through gradients across the sign quantizer.
/// Returns the online network, frozen.
ContrastiveRunResult train_contrastive(const std::vector<datasets::TrajView>& views,
                                       const ContrastiveConfig& config);

/// Mean contrastive loss over one deterministic pass of paired windows,
/// anchor and positive both through `anchor_net` unless `positive_net` is
/// given. Used for held-out monitoring; no parameters are updated.
double contrastive_eval_loss(const std::vector<datasets::TrajView>& views,
                             const ReprFunction& anchor_net, const ReprFunction* positive_net,
                             const ContrastiveConfig& config, std::uint64_t seed);

}  // namespace drivestyle::styles
