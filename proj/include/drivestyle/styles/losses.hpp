#pragma once

#include "drivestyle/common/rng.hpp"
#include "drivestyle/numkit/graph.hpp"

namespace drivestyle::styles {

/// InfoNCE over a batch: anchors row i is pulled toward positives row i and
/// pushed from the other rows. Scores are exp(cosine/tau); the denominator
/// runs over the positive and the N-1 in-batch negatives. Requires N >= 2.
numkit::Var info_nce_loss(numkit::Var anchor_styles, numkit::Var positive_styles, double tau);

/// LFQ entropy penalty on pre-quantization latents [B,d]:
///   mean-over-batch sum_b H(sigmoid(2 z_b)) - sum_b H(mean-over-batch p_b).
/// Low per-sample entropy rewards confident codes; high batch entropy rewards
/// diverse code usage. The batch-mean term clamps probabilities to keep
/// H finite when the batch saturates.
numkit::Var entropy_penalty(numkit::Var z_batch);

/// Triplet hinge with one uniformly drawn in-batch negative per anchor:
/// mean max(0, d(a,p) - d(a,n) + margin), Euclidean distances.
numkit::Var triplet_loss(numkit::Var anchors, numkit::Var positives, numkit::Var negative_pool,
                         double margin, Rng& rng);

}  // namespace drivestyle::styles
