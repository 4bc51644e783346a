#include "drivestyle/styles/losses.hpp"

#include <stdexcept>

namespace drivestyle::styles {

using namespace numkit;

Var info_nce_loss(Var anchor_styles, Var positive_styles, double tau) {
  Graph* g = anchor_styles.graph;
  const Tensor& a = g->value(anchor_styles);
  const Tensor& p = g->value(positive_styles);
  if (a.ndim() != 2 || !a.same_shape(p)) {
    throw std::invalid_argument("info_nce_loss: anchor/positive batches must share [N,D] shape");
  }
  const Eigen::Index n = a.rows();
  if (n < 2) throw std::invalid_argument("info_nce_loss: batch must have N >= 2 for negatives");
  if (!(tau > 0.0)) throw std::invalid_argument("info_nce_loss: tau must be > 0");
  Var logits = scale(cosine_similarity_matrix(anchor_styles, positive_styles), 1.0 / tau);
  std::vector<int> diag(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) diag[static_cast<std::size_t>(i)] = static_cast<int>(i);
  return cross_entropy_with_indices(logits, diag);
}

Var entropy_penalty(Var z_batch) {
  Graph* g = z_batch.graph;
  const Tensor& z = g->value(z_batch);
  if (z.ndim() != 2 || z.rows() < 2) {
    throw std::invalid_argument("entropy_penalty: need a [B,d] batch with B >= 2");
  }
  const double dims = static_cast<double>(z.cols());

  // Per-sample entropy in the numerically stable logit form:
  // H(sigmoid(x)) = p*softplus(-x) + (1-p)*softplus(x).
  Var x = scale(z_batch, 2.0);
  Var p = sigmoid(x);
  Var one_minus_p = add_scalar(neg(p), 1.0);
  Var h = add(mul(p, softplus(neg(x))), mul(one_minus_p, softplus(x)));
  Var per_sample = scale(mean_all(h), dims);  // mean over batch of row sums

  // Batch-usage entropy of the mean code probabilities.
  constexpr double kEps = 1e-12;
  Var p_bar = clamp(col_mean(p), kEps, 1.0 - kEps);
  Var q_bar = add_scalar(neg(p_bar), 1.0);
  Var h_bar = neg(add(mul(p_bar, log_op(p_bar)), mul(q_bar, log_op(q_bar))));
  Var usage = sum_all(h_bar);

  return sub(per_sample, usage);
}

Var triplet_loss(Var anchors, Var positives, Var negative_pool, double margin, Rng& rng) {
  Graph* g = anchors.graph;
  const Tensor& a = g->value(anchors);
  const Tensor& p = g->value(positives);
  const Tensor& pool = g->value(negative_pool);
  if (a.ndim() != 2 || !a.same_shape(p) || pool.ndim() != 2 || pool.cols() != a.cols()) {
    throw std::invalid_argument("triplet_loss: shape mismatch");
  }
  if (pool.rows() < 1) throw std::invalid_argument("triplet_loss: need >= 1 negative");
  const Eigen::Index n = a.rows();

  // One negative per anchor, drawn uniformly from the pool (skipping the
  // anchor's own row when the pool is the positive batch).
  Tensor negatives({n, a.cols()});
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index j = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(pool.rows())));
    if (pool.rows() > 1 && pool.same_shape(p) && j == i) {
      j = (j + 1) % pool.rows();
    }
    negatives.mat().row(i) = pool.mat().row(j);
  }
  Var neg_rows = g->input(std::move(negatives));

  constexpr double kEps = 1e-12;
  Var d_ap = sqrt_eps(row_sum(square(sub(anchors, positives))), kEps);
  Var d_an = sqrt_eps(row_sum(square(sub(anchors, neg_rows))), kEps);
  Var hinge = relu(add_scalar(sub(d_ap, d_an), margin));
  return mean_all(hinge);
}

}  // namespace drivestyle::styles
