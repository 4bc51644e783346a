#include "drivestyle/styles/train.hpp"

#include "drivestyle/common/hash.hpp"
#include "drivestyle/datasets/sampling.hpp"
#include "drivestyle/numkit/adam.hpp"
#include "drivestyle/styles/losses.hpp"

#include <numeric>
#include <stdexcept>

namespace drivestyle::styles {

using namespace numkit;
using datasets::TrajView;

namespace {

std::vector<std::size_t> eligible_trajectories(const std::vector<TrajView>& views, int L_c) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i].size() >= 2 * static_cast<std::size_t>(L_c)) out.push_back(i);
  }
  return out;
}

/// Quantize a batch of latents into +/-1 rows (target path, no gradients).
Tensor sign_rows(const Tensor& z) {
  Tensor bits({z.rows(), z.cols()});
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      bits.at2(r, c) = z.at2(r, c) > 0.0 ? 1.0 : -1.0;
    }
  }
  return bits;
}

struct PairBatch {
  Tensor anchors;    // [N, channels, L_c]
  Tensor positives;  // [N, channels, L_c]
};

PairBatch sample_pair_batch(const std::vector<TrajView>& views,
                            const std::vector<std::size_t>& batch_idx, int L_c, Rng& rng) {
  std::vector<std::size_t> anchor_starts, positive_starts;
  anchor_starts.reserve(batch_idx.size());
  positive_starts.reserve(batch_idx.size());
  for (std::size_t idx : batch_idx) {
    const auto pair = datasets::sample_subtrajectory_pair(views[idx].size(),
                                                          static_cast<std::size_t>(L_c), rng);
    anchor_starts.push_back(pair.anchor_start);
    positive_starts.push_back(pair.positive_start);
  }
  PairBatch out;
  out.anchors = make_window_batch(views, batch_idx, anchor_starts, L_c, true);
  out.positives = make_window_batch(views, batch_idx, positive_starts, L_c, true);
  return out;
}

/// One loss graph: anchor through `online` with straight-through
/// quantization, positives already decoded to style vectors.
Var build_loss(Graph& g, const ReprFunction& online, const Tensor& anchor_windows,
               const Tensor& positive_styles, const ContrastiveConfig& config, Rng& rng) {
  Var z = online.encode_latent(g, g.input(anchor_windows));
  Var c_anchor = online.decode_style(g, ste_sign(z));
  Var c_pos = g.input(positive_styles);
  Var base = config.use_triplet
                 ? triplet_loss(c_anchor, c_pos, c_pos, config.triplet_margin, rng)
                 : info_nce_loss(c_anchor, c_pos, config.tau);
  return add(base, scale(entropy_penalty(z), config.lambda_e));
}

}  // namespace

ContrastiveRunResult train_contrastive(const std::vector<TrajView>& views,
                                       const ContrastiveConfig& config) {
  config.validate();
  std::vector<std::size_t> eligible = eligible_trajectories(views, config.L_c);
  if (eligible.size() < 2) {
    throw std::invalid_argument(
        "train_contrastive: need >= 2 trajectories of length >= 2*L_c, have " +
        std::to_string(eligible.size()));
  }

  ReprFunction online(config);
  ReprFunction target = online.clone();
  AdamOptimizer opt(online.params(), config.lr);
  Rng rng(splitmix64(config.seed ^ 0xc0417a57ull));

  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(config.passes));
  for (int pass = 0; pass < config.passes; ++pass) {
    for (std::size_t i = eligible.size() - 1; i > 0; --i) {
      std::swap(eligible[i], eligible[static_cast<std::size_t>(rng.index(i + 1))]);
    }
    double pass_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t at = 0; at + 2 <= eligible.size(); at += static_cast<std::size_t>(config.batch)) {
      const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(config.batch),
                                                     eligible.size() - at);
      if (take < 2) break;
      const std::vector<std::size_t> batch_idx(eligible.begin() + static_cast<std::ptrdiff_t>(at),
                                               eligible.begin() + static_cast<std::ptrdiff_t>(at + take));
      PairBatch pair = sample_pair_batch(views, batch_idx, config.L_c, rng);
      const Tensor c_pos = target.decode_batch(sign_rows(target.encode_z_batch(pair.positives)));

      Graph g;
      Var loss = build_loss(g, online, pair.anchors, c_pos, config, rng);
      pass_loss += g.value(loss).at(0);
      ++batches;
      online.params().zero_grads();
      g.backward(loss);
      opt.step();
      ema_update(target, online, config.ema_decay);
    }
    curve.push_back(batches > 0 ? pass_loss / static_cast<double>(batches) : 0.0);
  }

  online.freeze();
  return ContrastiveRunResult{std::move(online), std::move(curve)};
}

double contrastive_eval_loss(const std::vector<TrajView>& views, const ReprFunction& anchor_net,
                             const ReprFunction* positive_net, const ContrastiveConfig& config,
                             std::uint64_t seed) {
  const ReprFunction& pos_net = positive_net ? *positive_net : anchor_net;
  std::vector<std::size_t> eligible = eligible_trajectories(views, config.L_c);
  if (eligible.size() < 2) throw std::invalid_argument("contrastive_eval_loss: too little data");
  Rng rng(splitmix64(seed ^ 0xe7a1ull));

  double total = 0.0;
  std::size_t batches = 0;
  for (std::size_t at = 0; at + 2 <= eligible.size(); at += static_cast<std::size_t>(config.batch)) {
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(config.batch),
                                                   eligible.size() - at);
    if (take < 2) break;
    const std::vector<std::size_t> batch_idx(eligible.begin() + static_cast<std::ptrdiff_t>(at),
                                             eligible.begin() + static_cast<std::ptrdiff_t>(at + take));
    PairBatch pair = sample_pair_batch(views, batch_idx, config.L_c, rng);
    const Tensor c_pos = pos_net.decode_batch(sign_rows(pos_net.encode_z_batch(pair.positives)));
    Graph g;
    Var loss = build_loss(g, anchor_net, pair.anchors, c_pos, config, rng);
    total += g.value(loss).at(0);
    ++batches;
  }
  return total / static_cast<double>(batches);
}

}  // namespace drivestyle::styles
