#include "drivestyle/styles/prior.hpp"

#include "drivestyle/common/hash.hpp"
#include "drivestyle/numkit/adam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace drivestyle::styles {

using namespace numkit;
using datasets::TrajView;

void PriorConfig::validate() const {
  if (L_p < 1) throw std::invalid_argument("PriorConfig: L_p must be >= 1");
  if (channels < 1) throw std::invalid_argument("PriorConfig: channels must be >= 1");
  if (epochs < 1 || batch < 1) throw std::invalid_argument("PriorConfig: bad schedule");
}

PriorNet::PriorNet(const PriorConfig& config, int K) : config_(config), K_(K) {
  config_.validate();
  if (K < 2) throw std::invalid_argument("PriorNet: K must be >= 2");
  store_ = std::make_unique<ParamStore>();
  Rng rng(splitmix64(config.seed ^ 0x9121a7ull));
  build_layers(rng);
}

void PriorNet::build_layers(Rng& rng) {
  const int ch = config_.channels;
  conv1_ = Conv1dLayer(*store_, "prior.conv1", kWindowChannels, ch, 3, 1, 1, rng);
  conv2_ = Conv1dLayer(*store_, "prior.conv2", ch, ch, 3, 1, 1, rng);
  fc1_ = Dense(*store_, "prior.fc1", static_cast<Eigen::Index>(ch) * config_.L_p, 128, rng);
  fc2_ = Dense(*store_, "prior.fc2", 128, K_, rng);
}

void PriorNet::bind_layers() {
  const int ch = config_.channels;
  conv1_ = Conv1dLayer::bind(*store_, "prior.conv1", kWindowChannels, ch, 3, 1, 1);
  conv2_ = Conv1dLayer::bind(*store_, "prior.conv2", ch, ch, 3, 1, 1);
  fc1_ = Dense::bind(*store_, "prior.fc1", static_cast<Eigen::Index>(ch) * config_.L_p, 128);
  fc2_ = Dense::bind(*store_, "prior.fc2", 128, K_);
}

ParamStore& PriorNet::params() {
  if (frozen_) throw std::logic_error("PriorNet: frozen, parameters are immutable");
  return *store_;
}

Var PriorNet::logits_var(Graph& g, Var window_batch) const {
  const bool with_grad = !frozen_;
  Var h = relu(conv1_(g, window_batch, with_grad));
  h = relu(conv2_(g, h, with_grad));
  const Tensor& hv = g.value(h);
  Var flat = reshape(h, {hv.extent(0), hv.extent(1) * hv.extent(2)});
  return fc2_(g, gelu(fc1_(g, flat, with_grad)), with_grad);
}

Tensor PriorNet::logits_batch(const Tensor& window_batch) const {
  Graph g;
  return g.value(logits_var(g, g.input(window_batch)));
}

Tensor context_window_tensor(const ContextWindow& window, int L_p) {
  if (window.obs.size() != static_cast<std::size_t>(L_p)) {
    throw std::invalid_argument("context window: need exactly L_p observations, have " +
                                std::to_string(window.obs.size()));
  }
  if (window.actions.size() + 1 != static_cast<std::size_t>(L_p)) {
    throw std::invalid_argument("context window: need L_p - 1 actions");
  }
  Tensor t({1, kWindowChannels, L_p});
  for (int l = 0; l < L_p; ++l) {
    for (int k = 0; k < datasets::Observation::kDim; ++k) {
      t.at3(0, k, l) = window.obs[static_cast<std::size_t>(l)][k];
    }
    t.at3(0, datasets::Observation::kDim, l) =
        (l + 1 < L_p) ? window.actions[static_cast<std::size_t>(l)] : 0.0;
  }
  return t;
}

Eigen::VectorXd PriorNet::logits(const ContextWindow& window) const {
  const Tensor out = logits_batch(context_window_tensor(window, config_.L_p));
  Eigen::VectorXd v(out.cols());
  for (Eigen::Index i = 0; i < out.cols(); ++i) v(i) = out.at2(0, i);
  return v;
}

void PriorNet::save(const std::string& path, const std::string& fingerprint,
                    std::uint64_t seed) const {
  CheckpointHeader header;
  header.fingerprint = fingerprint;
  header.seed = seed;
  header.meta["kind"] = "prior";
  header.meta["K"] = std::to_string(K_);
  header.meta["L_p"] = std::to_string(config_.L_p);
  header.meta["channels"] = std::to_string(config_.channels);
  save_checkpoint(path, header, *store_);
}

PriorNet PriorNet::load(const std::string& path) {
  const Checkpoint ckpt = read_checkpoint(path);
  if (ckpt.header.meta.at("kind") != "prior") {
    throw std::runtime_error("PriorNet::load: '" + path + "' is not a prior checkpoint");
  }
  PriorConfig config;
  config.L_p = std::stoi(ckpt.header.meta.at("L_p"));
  config.channels = std::stoi(ckpt.header.meta.at("channels"));
  PriorNet prior(config, std::stoi(ckpt.header.meta.at("K")));
  load_into(ckpt, *prior.store_);
  prior.freeze();
  return prior;
}

PriorRunResult train_prior(const std::vector<TrajView>& views, const ReprFunction& repr,
                           const PriorConfig& config) {
  config.validate();
  if (!repr.frozen()) {
    throw std::invalid_argument("train_prior: representation function must be frozen");
  }
  const int L_c = repr.config().L_c;
  const int span = std::max(L_c, config.L_p);

  // Window heads with room for both the prior input and the code target.
  std::vector<std::size_t> traj_of, head_of;
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i].size() < static_cast<std::size_t>(span)) continue;
    for (std::size_t h = 0; h + static_cast<std::size_t>(span) <= views[i].size(); ++h) {
      traj_of.push_back(i);
      head_of.push_back(h);
    }
  }
  if (traj_of.empty()) throw std::invalid_argument("train_prior: no usable windows");

  // Frozen-encoder targets, batched.
  std::vector<int> targets(traj_of.size());
  constexpr std::size_t kChunk = 512;
  for (std::size_t at = 0; at < traj_of.size(); at += kChunk) {
    const std::size_t take = std::min(kChunk, traj_of.size() - at);
    const std::vector<std::size_t> ti(traj_of.begin() + static_cast<std::ptrdiff_t>(at),
                                      traj_of.begin() + static_cast<std::ptrdiff_t>(at + take));
    const std::vector<std::size_t> hi(head_of.begin() + static_cast<std::ptrdiff_t>(at),
                                      head_of.begin() + static_cast<std::ptrdiff_t>(at + take));
    const Tensor z = repr.encode_z_batch(make_window_batch(views, ti, hi, L_c, true));
    for (std::size_t r = 0; r < take; ++r) {
      Eigen::VectorXd row(z.cols());
      for (Eigen::Index c = 0; c < z.cols(); ++c) row(c) = z.at2(static_cast<Eigen::Index>(r), c);
      targets[at + r] = lfq_quantize(row).index;
    }
  }

  PriorNet prior(config, repr.config().K);
  AdamOptimizer opt(prior.params(), config.lr);
  Rng rng(splitmix64(config.seed ^ 0x9107bull));

  std::vector<std::size_t> order(traj_of.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(config.epochs));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<std::size_t>(rng.index(i + 1))]);
    }
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(config.batch)) {
      const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(config.batch),
                                                     order.size() - at);
      std::vector<std::size_t> ti(take), hi(take);
      std::vector<int> batch_targets(take);
      for (std::size_t r = 0; r < take; ++r) {
        const std::size_t s = order[at + r];
        ti[r] = traj_of[s];
        hi[r] = head_of[s];
        batch_targets[r] = targets[s];
      }
      const Tensor windows = make_window_batch(views, ti, hi, config.L_p, false);
      Graph g;
      Var loss = cross_entropy_with_indices(prior.logits_var(g, g.input(windows)), batch_targets);
      epoch_loss += g.value(loss).at(0);
      ++batches;
      g.backward(loss);
      opt.step();
    }
    curve.push_back(epoch_loss / static_cast<double>(batches));
  }
  prior.freeze();
  return PriorRunResult{std::move(prior), std::move(curve)};
}

std::pair<StyleCode, StyleVector> sample_style(const PriorNet& prior, const ReprFunction& repr,
                                               const ContextWindow& window, Rng& rng,
                                               double temperature) {
  if (temperature < 0.0) throw std::invalid_argument("sample_style: negative temperature");
  const Eigen::VectorXd logits = prior.logits(window);
  int index = 0;
  if (temperature == 0.0) {
    logits.maxCoeff(&index);
  } else {
    const Eigen::ArrayXd shifted = (logits.array() - logits.maxCoeff()) / temperature;
    Eigen::ArrayXd probs = shifted.exp();
    probs /= probs.sum();
    const double u = rng.uniform();
    double cum = 0.0;
    index = static_cast<int>(probs.size()) - 1;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      cum += probs(i);
      if (u < cum) {
        index = static_cast<int>(i);
        break;
      }
    }
  }
  const StyleCode code = code_from_index(index, repr.config().code_bits());
  return {code, repr.decode(code)};
}

}  // namespace drivestyle::styles
