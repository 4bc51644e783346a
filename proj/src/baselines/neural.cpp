#include "drivestyle/baselines/baselines.hpp"
#include "drivestyle/common/hash.hpp"
#include "drivestyle/numkit/adam.hpp"

#include "artifacts.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace drivestyle::baselines::detail {

using namespace numkit;
using datasets::Observation;
using datasets::TrajView;

ObsHead::ObsHead(ParamStore& store, const std::string& prefix, int in1, int in2, int embed,
                 int hidden, int n_hidden, int out_dim, Rng& rng)
    : in1_(in1), in2_(in2), out_dim_(out_dim) {
  embed1_ = Dense(store, prefix + ".embed1", in1, embed, rng);
  if (in2 > 0) embed2_ = Dense(store, prefix + ".embed2", in2, embed, rng);
  const int base = (in2 > 0 ? 2 : 1) * embed;
  trunk_.emplace_back(store, prefix + ".trunk0", base, hidden, rng);
  for (int i = 1; i < n_hidden; ++i) {
    trunk_.emplace_back(store, prefix + ".trunk" + std::to_string(i), hidden, hidden, rng);
  }
  out_ = Dense(store, prefix + ".out", hidden, out_dim, rng);
}

ObsHead ObsHead::bind(ParamStore& store, const std::string& prefix, int in1, int in2, int embed,
                      int hidden, int n_hidden, int out_dim) {
  ObsHead h;
  h.in1_ = in1;
  h.in2_ = in2;
  h.out_dim_ = out_dim;
  h.embed1_ = Dense::bind(store, prefix + ".embed1", in1, embed);
  if (in2 > 0) h.embed2_ = Dense::bind(store, prefix + ".embed2", in2, embed);
  const int base = (in2 > 0 ? 2 : 1) * embed;
  h.trunk_.push_back(Dense::bind(store, prefix + ".trunk0", base, hidden));
  for (int i = 1; i < n_hidden; ++i) {
    h.trunk_.push_back(Dense::bind(store, prefix + ".trunk" + std::to_string(i), hidden, hidden));
  }
  h.out_ = Dense::bind(store, prefix + ".out", hidden, out_dim);
  return h;
}

Var ObsHead::forward(Graph& g, Var x1, std::optional<Var> x2, bool with_grad) const {
  if ((in2_ > 0) != x2.has_value()) {
    throw std::invalid_argument("ObsHead: second input presence mismatch");
  }
  Var h = gelu(embed1_(g, x1, with_grad));
  if (x2) h = concat_cols({h, gelu(embed2_(g, *x2, with_grad))});
  for (const Dense& layer : trunk_) h = gelu(layer(g, h, with_grad));
  return out_(g, h, with_grad);
}

namespace {

constexpr double kLogSigmaMin = -7.0;
constexpr double kLogSigmaMax = 2.0;

struct FlatSamples {
  Tensor obs;  // [N, 5]
  Tensor act;  // [N, 1]
};

FlatSamples flatten(const datasets::Dataset& ds) {
  std::size_t total = 0;
  for (const auto& t : ds.trajectories) total += t.size();
  if (total == 0) throw std::invalid_argument("train_baseline: empty dataset");
  FlatSamples out{Tensor({static_cast<Eigen::Index>(total), Observation::kDim}),
                  Tensor({static_cast<Eigen::Index>(total), 1})};
  Eigen::Index at = 0;
  for (const auto& t : ds.trajectories) {
    for (std::size_t i = 0; i < t.size(); ++i, ++at) {
      const auto o = t.obs[i].as_array();
      for (int k = 0; k < Observation::kDim; ++k) {
        out.obs.at2(at, k) = o[static_cast<std::size_t>(k)];
      }
      out.act.at2(at, 0) = t.act[i].accel;
    }
  }
  return out;
}

Tensor take_rows(const Tensor& src, const std::vector<std::size_t>& rows) {
  Tensor out({static_cast<Eigen::Index>(rows.size()), src.cols()});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.mat().row(static_cast<Eigen::Index>(i)) = src.mat().row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

int nearest_center(double a, const std::vector<double>& centers) {
  int best = 0;
  double bd = std::abs(a - centers[0]);
  for (std::size_t c = 1; c < centers.size(); ++c) {
    const double d = std::abs(a - centers[c]);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

int sample_logits_row(const Tensor& logits, Rng& rng) {
  const Eigen::Index k = logits.cols();
  double max_logit = logits.at2(0, 0);
  for (Eigen::Index i = 1; i < k; ++i) max_logit = std::max(max_logit, logits.at2(0, i));
  std::vector<double> p(static_cast<std::size_t>(k));
  double sum = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    p[static_cast<std::size_t>(i)] = std::exp(logits.at2(0, i) - max_logit);
    sum += p[static_cast<std::size_t>(i)];
  }
  const double u = rng.uniform() * sum;
  double cum = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    cum += p[static_cast<std::size_t>(i)];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(k - 1);
}

Tensor obs_row(const Observation& o) {
  Tensor t({1, Observation::kDim});
  const auto a = o.as_array();
  for (int k = 0; k < Observation::kDim; ++k) t.at2(0, k) = a[static_cast<std::size_t>(k)];
  return t;
}

/// Heads over observations: MSE, Discretized, Gaussian, K-Means (+residual),
/// and the derivative-free EBM.
class HeadBaseline final : public BaselinePolicy {
 public:
  BaselineKind kind_ = BaselineKind::kMse;
  std::unique_ptr<ParamStore> store_;
  ObsHead head_;
  std::vector<double> centers_;
  int bins_ = 20;
  int embed_ = 64, hidden_ = 128, n_hidden_ = 3;
  int ebm_candidates_ = 256, ebm_iters_ = 3;
  double ebm_init_noise_ = 0.33, ebm_noise_shrink_ = 0.5;

  BaselineKind kind() const override { return kind_; }

  Tensor head_out(const Observation& o) const {
    Graph g;
    Var out = head_.forward(g, g.input(obs_row(o)), std::nullopt, false);
    return g.value(out);
  }

  Tensor energies(const Observation& o, const std::vector<double>& candidates) const {
    const Eigen::Index n = static_cast<Eigen::Index>(candidates.size());
    Tensor obs({n, Observation::kDim});
    Tensor act({n, 1});
    const auto arr = o.as_array();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int k = 0; k < Observation::kDim; ++k) obs.at2(i, k) = arr[static_cast<std::size_t>(k)];
      act.at2(i, 0) = candidates[static_cast<std::size_t>(i)];
    }
    Graph g;
    Var e = head_.forward(g, g.input(std::move(obs)), g.input(std::move(act)), false);
    return g.value(e);
  }

  double act_once(const Observation& o, Rng& rng) const {
    switch (kind_) {
      case BaselineKind::kMse:
        return std::clamp(head_out(o).at(0), 0.0, 1.0);
      case BaselineKind::kDiscretized: {
        const int cls = sample_logits_row(head_out(o), rng);
        return discretized_center(cls, bins_);
      }
      case BaselineKind::kGaussian: {
        const Tensor out = head_out(o);
        const double mu = out.at2(0, 0);
        const double sigma = std::exp(std::clamp(out.at2(0, 1), kLogSigmaMin, kLogSigmaMax));
        return std::clamp(rng.normal(mu, sigma), 0.0, 1.0);
      }
      case BaselineKind::kKMeans: {
        const int cls = sample_logits_row(head_out(o), rng);
        return centers_[static_cast<std::size_t>(cls)];
      }
      case BaselineKind::kKMeansResidual: {
        const Tensor out = head_out(o);
        const Eigen::Index k = static_cast<Eigen::Index>(centers_.size());
        Tensor logits({1, k});
        for (Eigen::Index i = 0; i < k; ++i) logits.at2(0, i) = out.at2(0, i);
        const int cls = sample_logits_row(logits, rng);
        // Residuals modify the bin mean; keep them inside the bin (half the
        // distance to the nearest other center).
        double nearest = 1.0;
        for (std::size_t j = 0; j < centers_.size(); ++j) {
          if (static_cast<int>(j) == cls) continue;
          nearest = std::min(nearest, std::abs(centers_[j] - centers_[static_cast<std::size_t>(cls)]));
        }
        const double bound = 0.5 * nearest;
        const double residual = std::clamp(out.at2(0, k + cls), -bound, bound);
        return std::clamp(centers_[static_cast<std::size_t>(cls)] + residual, 0.0, 1.0);
      }
      case BaselineKind::kEbmDerivFree: {
        auto energy_fn = [this, &o](const std::vector<double>& candidates) {
          const Tensor e = energies(o, candidates);
          std::vector<double> out(candidates.size());
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = e.at(static_cast<Eigen::Index>(i));
          return out;
        };
        return derivative_free_minimize(energy_fn, ebm_candidates_, ebm_iters_, ebm_init_noise_,
                                        ebm_noise_shrink_, rng);
      }
      default:
        throw std::logic_error("HeadBaseline: unsupported kind");
    }
  }

  policy::EgoPolicyHooks make_hooks() const override {
    policy::EgoPolicyHooks hooks;
    hooks.act = [this](const Observation& o, Rng& rng) { return act_once(o, rng); };
    return hooks;
  }

  void save(const std::string& path, const std::string& fingerprint,
            std::uint64_t seed) const override {
    CheckpointHeader header;
    header.fingerprint = fingerprint;
    header.seed = seed;
    header.meta["kind"] = "baseline";
    header.meta["baseline_kind"] = to_string(kind_);
    header.meta["embed"] = std::to_string(embed_);
    header.meta["hidden"] = std::to_string(hidden_);
    header.meta["n_hidden"] = std::to_string(n_hidden_);
    header.meta["bins"] = std::to_string(bins_);
    header.meta["out_dim"] = std::to_string(head_.out_dim());
    header.meta["centers"] = nlohmann::json(centers_).dump();
    header.meta["ebm_candidates"] = std::to_string(ebm_candidates_);
    header.meta["ebm_iters"] = std::to_string(ebm_iters_);
    header.meta["ebm_init_noise"] = std::to_string(ebm_init_noise_);
    header.meta["ebm_noise_shrink"] = std::to_string(ebm_noise_shrink_);
    save_checkpoint(path, header, *store_);
  }
};

/// Conditioned diffusion baseline: conv context network over the warm-up
/// window, trained end-to-end with the denoiser.
class DiffusionBcBaseline final : public BaselinePolicy {
 public:
  std::unique_ptr<ParamStore> store_;
  policy::DenoiserNet denoiser_;
  Conv1dLayer c1_, c2_;
  Dense cfc_;
  policy::NoiseSchedule schedule_;
  policy::SamplerKind sampler_;
  int L_p_ = 5, cond_dim_ = 64, channels_ = 16;

  BaselineKind kind() const override { return BaselineKind::kDiffusionBC; }

  Var embed_context(Graph& g, Var window, bool with_grad) const {
    Var h = relu(c1_(g, window, with_grad));
    h = relu(c2_(g, h, with_grad));
    const Tensor& hv = g.value(h);
    return cfc_(g, reshape(h, {hv.extent(0), hv.extent(1) * hv.extent(2)}), with_grad);
  }

  Eigen::VectorXd context_vector(const styles::ContextWindow& window) const {
    Graph g;
    Var e = embed_context(g, g.input(styles::context_window_tensor(window, L_p_)), false);
    Eigen::VectorXd out(g.value(e).cols());
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = g.value(e).at2(0, i);
    return out;
  }

  policy::EgoPolicyHooks make_hooks() const override {
    auto context = std::make_shared<Eigen::VectorXd>();
    auto ready = std::make_shared<bool>(false);
    policy::EgoPolicyHooks hooks;
    hooks.begin = [this, context, ready](const styles::ContextWindow& window, Rng&) {
      *context = context_vector(window);
      *ready = true;
    };
    hooks.act = [this, context, ready](const Observation& o, Rng& rng) {
      if (!*ready) throw std::logic_error("diffusion-bc: act before warm-up context");
      return policy::sample_action_with_net(denoiser_, schedule_, o.as_array(), context.get(),
                                            sampler_, rng);
    };
    return hooks;
  }

  void save(const std::string& path, const std::string& fingerprint,
            std::uint64_t seed) const override {
    CheckpointHeader header;
    header.fingerprint = fingerprint;
    header.seed = seed;
    header.meta["kind"] = "baseline";
    header.meta["baseline_kind"] = to_string(BaselineKind::kDiffusionBC);
    header.meta["L_p"] = std::to_string(L_p_);
    header.meta["cond_dim"] = std::to_string(cond_dim_);
    header.meta["channels"] = std::to_string(channels_);
    header.meta["hidden"] = std::to_string(denoiser_.config().hidden);
    header.meta["embed"] = std::to_string(denoiser_.config().embed);
    header.meta["time_embed"] = std::to_string(denoiser_.config().time_embed);
    header.meta["n_hidden"] = std::to_string(denoiser_.config().n_hidden);
    header.meta["T"] = std::to_string(schedule_.T);
    header.meta["beta_min"] = std::to_string(schedule_.beta[1]);
    header.meta["beta_max"] = std::to_string(schedule_.beta[static_cast<std::size_t>(schedule_.T)]);
    header.meta["sampler"] = sampler_.describe();
    save_checkpoint(path, header, *store_);
  }
};

/// Unconditional diffusion baseline delegating to the policy trainer.
class UncondDiffusionBcBaseline final : public BaselinePolicy {
 public:
  UncondDiffusionBcBaseline(policy::DiffusionPolicy policy, policy::SamplerKind sampler)
      : policy_(std::move(policy)), sampler_(sampler) {}

  BaselineKind kind() const override { return BaselineKind::kUncondDiffusionBC; }

  policy::EgoPolicyHooks make_hooks() const override {
    policy::EgoPolicyHooks hooks;
    hooks.act = [this](const Observation& o, Rng& rng) {
      return policy_.sample_action(o.as_array(), nullptr, sampler_, rng);
    };
    return hooks;
  }

  void save(const std::string& path, const std::string& fingerprint,
            std::uint64_t seed) const override {
    CheckpointHeader header;
    header.fingerprint = fingerprint;
    header.seed = seed;
    header.meta["kind"] = "baseline";
    header.meta["baseline_kind"] = to_string(BaselineKind::kUncondDiffusionBC);
    const auto& c = policy_.config();
    header.meta["hidden"] = std::to_string(c.hidden);
    header.meta["embed"] = std::to_string(c.embed);
    header.meta["time_embed"] = std::to_string(c.time_embed);
    header.meta["n_hidden"] = std::to_string(c.n_hidden);
    header.meta["T"] = std::to_string(policy_.schedule().T);
    header.meta["beta_min"] = std::to_string(policy_.schedule().beta[1]);
    header.meta["beta_max"] =
        std::to_string(policy_.schedule().beta[static_cast<std::size_t>(policy_.schedule().T)]);
    header.meta["sampler"] = sampler_.describe();
    save_checkpoint(path, header, policy_.params_const());
  }

  policy::DiffusionPolicy policy_;
  policy::SamplerKind sampler_;
};

int target_class(BaselineKind kind, double action, int bins, const std::vector<double>& centers) {
  return kind == BaselineKind::kDiscretized ? discretized_bin(action, bins)
                                            : nearest_center(action, centers);
}

Var head_loss(Graph& g, BaselineKind kind, const ObsHead& head, const Tensor& obs,
              const Tensor& act, int bins, const std::vector<double>& centers, int ebm_negatives,
              Rng& rng) {
  switch (kind) {
    case BaselineKind::kMse:
      return mse(head.forward(g, g.input(obs), std::nullopt, true), g.input(act));
    case BaselineKind::kDiscretized:
    case BaselineKind::kKMeans: {
      std::vector<int> targets(static_cast<std::size_t>(act.rows()));
      for (Eigen::Index i = 0; i < act.rows(); ++i) {
        targets[static_cast<std::size_t>(i)] = target_class(kind, act.at2(i, 0), bins, centers);
      }
      return cross_entropy_with_indices(head.forward(g, g.input(obs), std::nullopt, true),
                                        targets);
    }
    case BaselineKind::kGaussian: {
      Var out = head.forward(g, g.input(obs), std::nullopt, true);
      Var mu = slice_cols(out, 0, 1);
      Var log_sigma = clamp(slice_cols(out, 1, 1), kLogSigmaMin, kLogSigmaMax);
      Var diff = sub(g.input(act), mu);
      Var z = mul(diff, exp_op(neg(log_sigma)));
      return mean_all(add(scale(square(z), 0.5), log_sigma));
    }
    case BaselineKind::kKMeansResidual: {
      const int k = static_cast<int>(centers.size());
      std::vector<int> targets(static_cast<std::size_t>(act.rows()));
      Tensor residual_target({act.rows(), 1});
      for (Eigen::Index i = 0; i < act.rows(); ++i) {
        const int cls = nearest_center(act.at2(i, 0), centers);
        targets[static_cast<std::size_t>(i)] = cls;
        residual_target.at2(i, 0) = act.at2(i, 0) - centers[static_cast<std::size_t>(cls)];
      }
      Var out = head.forward(g, g.input(obs), std::nullopt, true);
      Var logits = slice_cols(out, 0, k);
      Var residuals = slice_cols(out, k, k);
      Var ce = cross_entropy_with_indices(logits, targets);
      Var res = mse(pick_cols(residuals, targets), g.input(residual_target));
      return add(ce, res);
    }
    case BaselineKind::kEbmDerivFree: {
      // InfoNCE-style: the logged action against uniform counter-examples.
      const Eigen::Index B = obs.rows();
      const int m = 1 + ebm_negatives;
      Tensor obs_rep({B * m, Observation::kDim});
      Tensor cands({B * m, 1});
      for (Eigen::Index i = 0; i < B; ++i) {
        for (int j = 0; j < m; ++j) {
          obs_rep.mat().row(i * m + j) = obs.mat().row(i);
          cands.at2(i * m + j, 0) = (j == 0) ? act.at2(i, 0) : rng.uniform();
        }
      }
      Var e = head.forward(g, g.input(std::move(obs_rep)), g.input(std::move(cands)), true);
      Var logits = reshape(neg(e), {B, static_cast<Eigen::Index>(m)});
      return cross_entropy_with_indices(logits, std::vector<int>(static_cast<std::size_t>(B), 0));
    }
    default:
      throw std::logic_error("head_loss: unsupported kind");
  }
}

std::unique_ptr<BaselinePolicy> train_head_baseline(BaselineKind kind,
                                                    const datasets::Dataset& train,
                                                    const BaselineConfig& config,
                                                    std::vector<double>* loss_curve) {
  auto artifact = std::make_unique<HeadBaseline>();
  artifact->kind_ = kind;
  artifact->store_ = std::make_unique<ParamStore>();
  artifact->bins_ = config.bins;
  artifact->embed_ = config.embed;
  artifact->hidden_ = config.hidden;
  artifact->n_hidden_ = config.n_hidden;
  artifact->ebm_candidates_ = config.ebm_candidates;
  artifact->ebm_iters_ = config.ebm_iters;
  artifact->ebm_init_noise_ = config.ebm_init_noise;
  artifact->ebm_noise_shrink_ = config.ebm_noise_shrink;

  const FlatSamples samples = flatten(train);

  if (kind == BaselineKind::kKMeans || kind == BaselineKind::kKMeansResidual) {
    std::vector<double> actions(static_cast<std::size_t>(samples.act.rows()));
    for (Eigen::Index i = 0; i < samples.act.rows(); ++i) actions[static_cast<std::size_t>(i)] = samples.act.at2(i, 0);
    artifact->centers_ = kmeans_centers_1d(actions, config.kmeans_k, config.seed);
  }

  int out_dim = 1;
  int in2 = 0;
  switch (kind) {
    case BaselineKind::kMse: out_dim = 1; break;
    case BaselineKind::kDiscretized: out_dim = config.bins; break;
    case BaselineKind::kGaussian: out_dim = 2; break;
    case BaselineKind::kKMeans: out_dim = config.kmeans_k; break;
    case BaselineKind::kKMeansResidual: out_dim = 2 * config.kmeans_k; break;
    case BaselineKind::kEbmDerivFree:
      out_dim = 1;
      in2 = 1;
      break;
    default:
      throw std::logic_error("train_head_baseline: unsupported kind");
  }
  Rng init_rng(splitmix64(config.seed ^ 0xba5e11ull));
  artifact->head_ = ObsHead(*artifact->store_, "head", Observation::kDim, in2, config.embed,
                            config.hidden, config.n_hidden, out_dim, init_rng);
  if (kind == BaselineKind::kKMeansResidual) {
    // Residual columns start at zero so untrained residuals cannot hurt;
    // the classifier half keeps its usual init.
    Param* w = artifact->store_->require("head.out.w");
    Param* b = artifact->store_->require("head.out.b");
    const int k = config.kmeans_k;
    w->value.mat().middleCols(k, k).setZero();
    b->value.mat().middleCols(k, k).setZero();
  }

  AdamOptimizer opt(*artifact->store_, config.lr);
  Rng rng(splitmix64(config.seed ^ 0xba711ull));
  const std::size_t n = static_cast<std::size_t>(samples.obs.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<std::size_t>(rng.index(i + 1))]);
    }
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t at = 0; at < n; at += static_cast<std::size_t>(config.batch)) {
      const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(config.batch),
                                                     n - at);
      const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(at),
                                          order.begin() + static_cast<std::ptrdiff_t>(at + take));
      Graph g;
      Var loss = head_loss(g, kind, artifact->head_, take_rows(samples.obs, rows),
                           take_rows(samples.act, rows), config.bins, artifact->centers_,
                           config.ebm_negatives, rng);
      epoch_loss += g.value(loss).at(0);
      ++batches;
      g.backward(loss);
      opt.step();
    }
    if (loss_curve) loss_curve->push_back(epoch_loss / static_cast<double>(batches));
  }
  return artifact;
}

std::unique_ptr<BaselinePolicy> train_diffusion_bc(const datasets::Dataset& train,
                                                   const BaselineConfig& config,
                                                   std::vector<double>* loss_curve) {
  auto artifact = std::make_unique<DiffusionBcBaseline>();
  artifact->store_ = std::make_unique<ParamStore>();
  artifact->schedule_ = policy::make_schedule(config.T, config.beta_min, config.beta_max);
  artifact->sampler_ = config.sampler;
  artifact->L_p_ = config.L_p;
  artifact->cond_dim_ = config.cond_dim;

  policy::DenoiserConfig dconfig;
  dconfig.style_dim = config.cond_dim;
  dconfig.hidden = config.hidden;
  dconfig.embed = config.embed;
  dconfig.n_hidden = config.n_hidden;
  Rng init_rng(splitmix64(config.seed ^ 0xdbc11ull));
  artifact->denoiser_ = policy::DenoiserNet(*artifact->store_, "denoiser", dconfig, init_rng);
  artifact->c1_ = Conv1dLayer(*artifact->store_, "cond.conv1", styles::kWindowChannels,
                              artifact->channels_, 3, 1, 1, init_rng);
  artifact->c2_ = Conv1dLayer(*artifact->store_, "cond.conv2", artifact->channels_,
                              artifact->channels_, 3, 1, 1, init_rng);
  artifact->cfc_ = Dense(*artifact->store_, "cond.fc",
                         static_cast<Eigen::Index>(artifact->channels_) * config.L_p,
                         config.cond_dim, init_rng);

  // Samples: (trajectory, timestep); the context is the trajectory's first
  // L_p window, embedded inside the training graph for end-to-end gradients.
  const auto views = train.views();
  std::vector<std::size_t> traj_of, t_of;
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i].size() < static_cast<std::size_t>(config.L_p)) continue;
    for (std::size_t t = 0; t < views[i].size(); ++t) {
      traj_of.push_back(i);
      t_of.push_back(t);
    }
  }
  if (traj_of.empty()) throw std::invalid_argument("diffusion-bc: no usable samples");

  AdamOptimizer opt(*artifact->store_, config.lr);
  Rng rng(splitmix64(config.seed ^ 0xdbc7ull));
  const std::size_t n = traj_of.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::vector<std::size_t> zeros_start(1, 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<std::size_t>(rng.index(i + 1))]);
    }
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t at = 0; at < n; at += static_cast<std::size_t>(config.batch)) {
      const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(config.batch),
                                                     n - at);
      Tensor obs({static_cast<Eigen::Index>(take), Observation::kDim});
      Tensor act({static_cast<Eigen::Index>(take), 1});
      std::vector<std::size_t> win_traj(take), win_start(take, 0);
      for (std::size_t r = 0; r < take; ++r) {
        const std::size_t s = order[at + r];
        const auto& v = views[traj_of[s]];
        const auto o = v.obs[t_of[s]].as_array();
        for (int k = 0; k < Observation::kDim; ++k) {
          obs.at2(static_cast<Eigen::Index>(r), k) = o[static_cast<std::size_t>(k)];
        }
        act.at2(static_cast<Eigen::Index>(r), 0) = v.act[t_of[s]].accel;
        win_traj[r] = traj_of[s];
      }
      const Tensor windows =
          styles::make_window_batch(views, win_traj, win_start, config.L_p, false);
      Graph g;
      Var context = artifact->embed_context(g, g.input(windows), true);
      const policy::DdpmDraws draws = policy::draw_ddpm_batch(take, artifact->schedule_, rng);
      Var loss = policy::ddpm_loss_var(g, artifact->denoiser_, obs, act, context,
                                       artifact->schedule_, draws, true);
      epoch_loss += g.value(loss).at(0);
      ++batches;
      g.backward(loss);
      opt.step();
    }
    if (loss_curve) loss_curve->push_back(epoch_loss / static_cast<double>(batches));
  }
  return artifact;
}

}  // namespace

std::unique_ptr<BaselinePolicy> train_neural_baseline(BaselineKind kind,
                                                      const datasets::Dataset& train,
                                                      const datasets::Dataset& val,
                                                      const BaselineConfig& config,
                                                      std::vector<double>* loss_curve) {
  switch (kind) {
    case BaselineKind::kUncondDiffusionBC: {
      policy::PolicyTrainConfig ptc;
      ptc.epochs = config.epochs;
      ptc.batch = config.batch;
      ptc.lr = config.lr;
      ptc.T = config.T;
      ptc.beta_min = config.beta_min;
      ptc.beta_max = config.beta_max;
      ptc.seed = config.seed;
      ptc.denoiser.style_dim = 0;
      ptc.denoiser.hidden = config.hidden;
      ptc.denoiser.embed = config.embed;
      ptc.denoiser.n_hidden = config.n_hidden;
      auto run = policy::train_policy(train.views(), val.views(), nullptr, ptc);
      if (loss_curve) *loss_curve = run.loss_curve;
      return std::make_unique<UncondDiffusionBcBaseline>(std::move(run.policy), config.sampler);
    }
    case BaselineKind::kDiffusionBC:
      return train_diffusion_bc(train, config, loss_curve);
    default:
      return train_head_baseline(kind, train, config, loss_curve);
  }
}

std::unique_ptr<BaselinePolicy> load_neural_baseline(const Checkpoint& ckpt) {
  const auto& meta = ckpt.header.meta;
  const BaselineKind kind = baseline_kind_from_string(meta.at("baseline_kind"));
  switch (kind) {
    case BaselineKind::kUncondDiffusionBC: {
      policy::DenoiserConfig dconfig;
      dconfig.style_dim = 0;
      dconfig.hidden = std::stoi(meta.at("hidden"));
      dconfig.embed = std::stoi(meta.at("embed"));
      dconfig.time_embed = std::stoi(meta.at("time_embed"));
      dconfig.n_hidden = std::stoi(meta.at("n_hidden"));
      const auto schedule = policy::make_schedule(std::stoi(meta.at("T")),
                                                  std::stod(meta.at("beta_min")),
                                                  std::stod(meta.at("beta_max")));
      policy::DiffusionPolicy policy(dconfig, schedule, ckpt.header.seed);
      load_into(ckpt, policy.params());
      policy.freeze();
      return std::make_unique<UncondDiffusionBcBaseline>(
          std::move(policy), policy::SamplerKind::parse(meta.at("sampler")));
    }
    case BaselineKind::kDiffusionBC: {
      auto artifact = std::make_unique<DiffusionBcBaseline>();
      artifact->store_ = std::make_unique<ParamStore>();
      artifact->L_p_ = std::stoi(meta.at("L_p"));
      artifact->cond_dim_ = std::stoi(meta.at("cond_dim"));
      artifact->channels_ = std::stoi(meta.at("channels"));
      artifact->schedule_ = policy::make_schedule(std::stoi(meta.at("T")),
                                                  std::stod(meta.at("beta_min")),
                                                  std::stod(meta.at("beta_max")));
      artifact->sampler_ = policy::SamplerKind::parse(meta.at("sampler"));
      policy::DenoiserConfig dconfig;
      dconfig.style_dim = artifact->cond_dim_;
      dconfig.hidden = std::stoi(meta.at("hidden"));
      dconfig.embed = std::stoi(meta.at("embed"));
      dconfig.time_embed = std::stoi(meta.at("time_embed"));
      dconfig.n_hidden = std::stoi(meta.at("n_hidden"));
      Rng rng(1);
      artifact->denoiser_ =
          policy::DenoiserNet(*artifact->store_, "denoiser", dconfig, rng);
      artifact->c1_ = Conv1dLayer(*artifact->store_, "cond.conv1", styles::kWindowChannels,
                                  artifact->channels_, 3, 1, 1, rng);
      artifact->c2_ = Conv1dLayer(*artifact->store_, "cond.conv2", artifact->channels_,
                                  artifact->channels_, 3, 1, 1, rng);
      artifact->cfc_ = Dense(*artifact->store_, "cond.fc",
                             static_cast<Eigen::Index>(artifact->channels_) * artifact->L_p_,
                             artifact->cond_dim_, rng);
      load_into(ckpt, *artifact->store_);
      return artifact;
    }
    default: {
      auto artifact = std::make_unique<HeadBaseline>();
      artifact->kind_ = kind;
      artifact->store_ = std::make_unique<ParamStore>();
      artifact->bins_ = std::stoi(meta.at("bins"));
      artifact->embed_ = std::stoi(meta.at("embed"));
      artifact->hidden_ = std::stoi(meta.at("hidden"));
      artifact->n_hidden_ = std::stoi(meta.at("n_hidden"));
      artifact->centers_ = nlohmann::json::parse(meta.at("centers")).get<std::vector<double>>();
      artifact->ebm_candidates_ = std::stoi(meta.at("ebm_candidates"));
      artifact->ebm_iters_ = std::stoi(meta.at("ebm_iters"));
      artifact->ebm_init_noise_ = std::stod(meta.at("ebm_init_noise"));
      artifact->ebm_noise_shrink_ = std::stod(meta.at("ebm_noise_shrink"));
      const int in2 = (kind == BaselineKind::kEbmDerivFree) ? 1 : 0;
      Rng rng(1);
      ObsHead fresh(*artifact->store_, "head", Observation::kDim, in2, artifact->embed_,
                    artifact->hidden_, artifact->n_hidden_, std::stoi(meta.at("out_dim")), rng);
      artifact->head_ = fresh;
      load_into(ckpt, *artifact->store_);
      return artifact;
    }
  }
}

}  // namespace drivestyle::baselines::detail
