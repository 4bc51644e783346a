#include "drivestyle/policy/train.hpp"

#include "drivestyle/common/hash.hpp"
#include "drivestyle/numkit/adam.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace drivestyle::policy {

using namespace numkit;
using datasets::TrajView;
using styles::ReprFunction;

Tensor style_rows_for_trajectory(const ReprFunction& repr, const TrajView& view) {
  const int L_c = repr.config().L_c;
  if (view.size() < static_cast<std::size_t>(L_c)) {
    throw std::invalid_argument("style_rows_for_trajectory: trajectory shorter than L_c");
  }
  const std::size_t n_starts = view.size() - static_cast<std::size_t>(L_c) + 1;
  std::vector<std::size_t> idx(n_starts, 0), starts(n_starts);
  std::iota(starts.begin(), starts.end(), 0);
  std::vector<TrajView> one{view};
  const Tensor z = repr.encode_z_batch(styles::make_window_batch(one, idx, starts, L_c, true));
  Tensor bits({z.rows(), z.cols()});
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    for (Eigen::Index c = 0; c < z.cols(); ++c) bits.at2(r, c) = z.at2(r, c) > 0.0 ? 1.0 : -1.0;
  }
  const Tensor styles_per_start = repr.decode_batch(bits);

  // One row per timestep: the window starting at t, clipped at the end.
  Tensor rows({static_cast<Eigen::Index>(view.size()), styles_per_start.cols()});
  for (std::size_t t = 0; t < view.size(); ++t) {
    const std::size_t s = std::min(t, n_starts - 1);
    rows.mat().row(static_cast<Eigen::Index>(t)) =
        styles_per_start.mat().row(static_cast<Eigen::Index>(s));
  }
  return rows;
}

namespace {

struct SampleTable {
  Tensor obs;     // [N, obs_dim]
  Tensor act;     // [N, 1]
  Tensor styles;  // [N, style_dim] or [N, 0]
};

SampleTable build_table(const std::vector<TrajView>& views, const ReprFunction* repr,
                        const DenoiserConfig& config, std::size_t cap) {
  std::size_t total = 0;
  const std::size_t min_len =
      repr ? static_cast<std::size_t>(repr->config().L_c) : std::size_t{1};
  for (const TrajView& v : views) {
    if (v.size() >= min_len) total += v.size();
  }
  if (total == 0) throw std::invalid_argument("train_policy: no usable samples");
  total = std::min(total, cap);

  SampleTable table{Tensor({static_cast<Eigen::Index>(total), config.obs_dim}),
                    Tensor({static_cast<Eigen::Index>(total), 1}),
                    Tensor({static_cast<Eigen::Index>(total),
                            repr ? static_cast<Eigen::Index>(config.style_dim) : 0})};
  Eigen::Index at = 0;
  for (const TrajView& v : views) {
    if (v.size() < min_len) continue;
    Tensor style_rows;
    if (repr) style_rows = style_rows_for_trajectory(*repr, v);
    for (std::size_t t = 0; t < v.size() && at < table.obs.rows(); ++t, ++at) {
      const auto o = v.obs[t].as_array();
      for (int k = 0; k < config.obs_dim; ++k) table.obs.at2(at, k) = o[static_cast<std::size_t>(k)];
      table.act.at2(at, 0) = v.act[t].accel;
      if (repr) table.styles.mat().row(at) = style_rows.mat().row(static_cast<Eigen::Index>(t));
    }
    if (at >= table.obs.rows()) break;
  }
  return table;
}

Tensor gather_rows(const Tensor& src, const std::vector<std::size_t>& rows) {
  Tensor out({static_cast<Eigen::Index>(rows.size()), src.cols()});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.mat().row(static_cast<Eigen::Index>(i)) = src.mat().row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

std::vector<std::pair<std::string, Tensor>> snapshot_params(const ParamStore& store) {
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(store.all().size());
  for (const auto& p : store.all()) out.emplace_back(p->id, p->value);
  return out;
}

void restore_params(ParamStore& store, const std::vector<std::pair<std::string, Tensor>>& snap) {
  for (const auto& [name, value] : snap) {
    Param* p = store.require(name);
    p->value = value;
    p->zero_grad();
  }
}

}  // namespace

PolicyRunResult train_policy(const std::vector<TrajView>& train_views,
                             const std::vector<TrajView>& val_views, const ReprFunction* repr,
                             const PolicyTrainConfig& config) {
  if (config.denoiser.conditioned()) {
    if (repr == nullptr) throw std::invalid_argument("train_policy: conditioned net needs a repr");
    if (!repr->frozen()) throw std::invalid_argument("train_policy: repr must be frozen");
    if (repr->config().style_dim != config.denoiser.style_dim) {
      throw std::invalid_argument("train_policy: style_dim mismatch with repr");
    }
  }
  const ReprFunction* style_source = config.denoiser.conditioned() ? repr : nullptr;
  const NoiseSchedule schedule = make_schedule(config.T, config.beta_min, config.beta_max);

  const SampleTable train_table =
      build_table(train_views, style_source, config.denoiser, SIZE_MAX);
  const SampleTable val_table = build_table(val_views.empty() ? train_views : val_views,
                                            style_source, config.denoiser,
                                            config.max_val_samples);

  DiffusionPolicy policy(config.denoiser, schedule, config.seed);
  AdamOptimizer opt(policy.params(), config.lr);
  Rng rng(splitmix64(config.seed ^ 0x70111cull));
  const std::uint64_t val_seed = splitmix64(config.seed ^ 0x7a1ull);

  auto val_loss = [&]() {
    Rng vr(val_seed);  // same draws every evaluation, losses comparable
    return policy.batch_loss(val_table.obs, val_table.act, val_table.styles, vr);
  };

  std::vector<EpochCheckpoint> checkpoints;
  std::vector<double> loss_curve;
  checkpoints.push_back(EpochCheckpoint{0, val_loss(), snapshot_params(policy.params_const())});

  const std::size_t n = static_cast<std::size_t>(train_table.obs.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
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
      const Tensor obs = gather_rows(train_table.obs, rows);
      const Tensor act = gather_rows(train_table.act, rows);
      const Tensor sty = gather_rows(train_table.styles, rows);
      Graph g;
      const DdpmDraws draws = draw_ddpm_batch(take, schedule, rng);
      Var loss = ddpm_loss_var(g, policy.net(), obs, act, sty, schedule, draws, true);
      epoch_loss += g.value(loss).at(0);
      ++batches;
      g.backward(loss);
      opt.step();
    }
    loss_curve.push_back(epoch_loss / static_cast<double>(batches));

    if (epoch % config.checkpoint_every == 0 || epoch == config.epochs) {
      if (checkpoints.back().epoch != epoch) {
        checkpoints.push_back(
            EpochCheckpoint{epoch, val_loss(), snapshot_params(policy.params_const())});
      }
    }
  }

  // Best trained checkpoint by held-out loss (the init snapshot is kept for
  // inspection but not selected).
  const EpochCheckpoint* best = nullptr;
  for (const auto& ck : checkpoints) {
    if (ck.epoch == 0) continue;
    if (best == nullptr || ck.val_loss < best->val_loss) best = &ck;
  }
  if (best == nullptr) best = &checkpoints.front();
  const int best_epoch = best->epoch;
  restore_params(policy.params(), best->params);
  policy.freeze();
  return PolicyRunResult{std::move(policy), std::move(checkpoints), std::move(loss_curve),
                         best_epoch};
}

}  // namespace drivestyle::policy
