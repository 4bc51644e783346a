#include "drivestyle/baselines/baselines.hpp"
#include "drivestyle/common/hash.hpp"
#include "drivestyle/common/parallel.hpp"

#include "artifacts.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace drivestyle::baselines {

using datasets::NormStats;
using datasets::Observation;
using datasets::TrajView;
using trafficsim::IdmParams;

namespace {

constexpr double kMinGap = 0.1;  // m, floor when denormalized headway collapses

double idm_accel_from_obs(const IdmParams& params, const Observation& o, const NormStats& stats) {
  const double v = stats.denormalize_obs(0, o.ego_velocity);
  const double gap = std::max(stats.denormalize_obs(1, o.space_headway), kMinGap);
  const double lv = stats.denormalize_obs(3, o.leader_velocity);
  return trafficsim::idm_accel(params, std::max(v, 0.0), gap, v - lv);
}

/// Fixed-table IDM: one style row drawn per scenario.
class IdmFixedBaseline final : public BaselinePolicy {
 public:
  IdmFixedBaseline(std::vector<IdmStyleRow> table, NormStats stats)
      : table_(std::move(table)), stats_(std::move(stats)) {
    if (table_.empty()) throw std::invalid_argument("idm-fixed: empty style table");
  }

  BaselineKind kind() const override { return BaselineKind::kIdmFixed; }

  policy::EgoPolicyHooks make_hooks() const override {
    auto params = std::make_shared<IdmParams>(table_.front().params);
    auto sampled = std::make_shared<bool>(false);
    policy::EgoPolicyHooks hooks;
    hooks.begin = [this, params, sampled](const styles::ContextWindow&, Rng& rng) {
      *params = table_[rng.index(table_.size())].params;
      *sampled = true;
    };
    hooks.act = [this, params](const Observation& o, Rng&) {
      return stats_.normalize_accel(idm_accel_from_obs(*params, o, stats_));
    };
    return hooks;
  }

  void save(const std::string& path, const std::string& fingerprint,
            std::uint64_t seed) const override {
    numkit::CheckpointHeader header;
    header.fingerprint = fingerprint;
    header.seed = seed;
    header.meta["kind"] = "baseline";
    header.meta["baseline_kind"] = to_string(BaselineKind::kIdmFixed);
    nlohmann::json table = nlohmann::json::array();
    for (const auto& row : table_) {
      table.push_back({{"name", row.name}, {"v0", row.params.v0}, {"T", row.params.T},
                       {"a_max", row.params.a_max}, {"b", row.params.b},
                       {"delta", row.params.delta}, {"s0", row.params.s0}});
    }
    header.meta["table"] = table.dump();
    header.meta["stats"] = stats_json(stats_);
    numkit::ParamStore empty;
    save_checkpoint(path, header, empty);
  }

  static std::string stats_json(const NormStats& stats) {
    nlohmann::json j;
    for (const auto& r : stats.obs) j["obs"].push_back({r.lo, r.hi});
    j["accel"] = {stats.accel.lo, stats.accel.hi};
    return j.dump();
  }

  static NormStats stats_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    NormStats stats;
    for (std::size_t k = 0; k < stats.obs.size(); ++k) {
      stats.obs[k] = {j.at("obs")[k][0].get<double>(), j.at("obs")[k][1].get<double>()};
    }
    stats.accel = {j.at("accel")[0].get<double>(), j.at("accel")[1].get<double>()};
    return stats;
  }

  std::vector<IdmStyleRow> table_;
  NormStats stats_;
};

/// Learned IDM: per-scenario parameter draw from the fitted log-Gaussian.
class IdmLearnedBaseline final : public BaselinePolicy {
 public:
  IdmLearnedBaseline(IdmParamDistribution dist, NormStats stats)
      : dist_(std::move(dist)), stats_(std::move(stats)) {}

  BaselineKind kind() const override { return BaselineKind::kIdmLearned; }

  policy::EgoPolicyHooks make_hooks() const override {
    auto params = std::make_shared<IdmParams>();
    auto sampled = std::make_shared<bool>(false);
    policy::EgoPolicyHooks hooks;
    hooks.begin = [this, params, sampled](const styles::ContextWindow&, Rng& rng) {
      *params = dist_.sample(rng);
      *sampled = true;
    };
    hooks.act = [this, params, sampled](const Observation& o, Rng& rng) {
      if (!*sampled) {
        *params = dist_.sample(rng);
        *sampled = true;
      }
      return stats_.normalize_accel(idm_accel_from_obs(*params, o, stats_));
    };
    return hooks;
  }

  void save(const std::string& path, const std::string& fingerprint,
            std::uint64_t seed) const override {
    numkit::CheckpointHeader header;
    header.fingerprint = fingerprint;
    header.seed = seed;
    header.meta["kind"] = "baseline";
    header.meta["baseline_kind"] = to_string(BaselineKind::kIdmLearned);
    nlohmann::json j;
    for (Eigen::Index i = 0; i < dist_.mean.size(); ++i) j["mean"].push_back(dist_.mean(i));
    for (Eigen::Index r = 0; r < dist_.cov.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < dist_.cov.cols(); ++c) row.push_back(dist_.cov(r, c));
      j["cov"].push_back(row);
    }
    j["drivers_used"] = dist_.drivers_used;
    j["drivers_skipped"] = dist_.drivers_skipped;
    header.meta["distribution"] = j.dump();
    header.meta["stats"] = IdmFixedBaseline::stats_json(stats_);
    numkit::ParamStore empty;
    save_checkpoint(path, header, empty);
  }

  IdmParamDistribution dist_;
  NormStats stats_;
};

IdmParams params_from_log(const Eigen::VectorXd& log_params) {
  IdmParams p;
  p.v0 = std::exp(log_params(0));
  p.T = std::exp(log_params(1));
  p.a_max = std::exp(log_params(2));
  p.b = std::exp(log_params(3));
  p.s0 = std::exp(log_params(4));
  p.delta = 4.0;
  return p;
}

}  // namespace

trafficsim::IdmParams IdmParamDistribution::sample(Rng& rng) const {
  if (mean.size() != 5) throw std::logic_error("IdmParamDistribution: unfitted");
  if (cov.norm() == 0.0) return params_from_log(mean);  // degenerate: the single optimum
  Eigen::LLT<Eigen::MatrixXd> llt(cov + 1e-12 * Eigen::MatrixXd::Identity(5, 5));
  Eigen::VectorXd z(5);
  for (int i = 0; i < 5; ++i) z(i) = rng.normal();
  const Eigen::VectorXd draw = mean + llt.matrixL() * z;
  return params_from_log(draw);
}

double idm_prediction_mse(const TrajView& view, const NormStats& stats, const IdmParams& params) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < view.size(); ++t) {
    const double pred = idm_accel_from_obs(params, view.obs[t], stats);
    const double logged = stats.denormalize_accel(view.act[t].accel);
    total += (pred - logged) * (pred - logged);
    ++count;
  }
  if (count == 0) throw std::invalid_argument("idm_prediction_mse: empty trajectory");
  return total / static_cast<double>(count);
}

IdmParamDistribution fit_idm_learned(const datasets::Dataset& train, const IdmFitConfig& config) {
  const auto views = train.views();
  if (views.empty()) throw std::invalid_argument("fit_idm_learned: empty dataset");

  // Random-search box in raw units, sampled log-uniformly.
  constexpr double kLo[5] = {3.0, 0.3, 0.3, 0.5, 0.5};
  constexpr double kHi[5] = {45.0, 3.5, 5.0, 5.0, 5.0};

  std::vector<int> usable;
  int skipped = 0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    std::size_t leaderless = 0;
    for (const auto& o : views[i].obs) {
      if (o.space_headway >= 0.999) ++leaderless;
    }
    if (views[i].size() == 0 ||
        static_cast<double>(leaderless) / static_cast<double>(views[i].size()) >
            config.leaderless_fraction) {
      ++skipped;  // no leader to follow; nothing to fit against
    } else {
      usable.push_back(static_cast<int>(i));
    }
  }
  if (usable.empty()) throw std::runtime_error("fit_idm_learned: every driver lacks leader data");

  // Derivative-free elite search in log-space (cross-entropy style): rounds
  // of Gaussian populations refit to the elite fraction, seeded by a uniform
  // round over the full box. The budget is total objective evaluations.
  constexpr int kRounds = 10;
  Eigen::MatrixXd optima(static_cast<Eigen::Index>(usable.size()), 5);
  parallel_for(usable.size(), config.workers, [&](std::size_t u) {
    const TrajView& view = views[static_cast<std::size_t>(usable[u])];
    Rng rng(splitmix64(config.seed ^ (0x1d3full + 0x9551ull * u)));
    Eigen::VectorXd full_lo(5), full_hi(5);
    for (int k = 0; k < 5; ++k) {
      full_lo(k) = std::log(kLo[k]);
      full_hi(k) = std::log(kHi[k]);
    }
    const int pop = std::max(8, config.search_budget / kRounds);
    const int elites = std::max(2, pop / 10);

    double best_mse = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_log = 0.5 * (full_lo + full_hi);
    Eigen::VectorXd mean = best_log;
    Eigen::VectorXd stddev = 0.5 * (full_hi - full_lo);

    std::vector<std::pair<double, Eigen::VectorXd>> scored(static_cast<std::size_t>(pop));
    for (int round = 0; round < kRounds; ++round) {
      for (int i = 0; i < pop; ++i) {
        Eigen::VectorXd log_params(5);
        for (int k = 0; k < 5; ++k) {
          const double draw = (round == 0) ? rng.uniform(full_lo(k), full_hi(k))
                                           : mean(k) + stddev(k) * rng.normal();
          log_params(k) = std::clamp(draw, full_lo(k), full_hi(k));
        }
        const double mse = idm_prediction_mse(view, train.stats, params_from_log(log_params));
        scored[static_cast<std::size_t>(i)] = {mse, log_params};
        if (mse < best_mse) {
          best_mse = mse;
          best_log = log_params;
        }
      }
      std::partial_sort(scored.begin(), scored.begin() + elites, scored.end(),
                        [](const auto& a, const auto& b) { return a.first < b.first; });
      mean.setZero();
      for (int e = 0; e < elites; ++e) mean += scored[static_cast<std::size_t>(e)].second;
      mean /= static_cast<double>(elites);
      for (int k = 0; k < 5; ++k) {
        double var = 0.0;
        for (int e = 0; e < elites; ++e) {
          const double d = scored[static_cast<std::size_t>(e)].second(k) - mean(k);
          var += d * d;
        }
        stddev(k) = std::max(std::sqrt(var / elites) * 1.1, 1e-4);
      }
    }
    optima.row(static_cast<Eigen::Index>(u)) = best_log.transpose();
  });

  IdmParamDistribution dist;
  dist.drivers_used = static_cast<int>(usable.size());
  dist.drivers_skipped = skipped;
  dist.mean = optima.colwise().mean().transpose();
  if (optima.rows() > 1) {
    const Eigen::MatrixXd centered = optima.rowwise() - dist.mean.transpose();
    dist.cov = centered.transpose() * centered / static_cast<double>(optima.rows() - 1);
  } else {
    dist.cov = Eigen::MatrixXd::Zero(5, 5);
  }
  return dist;
}

std::unique_ptr<BaselinePolicy> make_idm_fixed_policy(const std::vector<IdmStyleRow>& table,
                                                      const NormStats& stats) {
  return std::make_unique<IdmFixedBaseline>(table, stats);
}

std::unique_ptr<BaselinePolicy> make_idm_learned_policy(const IdmParamDistribution& dist,
                                                        const NormStats& stats) {
  return std::make_unique<IdmLearnedBaseline>(dist, stats);
}

std::unique_ptr<BaselinePolicy> train_baseline(BaselineKind kind, const datasets::Dataset& train,
                                               const datasets::Dataset& val,
                                               const BaselineConfig& config,
                                               std::vector<double>* loss_curve) {
  switch (kind) {
    case BaselineKind::kIdmFixed:
      return make_idm_fixed_policy(default_idm_style_table(), train.stats);
    case BaselineKind::kIdmLearned: {
      IdmFitConfig fit;
      fit.seed = config.seed;
      fit.workers = default_workers();
      return make_idm_learned_policy(fit_idm_learned(train, fit), train.stats);
    }
    default:
      return detail::train_neural_baseline(kind, train, val, config, loss_curve);
  }
}

namespace detail {

std::unique_ptr<BaselinePolicy> load_idm_baseline(const numkit::Checkpoint& ckpt) {
  const auto& meta = ckpt.header.meta;
  const BaselineKind kind = baseline_kind_from_string(meta.at("baseline_kind"));
  const NormStats stats = IdmFixedBaseline::stats_from_json(meta.at("stats"));
  if (kind == BaselineKind::kIdmFixed) {
    std::vector<IdmStyleRow> table;
    for (const auto& row : nlohmann::json::parse(meta.at("table"))) {
      IdmStyleRow r;
      r.name = row.at("name").get<std::string>();
      r.params.v0 = row.at("v0").get<double>();
      r.params.T = row.at("T").get<double>();
      r.params.a_max = row.at("a_max").get<double>();
      r.params.b = row.at("b").get<double>();
      r.params.delta = row.at("delta").get<double>();
      r.params.s0 = row.at("s0").get<double>();
      table.push_back(r);
    }
    return std::make_unique<IdmFixedBaseline>(std::move(table), stats);
  }
  const nlohmann::json j = nlohmann::json::parse(meta.at("distribution"));
  IdmParamDistribution dist;
  dist.mean.resize(5);
  for (int i = 0; i < 5; ++i) dist.mean(i) = j.at("mean")[static_cast<std::size_t>(i)].get<double>();
  dist.cov.resize(5, 5);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) {
      dist.cov(r, c) = j.at("cov")[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    }
  }
  dist.drivers_used = j.at("drivers_used").get<int>();
  dist.drivers_skipped = j.at("drivers_skipped").get<int>();
  return std::make_unique<IdmLearnedBaseline>(std::move(dist), stats);
}

}  // namespace detail

std::unique_ptr<BaselinePolicy> load_baseline(const std::string& path) {
  const numkit::Checkpoint ckpt = numkit::read_checkpoint(path);
  if (ckpt.header.meta.at("kind") != "baseline") {
    throw std::runtime_error("load_baseline: '" + path + "' is not a baseline checkpoint");
  }
  const BaselineKind kind = baseline_kind_from_string(ckpt.header.meta.at("baseline_kind"));
  if (kind == BaselineKind::kIdmFixed || kind == BaselineKind::kIdmLearned) {
    return detail::load_idm_baseline(ckpt);
  }
  return detail::load_neural_baseline(ckpt);
}

}  // namespace drivestyle::baselines
