#include "drivestyle/datasets/synthetic.hpp"

#include "drivestyle/common/hash.hpp"
#include "drivestyle/common/rng.hpp"
#include "drivestyle/trafficsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace drivestyle::datasets {

using trafficsim::IdmParams;
using trafficsim::Scenario;
using trafficsim::Vehicle;

std::vector<StyleCluster> SyntheticSpec::default_clusters(int n) {
  if (n < 1) throw std::invalid_argument("default_clusters: need n >= 1");
  IdmParams timid;
  timid.v0 = 14.0;
  timid.T = 2.2;
  timid.a_max = 0.8;
  timid.b = 1.5;
  timid.s0 = 3.0;
  IdmParams aggressive;
  aggressive.v0 = 32.0;
  aggressive.T = 0.7;
  aggressive.a_max = 3.2;
  aggressive.b = 3.2;
  aggressive.s0 = 1.0;

  auto lerp = [](double a, double b, double f) { return a + (b - a) * f; };
  std::vector<StyleCluster> out;
  for (int i = 0; i < n; ++i) {
    const double f = (n == 1) ? 0.5 : static_cast<double>(i) / static_cast<double>(n - 1);
    StyleCluster c;
    c.mean.v0 = lerp(timid.v0, aggressive.v0, f);
    c.mean.T = lerp(timid.T, aggressive.T, f);
    c.mean.a_max = lerp(timid.a_max, aggressive.a_max, f);
    c.mean.b = lerp(timid.b, aggressive.b, f);
    c.mean.s0 = lerp(timid.s0, aggressive.s0, f);
    c.mean.delta = 4.0;
    out.push_back(c);
  }
  return out;
}

namespace {

std::vector<StyleCluster> resolved_clusters(const SyntheticSpec& spec) {
  if (spec.clusters.empty()) return SyntheticSpec::default_clusters(spec.n_styles);
  if (static_cast<int>(spec.clusters.size()) != spec.n_styles) {
    throw std::invalid_argument("SyntheticSpec: clusters.size() != n_styles");
  }
  return spec.clusters;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace

void SyntheticSpec::validate() const {
  if (n_styles < 1) throw std::invalid_argument("SyntheticSpec: n_styles must be >= 1");
  if (n_drivers < 1) throw std::invalid_argument("SyntheticSpec: n_drivers must be >= 1");
  if (traj_len < 2) throw std::invalid_argument("SyntheticSpec: traj_len must be >= 2");
  if (!(leader_speed_min > 0 && leader_speed_max >= leader_speed_min)) {
    throw std::invalid_argument("SyntheticSpec: bad leader speed band");
  }
  if (!(action_noise >= 0)) throw std::invalid_argument("SyntheticSpec: negative action noise");
  const auto clusters_r = resolved_clusters(*this);
  for (const auto& c : clusters_r) c.mean.validate();
  // Pairwise distinguishability: v0, T or a_max separate by >= 10%.
  for (std::size_t i = 0; i < clusters_r.size(); ++i) {
    for (std::size_t j = i + 1; j < clusters_r.size(); ++j) {
      const auto& a = clusters_r[i].mean;
      const auto& b = clusters_r[j].mean;
      if (rel_diff(a.v0, b.v0) < 0.1 && rel_diff(a.T, b.T) < 0.1 &&
          rel_diff(a.a_max, b.a_max) < 0.1) {
        throw std::invalid_argument("SyntheticSpec: style clusters " + std::to_string(i) + " and " +
                                    std::to_string(j) + " are not distinguishable");
      }
    }
  }
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const auto clusters = resolved_clusters(spec);

  struct RawSeries {
    long driver_id;
    int style;
    std::vector<std::array<double, Observation::kDim>> obs;  // raw units
    std::vector<double> accel;                               // m/s^2, post-clamp
  };
  std::vector<RawSeries> all;
  all.reserve(static_cast<std::size_t>(spec.n_drivers));

  const int segment_steps =
      std::max(1, static_cast<int>(std::round(spec.leader_segment_duration / kTimestep)));

  for (int d = 0; d < spec.n_drivers; ++d) {
    Rng rng(splitmix64(spec.seed ^ (0x9e1b7ull + static_cast<std::uint64_t>(d) * 0x51ull)));
    const int style = d % spec.n_styles;
    IdmParams p = clusters[static_cast<std::size_t>(style)].mean;
    const double spread = clusters[static_cast<std::size_t>(style)].rel_spread;
    p.v0 *= std::exp(spread * rng.normal());
    p.T *= std::exp(spread * rng.normal());
    p.a_max *= std::exp(spread * rng.normal());
    p.b *= std::exp(spread * rng.normal());
    p.s0 *= std::exp(spread * rng.normal());

    const double v_start = std::max(0.0, spec.start_speed_frac * p.v0);
    const double gap0 =
        spec.initial_gap_factor *
        trafficsim::idm_equilibrium_gap(p, std::min(v_start, 0.95 * p.v0));

    Scenario s;
    Vehicle leader;
    leader.length = 5.0;
    leader.position = gap0 + leader.length;
    leader.velocity = rng.uniform(spec.leader_speed_min, spec.leader_speed_max);
    leader.idm = IdmParams{};
    leader.idm->v0 = leader.velocity > 0 ? leader.velocity : spec.leader_speed_min;
    leader.idm->a_max = 1.5;
    leader.idm->b = 2.0;
    Vehicle ego;
    ego.position = 0.0;
    ego.velocity = v_start;
    s.vehicles = {leader, ego};
    s.ego_index = 1;
    s.validate();

    RawSeries series;
    series.driver_id = d;
    series.style = style;
    double leader_prev_v = s.vehicles[0].velocity;
    for (int t = 0; t < spec.traj_len && !s.crashed; ++t) {
      if (t % segment_steps == 0) {
        s.vehicles[0].idm->v0 = rng.uniform(spec.leader_speed_min, spec.leader_speed_max);
      }
      const double gap = s.gap_ahead(1);
      const double v = s.ego().velocity;
      const double lv = s.vehicles[0].velocity;
      std::array<double, Observation::kDim> o{};
      o[0] = v;
      o[1] = gap;
      o[2] = gap / std::max(v, 0.1);
      o[3] = lv;
      o[4] = leader_prev_v;

      double a = trafficsim::idm_accel(p, v, gap, v - lv);
      if (spec.action_noise > 0) a += spec.action_noise * rng.normal();
      a = std::clamp(a, -kGravity, kGravity);

      series.obs.push_back(o);
      series.accel.push_back(a);
      leader_prev_v = lv;
      trafficsim::step(s, a);
    }
    all.push_back(std::move(series));
  }

  // Generator-scope min-max stats over every produced sample.
  NormStats stats;
  for (auto& r : stats.obs) {
    r.lo = std::numeric_limits<double>::infinity();
    r.hi = -std::numeric_limits<double>::infinity();
  }
  for (const auto& series : all) {
    for (const auto& o : series.obs) {
      for (int k = 0; k < Observation::kDim; ++k) {
        auto& r = stats.obs[static_cast<std::size_t>(k)];
        r.lo = std::min(r.lo, o[static_cast<std::size_t>(k)]);
        r.hi = std::max(r.hi, o[static_cast<std::size_t>(k)]);
      }
    }
  }
  for (auto& r : stats.obs) {
    if (!(r.hi > r.lo)) r.hi = r.lo + std::max(1e-9, std::abs(r.lo) * 1e-9);
  }
  stats.accel = {-kGravity, kGravity};
  stats.validate();

  Dataset ds;
  ds.stats = stats;
  ds.meta["source"] = "synthetic";
  ds.meta["n_styles"] = std::to_string(spec.n_styles);
  ds.meta["n_drivers"] = std::to_string(spec.n_drivers);
  ds.meta["seed"] = std::to_string(spec.seed);
  for (const auto& series : all) {
    Trajectory t;
    t.driver_id = series.driver_id;
    t.set_hidden_style_label(series.style);
    for (std::size_t i = 0; i < series.obs.size(); ++i) {
      Observation o;
      o.ego_velocity = stats.normalize_obs(0, series.obs[i][0]);
      o.space_headway = stats.normalize_obs(1, series.obs[i][1]);
      o.time_headway = stats.normalize_obs(2, series.obs[i][2]);
      o.leader_velocity = stats.normalize_obs(3, series.obs[i][3]);
      o.leader_prev_velocity = stats.normalize_obs(4, series.obs[i][4]);
      t.obs.push_back(o);
      t.act.push_back(Action{stats.normalize_accel(series.accel[i])});
    }
    ds.trajectories.push_back(std::move(t));
  }
  return ds;
}

std::pair<Dataset, Dataset> split_by_driver(const Dataset& ds, double train_fraction,
                                            std::uint64_t seed) {
  const std::size_t n = ds.trajectories.size();
  if (n < 2) throw std::invalid_argument("split_by_driver: need >= 2 trajectories");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.index(i + 1)]);
  }
  std::size_t n_train = static_cast<std::size_t>(std::round(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  Dataset train, test;
  train.stats = test.stats = ds.stats;
  train.meta = test.meta = ds.meta;
  train.meta["split"] = "train";
  test.meta["split"] = "test";
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_train ? train : test).trajectories.push_back(ds.trajectories[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace drivestyle::datasets
