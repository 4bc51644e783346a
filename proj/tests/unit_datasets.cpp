#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "drivestyle/datasets/csv.hpp"
#include "drivestyle/datasets/preprocess.hpp"
#include "drivestyle/datasets/sampling.hpp"
#include "drivestyle/datasets/savgol.hpp"
#include "drivestyle/datasets/serialize.hpp"
#include "drivestyle/datasets/synthetic.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace drivestyle;
using namespace drivestyle::datasets;

namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / name; }

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// Independent sliding least-squares oracle for Savitzky-Golay (normal
/// equations, solved per point, including the edge extrapolation rule).
std::vector<double> savgol_oracle(const std::vector<double>& y, int window, int polyorder) {
  const int n = static_cast<int>(y.size());
  const int half = window / 2;
  auto fit_eval = [&](int start, double t) {
    Eigen::MatrixXd A(window, polyorder + 1);
    Eigen::VectorXd b(window);
    for (int r = 0; r < window; ++r) {
      for (int c = 0; c <= polyorder; ++c) A(r, c) = std::pow(static_cast<double>(r), c);
      b(r) = y[static_cast<std::size_t>(start + r)];
    }
    Eigen::VectorXd coef = (A.transpose() * A).ldlt().solve(A.transpose() * b);
    double acc = 0;
    for (int c = 0; c <= polyorder; ++c) acc += coef(c) * std::pow(t, c);
    return acc;
  };
  std::vector<double> out(y.size());
  for (int i = 0; i < n; ++i) {
    if (i < half) {
      out[static_cast<std::size_t>(i)] = fit_eval(0, i);
    } else if (i >= n - half) {
      out[static_cast<std::size_t>(i)] = fit_eval(n - window, i - (n - window));
    } else {
      out[static_cast<std::size_t>(i)] = fit_eval(i - half, half);
    }
  }
  return out;
}

std::vector<RawTrajectory> make_two_vehicle_following(int steps) {
  // Vehicle 2 follows vehicle 1 at 30 m headway, both at 10 m/s.
  RawTrajectory lead, follow;
  lead.vehicle_id = 1;
  follow.vehicle_id = 2;
  for (int t = 0; t < steps; ++t) {
    RawRecord a;
    a.vehicle_id = 1;
    a.frame_id = t;
    a.position = 40.0 + 1.0 * t;
    a.velocity = 10.0;
    a.acceleration = 0.0;
    a.lane_id = 1;
    a.space_headway = 0.0;
    a.preceding_id = 0;  // no leader
    a.vehicle_length = 5.0;
    lead.records.push_back(a);

    RawRecord b = a;
    b.vehicle_id = 2;
    b.position = 10.0 + 1.0 * t;
    b.space_headway = 30.0;
    b.preceding_id = 1;
    follow.records.push_back(b);
  }
  return {lead, follow};
}

/// 1-D Lloyd k-means with quantile init; the clustering oracle for the
/// style-separation check.
std::vector<int> kmeans_1d(const std::vector<double>& xs, int k) {
  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> centers(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    centers[static_cast<std::size_t>(c)] =
        sorted[sorted.size() * (2 * static_cast<std::size_t>(c) + 1) / (2 * static_cast<std::size_t>(k))];
  }
  std::vector<int> assign(xs.size(), 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      int best = 0;
      double bd = std::abs(xs[i] - centers[0]);
      for (int c = 1; c < k; ++c) {
        const double d = std::abs(xs[i] - centers[static_cast<std::size_t>(c)]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    for (int c = 0; c < k; ++c) {
      double sum = 0;
      int count = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (assign[i] == c) {
          sum += xs[i];
          ++count;
        }
      }
      if (count > 0) centers[static_cast<std::size_t>(c)] = sum / count;
    }
    if (!changed) break;
  }
  return assign;
}

}  // namespace

TEST_CASE("csv round trip reproduces records exactly") {
  auto trajectories = make_two_vehicle_following(12);
  trajectories[0].records[3].velocity = 10.123456789012345;  // many digits
  const auto path = temp_file("drivestyle_csv_roundtrip.csv");
  write_raw_csv(path.string(), trajectories);
  auto back = ingest_csv(path.string());
  REQUIRE(back.size() == 2);
  CHECK(back[0].records[3].velocity == trajectories[0].records[3].velocity);
  CHECK(back[1].records[5].space_headway == 30.0);
  CHECK(back[0].records[0].preceding_id == 0);
  fs::remove(path);
}

TEST_CASE("csv parse error names the line") {
  const auto path = temp_file("drivestyle_csv_bad.csv");
  {
    std::ofstream os(path);
    os << "vehicle_id,frame_id,position,velocity,acceleration,lane_id,space_headway,"
          "preceding_id,vehicle_length\n";
    os << "1,0,0.0,5.0,0.0,1,20.0,0,5.0\n";
    os << "1,1,0.5,oops,0.0,1,20.0,0,5.0\n";
  }
  try {
    ingest_csv(path.string());
    FAIL("expected parse error");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("velocity") != std::string::npos);
  }
  fs::remove(path);
}

TEST_CASE("csv missing column errors") {
  const auto path = temp_file("drivestyle_csv_missing.csv");
  {
    std::ofstream os(path);
    os << "vehicle_id,frame_id,position\n1,0,0.0\n";
  }
  CHECK_THROWS(ingest_csv(path.string()));
  fs::remove(path);
}

TEST_CASE("savgol reproduces constants and linear ramps") {
  std::vector<double> constant(20, 3.5);
  auto c = savgol(constant, 7, 2);
  for (double v : c) CHECK(v == doctest::Approx(3.5).epsilon(1e-12));

  std::vector<double> ramp;
  for (int i = 0; i < 20; ++i) ramp.push_back(0.5 * i - 2.0);
  auto r = savgol(ramp, 7, 2);
  for (std::size_t i = 0; i < ramp.size(); ++i) CHECK(r[i] == doctest::Approx(ramp[i]).epsilon(1e-10));
}

TEST_CASE("savgol matches the sliding least-squares oracle within 1e-10") {
  Rng rng(77);
  std::vector<double> y;
  for (int i = 0; i < 60; ++i) y.push_back(rng.normal(0.0, 2.0));
  for (auto [w, p] : {std::pair{5, 2}, std::pair{7, 2}, std::pair{9, 3}}) {
    auto ours = savgol(y, w, p);
    auto oracle = savgol_oracle(y, w, p);
    for (std::size_t i = 0; i < y.size(); ++i) {
      CHECK(std::abs(ours[i] - oracle[i]) < 1e-10);
    }
  }
}

TEST_CASE("savgol validates preconditions") {
  std::vector<double> y(10, 1.0);
  CHECK_THROWS(savgol(y, 6, 2));   // even window
  CHECK_THROWS(savgol(y, 7, 7));   // polyorder >= window
  CHECK_THROWS(savgol(y, 11, 2));  // series shorter than window
}

TEST_CASE("preprocess derives time headway and fills leaderless headway") {
  auto raw = make_two_vehicle_following(40);
  PreprocessConfig config;
  PreprocessResult res = preprocess(raw, config);

  // Follower: headway 30 m at 10 m/s -> 3.0 s before normalization.
  bool found_follower = false;
  for (const Trajectory& t : res.train.trajectories) {
    if (t.driver_id != 2) continue;
    found_follower = true;
    const double th = res.stats.denormalize_obs(2, t.obs[5].time_headway);
    CHECK(th == doctest::Approx(3.0).epsilon(1e-9));
    const double sh = res.stats.denormalize_obs(1, t.obs[5].space_headway);
    CHECK(sh == doctest::Approx(30.0).epsilon(1e-9));
  }
  CHECK(found_follower);

  // Leaderless vehicle gets the dataset maximum headway (30 m here).
  CHECK(res.report.max_space_headway == doctest::Approx(30.0));
  for (const Trajectory& t : res.train.trajectories) {
    if (t.driver_id != 1) continue;
    const double sh = res.stats.denormalize_obs(1, t.obs[5].space_headway);
    CHECK(sh == doctest::Approx(30.0).epsilon(1e-9));
  }
}

TEST_CASE("preprocess caps acceleration at gravity before smoothing") {
  auto raw = make_two_vehicle_following(40);
  for (auto& r : raw[1].records) r.acceleration = 15.0;  // constant, so smoothing keeps it
  PreprocessConfig config;
  PreprocessResult res = preprocess(raw, config);
  for (const Trajectory& t : res.train.trajectories) {
    if (t.driver_id != 2) continue;
    const double a = res.stats.denormalize_accel(t.act[10].accel);
    CHECK(a == doctest::Approx(9.81).epsilon(1e-9));
  }
}

TEST_CASE("outlier spikes of <= 2 frames are interpolated away") {
  PreprocessConfig config;
  std::vector<double> accel(30, 1.0);
  accel[10] = 9.5;             // single-frame spike, brackets 1.0 vs 1.0
  accel[20] = -9.3;            // two-frame spike
  accel[21] = -9.4;
  const std::size_t replaced = replace_accel_outliers(accel, config);
  CHECK(replaced == 3);
  CHECK(accel[10] == doctest::Approx(1.0));
  CHECK(accel[20] == doctest::Approx(1.0));
  CHECK(accel[21] == doctest::Approx(1.0));

  // A long plateau above threshold is not an outlier.
  std::vector<double> plateau(30, 1.0);
  for (int i = 10; i < 16; ++i) plateau[static_cast<std::size_t>(i)] = 9.5;
  CHECK(replace_accel_outliers(plateau, config) == 0);
  CHECK(plateau[12] == 9.5);

  // Mismatched brackets (not within 20%) leave the spike alone.
  std::vector<double> jump(30, 1.0);
  for (int i = 15; i < 30; ++i) jump[static_cast<std::size_t>(i)] = 5.0;
  jump[14] = 9.5;
  CHECK(replace_accel_outliers(jump, config) == 0);
}

TEST_CASE("preprocess drops trajectories shorter than the smoothing window") {
  auto raw = make_two_vehicle_following(40);
  RawTrajectory stub;
  stub.vehicle_id = 3;
  for (int t = 0; t < 4; ++t) {
    RawRecord r;
    r.vehicle_id = 3;
    r.frame_id = t;
    r.velocity = 5.0;
    r.preceding_id = 0;
    r.vehicle_length = 5.0;
    stub.records.push_back(r);
  }
  raw.push_back(stub);
  PreprocessResult res = preprocess(raw, PreprocessConfig{});
  CHECK(res.report.dropped_short == 1);
}

TEST_CASE("test split uses train-split stats only") {
  auto raw = make_two_vehicle_following(50);
  // Test-era velocities get larger so leakage would change the stats. The
  // jump sits a full smoothing window past the split boundary (frame 40)
  // because smoothing runs before the split and would otherwise bleed back.
  for (auto& traj : raw) {
    for (auto& r : traj.records) {
      if (r.frame_id >= 47) r.velocity = 25.0;
    }
  }
  PreprocessResult res = preprocess(raw, PreprocessConfig{});
  CHECK(res.train.stats == res.stats);
  CHECK(res.test.stats == res.stats);
  // Velocity range must come from train frames only (10 m/s constant, then
  // widened epsilon) and not stretch to 25.
  CHECK(res.stats.obs[0].hi < 11.0);
}

TEST_CASE("normalization round trip within 1e-12 for in-range values") {
  NormStats stats;
  stats.obs[0] = {0.0, 31.7};
  stats.obs[1] = {-2.0, 180.25};
  stats.obs[2] = {0.05, 42.0};
  for (int k = 0; k < 3; ++k) {
    for (double x : {0.0, 0.125, 0.25, 0.5, 0.701, 1.0}) {
      const double raw = stats.denormalize_obs(k, x);
      CHECK(stats.normalize_obs(k, raw) == doctest::Approx(x).epsilon(1e-12));
    }
  }
  for (double a : {-9.0, -1.5, 0.0, 3.25, 9.81}) {
    CHECK(stats.denormalize_accel(stats.normalize_accel(a)) == doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("observation components stay in [0,1] even out of range") {
  NormStats stats;
  stats.obs[0] = {0.0, 10.0};
  CHECK(stats.normalize_obs(0, -5.0) == 0.0);
  CHECK(stats.normalize_obs(0, 25.0) == 1.0);
  CHECK(stats.normalize_accel(300.0) == 1.0);
}

TEST_CASE("synthetic: single style, zero noise gives identical trajectories") {
  SyntheticSpec spec;
  spec.n_styles = 1;
  spec.clusters = {StyleCluster{trafficsim::IdmParams{}, 0.0}};
  spec.n_drivers = 4;
  spec.traj_len = 50;
  spec.action_noise = 0.0;
  spec.leader_speed_min = spec.leader_speed_max = 10.0;
  spec.seed = 5;
  Dataset ds = generate_synthetic(spec);
  REQUIRE(ds.trajectories.size() == 4);
  const Trajectory& a = ds.trajectories[0];
  for (std::size_t d = 1; d < 4; ++d) {
    const Trajectory& b = ds.trajectories[d];
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.obs[i].ego_velocity == b.obs[i].ego_velocity);
      CHECK(a.act[i].accel == b.act[i].accel);
    }
  }
}

TEST_CASE("synthetic: fixed seed gives a byte-identical dataset") {
  SyntheticSpec spec;
  spec.n_drivers = 6;
  spec.traj_len = 40;
  spec.seed = 11;
  Dataset a = generate_synthetic(spec);
  Dataset b = generate_synthetic(spec);
  const auto pa = temp_file("drivestyle_synth_a.jsonl");
  const auto sa = temp_file("drivestyle_synth_a.stats.json");
  const auto pb = temp_file("drivestyle_synth_b.jsonl");
  const auto sb = temp_file("drivestyle_synth_b.stats.json");
  save_dataset(a, pa.string(), sa.string());
  save_dataset(b, pb.string(), sb.string());
  CHECK(slurp(pa) == slurp(pb));
  CHECK(slurp(sa) == slurp(sb));
  for (const auto& p : {pa, sa, pb, sb}) fs::remove(p);
}

TEST_CASE("synthetic: k-means on per-trajectory mean action recovers 4 styles") {
  SyntheticSpec spec;
  spec.n_styles = 4;
  spec.n_drivers = 40;
  spec.traj_len = 150;
  spec.action_noise = 0.05;
  spec.start_speed_frac = 0.05;
  spec.initial_gap_factor = 60.0;  // free-flow heavy episodes
  spec.leader_speed_min = 20.0;
  spec.leader_speed_max = 25.0;
  spec.seed = 23;
  Dataset ds = generate_synthetic(spec);

  std::vector<double> mean_action;
  std::vector<int> labels;
  for (const Trajectory& t : ds.trajectories) {
    double sum = 0;
    for (const Action& a : t.act) sum += a.accel;
    mean_action.push_back(sum / static_cast<double>(t.act.size()));
    labels.push_back(*t.hidden_style_label_for_eval());
  }
  const std::vector<int> assign = kmeans_1d(mean_action, 4);
  // Majority-vote purity.
  int correct = 0;
  for (int c = 0; c < 4; ++c) {
    std::array<int, 4> votes{};
    for (std::size_t i = 0; i < assign.size(); ++i) {
      if (assign[i] == c) votes[static_cast<std::size_t>(labels[i])]++;
    }
    correct += *std::max_element(votes.begin(), votes.end());
  }
  const double purity = static_cast<double>(correct) / static_cast<double>(assign.size());
  CHECK(purity > 0.9);
}

TEST_CASE("synthetic spec validation") {
  SyntheticSpec spec;
  spec.n_drivers = 0;
  CHECK_THROWS(spec.validate());

  SyntheticSpec close;
  close.n_styles = 2;
  StyleCluster a, b;
  a.mean.v0 = 20.0;
  a.mean.T = 1.5;
  b.mean.v0 = 20.5;  // indistinguishable from a
  b.mean.T = 1.52;
  close.clusters = {a, b};
  CHECK_THROWS(close.validate());
}

TEST_CASE("subtrajectory pair: exact tiling at length 2L") {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    SubtrajPair p = sample_subtrajectory_pair(10, 5, rng);
    CHECK(p.length == 5);
    const auto lo = std::min(p.anchor_start, p.positive_start);
    const auto hi = std::max(p.anchor_start, p.positive_start);
    CHECK(lo == 0);
    CHECK(hi == 5);
  }
}

TEST_CASE("subtrajectory pair: too-short trajectory errors") {
  Rng rng(3);
  CHECK_THROWS(sample_subtrajectory_pair(9, 5, rng));
}

TEST_CASE("subtrajectory pairs never overlap and cover all placements") {
  Rng rng(9);
  const std::size_t L = 5, n = 4 * L;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (int rep = 0; rep < 10000; ++rep) {
    SubtrajPair p = sample_subtrajectory_pair(n, L, rng);
    const auto a = p.anchor_start, b = p.positive_start;
    CHECK((a + L <= b || b + L <= a));  // disjoint index ranges
    CHECK(a + L <= n);
    CHECK(b + L <= n);
    seen.insert({a, b});
  }
  // Enumerate every valid ordered placement and require full coverage.
  std::set<std::pair<std::size_t, std::size_t>> valid;
  for (std::size_t a = 0; a + L <= n; ++a) {
    for (std::size_t b = 0; b + L <= n; ++b) {
      if (a + L <= b || b + L <= a) valid.insert({a, b});
    }
  }
  CHECK(seen == valid);
}

TEST_CASE("dataset JSONL round trip") {
  SyntheticSpec spec;
  spec.n_drivers = 5;
  spec.traj_len = 30;
  spec.seed = 31;
  Dataset ds = generate_synthetic(spec);
  const auto pj = temp_file("drivestyle_ds_roundtrip.jsonl");
  const auto ps = temp_file("drivestyle_ds_roundtrip.stats.json");
  save_dataset(ds, pj.string(), ps.string());
  Dataset back = load_dataset(pj.string(), ps.string());
  REQUIRE(back.trajectories.size() == ds.trajectories.size());
  CHECK(back.stats == ds.stats);
  CHECK(back.meta.at("n_styles") == "4");
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    const auto& a = ds.trajectories[i];
    const auto& b = back.trajectories[i];
    REQUIRE(a.size() == b.size());
    CHECK(a.hidden_style_label_for_eval() == b.hidden_style_label_for_eval());
    for (std::size_t t = 0; t < a.size(); ++t) {
      CHECK(a.obs[t].time_headway == b.obs[t].time_headway);  // exact doubles
      CHECK(a.act[t].accel == b.act[t].accel);
    }
  }
  fs::remove(pj);
  fs::remove(ps);
}

TEST_CASE("driver split is deterministic and disjoint") {
  SyntheticSpec spec;
  spec.n_drivers = 10;
  spec.traj_len = 20;
  Dataset ds = generate_synthetic(spec);
  auto [train1, test1] = split_by_driver(ds, 0.8, 99);
  auto [train2, test2] = split_by_driver(ds, 0.8, 99);
  CHECK(train1.trajectories.size() == 8);
  CHECK(test1.trajectories.size() == 2);
  CHECK(train1.trajectories[0].driver_id == train2.trajectories[0].driver_id);
  std::set<long> train_ids, test_ids;
  for (const auto& t : train1.trajectories) train_ids.insert(t.driver_id);
  for (const auto& t : test1.trajectories) test_ids.insert(t.driver_id);
  for (long id : test_ids) CHECK(train_ids.count(id) == 0);
}

// hidden_style_label is unreachable through the accessors training code uses.
template <typename T>
concept ExposesHiddenLabel = requires(const T& t) { t.hidden_style_label_for_eval(); };
static_assert(!ExposesHiddenLabel<TrajView>);
static_assert(!ExposesHiddenLabel<Observation>);
static_assert(!ExposesHiddenLabel<Action>);
static_assert(ExposesHiddenLabel<Trajectory>);  // eval-only accessor lives here

TEST_CASE("training view exposes only observations and actions") {
  SyntheticSpec spec;
  spec.n_drivers = 2;
  spec.traj_len = 20;
  Dataset ds = generate_synthetic(spec);
  TrajView v = ds.trajectories[0].view();
  CHECK(v.size() == ds.trajectories[0].size());
  CHECK(v.obs.size() == v.act.size());
}
