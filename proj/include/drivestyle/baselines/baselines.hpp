#pragma once

#include "drivestyle/policy/rollout.hpp"
#include "drivestyle/policy/train.hpp"

#include <memory>
#include <string>
#include <vector>

namespace drivestyle::baselines {

enum class BaselineKind {
  kDiffusionBC,
  kUncondDiffusionBC,
  kMse,
  kDiscretized,
  kGaussian,
  kKMeans,
  kKMeansResidual,
  kEbmDerivFree,
  kIdmFixed,
  kIdmLearned,
};

std::string to_string(BaselineKind kind);
BaselineKind baseline_kind_from_string(const std::string& name);
std::vector<BaselineKind> all_baseline_kinds();

struct BaselineConfig {
  int epochs = 30;
  int batch = 32;
  double lr = 1e-4;
  int L_p = 5;
  std::uint64_t seed = 1;

  // Shared MLP-sieve trunk dims for every learning-based head.
  int hidden = 128;
  int embed = 64;
  int n_hidden = 3;

  int bins = 20;      // Discretized
  int kmeans_k = 20;  // K-Means variants

  // Diffusion baselines.
  int T = 50;
  double beta_min = 1e-4;
  double beta_max = 0.02;
  int cond_dim = 64;  // conditioning-network embedding width
  policy::SamplerKind sampler = policy::SamplerKind::ddpm();

  // Derivative-free EBM sampler/training budget.
  int ebm_negatives = 64;
  int ebm_candidates = 256;
  int ebm_iters = 3;
  double ebm_init_noise = 0.33;
  double ebm_noise_shrink = 0.5;
};

/// Trained baseline behind the uniform rollout interface. make_hooks()
/// returns fresh per-scenario hooks so per-scenario draws (IDM parameters,
/// conditioning embeddings) happen exactly once per scenario.
class BaselinePolicy {
 public:
  virtual ~BaselinePolicy() = default;
  virtual BaselineKind kind() const = 0;
  virtual policy::EgoPolicyHooks make_hooks() const = 0;
  virtual void save(const std::string& path, const std::string& fingerprint,
                    std::uint64_t seed) const = 0;
};

/// One-call action interface: runs begin() on the context, then act().
datasets::Action act(const BaselinePolicy& artifact, const datasets::Observation& o,
                     const styles::ContextWindow& warmup, Rng& rng);

std::unique_ptr<BaselinePolicy> train_baseline(BaselineKind kind, const datasets::Dataset& train,
                                               const datasets::Dataset& val,
                                               const BaselineConfig& config,
                                               std::vector<double>* loss_curve = nullptr);
std::unique_ptr<BaselinePolicy> load_baseline(const std::string& path);

// ---- parametric IDM baselines ----

struct IdmStyleRow {
  std::string name;
  trafficsim::IdmParams params;
};

/// Bundled aggressive/normal/timid rows; overridable from a JSON data file.
std::vector<IdmStyleRow> default_idm_style_table();
std::vector<IdmStyleRow> load_idm_style_table(const std::string& path);
void save_idm_style_table(const std::string& path, const std::vector<IdmStyleRow>& table);

/// Multivariate Gaussian over (v0, T, a_max, b, s0) in log-space.
struct IdmParamDistribution {
  Eigen::VectorXd mean;    // 5, log-space
  Eigen::MatrixXd cov;     // 5x5, symmetric PSD
  int drivers_used = 0;
  int drivers_skipped = 0;

  trafficsim::IdmParams sample(Rng& rng) const;
};

struct IdmFitConfig {
  int search_budget = 2000;  // random-search evaluations per driver
  double leaderless_fraction = 0.95;  // skip drivers mostly at max headway
  std::uint64_t seed = 1;
  int workers = 1;
};

/// Per-driver random-search IDM fit against logged accelerations, then a
/// Gaussian over the per-driver optima in log-space. Drivers without leader
/// data throughout are skipped (counted).
IdmParamDistribution fit_idm_learned(const datasets::Dataset& train, const IdmFitConfig& config);

/// Residual-fit quality for one driver's trajectory under given params
/// (mean squared error between IDM predictions and logged accelerations,
/// raw m/s^2 units). Exposed for tests.
double idm_prediction_mse(const datasets::TrajView& view, const datasets::NormStats& stats,
                          const trafficsim::IdmParams& params);

std::unique_ptr<BaselinePolicy> make_idm_fixed_policy(const std::vector<IdmStyleRow>& table,
                                                      const datasets::NormStats& stats);
std::unique_ptr<BaselinePolicy> make_idm_learned_policy(const IdmParamDistribution& dist,
                                                        const datasets::NormStats& stats);

/// 1-D Lloyd k-means used by the K-Means heads; exposed for tests.
std::vector<double> kmeans_centers_1d(const std::vector<double>& values, int k,
                                      std::uint64_t seed);

/// Discretized-head bin arithmetic over the [0,1] action range.
int discretized_bin(double action, int bins);
double discretized_center(int bin, int bins);

/// Iterated derivative-free sampler over [0,1]: uniform candidates, softmax
/// resampling on negated energies, shrinking Gaussian proposals, lowest
/// final energy wins. `energies` maps candidate actions to their energies.
double derivative_free_minimize(
    const std::function<std::vector<double>(const std::vector<double>&)>& energies,
    int n_candidates, int iters, double init_noise, double noise_shrink, Rng& rng);

}  // namespace drivestyle::baselines
