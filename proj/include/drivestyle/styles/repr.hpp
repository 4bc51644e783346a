#pragma once

#include "drivestyle/datasets/types.hpp"
#include "drivestyle/numkit/checkpoint.hpp"
#include "drivestyle/numkit/layers.hpp"
#include "drivestyle/styles/lfq.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace drivestyle::styles {

using StyleVector = Eigen::VectorXd;

struct ContrastiveConfig {
  int L_c = 5;            // sub-trajectory length
  int K = 256;            // codebook size, power of two
  int channels = 16;      // conv channels
  int style_dim = 64;     // decoded style vector dimension
  double tau = 0.1;       // InfoNCE temperature
  double lambda_e = 0.1;  // entropy penalty weight
  double ema_decay = 0.99;
  int passes = 500;
  int batch = 128;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  bool use_triplet = false;  // ablation: triplet loss instead of InfoNCE
  double triplet_margin = 1.0;

  int code_bits() const;
  void validate() const;
};

/// Observation-action channel layout shared by the encoder and the prior:
/// rows 0..4 are the observation components, row 5 the action. For encoder
/// windows all L actions are present; prior windows zero the final slot
/// (only L_p - 1 actions are observed).
constexpr int kWindowChannels = datasets::Observation::kDim + 1;

numkit::Tensor make_window_batch(const std::vector<datasets::TrajView>& views,
                                 const std::vector<std::size_t>& traj_index,
                                 const std::vector<std::size_t>& start, int length,
                                 bool include_last_action);

/// Contrastive representation function: conv encoder -> LFQ sign bottleneck
/// -> MLP decoder. Once frozen the parameters are immutable and the object
/// is safe to share across threads (inference feeds values as constants).
class ReprFunction {
 public:
  explicit ReprFunction(const ContrastiveConfig& config);

  const ContrastiveConfig& config() const { return config_; }
  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }

  numkit::ParamStore& params();  // throws when frozen
  const numkit::ParamStore& params_const() const { return *store_; }

  /// Training-graph paths (gradients flow).
  numkit::Var encode_latent(numkit::Graph& g, numkit::Var window_batch) const;
  numkit::Var decode_style(numkit::Graph& g, numkit::Var bits_batch) const;

  /// Inference: latent z for one window (no gradients).
  Eigen::VectorXd encode_z(const datasets::TrajView& view, std::size_t start) const;
  /// Batched inference over windows; one z row per window.
  numkit::Tensor encode_z_batch(const numkit::Tensor& window_batch) const;
  StyleCode encode_code(const datasets::TrajView& view, std::size_t start) const;
  StyleVector decode(const StyleCode& code) const;
  /// Batched decode of +/-1 bit rows.
  numkit::Tensor decode_batch(const numkit::Tensor& bits_batch) const;

  /// Policy-training style source: the window starting at timestep t,
  /// clipped at the trajectory end to the last full window.
  StyleVector style_for_timestep(const datasets::TrajView& view, std::size_t t) const;

  /// FNV-1a over all parameter bytes; freeze-immutability checks.
  std::uint64_t param_checksum() const;

  ReprFunction clone() const;

  void save(const std::string& path, const std::string& fingerprint, std::uint64_t seed) const;
  static ReprFunction load(const std::string& path);
  static ContrastiveConfig config_from_header(const numkit::CheckpointHeader& header);

 private:
  ReprFunction() = default;
  void build_layers(Rng& rng);
  void bind_layers();

  ContrastiveConfig config_;
  bool frozen_ = false;
  std::unique_ptr<numkit::ParamStore> store_;
  numkit::Conv1dLayer conv1_, conv2_;
  numkit::Dense enc_fc_;
  numkit::Dense dec_fc1_, dec_fc2_;
};

/// EMA blend: target <- decay * target + (1 - decay) * online, matched by
/// param id. Throws on architecture mismatch.
void ema_update(ReprFunction& target, const ReprFunction& online, double decay);

}  // namespace drivestyle::styles
