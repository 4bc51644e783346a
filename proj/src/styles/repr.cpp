#include "drivestyle/styles/repr.hpp"

#include "drivestyle/common/hash.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace drivestyle::styles {

using namespace numkit;
using datasets::TrajView;

int ContrastiveConfig::code_bits() const {
  int bits = 0;
  while ((1 << bits) < K) ++bits;
  return bits;
}

void ContrastiveConfig::validate() const {
  if (K < 2 || (K & (K - 1)) != 0) {
    throw std::invalid_argument("ContrastiveConfig: K must be a power of two >= 2");
  }
  if (L_c < 1) throw std::invalid_argument("ContrastiveConfig: L_c must be >= 1");
  if (channels < 1 || style_dim < 1) throw std::invalid_argument("ContrastiveConfig: bad dims");
  if (!(tau > 0)) throw std::invalid_argument("ContrastiveConfig: tau must be > 0");
  if (!(ema_decay >= 0 && ema_decay <= 1)) {
    throw std::invalid_argument("ContrastiveConfig: ema_decay must be in [0,1]");
  }
  if (batch < 2) throw std::invalid_argument("ContrastiveConfig: batch must be >= 2");
}

Tensor make_window_batch(const std::vector<TrajView>& views,
                         const std::vector<std::size_t>& traj_index,
                         const std::vector<std::size_t>& start, int length,
                         bool include_last_action) {
  if (traj_index.size() != start.size()) {
    throw std::invalid_argument("make_window_batch: index/start size mismatch");
  }
  const Eigen::Index B = static_cast<Eigen::Index>(traj_index.size());
  Tensor t({B, kWindowChannels, length});
  for (Eigen::Index b = 0; b < B; ++b) {
    const TrajView& v = views[traj_index[static_cast<std::size_t>(b)]];
    const std::size_t s = start[static_cast<std::size_t>(b)];
    if (s + static_cast<std::size_t>(length) > v.size()) {
      throw std::invalid_argument("make_window_batch: window exceeds trajectory");
    }
    for (int l = 0; l < length; ++l) {
      const datasets::Observation& o = v.obs[s + static_cast<std::size_t>(l)];
      for (int k = 0; k < datasets::Observation::kDim; ++k) t.at3(b, k, l) = o[k];
      const bool last = (l == length - 1);
      t.at3(b, datasets::Observation::kDim, l) =
          (last && !include_last_action) ? 0.0 : v.act[s + static_cast<std::size_t>(l)].accel;
    }
  }
  return t;
}

ReprFunction::ReprFunction(const ContrastiveConfig& config) : config_(config) {
  config_.validate();
  store_ = std::make_unique<ParamStore>();
  Rng rng(splitmix64(config.seed ^ 0xa11ce5ull));
  build_layers(rng);
}

void ReprFunction::build_layers(Rng& rng) {
  const int ch = config_.channels;
  conv1_ = Conv1dLayer(*store_, "enc.conv1", kWindowChannels, ch, 3, 1, 1, rng);
  conv2_ = Conv1dLayer(*store_, "enc.conv2", ch, ch, 3, 1, 1, rng);
  enc_fc_ = Dense(*store_, "enc.fc", static_cast<Eigen::Index>(ch) * config_.L_c,
                  config_.code_bits(), rng);
  dec_fc1_ = Dense(*store_, "dec.fc1", config_.code_bits(), 128, rng);
  dec_fc2_ = Dense(*store_, "dec.fc2", 128, config_.style_dim, rng);
}

void ReprFunction::bind_layers() {
  const int ch = config_.channels;
  conv1_ = Conv1dLayer::bind(*store_, "enc.conv1", kWindowChannels, ch, 3, 1, 1);
  conv2_ = Conv1dLayer::bind(*store_, "enc.conv2", ch, ch, 3, 1, 1);
  enc_fc_ = Dense::bind(*store_, "enc.fc", static_cast<Eigen::Index>(ch) * config_.L_c,
                        config_.code_bits());
  dec_fc1_ = Dense::bind(*store_, "dec.fc1", config_.code_bits(), 128);
  dec_fc2_ = Dense::bind(*store_, "dec.fc2", 128, config_.style_dim);
}

ParamStore& ReprFunction::params() {
  if (frozen_) throw std::logic_error("ReprFunction: frozen, parameters are immutable");
  return *store_;
}

Var ReprFunction::encode_latent(Graph& g, Var window_batch) const {
  const bool with_grad = !frozen_;
  Var h = relu(conv1_(g, window_batch, with_grad));
  h = relu(conv2_(g, h, with_grad));
  const Tensor& hv = g.value(h);
  Var flat = reshape(h, {hv.extent(0), hv.extent(1) * hv.extent(2)});
  return enc_fc_(g, flat, with_grad);
}

Var ReprFunction::decode_style(Graph& g, Var bits_batch) const {
  const bool with_grad = !frozen_;
  Var h = gelu(dec_fc1_(g, bits_batch, with_grad));
  return dec_fc2_(g, h, with_grad);
}

Tensor ReprFunction::encode_z_batch(const Tensor& window_batch) const {
  Graph g;
  Var z = encode_latent(g, g.input(window_batch));
  return g.value(z);
}

Eigen::VectorXd ReprFunction::encode_z(const TrajView& view, std::size_t start) const {
  const Tensor z = encode_z_batch(make_window_batch({view}, {0}, {start}, config_.L_c, true));
  Eigen::VectorXd out(z.cols());
  for (Eigen::Index i = 0; i < z.cols(); ++i) out(i) = z.at2(0, i);
  return out;
}

StyleCode ReprFunction::encode_code(const TrajView& view, std::size_t start) const {
  return lfq_quantize(encode_z(view, start));
}

Tensor ReprFunction::decode_batch(const Tensor& bits_batch) const {
  Graph g;
  Var c = decode_style(g, g.input(bits_batch));
  return g.value(c);
}

StyleVector ReprFunction::decode(const StyleCode& code) const {
  Tensor bits({1, static_cast<Eigen::Index>(code.bits.size())});
  bits.mat().row(0) = bits_as_row(code.bits);
  const Tensor c = decode_batch(bits);
  StyleVector out(c.cols());
  for (Eigen::Index i = 0; i < c.cols(); ++i) out(i) = c.at2(0, i);
  return out;
}

StyleVector ReprFunction::style_for_timestep(const TrajView& view, std::size_t t) const {
  const std::size_t L = static_cast<std::size_t>(config_.L_c);
  if (view.size() < L) {
    throw std::invalid_argument("style_for_timestep: trajectory shorter than L_c");
  }
  const std::size_t start = std::min(t, view.size() - L);
  return decode(encode_code(view, start));
}

std::uint64_t ReprFunction::param_checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& p : store_->all()) {
    const auto* bytes = reinterpret_cast<const char*>(p->value.data());
    const std::size_t n = static_cast<std::size_t>(p->value.size()) * sizeof(double);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(bytes[i]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

ReprFunction ReprFunction::clone() const {
  ReprFunction copy;
  copy.config_ = config_;
  copy.frozen_ = false;
  copy.store_ = std::make_unique<ParamStore>();
  for (const auto& p : store_->all()) copy.store_->create(p->id, p->value);
  copy.bind_layers();
  return copy;
}

void ReprFunction::save(const std::string& path, const std::string& fingerprint,
                        std::uint64_t seed) const {
  CheckpointHeader header;
  header.fingerprint = fingerprint;
  header.seed = seed;
  header.meta["kind"] = "repr";
  header.meta["K"] = std::to_string(config_.K);
  header.meta["L_c"] = std::to_string(config_.L_c);
  header.meta["channels"] = std::to_string(config_.channels);
  header.meta["style_dim"] = std::to_string(config_.style_dim);
  header.meta["tau"] = std::to_string(config_.tau);
  header.meta["frozen"] = frozen_ ? "1" : "0";
  save_checkpoint(path, header, *store_);
}

ContrastiveConfig ReprFunction::config_from_header(const CheckpointHeader& header) {
  ContrastiveConfig config;
  config.K = std::stoi(header.meta.at("K"));
  config.L_c = std::stoi(header.meta.at("L_c"));
  config.channels = std::stoi(header.meta.at("channels"));
  config.style_dim = std::stoi(header.meta.at("style_dim"));
  return config;
}

ReprFunction ReprFunction::load(const std::string& path) {
  const Checkpoint ckpt = read_checkpoint(path);
  if (ckpt.header.meta.at("kind") != "repr") {
    throw std::runtime_error("ReprFunction::load: '" + path + "' is not a repr checkpoint");
  }
  ReprFunction repr(config_from_header(ckpt.header));
  load_into(ckpt, *repr.store_);
  if (ckpt.header.meta.count("frozen") && ckpt.header.meta.at("frozen") == "1") repr.freeze();
  return repr;
}

void ema_update(ReprFunction& target, const ReprFunction& online, double decay) {
  if (!(decay >= 0.0 && decay <= 1.0)) throw std::invalid_argument("ema_update: decay in [0,1]");
  const auto& src = online.params_const();
  auto& dst = target.params();  // throws if the target is frozen
  if (src.size() != dst.size()) {
    throw std::invalid_argument("ema_update: architecture mismatch (param count)");
  }
  for (const auto& p : src.all()) {
    Param* t = dst.find(p->id);
    if (t == nullptr || !t->value.same_shape(p->value)) {
      throw std::invalid_argument("ema_update: architecture mismatch at '" + p->id + "'");
    }
    t->value.array() = decay * t->value.array() + (1.0 - decay) * p->value.array();
  }
}

}  // namespace drivestyle::styles
