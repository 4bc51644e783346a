#pragma once

#include "drivestyle/common/rng.hpp"
#include "drivestyle/numkit/graph.hpp"

namespace drivestyle::numkit {

/// Kaiming-style uniform init: U(-sqrt(6/fan_in), +sqrt(6/fan_in)), seeded.
Tensor kaiming_uniform(Shape shape, Eigen::Index fan_in, Rng& rng);

/// Fully connected layer, x [B,in] -> [B,out]. Shape errors name the layer.
class Dense {
 public:
  Dense() = default;
  Dense(ParamStore& store, const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng);
  /// Binds to already-created params (checkpoint load path).
  static Dense bind(ParamStore& store, const std::string& name, Eigen::Index in, Eigen::Index out);

  /// with_grad=false feeds param values as constants: no grad accumulation,
  /// safe for shared frozen networks across threads.
  Var operator()(Graph& g, Var x, bool with_grad = true) const;

  Eigen::Index in_dim() const { return in_; }
  Eigen::Index out_dim() const { return out_; }

 private:
  std::string name_;
  Param* weight_ = nullptr;  // [in,out]
  Param* bias_ = nullptr;    // [1,out]
  Eigen::Index in_ = 0, out_ = 0;
};

/// 1-D convolution layer over [B, channels, length] tensors.
class Conv1dLayer {
 public:
  Conv1dLayer() = default;
  Conv1dLayer(ParamStore& store, const std::string& name, Eigen::Index in_ch, Eigen::Index out_ch,
              Eigen::Index width, int stride, int padding, Rng& rng);
  static Conv1dLayer bind(ParamStore& store, const std::string& name, Eigen::Index in_ch,
                          Eigen::Index out_ch, Eigen::Index width, int stride, int padding);

  Var operator()(Graph& g, Var x, bool with_grad = true) const;

  Eigen::Index out_length(Eigen::Index in_length) const;
  Eigen::Index out_channels() const { return out_ch_; }

 private:
  std::string name_;
  Param* kernels_ = nullptr;  // [out_ch, in_ch, width]
  Param* bias_ = nullptr;     // [1, out_ch]
  Eigen::Index in_ch_ = 0, out_ch_ = 0, width_ = 0;
  int stride_ = 1, padding_ = 0;
};

/// Sinusoidal position/timestep embedding, one row per entry of `steps`.
/// dim must be even; frequencies follow the usual 10000^(-2k/dim) ladder.
Tensor sinusoidal_embedding(const std::vector<double>& steps, Eigen::Index dim);

}  // namespace drivestyle::numkit
