#include "drivestyle/numkit/layers.hpp"

#include <cmath>

namespace drivestyle::numkit {

Tensor kaiming_uniform(Shape shape, Eigen::Index fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(std::max<Eigen::Index>(fan_in, 1)));
  for (Eigen::Index i = 0; i < t.size(); ++i) t.at(i) = rng.uniform(-bound, bound);
  return t;
}

Dense::Dense(ParamStore& store, const std::string& name, Eigen::Index in, Eigen::Index out,
             Rng& rng)
    : name_(name), in_(in), out_(out) {
  weight_ = store.create(name + ".w", kaiming_uniform({in, out}, in, rng));
  bias_ = store.create(name + ".b", Tensor::zeros({1, out}));
}

Dense Dense::bind(ParamStore& store, const std::string& name, Eigen::Index in, Eigen::Index out) {
  Dense d;
  d.name_ = name;
  d.in_ = in;
  d.out_ = out;
  d.weight_ = store.require(name + ".w");
  d.bias_ = store.require(name + ".b");
  return d;
}

Var Dense::operator()(Graph& g, Var x, bool with_grad) const {
  const Tensor& xv = g.value(x);
  if (xv.ndim() != 2 || xv.cols() != in_) {
    throw std::invalid_argument("dense '" + name_ + "': expected input [*," +
                                std::to_string(in_) + "], got " + shape_str(xv.shape()));
  }
  Var w = with_grad ? g.param(*weight_) : g.constant(weight_->value);
  Var b = with_grad ? g.param(*bias_) : g.constant(bias_->value);
  return add_rowvec(matmul(x, w), b);
}

Conv1dLayer::Conv1dLayer(ParamStore& store, const std::string& name, Eigen::Index in_ch,
                         Eigen::Index out_ch, Eigen::Index width, int stride, int padding,
                         Rng& rng)
    : name_(name), in_ch_(in_ch), out_ch_(out_ch), width_(width), stride_(stride),
      padding_(padding) {
  kernels_ = store.create(name + ".k", kaiming_uniform({out_ch, in_ch, width}, in_ch * width, rng));
  bias_ = store.create(name + ".b", Tensor::zeros({1, out_ch}));
}

Conv1dLayer Conv1dLayer::bind(ParamStore& store, const std::string& name, Eigen::Index in_ch,
                              Eigen::Index out_ch, Eigen::Index width, int stride, int padding) {
  Conv1dLayer c;
  c.name_ = name;
  c.in_ch_ = in_ch;
  c.out_ch_ = out_ch;
  c.width_ = width;
  c.stride_ = stride;
  c.padding_ = padding;
  c.kernels_ = store.require(name + ".k");
  c.bias_ = store.require(name + ".b");
  return c;
}

Var Conv1dLayer::operator()(Graph& g, Var x, bool with_grad) const {
  const Tensor& xv = g.value(x);
  if (xv.ndim() != 3 || xv.extent(1) != in_ch_) {
    throw std::invalid_argument("conv1d '" + name_ + "': expected input [*," +
                                std::to_string(in_ch_) + ",*], got " + shape_str(xv.shape()));
  }
  Var k = with_grad ? g.param(*kernels_) : g.constant(kernels_->value);
  Var b = with_grad ? g.param(*bias_) : g.constant(bias_->value);
  return conv1d(x, k, b, stride_, padding_, "conv1d '" + name_ + "'");
}

Eigen::Index Conv1dLayer::out_length(Eigen::Index in_length) const {
  return (in_length + 2 * padding_ - width_) / stride_ + 1;
}

Tensor sinusoidal_embedding(const std::vector<double>& steps, Eigen::Index dim) {
  if (dim <= 0 || dim % 2 != 0) {
    throw std::invalid_argument("sinusoidal_embedding: dim must be positive and even");
  }
  const Eigen::Index half = dim / 2;
  Tensor t({static_cast<Eigen::Index>(steps.size()), dim});
  for (std::size_t r = 0; r < steps.size(); ++r) {
    for (Eigen::Index k = 0; k < half; ++k) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * k) / static_cast<double>(dim));
      t.at2(static_cast<Eigen::Index>(r), 2 * k) = std::sin(steps[r] * freq);
      t.at2(static_cast<Eigen::Index>(r), 2 * k + 1) = std::cos(steps[r] * freq);
    }
  }
  return t;
}

}  // namespace drivestyle::numkit
