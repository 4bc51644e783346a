#include "drivestyle/numkit/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace drivestyle::numkit {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

Graph* same_graph(const Var& a, const Var& b, const char* op) {
  require(a.graph != nullptr && b.graph != nullptr && a.graph == b.graph,
          std::string(op) + ": operands belong to different graphs");
  return a.graph;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---------- ParamStore ----------

Param* ParamStore::create(const std::string& id, Tensor init) {
  if (find(id) != nullptr) throw std::invalid_argument("ParamStore: duplicate param id '" + id + "'");
  params_.push_back(std::make_unique<Param>(id, std::move(init)));
  return params_.back().get();
}

Param* ParamStore::find(const std::string& id) const {
  for (const auto& p : params_)
    if (p->id == id) return p.get();
  return nullptr;
}

Param* ParamStore::require(const std::string& id) const {
  Param* p = find(id);
  if (!p) throw std::invalid_argument("ParamStore: missing param '" + id + "'");
  return p;
}

void ParamStore::zero_grads() {
  for (auto& p : params_) p->zero_grad();
}

Eigen::Index ParamStore::scalar_count() const {
  Eigen::Index n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

// ---------- Graph ----------

Var Graph::input(Tensor value) {
  const int id = emit(std::move(value), {}, nullptr);
  return {id, this};
}

Var Graph::param(Param& p) {
  const int id = emit(p.value, {}, nullptr, &p);
  return {id, this};
}

int Graph::emit(Tensor value, std::vector<int> parents, BackFn back, Param* leaf) {
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.back = std::move(back);
  n.leaf = leaf;
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

const Tensor& Graph::value(const Var& v) const {
  require(v.graph == this && v.id >= 0 && v.id < node_count(), "Graph::value: invalid Var");
  return nodes_[static_cast<std::size_t>(v.id)].value;
}

Tensor Graph::grad_of(const Var& v) const {
  require(v.graph == this && v.id >= 0 && v.id < node_count(), "Graph::grad_of: invalid Var");
  const Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.grad.empty() && n.value.size() > 0) return Tensor::zeros(n.value.shape());
  return n.grad;
}

Tensor& Graph::grad_slot(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.empty()) n.grad = Tensor::zeros(n.value.shape());
  return n.grad;
}

bool Graph::has_grad(int id) const { return !nodes_[static_cast<std::size_t>(id)].grad.empty(); }

void Graph::backward(const Var& output, const Tensor& output_grad) {
  require(output.graph == this, "Graph::backward: Var from another graph");
  if (nodes_.empty() || output.id < 0 || output.id >= node_count()) {
    throw std::runtime_error("Graph::backward: no recorded forward pass");
  }
  const Node& out = nodes_[static_cast<std::size_t>(output.id)];
  if (!out.value.same_shape(output_grad)) {
    throw std::invalid_argument("Graph::backward: output grad shape " +
                                shape_str(output_grad.shape()) + " != output shape " +
                                shape_str(out.value.shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor();
  grad_slot(output.id).array() = output_grad.array();
  for (int i = output.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.empty() || !n.back) continue;
    n.back(*this, i);
  }
  for (auto& n : nodes_) {
    if (n.leaf != nullptr && !n.grad.empty()) n.leaf->grad.array() += n.grad.array();
  }
}

void Graph::backward(const Var& output) {
  const Tensor& v = value(output);
  require(v.size() == 1, "Graph::backward: default seed needs a scalar output, have " +
                             shape_str(v.shape()));
  backward(output, Tensor::full(v.shape(), 1.0));
}

void Graph::clear() { nodes_.clear(); }

// ---------- helpers for op bodies ----------

namespace {

using UnaryFwd = std::function<double(double)>;
using UnaryDer = std::function<double(double, double)>;  // (x, y) -> dy/dx

Var unary_op(Var a, const char* name, const UnaryFwd& f, const UnaryDer& d) {
  Graph* g = a.graph;
  require(g != nullptr, std::string(name) + ": null graph");
  const Tensor& x = g->node_value(a.id);
  Tensor y(x.shape());
  for (Eigen::Index i = 0; i < x.size(); ++i) y.at(i) = f(x.at(i));
  if (checked_mode()) y.check_finite(name);
  const int pid = a.id;
  const int id = g->emit(std::move(y), {pid}, [pid, d](Graph& gr, int self) {
    const Tensor& gy = gr.grad_slot(self);
    const Tensor& xv = gr.node_value(pid);
    const Tensor& yv = gr.node_value(self);
    Tensor& gx = gr.grad_slot(pid);
    for (Eigen::Index i = 0; i < xv.size(); ++i) gx.at(i) += gy.at(i) * d(xv.at(i), yv.at(i));
  });
  return {id, g};
}

}  // namespace

// ---------- primitive ops ----------

Var matmul(Var a, Var b) {
  Graph* g = same_graph(a, b, "matmul");
  const Tensor& av = g->node_value(a.id);
  const Tensor& bv = g->node_value(b.id);
  require(av.ndim() == 2 && bv.ndim() == 2 && av.cols() == bv.rows(),
          "matmul: incompatible shapes " + shape_str(av.shape()) + " x " + shape_str(bv.shape()));
  Tensor y({av.rows(), bv.cols()});
  y.mat() = av.mat() * bv.mat();
  if (checked_mode()) y.check_finite("matmul");
  const int pa = a.id, pb = b.id;
  const int id = g->emit(std::move(y), {pa, pb}, [pa, pb](Graph& gr, int self) {
    const Tensor& gy = gr.grad_slot(self);
    const Tensor& av2 = gr.node_value(pa);
    const Tensor& bv2 = gr.node_value(pb);
    gr.grad_slot(pa).mat() += gy.mat() * bv2.mat().transpose();
    gr.grad_slot(pb).mat() += av2.mat().transpose() * gy.mat();
  });
  return {id, g};
}

Var transpose(Var a) {
  Graph* g = a.graph;
  const Tensor& x = g->node_value(a.id);
  require(x.ndim() == 2, "transpose: need 2-D, have " + shape_str(x.shape()));
  Tensor y({x.cols(), x.rows()});
  y.mat() = x.mat().transpose();
  const int pid = a.id;
  const int id = g->emit(std::move(y), {pid}, [pid](Graph& gr, int self) {
    gr.grad_slot(pid).mat() += gr.grad_slot(self).mat().transpose();
  });
  return {id, g};
}

Var add(Var a, Var b) {
  Graph* g = same_graph(a, b, "add");
  const Tensor& av = g->node_value(a.id);
  const Tensor& bv = g->node_value(b.id);
  require(av.same_shape(bv),
          "add: shape mismatch " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  Tensor y(av.shape(), av.array() + bv.array());
  const int pa = a.id, pb = b.id;
  const int id = g->emit(std::move(y), {pa, pb}, [pa, pb](Graph& gr, int self) {
    const Tensor& gy = gr.grad_slot(self);
    gr.grad_slot(pa).array() += gy.array();
    gr.grad_slot(pb).array() += gy.array();
  });
  return {id, g};
}

Var sub(Var a, Var b) {
  Graph* g = same_graph(a, b, "sub");
  const Tensor& av = g->node_value(a.id);
  const Tensor& bv = g->node_value(b.id);
  require(av.same_shape(bv),
          "sub: shape mismatch " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  Tensor y(av.shape(), av.array() - bv.array());
  const int pa = a.id, pb = b.id;
  const int id = g->emit(std::move(y), {pa, pb}, [pa, pb](Graph& gr, int self) {
    const Tensor& gy = gr.grad_slot(self);
    gr.grad_slot(pa).array() += gy.array();
    gr.grad_slot(pb).array() -= gy.array();
  });
  return {id, g};
}

Var mul(Var a, Var b) {
  Graph* g = same_graph(a, b, "mul");
  const Tensor& av = g->node_value(a.id);
  const Tensor& bv = g->node_value(b.id);
  require(av.same_shape(bv),
          "mul: shape mismatch " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  Tensor y(av.shape(), av.array() * bv.array());
  const int pa = a.id, pb = b.id;
  const int id = g->emit(std::move(y), {pa, pb}, [pa, pb](Graph& gr, int self) {
    const Tensor& gy = gr.grad_slot(self);
    gr.grad_slot(pa).array() += gy.array() * gr.node_value(pb).array();
    gr.grad_slot(pb).array() += gy.array() * gr.node_value(pa).array();
  });
  return {id, g};
}

Var add_rowvec(Var a, Var bias) {
  Graph* g = same_graph(a, bias, "add_rowvec");
  const Tensor& av = g->node_value(a.id);
  const Tensor& bv = g->node_value(bias.id);
  require(av.ndim() == 2 && bv.ndim() == 2 && bv.rows() == 1 && bv.cols() == av.cols(),
          "add_rowvec: shapes " + shape_str(av.shape()) + " + " + shape_str(bv.shape()));
  Tensor y({av.rows(), av.cols()});
  y.mat() = av.mat().rowwise() + bv.mat().row(0);
  const int pa = a.id, pb = bias.id;
  const int id = g->emit(std::move(y), {pa, pb}, [pa, pb](Graph& gr, int self) {
    const Tensor& gy = gr.grad_slot(self);
    gr.grad_slot(pa).array() += gy.array();
    gr.grad_slot(pb).mat().row(0) += gy.mat().colwise().sum();
  });
  return {id, g};
}

Var mul_colvec(Var a, Var c) {
  Graph* g = same_graph(a, c, "mul_colvec");
  const Tensor& av = g->node_value(a.id);
  const Tensor& cv = g->node_value(c.id);
  require(av.ndim() == 2 && cv.ndim() == 2 && cv.cols() == 1 && cv.rows() == av.rows(),
          "mul_colvec: shapes " + shape_str(av.shape()) + " * " + shape_str(cv.shape()));
  Tensor y({av.rows(), av.cols()});
  y.mat() = av.mat().array().colwise() * cv.mat().col(0).array();
  const int pa = a.id, pc = c.id;
  const int id = g->emit(std::move(y), {pa, pc}, [pa, pc](Graph& gr, int self) {
    const Tensor& gy = gr.grad_slot(self);
    const Tensor& av2 = gr.node_value(pa);
    const Tensor& cv2 = gr.node_value(pc);
    gr.grad_slot(pa).mat().array() += gy.mat().array().colwise() * cv2.mat().col(0).array();
    gr.grad_slot(pc).mat().col(0) += (gy.mat().array() * av2.mat().array()).rowwise().sum().matrix();
  });
  return {id, g};
}

Var div_colvec(Var a, Var c) {
  Graph* g = same_graph(a, c, "div_colvec");
  const Tensor& av = g->node_value(a.id);
  const Tensor& cv = g->node_value(c.id);
  require(av.ndim() == 2 && cv.ndim() == 2 && cv.cols() == 1 && cv.rows() == av.rows(),
          "div_colvec: shapes " + shape_str(av.shape()) + " / " + shape_str(cv.shape()));
  Tensor y({av.rows(), av.cols()});
  y.mat() = av.mat().array().colwise() / cv.mat().col(0).array();
  if (checked_mode()) y.check_finite("div_colvec");
  const int pa = a.id, pc = c.id;
  const int id = g->emit(std::move(y), {pa, pc}, [pa, pc](Graph& gr, int self) {
    const Tensor& gy = gr.grad_slot(self);
    const Tensor& av2 = gr.node_value(pa);
    const Tensor& cv2 = gr.node_value(pc);
    const Eigen::ArrayXd inv = cv2.mat().col(0).array().inverse();
    gr.grad_slot(pa).mat().array() += gy.mat().array().colwise() * inv;
    gr.grad_slot(pc).mat().col(0).array() -=
        (gy.mat().array() * av2.mat().array()).rowwise().sum() * inv * inv;
  });
  return {id, g};
}

Var scale(Var a, double s) {
  return unary_op(a, "scale", [s](double x) { return s * x; },
                  [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary_op(a, "add_scalar", [s](double x) { return x + s; },
                  [](double, double) { return 1.0; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var square(Var a) {
  return unary_op(a, "square", [](double x) { return x * x; },
                  [](double x, double) { return 2.0 * x; });
}

Var sqrt_eps(Var a, double eps) {
  return unary_op(a, "sqrt_eps", [eps](double x) { return std::sqrt(x + eps); },
                  [](double, double y) { return 0.5 / y; });
}

Var exp_op(Var a) {
  return unary_op(a, "exp", [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Var log_op(Var a) {
  return unary_op(a, "log", [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Var sigmoid(Var a) {
  return unary_op(a, "sigmoid", &stable_sigmoid,
                  [](double, double y) { return y * (1.0 - y); });
}

Var softplus(Var a) {
  return unary_op(a, "softplus",
                  [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
                  [](double x, double) { return stable_sigmoid(x); });
}

Var tanh_op(Var a) {
  return unary_op(a, "tanh", [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary_op(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
                  [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var gelu(Var a) {
  constexpr double kInvSqrt2 = 0.7071067811865475244;
  constexpr double kInvSqrt2Pi = 0.3989422804014326779;
  return unary_op(a, "gelu",
                  [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
                  [](double x, double) {
                    const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
                    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
                    return cdf + x * pdf;
                  });
}

Var clamp(Var a, double lo, double hi) {
  require(lo <= hi, "clamp: lo > hi");
  return unary_op(a, "clamp",
                  [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
                  [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var sum_all(Var a) {
  Graph* g = a.graph;
  const Tensor& x = g->node_value(a.id);
  Tensor y = Tensor::scalar(x.array().sum());
  const int pid = a.id;
  const int id = g->emit(std::move(y), {pid}, [pid](Graph& gr, int self) {
    gr.grad_slot(pid).array() += gr.grad_slot(self).at(0);
  });
  return {id, g};
}

Var mean_all(Var a) {
  Graph* g = a.graph;
  const Tensor& x = g->node_value(a.id);
  require(x.size() > 0, "mean_all: empty tensor");
  const double n = static_cast<double>(x.size());
  Tensor y = Tensor::scalar(x.array().sum() / n);
  const int pid = a.id;
  const int id = g->emit(std::move(y), {pid}, [pid, n](Graph& gr, int self) {
    gr.grad_slot(pid).array() += gr.grad_slot(self).at(0) / n;
  });
  return {id, g};
}

Var row_sum(Var a) {
  Graph* g = a.graph;
  const Tensor& x = g->node_value(a.id);
  require(x.ndim() == 2, "row_sum: need 2-D, have " + shape_str(x.shape()));
  Tensor y({x.rows(), 1});
  y.mat().col(0) = x.mat().rowwise().sum();
  const int pid = a.id;
  const int id = g->emit(std::move(y), {pid}, [pid](Graph& gr, int self) {
    const Tensor& gy = gr.grad_slot(self);
    gr.grad_slot(pid).mat().array().colwise() += gy.mat().col(0).array();
  });
  return {id, g};
}

Var col_mean(Var a) {
  Graph* g = a.graph;
  const Tensor& x = g->node_value(a.id);
  require(x.ndim() == 2 && x.rows() > 0, "col_mean: need non-empty 2-D");
  const double b = static_cast<double>(x.rows());
  Tensor y({1, x.cols()});
  y.mat().row(0) = x.mat().colwise().mean();
  const int pid = a.id;
  const int id = g->emit(std::move(y), {pid}, [pid, b](Graph& gr, int self) {
    const Tensor& gy = gr.grad_slot(self);
    gr.grad_slot(pid).mat().rowwise() += (gy.mat().row(0) / b);
  });
  return {id, g};
}

Var logsumexp_rows(Var a) {
  Graph* g = a.graph;
  const Tensor& x = g->node_value(a.id);
  require(x.ndim() == 2 && x.cols() > 0, "logsumexp_rows: need non-empty 2-D");
  Tensor y({x.rows(), 1});
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.mat().row(r).maxCoeff();
    y.at2(r, 0) = m + std::log((x.mat().row(r).array() - m).exp().sum());
  }
  const int pid = a.id;
  const int id = g->emit(std::move(y), {pid}, [pid](Graph& gr, int self) {
    const Tensor& gy = gr.grad_slot(self);
    const Tensor& xv = gr.node_value(pid);
    const Tensor& yv = gr.node_value(self);
    Tensor& gx = gr.grad_slot(pid);
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
      gx.mat().row(r).array() +=
          gy.at2(r, 0) * (xv.mat().row(r).array() - yv.at2(r, 0)).exp();
    }
  });
  return {id, g};
}

Var pick_cols(Var a, const std::vector<int>& idx) {
  Graph* g = a.graph;
  const Tensor& x = g->node_value(a.id);
  require(x.ndim() == 2, "pick_cols: need 2-D");
  require(static_cast<Eigen::Index>(idx.size()) == x.rows(),
          "pick_cols: index count != rows");
  for (int j : idx)
    require(j >= 0 && j < x.cols(), "pick_cols: index out of range");
  Tensor y({x.rows(), 1});
  for (Eigen::Index r = 0; r < x.rows(); ++r) y.at2(r, 0) = x.at2(r, idx[static_cast<std::size_t>(r)]);
  const int pid = a.id;
  const int id = g->emit(std::move(y), {pid}, [pid, idx](Graph& gr, int self) {
    const Tensor& gy = gr.grad_slot(self);
    Tensor& gx = gr.grad_slot(pid);
    for (Eigen::Index r = 0; r < gx.rows(); ++r)
      gx.at2(r, idx[static_cast<std::size_t>(r)]) += gy.at2(r, 0);
  });
  return {id, g};
}

Var concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  Graph* g = parts.front().graph;
  Eigen::Index rows = g->node_value(parts.front().id).rows();
  Eigen::Index total = 0;
  std::vector<int> pids;
  for (const Var& p : parts) {
    require(p.graph == g, "concat_cols: operands from different graphs");
    const Tensor& t = g->node_value(p.id);
    require(t.ndim() == 2 && t.rows() == rows, "concat_cols: row mismatch");
    total += t.cols();
    pids.push_back(p.id);
  }
  Tensor y({rows, total});
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    const Tensor& t = g->node_value(p.id);
    y.mat().middleCols(off, t.cols()) = t.mat();
    off += t.cols();
  }
  const int id = g->emit(std::move(y), pids, [pids](Graph& gr, int self) {
    const Tensor& gy = gr.grad_slot(self);
    Eigen::Index off2 = 0;
    for (int pid : pids) {
      Tensor& gx = gr.grad_slot(pid);
      gx.mat() += gy.mat().middleCols(off2, gx.cols());
      off2 += gx.cols();
    }
  });
  return {id, g};
}

Var slice_cols(Var a, Eigen::Index begin, Eigen::Index len) {
  Graph* g = a.graph;
  const Tensor& x = g->node_value(a.id);
  require(x.ndim() == 2 && begin >= 0 && len >= 0 && begin + len <= x.cols(),
          "slice_cols: range [" + std::to_string(begin) + "," + std::to_string(begin + len) +
              ") out of " + shape_str(x.shape()));
  Tensor y({x.rows(), len});
  y.mat() = x.mat().middleCols(begin, len);
  const int pid = a.id;
  const int id = g->emit(std::move(y), {pid}, [pid, begin, len](Graph& gr, int self) {
    gr.grad_slot(pid).mat().middleCols(begin, len) += gr.grad_slot(self).mat();
  });
  return {id, g};
}

Var reshape(Var a, Shape shape) {
  Graph* g = a.graph;
  Tensor y = g->node_value(a.id).reshaped(shape);
  const int pid = a.id;
  const int id = g->emit(std::move(y), {pid}, [pid](Graph& gr, int self) {
    gr.grad_slot(pid).array() += gr.grad_slot(self).array();
  });
  return {id, g};
}

Var ste_sign(Var a) {
  return unary_op(a, "ste_sign", [](double x) { return x > 0.0 ? 1.0 : -1.0; },
                  [](double, double) { return 1.0; });
}

Var conv1d(Var x, Var kernels, Var bias, int stride, int padding,
           const std::string& layer_name) {
  Graph* g = same_graph(x, kernels, "conv1d");
  same_graph(kernels, bias, "conv1d");
  const Tensor& xv = g->node_value(x.id);
  const Tensor& kv = g->node_value(kernels.id);
  const Tensor& bv = g->node_value(bias.id);
  require(xv.ndim() == 3, layer_name + ": input must be [batch,channels,length], have " +
                              shape_str(xv.shape()));
  require(kv.ndim() == 3, layer_name + ": kernels must be [filters,channels,width]");
  const Eigen::Index B = xv.extent(0), C = xv.extent(1), L = xv.extent(2);
  const Eigen::Index F = kv.extent(0), KC = kv.extent(1), W = kv.extent(2);
  require(KC == C, layer_name + ": kernel channels " + std::to_string(KC) +
                       " != input channels " + std::to_string(C));
  require(bv.ndim() == 2 && bv.rows() == 1 && bv.cols() == F, layer_name + ": bias must be [1,filters]");
  require(stride >= 1 && padding >= 0, layer_name + ": invalid stride/padding");
  const Eigen::Index padded = L + 2 * padding;
  require(padded >= W && W >= 1,
          layer_name + ": kernel width " + std::to_string(W) +
              " exceeds padded input length " + std::to_string(padded));
  const Eigen::Index Lout = (padded - W) / stride + 1;

  // im2col: rows index (batch, output position), cols index (channel, tap).
  MatrixRM cols(B * Lout, C * W);
  cols.setZero();
  for (Eigen::Index b = 0; b < B; ++b) {
    for (Eigen::Index o = 0; o < Lout; ++o) {
      const Eigen::Index r = b * Lout + o;
      for (Eigen::Index c = 0; c < C; ++c) {
        for (Eigen::Index w = 0; w < W; ++w) {
          const Eigen::Index i = o * stride - padding + w;
          if (i >= 0 && i < L) cols(r, c * W + w) = xv.at3(b, c, i);
        }
      }
    }
  }
  MatrixRM kmat(C * W, F);
  for (Eigen::Index f = 0; f < F; ++f)
    for (Eigen::Index c = 0; c < C; ++c)
      for (Eigen::Index w = 0; w < W; ++w) kmat(c * W + w, f) = kv.at3(f, c, w);

  const MatrixRM yflat = cols * kmat;  // [B*Lout, F]
  Tensor y({B, F, Lout});
  for (Eigen::Index b = 0; b < B; ++b)
    for (Eigen::Index o = 0; o < Lout; ++o)
      for (Eigen::Index f = 0; f < F; ++f)
        y.at3(b, f, o) = yflat(b * Lout + o, f) + bv.at2(0, f);
  if (checked_mode()) y.check_finite(layer_name.c_str());

  const int px = x.id, pk = kernels.id, pb = bias.id;
  const int id = g->emit(
      std::move(y), {px, pk, pb},
      [px, pk, pb, cols, kmat, B, C, L, F, W, Lout, stride, padding](Graph& gr, int self) {
        const Tensor& gy = gr.grad_slot(self);
        MatrixRM gyflat(B * Lout, F);
        for (Eigen::Index b = 0; b < B; ++b)
          for (Eigen::Index o = 0; o < Lout; ++o)
            for (Eigen::Index f = 0; f < F; ++f) gyflat(b * Lout + o, f) = gy.at3(b, f, o);

        Tensor& gb = gr.grad_slot(pb);
        gb.mat().row(0) += gyflat.colwise().sum();

        const MatrixRM gkmat = cols.transpose() * gyflat;  // [C*W, F]
        Tensor& gk = gr.grad_slot(pk);
        for (Eigen::Index f = 0; f < F; ++f)
          for (Eigen::Index c = 0; c < C; ++c)
            for (Eigen::Index w = 0; w < W; ++w) gk.at3(f, c, w) += gkmat(c * W + w, f);

        const MatrixRM gcols = gyflat * kmat.transpose();  // [B*Lout, C*W]
        Tensor& gx = gr.grad_slot(px);
        for (Eigen::Index b = 0; b < B; ++b) {
          for (Eigen::Index o = 0; o < Lout; ++o) {
            const Eigen::Index r = b * Lout + o;
            for (Eigen::Index c = 0; c < C; ++c) {
              for (Eigen::Index w = 0; w < W; ++w) {
                const Eigen::Index i = o * stride - padding + w;
                if (i >= 0 && i < L) gx.at3(b, c, i) += gcols(r, c * W + w);
              }
            }
          }
        }
      });
  return {id, g};
}

// ---------- composites ----------

Var mse(Var pred, Var target) { return mean_all(square(sub(pred, target))); }

Var cross_entropy_with_indices(Var logits, const std::vector<int>& targets) {
  return mean_all(sub(logsumexp_rows(logits), pick_cols(logits, targets)));
}

Var cosine_similarity_matrix(Var a, Var b, double eps) {
  Var an = div_colvec(a, sqrt_eps(row_sum(square(a)), eps));
  Var bn = div_colvec(b, sqrt_eps(row_sum(square(b)), eps));
  return matmul(an, transpose(bn));
}

}  // namespace drivestyle::numkit
