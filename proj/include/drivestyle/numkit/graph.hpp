#pragma once

#include "drivestyle/numkit/tensor.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace drivestyle::numkit {

/// Learnable tensor with an accumulated gradient of the same shape.
struct Param {
  std::string id;
  Tensor value;
  Tensor grad;

  Param(std::string id_, Tensor value_)
      : id(std::move(id_)), value(std::move(value_)), grad(Tensor::zeros(value.shape())) {}

  void zero_grad() { grad.array().setZero(); }
};

/// Owns Params; pointers stay stable for the lifetime of the store.
class ParamStore {
 public:
  Param* create(const std::string& id, Tensor init);
  Param* find(const std::string& id) const;
  Param* require(const std::string& id) const;
  const std::vector<std::unique_ptr<Param>>& all() const { return params_; }
  std::size_t size() const { return params_.size(); }
  void zero_grads();
  /// Total number of scalar parameters.
  Eigen::Index scalar_count() const;

 private:
  std::vector<std::unique_ptr<Param>> params_;
};

class Graph;

/// Handle to a node in a Graph.
struct Var {
  int id = -1;
  Graph* graph = nullptr;
};

/// Reverse-mode computation graph. Ops evaluate eagerly and record a backward
/// closure; backward() accumulates d(output)/d(param) into Param.grad (+=).
class Graph {
 public:
  Var input(Tensor value);
  Var param(Param& p);
  Var constant(Tensor value) { return input(std::move(value)); }

  const Tensor& value(const Var& v) const;
  /// Gradient from the most recent backward() pass (zeros if untouched).
  Tensor grad_of(const Var& v) const;

  /// Backprop from `output`, seeded with `output_grad`. Node gradients are
  /// reset per call; Param.grad accumulates across calls.
  void backward(const Var& output, const Tensor& output_grad);
  /// Scalar-output convenience: seed with 1.
  void backward(const Var& output);

  void clear();
  int node_count() const { return static_cast<int>(nodes_.size()); }

  // -- used by op implementations --
  using BackFn = std::function<void(Graph&, int)>;
  int emit(Tensor value, std::vector<int> parents, BackFn back, Param* leaf = nullptr);
  Tensor& grad_slot(int id);
  bool has_grad(int id) const;
  const Tensor& node_value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // empty until touched by backward
    std::vector<int> parents;
    BackFn back;
    Param* leaf = nullptr;
  };
  std::vector<Node> nodes_;
};

// ---------- primitive ops ----------
Var matmul(Var a, Var b);                          // [B,I]x[I,O] -> [B,O]
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);                             // Hadamard
Var add_rowvec(Var a, Var bias);                   // [B,D] + [1,D]
Var mul_colvec(Var a, Var c);                      // [B,D] * [B,1]
Var div_colvec(Var a, Var c);                      // [B,D] / [B,1]
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var neg(Var a);
Var square(Var a);
Var sqrt_eps(Var a, double eps = 0.0);             // sqrt(x + eps)
Var exp_op(Var a);
Var log_op(Var a);
Var sigmoid(Var a);
Var softplus(Var a);                               // max(x,0) + log1p(exp(-|x|))
Var tanh_op(Var a);
Var relu(Var a);
Var gelu(Var a);                                   // exact erf form
Var clamp(Var a, double lo, double hi);            // zero grad outside [lo,hi]
Var sum_all(Var a);                                // -> [1,1]
Var mean_all(Var a);                               // -> [1,1]
Var row_sum(Var a);                                // [B,D] -> [B,1]
Var col_mean(Var a);                               // [B,D] -> [1,D]
Var logsumexp_rows(Var a);                         // [B,K] -> [B,1], max-shifted
Var pick_cols(Var a, const std::vector<int>& idx); // [B,K] -> [B,1]
Var concat_cols(const std::vector<Var>& parts);    // [B,D1],[B,D2],... -> [B,sum]
Var slice_cols(Var a, Eigen::Index begin, Eigen::Index len);
Var reshape(Var a, Shape shape);
/// Straight-through sign: forward -1/+1 (zero maps to -1), backward identity.
Var ste_sign(Var a);
/// 1-D cross-correlation, x [B,C,L] with kernels [F,C,W] -> [B,F,L_out].
/// Forward is im2col + matmul; the nested-loop oracle lives in tests.
Var conv1d(Var x, Var kernels, Var bias, int stride, int padding,
           const std::string& layer_name = "conv1d");

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

// ---------- composites ----------
Var mse(Var pred, Var target);
/// Mean over rows of -log softmax(logits)[target].
Var cross_entropy_with_indices(Var logits, const std::vector<int>& targets);
/// Row-cosine similarity matrix between two [N,D] batches.
Var cosine_similarity_matrix(Var a, Var b, double eps = 1e-12);

}  // namespace drivestyle::numkit
