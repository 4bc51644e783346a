#include "drivestyle/numkit/tensor.hpp"

#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>

namespace drivestyle::numkit {

namespace {
std::atomic<bool> g_checked{false};

Eigen::Index shape_product(const Shape& s) {
  Eigen::Index n = 1;
  for (Eigen::Index e : s) {
    if (e < 0) throw std::invalid_argument("Tensor: negative extent in shape " + shape_str(s));
    n *= e;
  }
  return n;
}
}  // namespace

void set_checked_mode(bool on) { g_checked.store(on); }
bool checked_mode() { return g_checked.load(); }

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  values_ = Eigen::ArrayXd::Zero(shape_product(shape_));
}

Tensor::Tensor(Shape shape, Eigen::ArrayXd values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_product(shape_) != values_.size()) {
    throw std::invalid_argument("Tensor: shape " + shape_str(shape_) + " does not match " +
                                std::to_string(values_.size()) + " values");
  }
  if (checked_mode()) check_finite("Tensor()");
}

Tensor Tensor::full(Shape shape, double v) {
  Tensor t(std::move(shape));
  t.values_.setConstant(v);
  return t;
}

Tensor Tensor::row(std::initializer_list<double> values) {
  Eigen::ArrayXd a(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) a[i++] = v;
  return Tensor({1, static_cast<Eigen::Index>(values.size())}, std::move(a));
}

Tensor Tensor::from_vector(Shape shape, const std::vector<double>& values) {
  Eigen::ArrayXd a(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) a[static_cast<Eigen::Index>(i)] = values[i];
  return Tensor(std::move(shape), std::move(a));
}

Eigen::Map<MatrixRM> Tensor::mat() {
  if (ndim() != 2) throw std::invalid_argument("Tensor::mat: need 2-D, have " + shape_str(shape_));
  return {values_.data(), shape_[0], shape_[1]};
}

Eigen::Map<const MatrixRM> Tensor::mat() const {
  if (ndim() != 2) throw std::invalid_argument("Tensor::mat: need 2-D, have " + shape_str(shape_));
  return {values_.data(), shape_[0], shape_[1]};
}

Eigen::Index Tensor::rows() const {
  if (ndim() != 2) throw std::invalid_argument("Tensor::rows: need 2-D, have " + shape_str(shape_));
  return shape_[0];
}

Eigen::Index Tensor::cols() const {
  if (ndim() != 2) throw std::invalid_argument("Tensor::cols: need 2-D, have " + shape_str(shape_));
  return shape_[1];
}

double& Tensor::at2(Eigen::Index r, Eigen::Index c) { return values_[r * shape_[1] + c]; }
double Tensor::at2(Eigen::Index r, Eigen::Index c) const { return values_[r * shape_[1] + c]; }

double& Tensor::at3(Eigen::Index b, Eigen::Index c, Eigen::Index l) {
  return values_[(b * shape_[1] + c) * shape_[2] + l];
}
double Tensor::at3(Eigen::Index b, Eigen::Index c, Eigen::Index l) const {
  return values_[(b * shape_[1] + c) * shape_[2] + l];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_product(shape) != values_.size()) {
    throw std::invalid_argument("Tensor::reshaped: " + shape_str(shape_) + " -> " +
                                shape_str(shape) + " changes element count");
  }
  return Tensor(std::move(shape), values_);
}

void Tensor::check_finite(const char* context) const {
  if (!values_.isFinite().all()) {
    throw std::runtime_error(std::string(context) + ": non-finite value in tensor " +
                             shape_str(shape_));
  }
}

}  // namespace drivestyle::numkit
