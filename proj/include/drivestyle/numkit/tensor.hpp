#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace drivestyle::numkit {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Shape = std::vector<Eigen::Index>;

/// Global NaN/shape guard. On in tests, off in benchmark runs.
void set_checked_mode(bool on);
bool checked_mode();

std::string shape_str(const Shape& s);

/// Dense row-major tensor of 64-bit floats backed by an Eigen array.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape);                       // zero-filled
  Tensor(Shape shape, Eigen::ArrayXd values);         // takes ownership

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double v);
  static Tensor scalar(double v) { return full({1, 1}, v); }
  static Tensor row(std::initializer_list<double> values);
  static Tensor from_vector(Shape shape, const std::vector<double>& values);

  const Shape& shape() const { return shape_; }
  Eigen::Index ndim() const { return static_cast<Eigen::Index>(shape_.size()); }
  Eigen::Index extent(int d) const { return shape_[static_cast<std::size_t>(d)]; }
  Eigen::Index size() const { return values_.size(); }
  bool empty() const { return values_.size() == 0; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  Eigen::ArrayXd& array() { return values_; }
  const Eigen::ArrayXd& array() const { return values_; }

  /// 2-D matrix view. Throws unless ndim() == 2.
  Eigen::Map<MatrixRM> mat();
  Eigen::Map<const MatrixRM> mat() const;

  Eigen::Index rows() const;
  Eigen::Index cols() const;

  double& at(Eigen::Index i) { return values_[i]; }
  double at(Eigen::Index i) const { return values_[i]; }
  double& at2(Eigen::Index r, Eigen::Index c);
  double at2(Eigen::Index r, Eigen::Index c) const;
  /// 3-D access for [batch, channel, length] tensors.
  double& at3(Eigen::Index b, Eigen::Index c, Eigen::Index l);
  double at3(Eigen::Index b, Eigen::Index c, Eigen::Index l) const;

  Tensor reshaped(Shape shape) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  /// Finiteness scan; throws in checked mode when a NaN/Inf is present.
  void check_finite(const char* context) const;

 private:
  Shape shape_;
  Eigen::ArrayXd values_;
};

}  // namespace drivestyle::numkit
