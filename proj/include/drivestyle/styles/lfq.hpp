#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace drivestyle::styles {

/// Lookup-free quantization code: a sign pattern and its integer index.
/// bits[i] in {-1,+1}; index = sum over i of 2^i where bits[i] == +1.
struct StyleCode {
  std::vector<int> bits;
  int index = 0;

  bool operator==(const StyleCode& other) const {
    return index == other.index && bits == other.bits;
  }
};

/// Dimension-wise sign quantization; zero maps to -1.
StyleCode lfq_quantize(const Eigen::VectorXd& z);

int index_from_bits(const std::vector<int>& bits);
std::vector<int> bits_from_index(int index, int n_bits);
StyleCode code_from_index(int index, int n_bits);

/// +/-1 bit pattern as a 1 x n row tensor for decoder input.
Eigen::RowVectorXd bits_as_row(const std::vector<int>& bits);

}  // namespace drivestyle::styles
