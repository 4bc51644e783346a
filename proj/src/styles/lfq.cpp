#include "drivestyle/styles/lfq.hpp"

#include <stdexcept>

namespace drivestyle::styles {

StyleCode lfq_quantize(const Eigen::VectorXd& z) {
  StyleCode code;
  code.bits.resize(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    code.bits[static_cast<std::size_t>(i)] = z(i) > 0.0 ? 1 : -1;
  }
  code.index = index_from_bits(code.bits);
  return code;
}

int index_from_bits(const std::vector<int>& bits) {
  if (bits.size() > 30) throw std::invalid_argument("index_from_bits: too many bits");
  int index = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != 1 && bits[i] != -1) {
      throw std::invalid_argument("index_from_bits: bits must be +/-1");
    }
    if (bits[i] == 1) index |= (1 << i);
  }
  return index;
}

std::vector<int> bits_from_index(int index, int n_bits) {
  if (n_bits < 1 || n_bits > 30) throw std::invalid_argument("bits_from_index: bad bit count");
  if (index < 0 || index >= (1 << n_bits)) {
    throw std::invalid_argument("bits_from_index: index out of range");
  }
  std::vector<int> bits(static_cast<std::size_t>(n_bits));
  for (int i = 0; i < n_bits; ++i) bits[static_cast<std::size_t>(i)] = (index >> i) & 1 ? 1 : -1;
  return bits;
}

StyleCode code_from_index(int index, int n_bits) {
  StyleCode code;
  code.bits = bits_from_index(index, n_bits);
  code.index = index;
  return code;
}

Eigen::RowVectorXd bits_as_row(const std::vector<int>& bits) {
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(bits.size()));
  for (std::size_t i = 0; i < bits.size(); ++i) {
    row(static_cast<Eigen::Index>(i)) = static_cast<double>(bits[i]);
  }
  return row;
}

}  // namespace drivestyle::styles
