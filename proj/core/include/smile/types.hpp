#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace smile {

/// Row-major so that one row is one sample.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Dense N x M binary table (observation mask E).
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::size_t rows, std::size_t cols, bool fill = false)
      : rows_(rows), cols_(cols), bits_(rows * cols, fill ? 1 : 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  bool operator()(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool value) { bits_[r * cols_ + c] = value ? 1 : 0; }

  std::size_t row_count(std::size_t r) const {
    std::size_t n = 0;
    for (std::size_t c = 0; c < cols_; ++c) n += bits_[r * cols_ + c];
    return n;
  }
  std::size_t col_count(std::size_t c) const {
    std::size_t n = 0;
    for (std::size_t r = 0; r < rows_; ++r) n += bits_[r * cols_ + c];
    return n;
  }

  bool operator==(const BinaryMask&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace smile
