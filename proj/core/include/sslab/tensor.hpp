#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace sslab {

/// Dense row-major float64 array of rank 1 or 2.  Shapes are immutable after
/// construction; element storage is a flat vector indexed as i * cols + j.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor scalar(double v);
  static Tensor vec(std::vector<double> values);
  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor full(std::size_t rows, std::size_t cols, double v);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return values_.size(); }

  /// Rank-1 tensors count as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t i, std::size_t j) { return values_[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return values_[i * cols() + j]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool is_scalar() const { return numel() == 1; }
  bool all_finite() const;
  Tensor zeros_like() const;
  std::string shape_str() const;

private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

}  // namespace sslab
