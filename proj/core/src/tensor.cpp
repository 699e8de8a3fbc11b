#include "sslab/tensor.hpp"

#include <cmath>

#include "sslab/error.hpp"

namespace sslab {

namespace {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  return n;
}

void check_shape(const std::vector<std::size_t>& shape) {
  require(shape.size() == 1 || shape.size() == 2,
          "tensor rank must be 1 or 2, got " + std::to_string(shape.size()));
  for (std::size_t s : shape)
    require(s > 0, "tensor dimensions must be positive");
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  values_.assign(shape_numel(shape_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  check_shape(shape_);
  require(values_.size() == shape_numel(shape_),
          "tensor value count " + std::to_string(values_.size()) +
              " does not match shape " + shape_str());
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::vec(std::vector<double> values) {
  const std::size_t n = values.size();  // read before the move
  return Tensor({n}, std::move(values));
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) {
  return Tensor({rows, cols});
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double v) {
  Tensor t({rows, cols});
  for (double& x : t.values_) x = v;
  return t;
}

std::size_t Tensor::rows() const { return rank() == 1 ? 1 : shape_[0]; }

std::size_t Tensor::cols() const { return rank() == 1 ? shape_[0] : shape_[1]; }

bool Tensor::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor Tensor::zeros_like() const {
  Tensor t;
  t.shape_ = shape_;
  t.values_.assign(values_.size(), 0.0);
  return t;
}

std::string Tensor::shape_str() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

}  // namespace sslab
