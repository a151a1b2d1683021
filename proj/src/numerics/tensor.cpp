#include "rsub/numerics/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "rsub/common/error.hpp"

namespace rsub {
namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(product(shape_), 0.0f) {
  require(!shape_.empty(), ErrorKind::kContract, "tensor shape must have at least one extent");
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  require(!shape_.empty(), ErrorKind::kContract, "tensor shape must have at least one extent");
  require(data_.size() == product(shape_), ErrorKind::kContract,
          "tensor data length " + std::to_string(data_.size()) + " does not match shape " +
              rsub::shape_string(shape_));
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<float> data) {
  return Tensor({rows, cols}, std::move(data));
}

Tensor Tensor::row_vector(std::vector<float> data) {
  const std::size_t n = data.size();
  return Tensor({1, n}, std::move(data));
}

Tensor Tensor::scalar(float value) { return Tensor({1, 1}, {value}); }

Tensor Tensor::identity(std::size_t n) {
  Tensor out = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) out.at(i, i) = 1.0f;
  return out;
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, float value) {
  return Tensor({rows, cols}, std::vector<float>(rows * cols, value));
}

std::size_t Tensor::cols() const { return shape_.empty() ? 0 : shape_.back(); }

std::size_t Tensor::rows() const {
  if (shape_.empty()) return 0;
  std::size_t r = 1;
  for (std::size_t i = 0; i + 1 < shape_.size(); ++i) r *= shape_[i];
  return r;
}

std::span<float> Tensor::row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }

std::span<const float> Tensor::row(std::size_t r) const {
  return {data_.data() + r * cols(), cols()};
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_string() const { return rsub::shape_string(shape_); }

}  // namespace rsub
