#pragma once

#include <span>
#include <string_view>

#include "rsub/numerics/tensor.hpp"

/// Pure dense kernels. Every kernel rejects non-finite inputs with a
/// numeric-domain error and mismatched shapes with a contract error.
namespace rsub::kernels {

enum class Op {
  kMatmul,
  kAdd,
  kScale,
  kRowSoftmax,
  kGelu,
  kRmsNormalize,
  kEmbeddingGather,
  kCrossEntropy,
};

std::string_view to_string(Op op);

/// Generic dispatch. Operand conventions: scale takes a 1x1 factor as its second
/// operand; rms_normalize takes the gain row second; embedding_gather takes the
/// table and a row of integral ids; cross_entropy takes logits and one-hot rows
/// and returns the mean loss as a 1x1 tensor.
Tensor evaluate(Op op, std::span<const Tensor> operands);

inline constexpr float kRmsEpsilon = 1e-5f;

Tensor matmul(const Tensor& a, const Tensor& b);
/// a * b^T
Tensor matmul_bt(const Tensor& a, const Tensor& b);
/// a^T * b
Tensor matmul_at(const Tensor& a, const Tensor& b);

/// Elementwise sum; b may also be a single row broadcast over a's rows.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float factor);
Tensor transpose(const Tensor& a);

Tensor row_softmax(const Tensor& x);

float gelu(float x);
float gelu_derivative(float x);
Tensor gelu(const Tensor& x);

Tensor rms_normalize(const Tensor& x, const Tensor& gain, float eps = kRmsEpsilon);

Tensor embedding_gather(const Tensor& table, std::span<const int> ids);

/// Mean cross-entropy of rows of logits against one-hot target rows.
double cross_entropy(const Tensor& logits, const Tensor& one_hot);
/// Same, with class indices instead of one-hot rows.
double cross_entropy(const Tensor& logits, std::span<const int> targets);

void check_finite(const Tensor& t, std::string_view op);
void check_same_shape(const Tensor& a, const Tensor& b, std::string_view op);

}  // namespace rsub::kernels
