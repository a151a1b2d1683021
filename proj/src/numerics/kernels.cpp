#include "rsub/numerics/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "rsub/common/error.hpp"

namespace rsub::kernels {
namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using Map = Eigen::Map<RowMatrix>;

ConstMap view(const Tensor& t) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

Map view(Tensor& t) {
  return Map(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void shape_error(std::string_view op, const Tensor& a, const Tensor& b) {
  fail(ErrorKind::kContract, std::string(op) + ": incompatible shapes " + a.shape_string() +
                                 " and " + b.shape_string());
}

}  // namespace

std::string_view to_string(Op op) {
  switch (op) {
    case Op::kMatmul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kScale: return "scale";
    case Op::kRowSoftmax: return "row_softmax";
    case Op::kGelu: return "gelu";
    case Op::kRmsNormalize: return "rms_normalize";
    case Op::kEmbeddingGather: return "embedding_gather";
    case Op::kCrossEntropy: return "cross_entropy";
  }
  return "unknown";
}

void check_finite(const Tensor& t, std::string_view op) {
  if (!t.all_finite()) {
    fail(ErrorKind::kNumericDomain,
         std::string(op) + ": non-finite value in operand of shape " + t.shape_string());
  }
}

void check_same_shape(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error(op, a, b);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  check_finite(a, "matmul");
  check_finite(b, "matmul");
  Tensor out = Tensor::zeros(a.rows(), b.cols());
  if (a.cols() > 0) view(out).noalias() = view(a) * view(b);
  return out;
}

Tensor matmul_bt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) shape_error("matmul", a, b);
  check_finite(a, "matmul");
  check_finite(b, "matmul");
  Tensor out = Tensor::zeros(a.rows(), b.rows());
  if (a.cols() > 0) view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

Tensor matmul_at(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) shape_error("matmul", a, b);
  check_finite(a, "matmul");
  check_finite(b, "matmul");
  Tensor out = Tensor::zeros(a.cols(), b.cols());
  if (a.rows() > 0) view(out).noalias() = view(a).transpose() * view(b);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_finite(a, "add");
  check_finite(b, "add");
  Tensor out = a;
  if (a.rows() == b.rows() && a.cols() == b.cols()) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  } else if (b.rows() == 1 && b.cols() == a.cols()) {
    const std::size_t c = a.cols();
    for (std::size_t r = 0; r < a.rows(); ++r) {
      float* dst = out.data() + r * c;
      for (std::size_t j = 0; j < c; ++j) dst[j] += b[j];
    }
  } else {
    shape_error("add", a, b);
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  check_finite(a, "sub");
  check_finite(b, "sub");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "hadamard");
  check_finite(a, "hadamard");
  check_finite(b, "hadamard");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

Tensor scale(const Tensor& a, float factor) {
  check_finite(a, "scale");
  require(std::isfinite(factor), ErrorKind::kNumericDomain, "scale: non-finite factor");
  Tensor out = a;
  for (float& v : out.values()) v *= factor;
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor out = Tensor::zeros(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) out.at(c, r) = a.at(r, c);
  }
  return out;
}

Tensor row_softmax(const Tensor& x) {
  check_finite(x, "row_softmax");
  Tensor out = x;
  const std::size_t c = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    float* row = out.data() + r * c;
    const float mx = *std::max_element(row, row + c);
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      row[j] = std::exp(row[j] - mx);
      total += row[j];
    }
    const float inv = static_cast<float>(1.0 / total);
    for (std::size_t j = 0; j < c; ++j) row[j] *= inv;
  }
  return out;
}

float gelu(float x) {
  return 0.5f * x * (1.0f + std::erf(x * static_cast<float>(std::numbers::sqrt2 / 2.0)));
}

float gelu_derivative(float x) {
  const float cdf = 0.5f * (1.0f + std::erf(x * static_cast<float>(std::numbers::sqrt2 / 2.0)));
  const float pdf =
      std::exp(-0.5f * x * x) * static_cast<float>(std::numbers::inv_sqrtpi / std::numbers::sqrt2);
  return cdf + x * pdf;
}

Tensor gelu(const Tensor& x) {
  check_finite(x, "gelu");
  Tensor out = x;
  for (float& v : out.values()) v = gelu(v);
  return out;
}

Tensor rms_normalize(const Tensor& x, const Tensor& gain, float eps) {
  if (gain.size() != x.cols()) shape_error("rms_normalize", x, gain);
  check_finite(x, "rms_normalize");
  check_finite(gain, "rms_normalize");
  Tensor out = x;
  const std::size_t c = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    float* row = out.data() + r * c;
    double ss = 0.0;
    for (std::size_t j = 0; j < c; ++j) ss += static_cast<double>(row[j]) * row[j];
    const float inv = static_cast<float>(1.0 / std::sqrt(ss / static_cast<double>(c) + eps));
    for (std::size_t j = 0; j < c; ++j) row[j] = row[j] * inv * gain[j];
  }
  return out;
}

Tensor embedding_gather(const Tensor& table, std::span<const int> ids) {
  const std::size_t c = table.cols();
  Tensor out = Tensor::zeros(ids.size(), c);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= table.rows()) {
      fail(ErrorKind::kContract, "embedding_gather: id " + std::to_string(ids[i]) +
                                     " outside table of shape " + table.shape_string());
    }
    std::copy_n(table.data() + static_cast<std::size_t>(ids[i]) * c, c, out.data() + i * c);
  }
  return out;
}

double cross_entropy(const Tensor& logits, std::span<const int> targets) {
  check_finite(logits, "cross_entropy");
  require(targets.size() == logits.rows() && logits.rows() > 0, ErrorKind::kContract,
          "cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
              logits.shape_string());
  const std::size_t c = logits.cols();
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    require(targets[r] >= 0 && static_cast<std::size_t>(targets[r]) < c, ErrorKind::kContract,
            "cross_entropy: target class out of range");
    auto row = logits.row(r);
    const float mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (float v : row) z += std::exp(static_cast<double>(v) - mx);
    total += std::log(z) + mx - row[static_cast<std::size_t>(targets[r])];
  }
  return total / static_cast<double>(logits.rows());
}

double cross_entropy(const Tensor& logits, const Tensor& one_hot) {
  check_same_shape(logits, one_hot, "cross_entropy");
  std::vector<int> targets(one_hot.rows());
  for (std::size_t r = 0; r < one_hot.rows(); ++r) {
    int hot = -1;
    for (std::size_t j = 0; j < one_hot.cols(); ++j) {
      const float v = one_hot.at(r, j);
      if (v == 1.0f && hot < 0) {
        hot = static_cast<int>(j);
      } else if (v != 0.0f) {
        fail(ErrorKind::kContract, "cross_entropy: target row " + std::to_string(r) +
                                       " is not one-hot");
      }
    }
    require(hot >= 0, ErrorKind::kContract,
            "cross_entropy: target row " + std::to_string(r) + " is not one-hot");
    targets[r] = hot;
  }
  return cross_entropy(logits, targets);
}

Tensor evaluate(Op op, std::span<const Tensor> operands) {
  auto expect = [&](std::size_t n) {
    require(operands.size() == n, ErrorKind::kContract,
            std::string(to_string(op)) + ": expected " + std::to_string(n) + " operands, got " +
                std::to_string(operands.size()));
  };
  switch (op) {
    case Op::kMatmul:
      expect(2);
      return matmul(operands[0], operands[1]);
    case Op::kAdd:
      expect(2);
      return add(operands[0], operands[1]);
    case Op::kScale:
      expect(2);
      require(operands[1].size() == 1, ErrorKind::kContract, "scale: factor must be 1x1");
      return scale(operands[0], operands[1][0]);
    case Op::kRowSoftmax:
      expect(1);
      return row_softmax(operands[0]);
    case Op::kGelu:
      expect(1);
      return gelu(operands[0]);
    case Op::kRmsNormalize:
      expect(2);
      return rms_normalize(operands[0], operands[1]);
    case Op::kEmbeddingGather: {
      expect(2);
      std::vector<int> ids;
      for (float v : operands[1].values()) {
        require(std::isfinite(v) && v == std::floor(v), ErrorKind::kContract,
                "embedding_gather: ids must be integral");
        ids.push_back(static_cast<int>(v));
      }
      return embedding_gather(operands[0], ids);
    }
    case Op::kCrossEntropy:
      expect(2);
      return Tensor::scalar(static_cast<float>(cross_entropy(operands[0], operands[1])));
  }
  fail(ErrorKind::kContract, "unknown kernel");
}

}  // namespace rsub::kernels
