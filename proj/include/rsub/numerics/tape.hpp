#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rsub/numerics/tensor.hpp"

namespace rsub::ad {

enum class OpKind {
  kLeaf,
  kMatmul,
  kAdd,
  kSub,
  kScale,
  kHadamard,
  kRowSoftmax,
  kGelu,
  kRmsNormalize,
  kEmbeddingGather,
  kCrossEntropy,
  kCausalAttention,
  kGatherRows,
  kScatterRows,
  kTranspose,
  kSliceCols,
  kGatherCols,
  kSkewFromUpper,
  kCayley,
  kSigmoid,
  kSum,
};

class Tape;

/// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
};

/// Parameter name -> gradient of the loss.
using GradientMap = std::map<std::string, Tensor>;

/// Reverse-mode tape. Nodes are appended in evaluation order, so every node's
/// operands precede it; backward walks the tape once in reverse.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Trainable leaf; its gradient is reported under `name`.
  Var parameter(std::string name, Tensor value);

  /// Appends an op node. The backward rule is dropped when no operand needs a gradient.
  Var record(OpKind kind, Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& value(Var v) const { return value(v.id); }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(Var v) const { return requires_grad(v.id); }
  OpKind kind(std::size_t id) const { return nodes_[id].kind; }
  std::size_t size() const { return nodes_.size(); }

  /// Gradient buffer of a node, zero-initialized on first access.
  Tensor& grad(std::size_t id);

  /// Exact reverse-mode gradients of a 1x1 loss for every trainable leaf.
  GradientMap backward(Var loss);

 private:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    Tensor value;
    std::optional<Tensor> grad;
    std::vector<std::size_t> inputs;
    bool requires_grad = false;
    std::optional<std::string> parameter;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
};

}  // namespace rsub::ad
