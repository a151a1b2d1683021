#include "rsub/numerics/tape.hpp"

#include "rsub/common/error.hpp"

namespace rsub::ad {

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(std::string name, Tensor value) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = true;
  node.parameter = std::move(name);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(OpKind kind, Tensor value, std::vector<std::size_t> inputs,
                 BackwardFn backward) {
  Node node;
  node.kind = kind;
  node.value = std::move(value);
  for (std::size_t in : inputs) {
    require(in < nodes_.size(), ErrorKind::kContract, "tape operand does not precede its node");
    node.requires_grad = node.requires_grad || nodes_[in].requires_grad;
  }
  node.inputs = std::move(inputs);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t id) {
  Node& node = nodes_[id];
  if (!node.grad) node.grad = Tensor(node.value.shape());
  return *node.grad;
}

GradientMap Tape::backward(Var loss) {
  require(loss.tape == this && loss.id < nodes_.size(), ErrorKind::kContract,
          "backward: loss node is not on this tape");
  require(value(loss).size() == 1, ErrorKind::kContract,
          "backward: loss must be scalar, got shape " + value(loss).shape_string());
  for (Node& node : nodes_) node.grad.reset();
  grad(loss.id)[0] = 1.0f;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || !node.grad || !node.backward) continue;
    node.backward(*this, i);
  }
  GradientMap out;
  for (std::size_t i = 0; i <= loss.id; ++i) {
    Node& node = nodes_[i];
    if (!node.parameter) continue;
    out.emplace(*node.parameter, node.grad ? *node.grad : Tensor(node.value.shape()));
  }
  return out;
}

}  // namespace rsub::ad
