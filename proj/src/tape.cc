#include "rrcn/tape.h"

#include <stdexcept>
#include <string>

namespace rrcn {

std::string_view OpName(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kAdd: return "add";
    case OpKind::kSubtract: return "subtract";
    case OpKind::kMultiply: return "multiply";
    case OpKind::kScale: return "scale";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kOuter: return "outer";
    case OpKind::kChannelOuter: return "channel_outer";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kMaxAxis: return "max_axis";
    case OpKind::kSumAxis: return "sum_axis";
    case OpKind::kSum: return "sum";
    case OpKind::kGatherSubmatrix: return "gather_submatrix";
    case OpKind::kGatherRows: return "gather_rows";
    case OpKind::kConcat: return "concat";
    case OpKind::kRowDot: return "row_dot";
    case OpKind::kReshape: return "reshape";
    case OpKind::kBinaryCrossEntropy: return "binary_cross_entropy";
    case OpKind::kSelectConv: return "select_conv";
  }
  return "unknown";
}

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw std::logic_error("value() on an unbound Var");
  return tape_->value(*this);
}

void Tape::CheckOwned(Var v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) {
    throw std::invalid_argument("Var does not belong to this tape");
  }
}

Var Tape::Leaf(Tensor value) {
  if (!value.AllFinite()) throw NumericError("leaf: non-finite input " + ShapeString(value.shape()));
  if (backward_done_) throw std::logic_error("cannot extend a tape after Backward()");
  nodes_.push_back(Node{OpKind::kLeaf, {}, std::move(value), nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::Record(OpKind kind, std::span<const Var> inputs, Tensor value, BackwardFn backward) {
  if (backward_done_) throw std::logic_error("cannot extend a tape after Backward()");
  if (!value.AllFinite()) {
    throw NumericError(std::string(OpName(kind)) + ": non-finite output " +
                       ShapeString(value.shape()));
  }
  Node node{kind, {}, std::move(value), std::move(backward)};
  node.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    CheckOwned(in);
    node.inputs.push_back(in.id_);
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::Backward(Var loss) {
  CheckOwned(loss);
  if (backward_done_) throw std::logic_error("Backward() already ran on this tape");
  const Tensor& loss_value = nodes_[loss.id_].value;
  if (loss_value.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + ShapeString(loss_value.shape()));
  }

  grads_.clear();
  grads_.reserve(nodes_.size());
  for (const Node& n : nodes_) grads_.emplace_back(n.value.shape(), 0.0);
  std::vector<char> reached(nodes_.size(), 0);
  grads_[loss.id_][0] = 1.0;
  reached[loss.id_] = 1;

  std::vector<const Tensor*> in_values;
  std::vector<Tensor*> in_grads;
  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    if (!reached[id]) continue;
    Node& node = nodes_[id];
    if (node.inputs.empty() || !node.backward) continue;
    in_values.clear();
    in_grads.clear();
    for (std::size_t in : node.inputs) {
      in_values.push_back(&nodes_[in].value);
      in_grads.push_back(&grads_[in]);
      reached[in] = 1;
    }
    node.backward(BackwardArgs{in_values, node.value, grads_[id], in_grads});
  }
  for (std::size_t id = 0; id <= loss.id_; ++id) {
    if (reached[id] && !grads_[id].AllFinite()) {
      throw NumericError("backward: non-finite gradient at node " + std::to_string(id) + " (" +
                         std::string(OpName(nodes_[id].kind)) + ")");
    }
  }
  backward_done_ = true;
}

const Tensor& Tape::value(Var v) const {
  CheckOwned(v);
  return nodes_[v.id_].value;
}

const Tensor& Tape::grad(Var v) const {
  CheckOwned(v);
  if (!backward_done_) throw std::logic_error("grad(): Backward() has not run");
  return grads_[v.id_];
}

OpKind Tape::kind(Var v) const {
  CheckOwned(v);
  return nodes_[v.id_].kind;
}

}  // namespace rrcn
