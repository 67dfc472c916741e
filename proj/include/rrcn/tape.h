#ifndef RRCN_TAPE_H_
#define RRCN_TAPE_H_

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "rrcn/tensor.h"

namespace rrcn {

enum class OpKind {
  kLeaf,
  kAdd,
  kSubtract,
  kMultiply,
  kScale,
  kMatMul,
  kTranspose,
  kOuter,
  kChannelOuter,
  kTanh,
  kSigmoid,
  kSoftmax,
  kMaxAxis,
  kSumAxis,
  kSum,
  kGatherSubmatrix,
  kGatherRows,
  kConcat,
  kRowDot,
  kReshape,
  kBinaryCrossEntropy,
  kSelectConv,
};

std::string_view OpName(OpKind kind);

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the Tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

struct BackwardArgs {
  std::span<const Tensor* const> inputs;
  const Tensor& output;
  const Tensor& grad_output;
  // Accumulate into these; they are pre-sized to the matching input shape.
  std::span<Tensor* const> grad_inputs;
};

using BackwardFn = std::function<void(const BackwardArgs&)>;

// Define-by-run record of tensor operations. Nodes are appended in
// topological order, so a reverse sweep over ids is a valid backward order.
//
// A Tape supports a single Backward() call; a second call throws. Build a
// new Tape for the next forward pass.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Records an input or parameter. Rejects non-finite values.
  Var Leaf(Tensor value);

  // Records the result of an op. `backward` may be empty for ops whose
  // inputs never need gradients.
  Var Record(OpKind kind, std::span<const Var> inputs, Tensor value, BackwardFn backward);

  void Backward(Var loss);

  const Tensor& value(Var v) const;
  // Gradient of the loss w.r.t. `v`; zero for nodes the loss does not reach.
  const Tensor& grad(Var v) const;
  OpKind kind(Var v) const;

  bool has_gradients() const { return backward_done_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    OpKind kind;
    std::vector<std::size_t> inputs;
    Tensor value;
    BackwardFn backward;
  };

  void CheckOwned(Var v) const;

  // A deque keeps value references stable while later ops are recorded.
  std::deque<Node> nodes_;
  std::vector<Tensor> grads_;
  bool backward_done_ = false;
};

}  // namespace rrcn

#endif  // RRCN_TAPE_H_
