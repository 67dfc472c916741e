#ifndef RRCN_OPS_H_
#define RRCN_OPS_H_

#include <cstddef>
#include <span>
#include <vector>

#include "rrcn/tape.h"
#include "rrcn/tensor.h"

// Differentiable operations recorded on a Tape. Every op validates shapes
// and throws ShapeError naming the op and the offending shapes.
namespace rrcn {

// Elementwise with NumPy-style broadcasting (shapes aligned from the right,
// size-1 or missing dims stretch).
Var Add(Var a, Var b);
Var Subtract(Var a, Var b);
Var Multiply(Var a, Var b);
Var Scale(Var a, double factor);

// [n x k] * [k x m] -> [n x m]
Var MatMul(Var a, Var b);
Var Transpose(Var a);
// [n] (x) [m] -> [n x m]
Var Outer(Var a, Var b);
// Per-channel outer product: [n x d], [m x d] -> [n x m x d] with
// out(i, j, l) = a(i, l) * b(j, l).
Var ChannelOuter(Var a, Var b);

Var Tanh(Var a);
Var Sigmoid(Var a);
// Max-subtracted softmax along `axis`.
Var Softmax(Var a, std::size_t axis);
// Max along `axis` (removed from the shape). Ties resolve to the lowest
// index; backward routes the gradient to the recorded argmax only.
Var MaxAxis(Var a, std::size_t axis);
Var SumAxis(Var a, std::size_t axis);
Var Sum(Var a);

// Rows x cols selection over the first two axes, keeping trailing axes.
Var GatherSubmatrix(Var a, std::span<const std::size_t> rows, std::span<const std::size_t> cols);
// Selects entries along axis 0; repeated indices accumulate in backward.
Var GatherRows(Var a, std::span<const std::size_t> rows);
Var Concat(std::span<const Var> parts, std::size_t axis);
// [n x d], [n x d] -> [n], out(i) = sum_l a(i, l) * b(i, l).
Var RowDot(Var a, Var b);
Var Reshape(Var a, Shape shape);

// Summed binary cross-entropy of predictions against 0/1 labels, with the
// predictions clamped to [clamp, 1 - clamp].
Var BinaryCrossEntropy(Var predictions, const Tensor& labels, double clamp = 1e-7);

// Flat input offsets of the maxima along `axis`, in output order, with the
// same lowest-index tie rule MaxAxis records for its backward pass.
std::vector<std::size_t> ArgmaxAxis(const Tensor& a, std::size_t axis);

}  // namespace rrcn

#endif  // RRCN_OPS_H_
