#include "rrcn/ops.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace rrcn {
namespace {

[[noreturn]] void Fail(std::string_view op, const std::string& what) {
  throw ShapeError(std::string(op) + ": " + what);
}

Tape* SameTape(std::string_view op, std::initializer_list<Var> vars) {
  Tape* tape = nullptr;
  for (const Var& v : vars) {
    if (!v.valid()) Fail(op, "unbound input");
    if (tape && v.tape() != tape) Fail(op, "inputs live on different tapes");
    tape = v.tape();
  }
  return tape;
}

// outer x n x inner decomposition of a shape around `axis`.
struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit SplitAt(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.n = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

Shape WithoutAxis(const Shape& shape, std::size_t axis) {
  Shape out = shape;
  out.erase(out.begin() + static_cast<std::ptrdiff_t>(axis));
  return out;
}

// Flat index maps from the broadcast output into each operand.
struct BroadcastMap {
  Shape out;
  bool trivial = false;
  std::vector<std::size_t> a_index, b_index;
};

BroadcastMap Broadcast(std::string_view op, const Shape& a, const Shape& b) {
  BroadcastMap m;
  if (a == b) {
    m.out = a;
    m.trivial = true;
    return m;
  }
  const std::size_t rank = std::max(a.size(), b.size());
  Shape pa(rank - a.size(), 1), pb(rank - b.size(), 1);
  pa.insert(pa.end(), a.begin(), a.end());
  pb.insert(pb.end(), b.begin(), b.end());
  m.out.resize(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    if (pa[i] == pb[i] || pb[i] == 1) {
      m.out[i] = pa[i];
    } else if (pa[i] == 1) {
      m.out[i] = pb[i];
    } else {
      Fail(op, "cannot broadcast " + ShapeString(a) + " with " + ShapeString(b));
    }
  }
  const std::size_t total = ShapeSize(m.out);
  m.a_index.resize(total);
  m.b_index.resize(total);
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t ai = 0, bi = 0;
    for (std::size_t d = 0; d < rank; ++d) {
      ai = ai * pa[d] + (pa[d] == 1 ? 0 : idx[d]);
      bi = bi * pb[d] + (pb[d] == 1 ? 0 : idx[d]);
    }
    m.a_index[flat] = ai;
    m.b_index[flat] = bi;
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < m.out[d]) break;
      idx[d] = 0;
    }
  }
  return m;
}

enum class Binary { kAdd, kSub, kMul };

Var BinaryOp(Binary kind, Var a, Var b) {
  static constexpr std::string_view kNames[] = {"add", "subtract", "multiply"};
  static constexpr OpKind kKinds[] = {OpKind::kAdd, OpKind::kSubtract, OpKind::kMultiply};
  const std::string_view name = kNames[static_cast<int>(kind)];
  Tape* tape = SameTape(name, {a, b});
  auto map = std::make_shared<BroadcastMap>(Broadcast(name, a.shape(), b.shape()));
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(map->out);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = av[map->trivial ? i : map->a_index[i]];
    const double y = bv[map->trivial ? i : map->b_index[i]];
    out[i] = kind == Binary::kAdd ? x + y : kind == Binary::kSub ? x - y : x * y;
  }
  const Var inputs[] = {a, b};
  return tape->Record(kKinds[static_cast<int>(kind)], inputs, std::move(out),
                      [kind, map](const BackwardArgs& args) {
                        const Tensor& x = *args.inputs[0];
                        const Tensor& y = *args.inputs[1];
                        Tensor& gx = *args.grad_inputs[0];
                        Tensor& gy = *args.grad_inputs[1];
                        for (std::size_t i = 0; i < args.grad_output.size(); ++i) {
                          const std::size_t ai = map->trivial ? i : map->a_index[i];
                          const std::size_t bi = map->trivial ? i : map->b_index[i];
                          const double g = args.grad_output[i];
                          switch (kind) {
                            case Binary::kAdd:
                              gx[ai] += g;
                              gy[bi] += g;
                              break;
                            case Binary::kSub:
                              gx[ai] += g;
                              gy[bi] -= g;
                              break;
                            case Binary::kMul:
                              gx[ai] += g * y[bi];
                              gy[bi] += g * x[ai];
                              break;
                          }
                        }
                      });
}

template <typename F, typename DF>
Var Unary(OpKind kind, Var a, F f, DF df_from_output) {
  Tape* tape = SameTape(OpName(kind), {a});
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  const Var inputs[] = {a};
  return tape->Record(kind, inputs, std::move(out), [df_from_output](const BackwardArgs& args) {
    Tensor& g = *args.grad_inputs[0];
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += args.grad_output[i] * df_from_output(args.output[i]);
    }
  });
}

void CheckAxis(std::string_view op, const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    Fail(op, "axis " + std::to_string(axis) + " out of range for " + ShapeString(shape));
  }
}

}  // namespace

Var Add(Var a, Var b) { return BinaryOp(Binary::kAdd, a, b); }
Var Subtract(Var a, Var b) { return BinaryOp(Binary::kSub, a, b); }
Var Multiply(Var a, Var b) { return BinaryOp(Binary::kMul, a, b); }

Var Scale(Var a, double factor) {
  return Unary(
      OpKind::kScale, a, [factor](double x) { return factor * x; },
      [factor](double) { return factor; });
}

Var MatMul(Var a, Var b) {
  Tape* tape = SameTape("matmul", {a, b});
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    Fail("matmul", "incompatible shapes " + ShapeString(av.shape()) + " and " +
                       ShapeString(bv.shape()));
  }
  const std::size_t n = av.dim(0), k = av.dim(1), m = bv.dim(1);
  Tensor out(Shape{n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double x = av[i * k + p];
      if (x == 0.0) continue;
      const double* brow = &bv.values()[p * m];
      double* orow = &out.values()[i * m];
      for (std::size_t j = 0; j < m; ++j) orow[j] += x * brow[j];
    }
  }
  const Var inputs[] = {a, b};
  return tape->Record(OpKind::kMatMul, inputs, std::move(out), [n, k, m](const BackwardArgs& args) {
    const Tensor& x = *args.inputs[0];
    const Tensor& y = *args.inputs[1];
    Tensor& gx = *args.grad_inputs[0];
    Tensor& gy = *args.grad_inputs[1];
    const Tensor& go = args.grad_output;
    for (std::size_t i = 0; i < n; ++i) {
      const double* grow = &go.values()[i * m];
      for (std::size_t p = 0; p < k; ++p) {
        const double* yrow = &y.values()[p * m];
        double* gyrow = &gy.values()[p * m];
        const double xv = x[i * k + p];
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          acc += grow[j] * yrow[j];
          gyrow[j] += xv * grow[j];
        }
        gx[i * k + p] += acc;
      }
    }
  });
}

Var Transpose(Var a) {
  Tape* tape = SameTape("transpose", {a});
  const Tensor& av = a.value();
  if (av.rank() != 2) Fail("transpose", "expects rank 2, got " + ShapeString(av.shape()));
  const std::size_t r = av.dim(0), c = av.dim(1);
  Tensor out(Shape{c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(j, i) = av(i, j);
  const Var inputs[] = {a};
  return tape->Record(OpKind::kTranspose, inputs, std::move(out), [r, c](const BackwardArgs& args) {
    Tensor& g = *args.grad_inputs[0];
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g(i, j) += args.grad_output(j, i);
  });
}

Var Outer(Var a, Var b) {
  Tape* tape = SameTape("outer", {a, b});
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 1 || bv.rank() != 1) {
    Fail("outer", "expects two vectors, got " + ShapeString(av.shape()) + " and " +
                      ShapeString(bv.shape()));
  }
  const std::size_t n = av.size(), m = bv.size();
  Tensor out(Shape{n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out(i, j) = av[i] * bv[j];
  const Var inputs[] = {a, b};
  return tape->Record(OpKind::kOuter, inputs, std::move(out), [n, m](const BackwardArgs& args) {
    const Tensor& x = *args.inputs[0];
    const Tensor& y = *args.inputs[1];
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double g = args.grad_output(i, j);
        (*args.grad_inputs[0])[i] += g * y[j];
        (*args.grad_inputs[1])[j] += g * x[i];
      }
    }
  });
}

Var ChannelOuter(Var a, Var b) {
  Tape* tape = SameTape("channel_outer", {a, b});
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(1)) {
    Fail("channel_outer", "expects [n x d] and [m x d], got " + ShapeString(av.shape()) +
                              " and " + ShapeString(bv.shape()));
  }
  const std::size_t n = av.dim(0), m = bv.dim(0), d = av.dim(1);
  Tensor out(Shape{n, m, d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t l = 0; l < d; ++l) out(i, j, l) = av(i, l) * bv(j, l);
  const Var inputs[] = {a, b};
  return tape->Record(OpKind::kChannelOuter, inputs, std::move(out),
                      [n, m, d](const BackwardArgs& args) {
                        const Tensor& x = *args.inputs[0];
                        const Tensor& y = *args.inputs[1];
                        Tensor& gx = *args.grad_inputs[0];
                        Tensor& gy = *args.grad_inputs[1];
                        for (std::size_t i = 0; i < n; ++i) {
                          for (std::size_t j = 0; j < m; ++j) {
                            for (std::size_t l = 0; l < d; ++l) {
                              const double g = args.grad_output(i, j, l);
                              gx(i, l) += g * y(j, l);
                              gy(j, l) += g * x(i, l);
                            }
                          }
                        }
                      });
}

Var Tanh(Var a) {
  return Unary(
      OpKind::kTanh, a, [](double x) { return std::tanh(x); },
      [](double y) { return 1.0 - y * y; });
}

Var Sigmoid(Var a) {
  return Unary(
      OpKind::kSigmoid, a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double y) { return y * (1.0 - y); });
}

Var Softmax(Var a, std::size_t axis) {
  Tape* tape = SameTape("softmax", {a});
  const Tensor& av = a.value();
  CheckAxis("softmax", av.shape(), axis);
  const AxisSplit s = SplitAt(av.shape(), axis);
  Tensor out(av.shape());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      double mx = av[base];
      for (std::size_t i = 1; i < s.n; ++i) mx = std::max(mx, av[base + i * s.inner]);
      double total = 0.0;
      for (std::size_t i = 0; i < s.n; ++i) {
        const double e = std::exp(av[base + i * s.inner] - mx);
        out[base + i * s.inner] = e;
        total += e;
      }
      for (std::size_t i = 0; i < s.n; ++i) out[base + i * s.inner] /= total;
    }
  }
  const Var inputs[] = {a};
  return tape->Record(OpKind::kSoftmax, inputs, std::move(out), [s](const BackwardArgs& args) {
    const Tensor& y = args.output;
    const Tensor& gy = args.grad_output;
    Tensor& gx = *args.grad_inputs[0];
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.n * s.inner + in;
        double dot = 0.0;
        for (std::size_t i = 0; i < s.n; ++i) {
          dot += gy[base + i * s.inner] * y[base + i * s.inner];
        }
        for (std::size_t i = 0; i < s.n; ++i) {
          const std::size_t idx = base + i * s.inner;
          gx[idx] += y[idx] * (gy[idx] - dot);
        }
      }
    }
  });
}

std::vector<std::size_t> ArgmaxAxis(const Tensor& a, std::size_t axis) {
  CheckAxis("max_axis", a.shape(), axis);
  const AxisSplit s = SplitAt(a.shape(), axis);
  std::vector<std::size_t> arg(s.outer * s.inner);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      std::size_t best = base;
      for (std::size_t i = 1; i < s.n; ++i) {
        const std::size_t idx = base + i * s.inner;
        if (a[idx] > a[best]) best = idx;
      }
      arg[o * s.inner + in] = best;
    }
  }
  return arg;
}

Var MaxAxis(Var a, std::size_t axis) {
  Tape* tape = SameTape("max_axis", {a});
  const Tensor& av = a.value();
  auto arg = std::make_shared<std::vector<std::size_t>>(ArgmaxAxis(av, axis));
  Shape shape = WithoutAxis(av.shape(), axis);
  Tensor out(shape);
  for (std::size_t i = 0; i < arg->size(); ++i) out[i] = av[(*arg)[i]];
  const Var inputs[] = {a};
  return tape->Record(OpKind::kMaxAxis, inputs, std::move(out), [arg](const BackwardArgs& args) {
    Tensor& g = *args.grad_inputs[0];
    for (std::size_t i = 0; i < arg->size(); ++i) g[(*arg)[i]] += args.grad_output[i];
  });
}

Var SumAxis(Var a, std::size_t axis) {
  Tape* tape = SameTape("sum_axis", {a});
  const Tensor& av = a.value();
  CheckAxis("sum_axis", av.shape(), axis);
  const AxisSplit s = SplitAt(av.shape(), axis);
  Tensor out(WithoutAxis(av.shape(), axis));
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.n; ++i)
      for (std::size_t in = 0; in < s.inner; ++in)
        out[o * s.inner + in] += av[(o * s.n + i) * s.inner + in];
  const Var inputs[] = {a};
  return tape->Record(OpKind::kSumAxis, inputs, std::move(out), [s](const BackwardArgs& args) {
    Tensor& g = *args.grad_inputs[0];
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t in = 0; in < s.inner; ++in)
          g[(o * s.n + i) * s.inner + in] += args.grad_output[o * s.inner + in];
  });
}

Var Sum(Var a) {
  Tape* tape = SameTape("sum", {a});
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  const Var inputs[] = {a};
  return tape->Record(OpKind::kSum, inputs, Tensor::Scalar(total), [](const BackwardArgs& args) {
    const double g = args.grad_output[0];
    for (double& v : args.grad_inputs[0]->values()) v += g;
  });
}

Var GatherSubmatrix(Var a, std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
  Tape* tape = SameTape("gather_submatrix", {a});
  const Tensor& av = a.value();
  if (av.rank() < 2) Fail("gather_submatrix", "expects rank >= 2, got " + ShapeString(av.shape()));
  if (rows.empty() || cols.empty()) Fail("gather_submatrix", "empty index list");
  const std::size_t R = av.dim(0), C = av.dim(1);
  const std::size_t inner = av.size() / (R * C);
  for (std::size_t r : rows)
    if (r >= R) Fail("gather_submatrix", "row " + std::to_string(r) + " out of range for " + ShapeString(av.shape()));
  for (std::size_t c : cols)
    if (c >= C) Fail("gather_submatrix", "col " + std::to_string(c) + " out of range for " + ShapeString(av.shape()));
  Shape shape = av.shape();
  shape[0] = rows.size();
  shape[1] = cols.size();
  auto offsets = std::make_shared<std::vector<std::size_t>>();
  offsets->reserve(rows.size() * cols.size());
  Tensor out(shape);
  std::size_t o = 0;
  for (std::size_t r : rows) {
    for (std::size_t c : cols) {
      const std::size_t src = (r * C + c) * inner;
      offsets->push_back(src);
      for (std::size_t l = 0; l < inner; ++l) out[o++] = av[src + l];
    }
  }
  const Var inputs[] = {a};
  return tape->Record(OpKind::kGatherSubmatrix, inputs, std::move(out),
                      [offsets, inner](const BackwardArgs& args) {
                        Tensor& g = *args.grad_inputs[0];
                        std::size_t o = 0;
                        for (std::size_t src : *offsets)
                          for (std::size_t l = 0; l < inner; ++l) g[src + l] += args.grad_output[o++];
                      });
}

Var GatherRows(Var a, std::span<const std::size_t> rows) {
  Tape* tape = SameTape("gather_rows", {a});
  const Tensor& av = a.value();
  if (av.rank() < 1) Fail("gather_rows", "expects rank >= 1");
  if (rows.empty()) Fail("gather_rows", "empty index list");
  const std::size_t R = av.dim(0);
  const std::size_t inner = av.size() / R;
  for (std::size_t r : rows)
    if (r >= R) Fail("gather_rows", "row " + std::to_string(r) + " out of range for " + ShapeString(av.shape()));
  Shape shape = av.shape();
  shape[0] = rows.size();
  Tensor out(shape);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(av.values().begin() + rows[i] * inner, inner, out.values().begin() + i * inner);
  auto idx = std::make_shared<std::vector<std::size_t>>(rows.begin(), rows.end());
  const Var inputs[] = {a};
  return tape->Record(OpKind::kGatherRows, inputs, std::move(out), [idx, inner](const BackwardArgs& args) {
    Tensor& g = *args.grad_inputs[0];
    for (std::size_t i = 0; i < idx->size(); ++i)
      for (std::size_t l = 0; l < inner; ++l) g[(*idx)[i] * inner + l] += args.grad_output[i * inner + l];
  });
}

Var Concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) Fail("concat", "no inputs");
  Tape* tape = parts[0].tape();
  const Shape& first = parts[0].shape();
  CheckAxis("concat", first, axis);
  Shape shape = first;
  shape[axis] = 0;
  for (const Var& p : parts) {
    if (!p.valid() || p.tape() != tape) Fail("concat", "inputs live on different tapes");
    const Shape& ps = p.shape();
    bool ok = ps.size() == first.size();
    for (std::size_t i = 0; ok && i < ps.size(); ++i) ok = i == axis || ps[i] == first[i];
    if (!ok) Fail("concat", "shape " + ShapeString(ps) + " does not match " + ShapeString(first));
    shape[axis] += ps[axis];
  }
  const AxisSplit s = SplitAt(shape, axis);
  Tensor out(shape);
  auto widths = std::make_shared<std::vector<std::size_t>>();
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    const std::size_t w = pv.dim(axis) * s.inner;
    widths->push_back(w);
    for (std::size_t o = 0; o < s.outer; ++o)
      std::copy_n(pv.values().begin() + o * w, w, out.values().begin() + o * s.n * s.inner + offset);
    offset += w;
  }
  const std::size_t row = s.n * s.inner;
  const std::size_t outer = s.outer;
  return tape->Record(OpKind::kConcat, parts, std::move(out), [widths, row, outer](const BackwardArgs& args) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < widths->size(); ++p) {
      const std::size_t w = (*widths)[p];
      Tensor& g = *args.grad_inputs[p];
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < w; ++i) g[o * w + i] += args.grad_output[o * row + offset + i];
      offset += w;
    }
  });
}

Var RowDot(Var a, Var b) {
  Tape* tape = SameTape("row_dot", {a, b});
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || av.shape() != bv.shape()) {
    Fail("row_dot", "expects two equal [n x d] tensors, got " + ShapeString(av.shape()) + " and " +
                        ShapeString(bv.shape()));
  }
  const std::size_t n = av.dim(0), d = av.dim(1);
  Tensor out(Shape{n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < d; ++l) out[i] += av(i, l) * bv(i, l);
  const Var inputs[] = {a, b};
  return tape->Record(OpKind::kRowDot, inputs, std::move(out), [n, d](const BackwardArgs& args) {
    const Tensor& x = *args.inputs[0];
    const Tensor& y = *args.inputs[1];
    for (std::size_t i = 0; i < n; ++i) {
      const double g = args.grad_output[i];
      for (std::size_t l = 0; l < d; ++l) {
        (*args.grad_inputs[0])(i, l) += g * y(i, l);
        (*args.grad_inputs[1])(i, l) += g * x(i, l);
      }
    }
  });
}

Var Reshape(Var a, Shape shape) {
  Tape* tape = SameTape("reshape", {a});
  const Tensor& av = a.value();
  if (ShapeSize(shape) != av.size()) {
    Fail("reshape", "cannot reshape " + ShapeString(av.shape()) + " to " + ShapeString(shape));
  }
  const Var inputs[] = {a};
  return tape->Record(OpKind::kReshape, inputs, av.Reshape(std::move(shape)), [](const BackwardArgs& args) {
    Tensor& g = *args.grad_inputs[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += args.grad_output[i];
  });
}

Var BinaryCrossEntropy(Var predictions, const Tensor& labels, double clamp) {
  Tape* tape = SameTape("binary_cross_entropy", {predictions});
  const Tensor& p = predictions.value();
  if (p.size() != labels.size()) {
    Fail("binary_cross_entropy", "predictions " + ShapeString(p.shape()) + " vs labels " +
                                     ShapeString(labels.shape()));
  }
  for (double y : labels.values()) {
    if (y != 0.0 && y != 1.0) Fail("binary_cross_entropy", "labels must be 0 or 1");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], clamp, 1.0 - clamp);
    total -= labels[i] * std::log(q) + (1.0 - labels[i]) * std::log(1.0 - q);
  }
  auto y = std::make_shared<Tensor>(labels);
  const Var inputs[] = {predictions};
  return tape->Record(OpKind::kBinaryCrossEntropy, inputs, Tensor::Scalar(total),
                      [y, clamp](const BackwardArgs& args) {
                        const Tensor& p = *args.inputs[0];
                        Tensor& g = *args.grad_inputs[0];
                        const double go = args.grad_output[0];
                        for (std::size_t i = 0; i < p.size(); ++i) {
                          if (p[i] < clamp || p[i] > 1.0 - clamp) continue;
                          g[i] += go * (-(*y)[i] / p[i] + (1.0 - (*y)[i]) / (1.0 - p[i]));
                        }
                      });
}

}  // namespace rrcn
