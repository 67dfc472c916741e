#include "rrcn/conv.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "json.hpp"
#include "rrcn/ops.h"

namespace rrcn {

KernelParams KernelParams::Random(std::size_t k, std::size_t d, Rng& rng) {
  KernelParams p{k, Tensor(Shape{k, k, d})};
  const double bound = 1.0 / static_cast<double>(k);
  for (double& v : p.weights.values()) v = UniformRange(rng, -bound, bound);
  return p;
}

KernelParams KernelParams::Constant(std::size_t k, std::size_t d, double value) {
  return {k, Tensor(Shape{k, k, d}, value)};
}

std::vector<std::size_t> SelectIndices(ConvMode mode, std::size_t fixed, std::size_t k, std::size_t L,
                                       std::size_t dilation, Rng* rng) {
  if (k < 2 || k > L) {
    throw std::invalid_argument("select_indices: need 2 <= k <= L, got k=" + std::to_string(k) +
                                ", L=" + std::to_string(L));
  }
  if (fixed >= L) throw std::invalid_argument("select_indices: fixed index out of range");
  std::vector<std::size_t> out;
  out.reserve(k);
  switch (mode) {
    case ConvMode::kConventional:
      for (std::size_t i = 0; i < k; ++i) out.push_back((fixed + i) % L);
      break;
    case ConvMode::kDilated: {
      if (dilation == 0) throw std::invalid_argument("select_indices: dilation must be positive");
      std::vector<char> used(L, 0);
      for (std::size_t i = 0; i < k; ++i) {
        std::size_t idx = (fixed + i * dilation) % L;
        while (used[idx]) idx = (idx + 1) % L;
        used[idx] = 1;
        out.push_back(idx);
      }
      break;
    }
    case ConvMode::kRandom: {
      if (rng == nullptr) throw std::invalid_argument("select_indices: random mode needs an rng");
      std::vector<std::size_t> pool;
      pool.reserve(L - 1);
      for (std::size_t i = 0; i < L; ++i)
        if (i != fixed) pool.push_back(i);
      out.push_back(fixed);
      // Partial Fisher-Yates.
      for (std::size_t i = 0; i + 1 < k; ++i) {
        const std::size_t j = i + UniformIndex(*rng, pool.size() - i);
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
      }
      break;
    }
    case ConvMode::kReinforced:
      throw std::invalid_argument("select_indices: reinforced selection comes from a policy");
  }
  std::sort(out.begin(), out.end());
  return out;
}

FixedPatternSelector::FixedPatternSelector(ConvMode mode, std::size_t L, std::size_t k,
                                           std::size_t dilation, Rng* rng)
    : mode_(mode), L_(L), k_(k), dilation_(dilation), rng_(rng) {
  if (mode == ConvMode::kReinforced) {
    throw std::invalid_argument("FixedPatternSelector: use a policy selector for reinforced mode");
  }
  if (mode == ConvMode::kRandom && rng == nullptr) {
    throw std::invalid_argument("FixedPatternSelector: random mode needs an rng");
  }
  if (k < 2 || k > L) throw std::invalid_argument("FixedPatternSelector: need 2 <= k <= L");
}

SelectionTrace FixedPatternSelector::Select(std::size_t x, std::size_t y) {
  SelectionTrace t;
  t.x = x;
  t.y = y;
  t.rows = SelectIndices(mode_, x, k_, L_, dilation_, rng_);
  t.cols = SelectIndices(mode_, y, k_, L_, dilation_, rng_);
  return t;
}

std::vector<double> ConvolveAt(const Tensor& H, std::span<const std::size_t> rows,
                               std::span<const std::size_t> cols, const Tensor& kernel,
                               ChannelMode channel_mode) {
  if (H.rank() != 3 || kernel.rank() != 3) throw ShapeError("convolve_at: expects rank-3 tensors");
  const std::size_t k = kernel.dim(0), d = H.dim(2);
  if (rows.size() != k || cols.size() != k || kernel.dim(1) != k || kernel.dim(2) != d) {
    throw ShapeError("convolve_at: kernel " + ShapeString(kernel.shape()) + " does not match " +
                     std::to_string(rows.size()) + "x" + std::to_string(cols.size()) + " selection of " +
                     ShapeString(H.shape()));
  }
  for (std::size_t r : rows)
    if (r >= H.dim(0)) throw std::out_of_range("convolve_at: row index out of range");
  for (std::size_t c : cols)
    if (c >= H.dim(1)) throw std::out_of_range("convolve_at: column index out of range");
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = 0; l < d; ++l) out[l] += kernel(i, j, l) * H(rows[i], cols[j], l);
  if (channel_mode == ChannelMode::kSummed) {
    double total = 0.0;
    for (double v : out) total += v;
    std::fill(out.begin(), out.end(), total);
  }
  return out;
}

ConvLayerOutput ConvLayer(Var H, Var kernel, IndexSelector& selector, ChannelMode channel_mode) {
  const Tensor& hv = H.value();
  const Tensor& wv = kernel.value();
  if (hv.rank() != 3 || hv.dim(0) != hv.dim(1)) {
    throw ShapeError("conv_layer: expects an L x L x d tensor, got " + ShapeString(hv.shape()));
  }
  const std::size_t L = hv.dim(0), d = hv.dim(2), k = selector.k();
  if (wv.shape() != Shape{k, k, d}) {
    throw ShapeError("conv_layer: kernel " + ShapeString(wv.shape()) + " does not match k=" +
                     std::to_string(k) + ", d=" + std::to_string(d));
  }
  if (H.tape() != kernel.tape()) throw ShapeError("conv_layer: inputs live on different tapes");

  ConvLayerOutput result;
  result.traces.reserve(L * L);
  // Flat offsets H(rows[i], cols[j], 0) per position, k*k each.
  auto offsets = std::make_shared<std::vector<std::size_t>>();
  offsets->reserve(L * L * k * k);
  Tensor out(Shape{L, L, d});
  const double* h = hv.values().data();
  const double* w = wv.values().data();
  for (std::size_t x = 0; x < L; ++x) {
    for (std::size_t y = 0; y < L; ++y) {
      SelectionTrace t = selector.Select(x, y);
      if (t.rows.size() != k || t.cols.size() != k) {
        throw ShapeError("conv_layer: selector returned a support of the wrong size");
      }
      double* o = &out(x, y, 0);
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          if (t.rows[i] >= L || t.cols[j] >= L) throw std::out_of_range("conv_layer: index out of range");
          const std::size_t off = (t.rows[i] * L + t.cols[j]) * d;
          offsets->push_back(off);
          const double* wk = w + (i * k + j) * d;
          for (std::size_t l = 0; l < d; ++l) o[l] += wk[l] * h[off + l];
        }
      }
      if (channel_mode == ChannelMode::kSummed) {
        double total = 0.0;
        for (std::size_t l = 0; l < d; ++l) total += o[l];
        for (std::size_t l = 0; l < d; ++l) o[l] = total;
      }
      ++result.applications;
      result.traces.push_back(std::move(t));
    }
  }

  const bool summed = channel_mode == ChannelMode::kSummed;
  const Var inputs[] = {H, kernel};
  result.output = H.tape()->Record(
      OpKind::kSelectConv, inputs, std::move(out), [offsets, L, k, d, summed](const BackwardArgs& args) {
        const double* h = args.inputs[0]->values().data();
        const double* w = args.inputs[1]->values().data();
        double* gh = args.grad_inputs[0]->values().data();
        double* gw = args.grad_inputs[1]->values().data();
        const double* go = args.grad_output.values().data();
        std::vector<double> g(d);
        std::size_t n = 0;
        for (std::size_t pos = 0; pos < L * L; ++pos) {
          if (summed) {
            double total = 0.0;
            for (std::size_t l = 0; l < d; ++l) total += go[pos * d + l];
            std::fill(g.begin(), g.end(), total);
          } else {
            std::copy_n(go + pos * d, d, g.begin());
          }
          for (std::size_t ij = 0; ij < k * k; ++ij, ++n) {
            const std::size_t off = (*offsets)[n];
            const double* wk = w + ij * d;
            double* gwk = gw + ij * d;
            for (std::size_t l = 0; l < d; ++l) {
              gh[off + l] += wk[l] * g[l];
              gwk[l] += h[off + l] * g[l];
            }
          }
        }
      });
  return result;
}

Var RowMaxPool(Var conv_output, PoolAxis axis) {
  if (conv_output.shape().size() != 3) {
    throw ShapeError("row_max_pool: expects L x L x d, got " + ShapeString(conv_output.shape()));
  }
  return MaxAxis(conv_output, axis == PoolAxis::kRow ? 1 : 0);
}

Var MultiDimAttention(std::span<const Var> features, Var wd, Var* weights_out) {
  if (features.empty()) throw ShapeError("multi_dim_attention: needs at least one feature map");
  const Shape shape = features[0].shape();
  if (shape.size() != 2) throw ShapeError("multi_dim_attention: features must be L x d");
  for (const Var& m : features) {
    if (m.shape() != shape) {
      throw ShapeError("multi_dim_attention: shape mismatch " + ShapeString(m.shape()) + " vs " +
                       ShapeString(shape));
    }
  }
  if (wd.shape() != Shape{shape[1], 1}) {
    throw ShapeError("multi_dim_attention: W_d must be " + ShapeString({shape[1], 1}) + ", got " +
                     ShapeString(wd.shape()));
  }
  std::vector<Var> scores;
  scores.reserve(features.size());
  for (const Var& m : features) scores.push_back(Tanh(MatMul(m, wd)));
  Var alpha = Softmax(Concat(scores, 1), 1);  // L x K
  if (weights_out) *weights_out = alpha;
  Var combined;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const std::size_t col[] = {i};
    std::vector<std::size_t> all_rows(shape[0]);
    for (std::size_t r = 0; r < shape[0]; ++r) all_rows[r] = r;
    Var term = Multiply(features[i], GatherSubmatrix(alpha, all_rows, col));
    combined = combined.valid() ? Add(combined, term) : term;
  }
  return combined;
}

namespace {

// All sorted k-subsets of [0, L) that contain `fixed`.
std::vector<std::vector<std::size_t>> SubsetsContaining(std::size_t fixed, std::size_t k, std::size_t L) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> current;
  auto rec = [&](auto&& self, std::size_t next) -> void {
    if (current.size() == k) {
      if (std::find(current.begin(), current.end(), fixed) != current.end()) out.push_back(current);
      return;
    }
    for (std::size_t i = next; i < L; ++i) {
      current.push_back(i);
      self(self, i + 1);
      current.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

}  // namespace

std::vector<OraclePosition> OracleEnumerate(const Tensor& H, const Tensor& kernel, ChannelMode channel_mode) {
  if (H.rank() != 3 || H.dim(0) != H.dim(1)) throw ShapeError("oracle_enumerate: expects an L x L x d tensor");
  const std::size_t L = H.dim(0), k = kernel.dim(0);
  if (L > 8) {
    throw std::invalid_argument("oracle_enumerate: L=" + std::to_string(L) +
                                " is too large to enumerate (limit 8)");
  }
  if (k < 2 || k > L) throw std::invalid_argument("oracle_enumerate: need 2 <= k <= L");
  std::vector<OraclePosition> out;
  out.reserve(L * L);
  for (std::size_t x = 0; x < L; ++x) {
    const auto row_sets = SubsetsContaining(x, k, L);
    for (std::size_t y = 0; y < L; ++y) {
      const auto col_sets = SubsetsContaining(y, k, L);
      OraclePosition pos{x, y, {}, 0};
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& rows : row_sets) {
        for (const auto& cols : col_sets) {
          auto value = ConvolveAt(H, rows, cols, kernel, channel_mode);
          double total = 0.0;
          for (double v : value) total += v;
          if (total > best) {
            best = total;
            pos.argmax = pos.combinations.size();
          }
          pos.combinations.push_back({rows, cols, std::move(value)});
        }
      }
      out.push_back(std::move(pos));
    }
  }
  return out;
}

void WriteTracesJsonl(std::ostream& out, std::span<const SelectionTrace> traces, ConvMode mode) {
  for (const SelectionTrace& t : traces) {
    nlohmann::json j = {{"x", t.x}, {"y", t.y}, {"rows", t.rows}, {"cols", t.cols}, {"mode", ToString(mode)}};
    out << j.dump() << '\n';
  }
}

}  // namespace rrcn
