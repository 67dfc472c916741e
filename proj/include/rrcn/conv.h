#ifndef RRCN_CONV_H_
#define RRCN_CONV_H_

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rrcn/config.h"
#include "rrcn/rng.h"
#include "rrcn/tape.h"
#include "rrcn/tensor.h"

namespace rrcn {

// Depthwise k x k x d kernel shared across all output positions.
struct KernelParams {
  std::size_t k = 0;
  Tensor weights;  // k x k x d

  static KernelParams Random(std::size_t k, std::size_t d, Rng& rng);
  static KernelParams Constant(std::size_t k, std::size_t d, double value);
};

// Support of one kernel application at output position (x, y). rows/cols
// are sorted ascending and contain x and y respectively. In reinforced
// mode the sampled indices are also kept in draw order.
struct SelectionTrace {
  std::size_t x = 0;
  std::size_t y = 0;
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  std::vector<std::size_t> sampled_rows;
  std::vector<std::size_t> sampled_cols;
  double log_prob = 0.0;
};

// Chooses the support for each output position.
class IndexSelector {
 public:
  virtual ~IndexSelector() = default;
  virtual SelectionTrace Select(std::size_t x, std::size_t y) = 0;
  virtual ConvMode mode() const = 0;
  virtual std::size_t k() const = 0;
};

// Row (or column) indices for a fixed index under the non-policy modes.
// conventional: {x, x+1, ..., x+k-1} mod L; dilated: {x, x+D, ...} mod L
// (a wrapped collision advances to the next free index); random: x plus
// k-1 distinct uniform draws from [0, L) \ {x}. Result sorted ascending.
// Throws std::invalid_argument for k > L, k < 2, or reinforced mode.
std::vector<std::size_t> SelectIndices(ConvMode mode, std::size_t fixed, std::size_t k, std::size_t L,
                                       std::size_t dilation, Rng* rng);

class FixedPatternSelector : public IndexSelector {
 public:
  // `rng` is required for random mode and must outlive the selector.
  FixedPatternSelector(ConvMode mode, std::size_t L, std::size_t k, std::size_t dilation = 2,
                       Rng* rng = nullptr);
  SelectionTrace Select(std::size_t x, std::size_t y) override;
  ConvMode mode() const override { return mode_; }
  std::size_t k() const override { return k_; }

 private:
  ConvMode mode_;
  std::size_t L_, k_, dilation_;
  Rng* rng_;
};

// out[l] = sum_i sum_j w(i, j, l) * H(rows[i], cols[j], l); in summed mode
// every channel carries the channel sum.
std::vector<double> ConvolveAt(const Tensor& H, std::span<const std::size_t> rows,
                               std::span<const std::size_t> cols, const Tensor& kernel,
                               ChannelMode channel_mode = ChannelMode::kDepthwise);

struct ConvLayerOutput {
  Var output;  // L x L x d
  std::vector<SelectionTrace> traces;  // row-major over (x, y)
  std::size_t applications = 0;
};

// One kernel application per position, traversed row-major.
ConvLayerOutput ConvLayer(Var H, Var kernel, IndexSelector& selector,
                          ChannelMode channel_mode = ChannelMode::kDepthwise);

// Row-wise max pooling: M(i, l) = max_j H'(i, j, l). kColumn pools the
// other axis.
Var RowMaxPool(Var conv_output, PoolAxis axis = PoolAxis::kRow);

// Per-row softmax over K feature maps of tanh(M_i W_d); returns the convex
// per-row combination. `weights_out`, when given, receives the L x K weights.
Var MultiDimAttention(std::span<const Var> features, Var wd, Var* weights_out = nullptr);

struct OracleCombination {
  std::vector<std::size_t> rows;  // sorted, contains x
  std::vector<std::size_t> cols;  // sorted, contains y
  std::vector<double> output;     // ConvolveAt over this support
};

struct OraclePosition {
  std::size_t x = 0, y = 0;
  std::vector<OracleCombination> combinations;
  std::size_t argmax = 0;  // largest channel-summed response, first on ties
};

// Exhaustive evaluation of every k-subset of rows containing x times every
// k-subset of columns containing y, for all L*L positions. Refuses L > 8.
std::vector<OraclePosition> OracleEnumerate(const Tensor& H, const Tensor& kernel,
                                            ChannelMode channel_mode = ChannelMode::kDepthwise);

// JSON-lines export: {"x":..,"y":..,"rows":[..],"cols":[..],"mode":".."}.
void WriteTracesJsonl(std::ostream& out, std::span<const SelectionTrace> traces, ConvMode mode);

}  // namespace rrcn

#endif  // RRCN_CONV_H_
