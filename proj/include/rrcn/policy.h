#ifndef RRCN_POLICY_H_
#define RRCN_POLICY_H_

#include <ostream>
#include <span>
#include <vector>

#include "rrcn/config.h"
#include "rrcn/conv.h"
#include "rrcn/rng.h"
#include "rrcn/tape.h"
#include "rrcn/tensor.h"

namespace rrcn {

// Two-layer selection policy for one kernel size. The hidden layer reads
// the whole flattened interaction tensor; the output layer emits L row
// logits followed by L column logits.
struct PolicyParams {
  std::size_t L = 0, d = 0, k = 0;
  Tensor w1;  // (L*L*d) x l1
  Tensor b1;  // l1
  Tensor w2;  // l1 x 2L
  // Running reward baseline (exponential moving average).
  double baseline = 0.0;

  // w1 uniform in +-1/sqrt(L*L*d); b1 and w2 zero, so the initial policy
  // is uniform over unmasked indices.
  static PolicyParams Init(std::size_t L, std::size_t d, std::size_t k, std::size_t l1, Rng& rng);
  static PolicyParams Zeros(std::size_t L, std::size_t d, std::size_t k, std::size_t l1);
  std::size_t hidden() const { return b1.size(); }
};

// Length-2L logits for a given interaction tensor.
std::vector<double> PolicyLogits(const Tensor& H, const PolicyParams& params);

struct RowColDistribution {
  std::vector<double> rows;  // P_x, zero at the fixed row
  std::vector<double> cols;  // P_y, zero at the fixed column
};

// Softmax of row and column logits with the fixed row x and column y masked.
RowColDistribution MaskedDistribution(std::span<const double> logits, std::size_t x, std::size_t y);
RowColDistribution PolicyDistribution(const Tensor& H, std::size_t x, std::size_t y,
                                      const PolicyParams& params);

// Draws `count` distinct indices sequentially, renormalising over the
// remaining support after every draw. Adds the log of each draw
// probability to `log_prob`. Throws std::invalid_argument when the support
// holds fewer than `count` entries.
std::vector<std::size_t> SampleWithoutReplacement(std::span<const double> probs, std::size_t count,
                                                  Rng& rng, double& log_prob);

struct SampledAction {
  std::vector<std::size_t> rows;  // draw order
  std::vector<std::size_t> cols;  // draw order
  double log_prob = 0.0;
};

SampledAction SampleAction(const RowColDistribution& dist, std::size_t k, Rng& rng);

// d log P(action) / d logits for the sequential draw model, length 2L.
std::vector<double> LogProbLogitGradient(std::span<const double> logits, const SelectionTrace& action);

// Samples supports from a fixed logit vector (one interaction tensor).
class PolicySelector : public IndexSelector {
 public:
  PolicySelector(std::vector<double> logits, std::size_t k, Rng& rng);
  SelectionTrace Select(std::size_t x, std::size_t y) override;
  ConvMode mode() const override { return ConvMode::kReinforced; }
  std::size_t k() const override { return k_; }
  const std::vector<double>& logits() const { return logits_; }

 private:
  std::vector<double> logits_;
  std::size_t L_, k_;
  // Per fixed index, L x L weight tables (see MaskedWeightTable).
  std::vector<double> row_weights_, col_weights_, scratch_;
  Rng& rng_;
};

struct ActionRecord {
  std::size_t x = 0, y = 0;
  std::vector<std::size_t> rows;  // sampled rows X, draw order
  std::vector<std::size_t> cols;  // sampled cols Y, draw order
  double log_prob = 0.0;
  double reward = 0.0;
};

// Sum over sampled rows x_i of sum_c sum_l dL/dH'(x,y,l) * dH'(x,y,l)/dH(x_i, cols[c], l),
// plus the analogous column terms. The upstream gradient is read from the
// tape (throws std::logic_error if Backward() has not run). kAttribution
// scales every term by the selected entry H(x_i, cols[c], l).
double ComputeReward(const SelectionTrace& trace, const Tape& tape, Var conv_output, const Tensor& kernel,
                     const Tensor& H, ChannelMode channel_mode = ChannelMode::kDepthwise,
                     RewardKind kind = RewardKind::kGradient);

// Actions taken on one interaction tensor.
struct EpisodeGroup {
  Tensor H;                        // state, L x L x d
  std::vector<SelectionTrace> actions;
  std::vector<double> rewards;     // one per action
};

struct EpisodeBatch {
  std::vector<EpisodeGroup> groups;
  std::size_t num_records() const;
  double mean_reward() const;
};

struct PolicyUpdateOptions {
  double rate = 0.01;
  bool use_baseline = true;
  PolicyObjective objective = PolicyObjective::kMinimize;
  double baseline_decay = 0.9;
};

// REINFORCE: grad J = sum_records (R - baseline) grad log P(action);
// theta <- theta - rate * grad J (or + for kMaximize). Then the baseline
// moves toward the batch mean reward. Throws NumericError on a non-finite
// gradient and leaves `params` untouched in that case.
void PolicyUpdate(PolicyParams& params, const EpisodeBatch& batch, const PolicyUpdateOptions& options);

// JSON-lines action/reward log:
// {"pos":[x,y],"rows":[..],"cols":[..],"logp":..,"reward":..}.
void WriteActionLog(std::ostream& out, const EpisodeBatch& batch);

}  // namespace rrcn

#endif  // RRCN_POLICY_H_
