#ifndef RRCN_MODEL_H_
#define RRCN_MODEL_H_

#include <string>
#include <utility>
#include <vector>

#include "rrcn/config.h"
#include "rrcn/conv.h"
#include "rrcn/embedding.h"
#include "rrcn/graph.h"
#include "rrcn/policy.h"
#include "rrcn/rng.h"
#include "rrcn/tape.h"

namespace rrcn {

// The four interaction tensors of a pair, in feature order.
enum TensorSlot : std::size_t { kMPreferred = 0, kMRepulsive = 1, kFPreferred = 2, kFRepulsive = 3 };
inline constexpr std::size_t kNumSlots = 4;
const char* SlotName(std::size_t slot);

struct RRCNModel {
  ModelConfig config;
  std::vector<std::string> attribute_names;
  EmbeddingTable embedding;
  // One entry when shared, otherwise one per TensorSlot.
  std::vector<SoftAttentionParams> attention;
  std::vector<KernelParams> kernels;  // parallel to config.kernel_sizes
  Tensor wd;                          // d x 1, multi-dimension attention
  Tensor fc1_w, fc1_b;                // width x fc_hidden, fc_hidden
  Tensor fc2_w, fc2_b;                // fc_hidden x 1, 1
  // Reinforced mode only, parallel to config.kernel_sizes.
  std::vector<PolicyParams> policies;

  // Throws std::invalid_argument if config.L differs from the slot count.
  static RRCNModel Init(const ModelConfig& config, std::vector<std::string> attribute_names,
                        const std::vector<int>& vocab_sizes);

  // Length of V for the configured pair_op.
  std::size_t FeatureWidth() const;
  const SoftAttentionParams& AttentionFor(std::size_t slot) const;

  // Trainable tensors in a fixed order (policies excluded).
  std::vector<std::pair<std::string, Tensor*>> NamedParameters();
  std::vector<std::pair<std::string, const Tensor*>> NamedParameters() const;

  bool operator==(const RRCNModel& other) const;
};

// Trainable parameters bound as leaves of one tape.
struct ModelVars {
  Var embedding;
  std::vector<AttentionVars> attention;
  std::vector<Var> kernels;
  Var wd, fc1_w, fc1_b, fc2_w, fc2_b;

  // Same order and names as RRCNModel::NamedParameters().
  std::vector<std::pair<std::string, Var*>> Named();
};

ModelVars BindModel(Tape& tape, const RRCNModel& model);

// One conv layer application inside a forward pass.
struct ConvRecord {
  std::size_t slot = 0;
  std::size_t kernel = 0;  // index into config.kernel_sizes
  Var H;
  Var output;
  std::vector<SelectionTrace> traces;
};

struct PairForward {
  Var features;  // 1 x width
  std::vector<ConvRecord> convs;
  std::vector<Var> attention_weights;  // per slot, L x K
};

// Builds V for (m, f). Random and reinforced selections draw from `rng`.
PairForward ForwardFeatures(const RRCNModel& model, const ModelVars& vars, const AttributedBipartiteGraph& graph,
                            UserId m, UserId f, Rng& rng);

// sigmoid(FC2(tanh(FC1(V)))) for a B x width feature matrix, B x 1.
Var ScoreHead(const ModelVars& vars, Var features);

// Convenience: a single score on a fresh tape.
double ScorePair(const RRCNModel& model, const AttributedBipartiteGraph& graph, UserId m, UserId f, Rng& rng);

}  // namespace rrcn

#endif  // RRCN_MODEL_H_
