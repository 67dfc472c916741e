#ifndef RRCN_TRAIN_H_
#define RRCN_TRAIN_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rrcn/graph.h"
#include "rrcn/metrics.h"
#include "rrcn/model.h"

namespace rrcn {

struct AdamOptions {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First and second moments per parameter, created lazily as zeros.
struct AdamState {
  std::vector<Tensor> m, v;
  std::size_t step = 0;
};

// Bias-corrected Adam. Throws NumericError (leaving everything untouched)
// if any gradient is non-finite.
void AdamStep(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdamState& state,
              const AdamOptions& options);

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;  // summed over the epoch
  double mean_loss = 0.0;
  double train_accuracy = 0.0;
  double mean_reward = 0.0;  // reinforced mode only
};

struct TrainOptions {
  std::ostream* log = nullptr;         // one line per epoch
  std::ostream* action_log = nullptr;  // JSON lines of policy actions
};

// Mini-batch training: one tape per batch, Adam on the model weights and, in
// reinforced mode, one REINFORCE step per kernel size using rewards read
// from the same tape. Deterministic under config.seed. Throws NumericError
// naming the epoch and batch if the loss diverges.
std::vector<EpochLog> Train(RRCNModel& model, const AttributedBipartiteGraph& graph, const PairDataset& train,
                            const TrainOptions& options = {});

// Scores in dataset order. Stochastic selections use a stream derived from
// config.seed, so repeated calls agree.
std::vector<double> PredictScores(const RRCNModel& model, const AttributedBipartiteGraph& graph,
                                  const PairDataset& data);

Metrics Evaluate(const RRCNModel& model, const AttributedBipartiteGraph& graph, const PairDataset& data,
                 double threshold);

struct AblationRow {
  ConvMode mode = ConvMode::kConventional;
  std::size_t k = 0;
  Metrics mean;
  std::optional<Metrics> stddev;  // random mode only
  std::size_t runs = 1;
};

// Every mode x kernel size on the same split; random mode averages
// `random_runs` seeds (population standard deviation).
std::vector<AblationRow> Ablate(const ModelConfig& base, const AttributedBipartiteGraph& graph,
                                const DatasetSplit& split, std::span<const ConvMode> modes,
                                std::span<const std::size_t> kernel_sizes, std::size_t random_runs = 5,
                                std::ostream* progress = nullptr);

// Header mode,k,precision,recall,f1,acc,auc,precision_std,recall_std,f1_std,acc_std,auc_std.
void WriteAblationCsv(std::ostream& out, std::span<const AblationRow> rows);

struct CaseStudyKernel {
  std::size_t slot = 0;
  std::size_t k = 0;
  std::vector<std::string> initial_state;  // fixed row and column attributes
  std::vector<std::string> final_rows;     // attribute names, fixed one included
  std::vector<std::string> final_cols;
  std::vector<std::string> selected_rows;  // draw order
  std::vector<std::string> selected_cols;
  double log_prob = 0.0;                   // reinforced mode only
};

struct CaseStudyTrace {
  UserId m = 0, f = 0;
  std::string fixed_row, fixed_col;
  std::vector<CaseStudyKernel> kernels;
};

// One forward pass; reports the support chosen at the fixed cell for every
// interaction tensor and kernel size. Throws DataError on an unknown name.
CaseStudyTrace CaseStudy(const RRCNModel& model, const AttributedBipartiteGraph& graph, UserId m, UserId f,
                         const std::string& row_attr, const std::string& col_attr, std::uint64_t seed);

nlohmann::json CaseStudyToJson(const CaseStudyTrace& trace);

}  // namespace rrcn

#endif  // RRCN_TRAIN_H_
