#include "rrcn/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rrcn/ops.h"

namespace rrcn {
namespace {

constexpr std::size_t kEvalChunk = 64;

struct BatchOutput {
  Var scores;
  std::vector<PairForward> forwards;
};

BatchOutput ForwardBatch(const RRCNModel& model, const ModelVars& vars, const AttributedBipartiteGraph& graph,
                         std::span<const LabeledPair> pairs, Rng& rng) {
  BatchOutput out;
  std::vector<Var> features;
  features.reserve(pairs.size());
  for (const LabeledPair& p : pairs) {
    out.forwards.push_back(ForwardFeatures(model, vars, graph, p.m, p.f, rng));
    features.push_back(out.forwards.back().features);
  }
  out.scores = ScoreHead(vars, Concat(features, 0));
  return out;
}

Metrics MeanOf(const std::vector<Metrics>& runs) {
  Metrics m;
  for (const Metrics& r : runs) {
    m.precision += r.precision;
    m.recall += r.recall;
    m.f1 += r.f1;
    m.accuracy += r.accuracy;
    m.auc += r.auc;
  }
  const double n = static_cast<double>(runs.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  m.accuracy /= n;
  m.auc /= n;
  return m;
}

Metrics StdOf(const std::vector<Metrics>& runs, const Metrics& mean) {
  Metrics s;
  const auto sq = [](double a, double b) { return (a - b) * (a - b); };
  for (const Metrics& r : runs) {
    s.precision += sq(r.precision, mean.precision);
    s.recall += sq(r.recall, mean.recall);
    s.f1 += sq(r.f1, mean.f1);
    s.accuracy += sq(r.accuracy, mean.accuracy);
    s.auc += sq(r.auc, mean.auc);
  }
  const double n = static_cast<double>(runs.size());
  s.precision = std::sqrt(s.precision / n);
  s.recall = std::sqrt(s.recall / n);
  s.f1 = std::sqrt(s.f1 / n);
  s.accuracy = std::sqrt(s.accuracy / n);
  s.auc = std::sqrt(s.auc / n);
  return s;
}

std::vector<std::string> Names(const RRCNModel& model, std::span<const std::size_t> indices) {
  std::vector<std::string> out;
  for (std::size_t i : indices) out.push_back(model.attribute_names.at(i));
  return out;
}

}  // namespace

void AdamStep(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdamState& state,
              const AdamOptions& options) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: params/grads count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i]->shape()) {
      throw ShapeError("adam_step: parameter " + std::to_string(i) + " is " + ShapeString(params[i]->shape()) +
                       " but its gradient is " + ShapeString(grads[i]->shape()));
    }
    if (!grads[i]->AllFinite()) throw NumericError("adam_step: non-finite gradient for parameter " + std::to_string(i));
  }
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.emplace_back(p->shape());
      state.v.emplace_back(p->shape());
    }
  } else if (state.m.size() != params.size()) {
    throw std::invalid_argument("adam_step: state was built for a different parameter list");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(options.beta1, t);
  const double c2 = 1.0 - std::pow(options.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = options.beta1 * m[j] + (1 - options.beta1) * g[j];
      v[j] = options.beta2 * v[j] + (1 - options.beta2) * g[j] * g[j];
      p[j] -= options.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + options.eps);
    }
  }
}

std::vector<EpochLog> Train(RRCNModel& model, const AttributedBipartiteGraph& graph, const PairDataset& train,
                            const TrainOptions& options) {
  const ModelConfig& cfg = model.config;
  if (train.pairs.empty()) throw std::invalid_argument("train: empty training set");
  const bool reinforced = cfg.mode == ConvMode::kReinforced;
  Rng rng(MixSeed(cfg.seed, 303));
  AdamState adam;
  const AdamOptions adam_options{cfg.learning_rate};
  const PolicyUpdateOptions policy_options{cfg.policy_rate, cfg.baseline, cfg.policy_objective};

  std::vector<std::size_t> order(train.pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<EpochLog> logs;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Shuffle(order, rng);
    EpochLog log;
    log.epoch = epoch;
    std::size_t correct = 0, reward_batches = 0;
    for (std::size_t start = 0, batch = 0; start < order.size(); start += cfg.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<LabeledPair> pairs;
      Tensor labels(Shape{end - start, 1});
      for (std::size_t i = start; i < end; ++i) {
        pairs.push_back(train.pairs[order[i]]);
        labels[i - start] = train.pairs[order[i]].label;
      }
      try {
        Tape tape;
        ModelVars vars = BindModel(tape, model);
        BatchOutput out = ForwardBatch(model, vars, graph, pairs, rng);
        Var loss = BinaryCrossEntropy(out.scores, labels, 1e-7);
        tape.Backward(loss);
        log.loss += loss.value().item();
        for (std::size_t i = 0; i < pairs.size(); ++i)
          if ((out.scores.value()[i] >= cfg.threshold) == (pairs[i].label == 1)) ++correct;

        if (reinforced) {
          double reward_sum = 0.0;
          for (std::size_t ki = 0; ki < cfg.kernel_sizes.size(); ++ki) {
            EpisodeBatch episodes;
            const Tensor& kernel = vars.kernels[ki].value();
            for (PairForward& fw : out.forwards) {
              for (ConvRecord& rec : fw.convs) {
                if (rec.kernel != ki) continue;
                EpisodeGroup group;
                group.H = rec.H.value();
                group.rewards.reserve(rec.traces.size());
                for (const SelectionTrace& t : rec.traces) {
                  group.rewards.push_back(
                      ComputeReward(t, tape, rec.output, kernel, group.H, cfg.channel_mode, cfg.reward));
                }
                group.actions = std::move(rec.traces);
                episodes.groups.push_back(std::move(group));
              }
            }
            reward_sum += episodes.mean_reward();
            if (options.action_log) WriteActionLog(*options.action_log, episodes);
            PolicyUpdate(model.policies[ki], episodes, policy_options);
          }
          log.mean_reward += reward_sum / static_cast<double>(cfg.kernel_sizes.size());
          ++reward_batches;
        }

        auto params = model.NamedParameters();
        auto bound = vars.Named();
        std::vector<Tensor*> p;
        std::vector<const Tensor*> g;
        for (std::size_t i = 0; i < params.size(); ++i) {
          p.push_back(params[i].second);
          g.push_back(&tape.grad(*bound[i].second));
        }
        AdamStep(p, g, adam, adam_options);
      } catch (const NumericError& e) {
        throw NumericError("train: divergence at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch) + ": " + e.what());
      }
    }
    log.mean_loss = log.loss / static_cast<double>(order.size());
    log.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    if (reward_batches) log.mean_reward /= static_cast<double>(reward_batches);
    if (options.log) {
      *options.log << "epoch " << epoch << " loss " << log.loss << " mean_loss " << log.mean_loss << " train_acc "
                   << log.train_accuracy;
      if (reinforced) *options.log << " mean_reward " << log.mean_reward;
      *options.log << '\n';
    }
    logs.push_back(log);
  }
  return logs;
}

std::vector<double> PredictScores(const RRCNModel& model, const AttributedBipartiteGraph& graph,
                                  const PairDataset& data) {
  Rng rng(MixSeed(model.config.seed, 404));
  std::vector<double> scores;
  scores.reserve(data.pairs.size());
  for (std::size_t start = 0; start < data.pairs.size(); start += kEvalChunk) {
    const std::size_t end = std::min(data.pairs.size(), start + kEvalChunk);
    Tape tape;
    const ModelVars vars = BindModel(tape, model);
    const auto pairs = std::span(data.pairs).subspan(start, end - start);
    const BatchOutput out = ForwardBatch(model, vars, graph, pairs, rng);
    for (double s : out.scores.value().values()) scores.push_back(s);
  }
  return scores;
}

Metrics Evaluate(const RRCNModel& model, const AttributedBipartiteGraph& graph, const PairDataset& data,
                 double threshold) {
  if (data.pairs.empty()) throw std::invalid_argument("evaluate: empty evaluation set");
  const std::vector<double> scores = PredictScores(model, graph, data);
  std::vector<int> labels;
  for (const LabeledPair& p : data.pairs) labels.push_back(p.label);
  return ComputeMetrics(scores, labels, threshold);
}

std::vector<AblationRow> Ablate(const ModelConfig& base, const AttributedBipartiteGraph& graph,
                                const DatasetSplit& split, std::span<const ConvMode> modes,
                                std::span<const std::size_t> kernel_sizes, std::size_t random_runs,
                                std::ostream* progress) {
  if (random_runs == 0) throw std::invalid_argument("ablate: random_runs must be positive");
  std::vector<AblationRow> rows;
  for (ConvMode mode : modes) {
    for (std::size_t k : kernel_sizes) {
      AblationRow row;
      row.mode = mode;
      row.k = k;
      row.runs = mode == ConvMode::kRandom ? random_runs : 1;
      std::vector<Metrics> runs;
      for (std::size_t r = 0; r < row.runs; ++r) {
        ModelConfig cfg = base;
        cfg.mode = mode;
        cfg.kernel_sizes = {k};
        cfg.seed = base.seed + r;
        RRCNModel model = RRCNModel::Init(cfg, graph.attribute_names(), graph.vocab_sizes());
        Train(model, graph, split.train);
        runs.push_back(Evaluate(model, graph, split.test, cfg.threshold));
        if (progress) {
          *progress << AblationLabel(mode) << " k=" << k << " seed=" << cfg.seed << " auc=" << runs.back().auc
                    << '\n';
        }
      }
      row.mean = MeanOf(runs);
      if (mode == ConvMode::kRandom) row.stddev = StdOf(runs, row.mean);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void WriteAblationCsv(std::ostream& out, std::span<const AblationRow> rows) {
  out.precision(6);
  out << std::fixed;
  out << "mode,k,precision,recall,f1,acc,auc,precision_std,recall_std,f1_std,acc_std,auc_std\n";
  for (const AblationRow& r : rows) {
    out << AblationLabel(r.mode) << ',' << r.k << ',' << r.mean.precision << ',' << r.mean.recall << ','
        << r.mean.f1 << ',' << r.mean.accuracy << ',' << r.mean.auc;
    if (r.stddev) {
      out << ',' << r.stddev->precision << ',' << r.stddev->recall << ',' << r.stddev->f1 << ','
          << r.stddev->accuracy << ',' << r.stddev->auc << '\n';
    } else {
      out << ",,,,,\n";
    }
  }
}

CaseStudyTrace CaseStudy(const RRCNModel& model, const AttributedBipartiteGraph& graph, UserId m, UserId f,
                         const std::string& row_attr, const std::string& col_attr, std::uint64_t seed) {
  const auto index_of = [&](const std::string& name) {
    auto it = std::find(model.attribute_names.begin(), model.attribute_names.end(), name);
    if (it == model.attribute_names.end()) throw DataError("case_study: unknown attribute '" + name + "'");
    return static_cast<std::size_t>(it - model.attribute_names.begin());
  };
  const std::size_t x = index_of(row_attr), y = index_of(col_attr);
  const std::size_t L = model.config.L;

  Tape tape;
  const ModelVars vars = BindModel(tape, model);
  Rng rng(seed);
  const PairForward fw = ForwardFeatures(model, vars, graph, m, f, rng);

  CaseStudyTrace trace{m, f, row_attr, col_attr, {}};
  for (const ConvRecord& rec : fw.convs) {
    const SelectionTrace& t = rec.traces.at(x * L + y);
    CaseStudyKernel kr;
    kr.slot = rec.slot;
    kr.k = model.config.kernel_sizes[rec.kernel];
    kr.initial_state = {row_attr, col_attr};
    kr.final_rows = Names(model, t.rows);
    kr.final_cols = Names(model, t.cols);
    if (model.config.mode == ConvMode::kReinforced) {
      kr.selected_rows = Names(model, t.sampled_rows);
      kr.selected_cols = Names(model, t.sampled_cols);
      kr.log_prob = t.log_prob;
    } else {
      // Everything other than the fixed index counts as selected.
      for (std::size_t r : t.rows)
        if (r != x) kr.selected_rows.push_back(model.attribute_names[r]);
      for (std::size_t c : t.cols)
        if (c != y) kr.selected_cols.push_back(model.attribute_names[c]);
    }
    trace.kernels.push_back(std::move(kr));
  }
  return trace;
}

nlohmann::json CaseStudyToJson(const CaseStudyTrace& trace) {
  nlohmann::json kernels = nlohmann::json::array();
  for (const CaseStudyKernel& k : trace.kernels) {
    kernels.push_back({{"tensor", SlotName(k.slot)},
                       {"k", k.k},
                       {"initial_state", k.initial_state},
                       {"final_rows", k.final_rows},
                       {"final_cols", k.final_cols},
                       {"selected_rows", k.selected_rows},
                       {"selected_cols", k.selected_cols},
                       {"log_prob", k.log_prob}});
  }
  return {{"pair", {trace.m, trace.f}},
          {"fixed", {trace.fixed_row, trace.fixed_col}},
          {"kernels", kernels}};
}

}  // namespace rrcn
