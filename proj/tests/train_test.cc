#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "fixtures.h"
#include "rrcn/checkpoint.h"
#include "rrcn/ops.h"
#include "rrcn/train.h"

namespace rrcn {
namespace {

TEST(AdamTest, ZeroGradientLeavesParametersAlone) {
  Tensor w = Tensor::Vector({1.0, -2.0, 3.5});
  const Tensor g(Shape{3});
  AdamState state;
  Tensor* params[] = {&w};
  const Tensor* grads[] = {&g};
  for (int i = 0; i < 5; ++i) AdamStep(params, grads, state, {});
  EXPECT_EQ(w, Tensor::Vector({1.0, -2.0, 3.5}));
}

TEST(AdamTest, FirstStepHasLearningRateMagnitude) {
  for (double scale : {1e-6, 1.0, 1e6}) {
    Tensor w = Tensor::Vector({0.0, 0.0, 0.0});
    const Tensor g = Tensor::Vector({scale, -scale, 0.5 * scale});
    AdamState state;
    Tensor* params[] = {&w};
    const Tensor* grads[] = {&g};
    AdamOptions opt;
    opt.learning_rate = 0.01;
    AdamStep(params, grads, state, opt);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_LE(std::abs(w[i]), 0.01 * (1 + 1e-6));
      EXPECT_EQ(std::signbit(w[i]), std::signbit(-g[i]));
    }
  }
}

TEST(AdamTest, ConvergesOnAQuadratic) {
  Tensor w = Tensor::Scalar(0.0);
  AdamState state;
  AdamOptions opt;
  opt.learning_rate = 0.1;
  for (int step = 0; step < 500; ++step) {
    Tape tape;
    const Var wv = tape.Leaf(w);
    const Var diff = Add(wv, tape.Leaf(Tensor::Scalar(-3.0)));
    tape.Backward(Multiply(diff, diff));
    Tensor* params[] = {&w};
    const Tensor* grads[] = {&tape.grad(wv)};
    AdamStep(params, grads, state, opt);
  }
  EXPECT_LT(std::abs(w.item() - 3.0), 0.01);
  EXPECT_EQ(state.step, 500u);
}

TEST(AdamTest, NonFiniteGradientAbortsWithoutSideEffects) {
  Tensor a = Tensor::Vector({1.0}), b = Tensor::Vector({2.0});
  const Tensor ga = Tensor::Vector({0.5}), gb = Tensor::Vector({std::nan("")});
  AdamState state;
  Tensor* params[] = {&a, &b};
  const Tensor* grads[] = {&ga, &gb};
  EXPECT_THROW(AdamStep(params, grads, state, {}), NumericError);
  EXPECT_EQ(a[0], 1.0);
  EXPECT_EQ(state.step, 0u);
}

TEST(LossTest, ClosedFormsAndClamping) {
  Tape tape;
  EXPECT_NEAR(BinaryCrossEntropy(tape.Leaf(Tensor(Shape{1, 1}, 0.5)), Tensor(Shape{1, 1}, 1.0)).value().item(),
              std::log(2.0), 1e-15);
  const double exact =
      BinaryCrossEntropy(tape.Leaf(Tensor(Shape{2, 1}, std::vector<double>{1.0, 0.0})),
                         Tensor(Shape{2, 1}, std::vector<double>{1.0, 0.0}))
          .value()
          .item();
  EXPECT_LT(exact, 1e-6);
  EXPECT_GT(exact, 0.0);
}

TEST(LossTest, MatchesSummationOracle) {
  Rng rng(1);
  Tensor p(Shape{10, 1}), y(Shape{10, 1});
  double want = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    p[i] = UniformRange(rng, 0.01, 0.99);
    y[i] = Uniform01(rng) < 0.5 ? 1.0 : 0.0;
    want -= y[i] * std::log(p[i]) + (1 - y[i]) * std::log(1 - p[i]);
  }
  Tape tape;
  EXPECT_NEAR(BinaryCrossEntropy(tape.Leaf(p), y).value().item(), want, 1e-12);
}

TEST(LossTest, LengthMismatchIsRejected) {
  Tape tape;
  EXPECT_THROW(BinaryCrossEntropy(tape.Leaf(Tensor(Shape{3, 1}, 0.5)), Tensor(Shape{2, 1})), ShapeError);
}

// Ten M and ten F users; pair i is reciprocal exactly when attribute 0 of
// both users is 1, otherwise only one message was sent.
struct SeparableFixture {
  AttributedBipartiteGraph graph;
  PairDataset pairs;
};

SeparableFixture MakeSeparable() {
  std::vector<User> users;
  std::vector<Edge> edges;
  PairDataset data;
  Rng rng(8);
  for (UserId i = 0; i < 10; ++i) {
    const int key = i % 2 == 0 ? 1 : 0;
    users.push_back({i, Side::kM, {key, static_cast<int>(UniformIndex(rng, 3)), static_cast<int>(UniformIndex(rng, 2))}});
    users.push_back({10 + i, Side::kF, {key, static_cast<int>(UniformIndex(rng, 3)), static_cast<int>(UniformIndex(rng, 2))}});
    edges.push_back({i, 10 + i});
    if (key == 1) edges.push_back({10 + i, i});
    // Background traffic so the interaction sets are not all empty.
    edges.push_back({10 + (i + 3) % 10, i});
    data.pairs.push_back({i, 10 + i, key});
  }
  for (UserId i = 0; i < 10; ++i) {
    const UserId j = 10 + (i + 5) % 10;
    if (i % 2 == 0 && (j - 10) % 2 == 0) {
      edges.push_back({i, j});
      edges.push_back({j, i});
    }
  }
  return {AttributedBipartiteGraph({"key", "noise1", "noise2"}, std::move(users), std::move(edges)), std::move(data)};
}

ModelConfig FixtureConfig() {
  ModelConfig cfg;
  cfg.L = 3;
  cfg.d = 4;
  cfg.l1 = 4;
  cfg.fc_hidden = 8;
  cfg.kernel_sizes = {2, 3};
  cfg.mode = ConvMode::kReinforced;
  cfg.epochs = 50;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.01;
  cfg.seed = 3;
  return cfg;
}

TEST(TrainTest, FitsASeparableFixture) {
  const SeparableFixture fx = MakeSeparable();
  RRCNModel model = RRCNModel::Init(FixtureConfig(), fx.graph.attribute_names(), fx.graph.vocab_sizes());
  const auto log = Train(model, fx.graph, fx.pairs);
  ASSERT_EQ(log.size(), 50u);
  EXPECT_EQ(log.back().train_accuracy, 1.0);
  // Window-5 moving average of the epoch loss keeps falling after epoch 5.
  std::vector<double> smooth;
  for (std::size_t e = 4; e < log.size(); ++e) {
    double s = 0;
    for (std::size_t i = e - 4; i <= e; ++i) s += log[i].loss;
    smooth.push_back(s / 5);
  }
  for (std::size_t i = 1; i < smooth.size(); ++i) EXPECT_LT(smooth[i], smooth[i - 1]) << "epoch " << i + 4;
  const Metrics m = Evaluate(model, fx.graph, fx.pairs, 0.5);
  EXPECT_EQ(m.accuracy, 1.0);
}

TEST(TrainTest, ZeroEpochsLeaveTheModelUntouched) {
  const SeparableFixture fx = MakeSeparable();
  ModelConfig cfg = FixtureConfig();
  cfg.epochs = 0;
  RRCNModel model = RRCNModel::Init(cfg, fx.graph.attribute_names(), fx.graph.vocab_sizes());
  const RRCNModel before = model;
  EXPECT_TRUE(Train(model, fx.graph, fx.pairs).empty());
  EXPECT_TRUE(model == before);
}

std::string TrainedCheckpoint(const SeparableFixture& fx, ConvMode mode) {
  ModelConfig cfg = FixtureConfig();
  cfg.mode = mode;
  cfg.epochs = 4;
  RRCNModel model = RRCNModel::Init(cfg, fx.graph.attribute_names(), fx.graph.vocab_sizes());
  Train(model, fx.graph, fx.pairs);
  std::ostringstream out;
  WriteCheckpoint(out, model);
  return out.str();
}

TEST(TrainTest, EqualSeedsGiveIdenticalCheckpoints) {
  const SeparableFixture fx = MakeSeparable();
  for (ConvMode mode : {ConvMode::kRandom, ConvMode::kReinforced}) {
    EXPECT_EQ(TrainedCheckpoint(fx, mode), TrainedCheckpoint(fx, mode)) << ToString(mode);
  }
}

TEST(TrainTest, ReinforcedTrainingMovesThePolicies) {
  const SeparableFixture fx = MakeSeparable();
  ModelConfig cfg = FixtureConfig();
  cfg.epochs = 2;
  RRCNModel model = RRCNModel::Init(cfg, fx.graph.attribute_names(), fx.graph.vocab_sizes());
  const auto before = model.policies;
  std::ostringstream actions;
  TrainOptions options;
  options.action_log = &actions;
  const auto log = Train(model, fx.graph, fx.pairs, options);
  EXPECT_NE(model.policies[0].w2, before[0].w2);
  EXPECT_NE(model.policies[1].baseline, 0.0);
  EXPECT_NE(log.back().mean_reward, 0.0);
  EXPECT_FALSE(actions.str().empty());
}

TEST(TrainTest, EmptyTrainingSetIsRejected) {
  const SeparableFixture fx = MakeSeparable();
  RRCNModel model = RRCNModel::Init(FixtureConfig(), fx.graph.attribute_names(), fx.graph.vocab_sizes());
  EXPECT_THROW(Train(model, fx.graph, PairDataset{}), std::invalid_argument);
  EXPECT_THROW(Evaluate(model, fx.graph, PairDataset{}, 0.5), std::invalid_argument);
}

TEST(PredictTest, RepeatedCallsAgree) {
  const SeparableFixture fx = MakeSeparable();
  const RRCNModel model = RRCNModel::Init(FixtureConfig(), fx.graph.attribute_names(), fx.graph.vocab_sizes());
  EXPECT_EQ(PredictScores(model, fx.graph, fx.pairs), PredictScores(model, fx.graph, fx.pairs));
}

TEST(AblateTest, OneRowPerModeAndKernelWithStdForRandomOnly) {
  const SeparableFixture fx = MakeSeparable();
  ModelConfig cfg = FixtureConfig();
  cfg.epochs = 2;
  DatasetSplit split{fx.pairs, fx.pairs};
  split.test.split = SplitTag::kTest;
  const ConvMode modes[] = {ConvMode::kConventional, ConvMode::kDilated, ConvMode::kRandom, ConvMode::kReinforced};
  const std::size_t ks[] = {2, 3};
  const auto rows = Ablate(cfg, fx.graph, split, modes, ks, 3);
  ASSERT_EQ(rows.size(), 8u);
  std::set<std::pair<ConvMode, std::size_t>> seen;
  for (const AblationRow& r : rows) {
    seen.emplace(r.mode, r.k);
    EXPECT_EQ(r.stddev.has_value(), r.mode == ConvMode::kRandom);
    EXPECT_EQ(r.runs, r.mode == ConvMode::kRandom ? 3u : 1u);
  }
  EXPECT_EQ(seen.size(), 8u);

  std::ostringstream a, b;
  WriteAblationCsv(a, rows);
  WriteAblationCsv(b, Ablate(cfg, fx.graph, split, modes, ks, 3));
  EXPECT_EQ(a.str(), b.str());
  std::istringstream lines(a.str());
  std::string header, line;
  std::getline(lines, header);
  EXPECT_EQ(header, "mode,k,precision,recall,f1,acc,auc,precision_std,recall_std,f1_std,acc_std,auc_std");
  std::getline(lines, line);
  EXPECT_EQ(line.substr(0, 7), "CCNN,2,");
  EXPECT_EQ(line.substr(line.size() - 5), ",,,,,");
}

TEST(CaseStudyTest, ConventionalModeSlidesOverAdjacentAttributes) {
  std::vector<User> users;
  std::vector<Edge> edges;
  std::vector<std::string> names = {"age", "height", "income", "city", "education", "job"};
  for (UserId i = 0; i < 4; ++i) {
    users.push_back({i, Side::kM, std::vector<int>(6, static_cast<int>(i % 2))});
    users.push_back({10 + i, Side::kF, std::vector<int>(6, static_cast<int>((i + 1) % 2))});
    edges.push_back({i, 10 + i});
    edges.push_back({10 + i, i});
  }
  const AttributedBipartiteGraph g(names, std::move(users), std::move(edges));
  ModelConfig cfg;
  cfg.L = 6;
  cfg.d = 2;
  cfg.l1 = 2;
  cfg.kernel_sizes = {3};
  cfg.mode = ConvMode::kConventional;
  const RRCNModel model = RRCNModel::Init(cfg, names, g.vocab_sizes());
  const CaseStudyTrace trace = CaseStudy(model, g, 0, 10, "city", "job", 1);
  ASSERT_EQ(trace.kernels.size(), kNumSlots);
  for (const CaseStudyKernel& k : trace.kernels) {
    EXPECT_EQ(k.initial_state, (std::vector<std::string>{"city", "job"}));
    EXPECT_EQ(k.final_rows, (std::vector<std::string>{"city", "education", "job"}));
    // Columns wrap: job, age, height.
    EXPECT_EQ(k.final_cols, (std::vector<std::string>{"age", "height", "job"}));
  }
  const auto j = CaseStudyToJson(trace);
  EXPECT_EQ(j["kernels"].size(), kNumSlots);

  cfg.kernel_sizes = {4};
  cfg.L = 4;
  std::vector<std::string> four = {"a", "b", "c", "d"};
  std::vector<User> u4 = {{0, Side::kM, {0, 0, 0, 0}}, {1, Side::kF, {1, 1, 1, 1}}};
  const AttributedBipartiteGraph g4(four, std::move(u4), {{0, 1}, {1, 0}});
  for (ConvMode mode : {ConvMode::kRandom, ConvMode::kReinforced}) {
    cfg.mode = mode;
    const RRCNModel m4 = RRCNModel::Init(cfg, four, g4.vocab_sizes());
    for (const CaseStudyKernel& k : CaseStudy(m4, g4, 0, 1, "b", "c", 2).kernels) {
      EXPECT_EQ(k.final_rows, four);
      EXPECT_EQ(k.final_cols, four);
    }
  }
  EXPECT_THROW(CaseStudy(model, g, 0, 10, "city", "salary", 1), DataError);
}

}  // namespace
}  // namespace rrcn
