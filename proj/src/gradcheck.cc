#include <algorithm>
#include <cmath>

#include "rrcn/conv.h"
#include "rrcn/gradcheck.h"
#include "rrcn/model.h"
#include "rrcn/ops.h"
#include "rrcn/rng.h"

namespace rrcn {
namespace {

Tensor RandomTensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (double& v : t.values()) v = UniformRange(rng, lo, hi);
  return t;
}

// Contracts `v` with fixed random weights so every output entry gets a
// distinct upstream gradient.
Var Project(Tape& tape, Var v, std::uint64_t seed) {
  Rng rng(seed);
  return Sum(Multiply(v, tape.Leaf(RandomTensor(v.shape(), rng))));
}

using OpFn = std::function<Var(Tape&, Var)>;

struct OpCase {
  std::string name;
  Shape shape;
  OpFn fn;
  double lo = -1.0, hi = 1.0;
};

// Graph small enough to check by hand, with all four interaction sets of
// the scored pairs populated.
AttributedBipartiteGraph GradCheckGraph() {
  std::vector<User> users = {
      {0, Side::kM, {0, 1, 2, 0}}, {1, Side::kM, {1, 0, 1, 1}}, {2, Side::kM, {2, 2, 0, 1}},
      {3, Side::kF, {1, 1, 0, 0}}, {4, Side::kF, {0, 2, 2, 1}}, {5, Side::kF, {2, 0, 1, 0}},
  };
  std::vector<Edge> edges = {{0, 3}, {3, 0}, {0, 4}, {5, 0}, {3, 1}, {2, 3},
                             {1, 4}, {4, 1}, {1, 5}, {4, 2}, {2, 5}, {5, 2}};
  return AttributedBipartiteGraph({"a0", "a1", "a2", "a3"}, std::move(users), std::move(edges));
}

Var PairLoss(const RRCNModel& model, const ModelVars& vars, const AttributedBipartiteGraph& graph) {
  Rng rng(99);
  const std::pair<UserId, UserId> pairs[] = {{0, 3}, {1, 4}, {2, 3}};
  const Tensor labels(Shape{3, 1}, std::vector<double>{1, 0, 1});
  std::vector<Var> features;
  for (auto [m, f] : pairs) features.push_back(ForwardFeatures(model, vars, graph, m, f, rng).features);
  return BinaryCrossEntropy(ScoreHead(vars, Concat(features, 0)), labels);
}

}  // namespace

std::vector<GradCheckResult> RunGradCheckSuite(int trials, double tolerance, unsigned seed) {
  Rng rng(seed);
  const Tensor b23 = RandomTensor({2, 3}, rng);
  const Tensor b3 = RandomTensor({3}, rng);
  const Tensor b34 = RandomTensor({3, 4}, rng);
  const Tensor b4 = RandomTensor({4}, rng);
  const Tensor b42 = RandomTensor({4, 2}, rng);
  const Tensor labels = Tensor(Shape{4, 1}, std::vector<double>{1, 0, 0, 1});
  const Tensor kernel3 = RandomTensor({3, 3, 2}, rng);

  std::vector<OpCase> cases = {
      {"add", {2, 3}, [&](Tape& t, Var x) { return Project(t, Add(x, t.Leaf(b23)), 1); }},
      {"add_broadcast", {3}, [&](Tape& t, Var x) { return Project(t, Add(t.Leaf(b23), x), 2); }},
      {"subtract", {2, 3}, [&](Tape& t, Var x) { return Project(t, Subtract(t.Leaf(b3), x), 3); }},
      {"multiply", {2, 3}, [&](Tape& t, Var x) { return Project(t, Multiply(x, t.Leaf(b23)), 4); }},
      {"multiply_broadcast", {3}, [&](Tape& t, Var x) { return Project(t, Multiply(t.Leaf(b23), x), 5); }},
      {"multiply_self", {2, 3}, [&](Tape& t, Var x) { return Project(t, Multiply(x, x), 6); }},
      {"scale", {2, 3}, [&](Tape& t, Var x) { return Project(t, Scale(x, -2.5), 7); }},
      {"matmul_left", {2, 3}, [&](Tape& t, Var x) { return Project(t, MatMul(x, t.Leaf(b34)), 8); }},
      {"matmul_right", {3, 4}, [&](Tape& t, Var x) { return Project(t, MatMul(t.Leaf(b23), x), 9); }},
      {"transpose", {2, 3}, [&](Tape& t, Var x) { return Project(t, Transpose(x), 10); }},
      {"outer", {3}, [&](Tape& t, Var x) { return Project(t, Outer(x, t.Leaf(b4)), 11); }},
      {"channel_outer_left", {4, 2}, [&](Tape& t, Var x) { return Project(t, ChannelOuter(x, t.Leaf(b42)), 12); }},
      {"channel_outer_right", {4, 2}, [&](Tape& t, Var x) { return Project(t, ChannelOuter(t.Leaf(b42), x), 13); }},
      {"tanh", {2, 3}, [&](Tape& t, Var x) { return Project(t, Tanh(x), 14); }, -2, 2},
      {"sigmoid", {2, 3}, [&](Tape& t, Var x) { return Project(t, Sigmoid(x), 15); }, -3, 3},
      {"softmax_axis0", {4, 3}, [&](Tape& t, Var x) { return Project(t, Softmax(x, 0), 16); }, -2, 2},
      {"softmax_axis1", {4, 3}, [&](Tape& t, Var x) { return Project(t, Softmax(x, 1), 17); }, -2, 2},
      {"max_axis0", {4, 3, 2}, [&](Tape& t, Var x) { return Project(t, MaxAxis(x, 0), 18); }},
      {"max_axis1", {4, 3, 2}, [&](Tape& t, Var x) { return Project(t, MaxAxis(x, 1), 19); }},
      {"sum_axis", {4, 3}, [&](Tape& t, Var x) { return Project(t, SumAxis(x, 1), 20); }},
      {"sum", {4, 3}, [&](Tape&, Var x) { return Scale(Sum(x), 0.7); }},
      {"gather_submatrix",
       {4, 4, 2},
       [&](Tape& t, Var x) {
         const std::size_t rows[] = {0, 2, 3}, cols[] = {1, 3};
         return Project(t, GatherSubmatrix(x, rows, cols), 21);
       }},
      {"gather_rows",
       {5, 2},
       [&](Tape& t, Var x) {
         const std::size_t rows[] = {4, 1, 1, 0};
         return Project(t, GatherRows(x, rows), 22);
       }},
      {"concat_axis0",
       {2, 3},
       [&](Tape& t, Var x) {
         const Var parts[] = {x, t.Leaf(b23), x};
         return Project(t, Concat(parts, 0), 23);
       }},
      {"concat_axis1",
       {2, 3},
       [&](Tape& t, Var x) {
         const Var parts[] = {t.Leaf(b23), x};
         return Project(t, Concat(parts, 1), 24);
       }},
      {"row_dot", {4, 2}, [&](Tape& t, Var x) { return Project(t, RowDot(x, t.Leaf(b42)), 25); }},
      {"reshape", {2, 3}, [&](Tape& t, Var x) { return Project(t, Reshape(x, {3, 2}), 26); }},
      {"binary_cross_entropy", {4, 1}, [&](Tape&, Var x) { return BinaryCrossEntropy(x, labels); }, 0.05, 0.95},
      {"select_conv_input",
       {5, 5, 2},
       [&](Tape& t, Var x) {
         Rng r(5);
         FixedPatternSelector sel(ConvMode::kRandom, 5, 3, 2, &r);
         return Project(t, ConvLayer(x, t.Leaf(kernel3), sel).output, 27);
       }},
      {"select_conv_kernel",
       {3, 3, 2},
       [&](Tape& t, Var x) {
         Rng r(6);
         Rng data(8);
         FixedPatternSelector sel(ConvMode::kRandom, 5, 3, 2, &r);
         return Project(t, ConvLayer(t.Leaf(RandomTensor({5, 5, 2}, data)), x, sel).output, 28);
       }},
      {"select_conv_summed",
       {5, 5, 2},
       [&](Tape& t, Var x) {
         Rng r(9);
         FixedPatternSelector sel(ConvMode::kRandom, 5, 3, 2, &r);
         return Project(t, ConvLayer(x, t.Leaf(kernel3), sel, ChannelMode::kSummed).output, 29);
       }},
  };

  std::vector<GradCheckResult> results;
  for (const OpCase& c : cases) {
    GradCheckResult r{c.name, 0.0, true};
    for (int trial = 0; trial < trials; ++trial) {
      const Tensor point = RandomTensor(c.shape, rng, c.lo, c.hi);
      r.max_error = std::max(r.max_error, FiniteDifferenceCheck(c.fn, point));
    }
    r.passed = r.max_error < tolerance;
    results.push_back(r);
  }

  // End-to-end pair loss at L=4, d=2, one check per parameter tensor.
  // Random selection keeps the support fixed under perturbation.
  const AttributedBipartiteGraph graph = GradCheckGraph();
  ModelConfig cfg;
  cfg.L = 4;
  cfg.d = 2;
  cfg.l1 = 3;
  cfg.fc_hidden = 5;
  cfg.kernel_sizes = {2, 3};
  cfg.mode = ConvMode::kRandom;
  std::vector<GradCheckResult> e2e;
  for (int trial = 0; trial < trials; ++trial) {
    cfg.seed = seed + static_cast<unsigned>(trial);
    const RRCNModel model = RRCNModel::Init(cfg, graph.attribute_names(), graph.vocab_sizes());
    const auto named = model.NamedParameters();
    for (std::size_t i = 0; i < named.size(); ++i) {
      ScalarFn fn = [&, i](Tape& tape, Var x) {
        ModelVars vars = BindModel(tape, model);
        *vars.Named()[i].second = x;
        return PairLoss(model, vars, graph);
      };
      const double err = FiniteDifferenceCheck(fn, *named[i].second);
      if (e2e.size() <= i) e2e.push_back({"end_to_end." + named[i].first, 0.0, true});
      e2e[i].max_error = std::max(e2e[i].max_error, err);
    }
  }
  for (GradCheckResult& r : e2e) {
    r.passed = r.max_error < tolerance;
    results.push_back(r);
  }
  return results;
}

}  // namespace rrcn
