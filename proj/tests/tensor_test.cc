#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "rrcn/gradcheck.h"
#include "rrcn/ops.h"
#include "rrcn/rng.h"

namespace rrcn {
namespace {

Tensor Iota(const Shape& shape) {
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  return t;
}

TEST(TensorTest, ShapeAndDataMustAgree) {
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  const Tensor t(Shape{2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
}

TEST(TensorTest, ItemRequiresSingleElement) {
  EXPECT_EQ(Tensor::Scalar(4.0).item(), 4.0);
  EXPECT_THROW(Tensor(Shape{2}).item(), ShapeError);
}

TEST(OpsTest, SoftmaxOfEqualLogitsIsUniform) {
  Tape tape;
  const Var s = Softmax(tape.Leaf(Tensor::Vector({0, 0})), 0);
  EXPECT_DOUBLE_EQ(s.value()[0], 0.5);
  EXPECT_DOUBLE_EQ(s.value()[1], 0.5);
}

TEST(OpsTest, SoftmaxSumsToOneAndStaysInsideTheOpenInterval) {
  Rng rng(3);
  Tensor x(Shape{5, 7});
  for (double& v : x.values()) v = UniformRange(rng, -30, 30);
  Tape tape;
  const Var s = Softmax(tape.Leaf(x), 1);
  for (std::size_t r = 0; r < 5; ++r) {
    double total = 0;
    for (std::size_t c = 0; c < 7; ++c) {
      const double p = s.value()(r, c);
      EXPECT_GT(p, 0.0);
      EXPECT_LT(p, 1.0);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(OpsTest, SoftmaxSurvivesHugeLogits) {
  Tape tape;
  const Var s = Softmax(tape.Leaf(Tensor::Vector({1000, 1000, 0})), 0);
  EXPECT_DOUBLE_EQ(s.value()[0], 0.5);
  EXPECT_TRUE(s.value().AllFinite());
}

TEST(OpsTest, OuterProduct) {
  Tape tape;
  const Var o = Outer(tape.Leaf(Tensor::Vector({1, 2})), tape.Leaf(Tensor::Vector({3, 4})));
  EXPECT_EQ(o.value(), Tensor(Shape{2, 2}, std::vector<double>{3, 4, 6, 8}));
}

TEST(OpsTest, GatherSubmatrixMatchesIndexArithmetic) {
  Tensor h(Shape{4, 4, 1});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) h(i, j, 0) = 4.0 * i + j;
  Tape tape;
  const std::size_t rows[] = {0, 2}, cols[] = {1, 3};
  const Var g = GatherSubmatrix(tape.Leaf(h), rows, cols);
  ASSERT_EQ(g.shape(), (Shape{2, 2, 1}));
  EXPECT_EQ(g.value().vec(), (std::vector<double>{1, 3, 9, 11}));
  // Loop oracle over every entry.
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) EXPECT_EQ(g.value()(a, b, 0), h(rows[a], cols[b], 0));
}

TEST(OpsTest, ShapeMismatchNamesTheOp) {
  Tape tape;
  try {
    MatMul(tape.Leaf(Tensor(Shape{2, 3})), tape.Leaf(Tensor(Shape{2, 3})));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("matmul"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("[2x3]"), std::string::npos) << e.what();
  }
}

TEST(OpsTest, NonFiniteLeafIsRejected) {
  Tape tape;
  EXPECT_THROW(tape.Leaf(Tensor::Vector({1, std::numeric_limits<double>::quiet_NaN()})), NumericError);
  EXPECT_THROW(tape.Leaf(Tensor::Vector({std::numeric_limits<double>::infinity()})), NumericError);
}

TEST(OpsTest, OverflowInsideAnOpIsRejected) {
  Tape tape;
  const Var big = tape.Leaf(Tensor::Vector({1e200}));
  EXPECT_THROW(Multiply(big, big), NumericError);
}

TEST(OpsTest, MaxAxisBreaksTiesTowardTheLowestIndex) {
  Tape tape;
  const Var x = tape.Leaf(Tensor(Shape{2, 3}, std::vector<double>{1, 5, 5, 2, 2, 0}));
  const Var m = MaxAxis(x, 1);
  EXPECT_EQ(m.value().vec(), (std::vector<double>{5, 2}));
  tape.Backward(Sum(m));
  EXPECT_EQ(tape.grad(x).vec(), (std::vector<double>{0, 1, 0, 1, 0, 0}));
}

TEST(OpsTest, MaxAxisRoutesTheWholeUpstreamGradientToArgmax) {
  Rng rng(11);
  Tensor x(Shape{4, 5, 3});
  for (double& v : x.values()) v = UniformRange(rng, -1, 1);
  Tensor up(Shape{4, 3});
  for (double& v : up.values()) v = UniformRange(rng, -2, 2);
  Tape tape;
  const Var xv = tape.Leaf(x);
  tape.Backward(Sum(Multiply(MaxAxis(xv, 1), tape.Leaf(up))));
  const Tensor& g = tape.grad(xv);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t l = 0; l < 3; ++l) {
      double routed = 0;
      std::size_t nonzero = 0;
      for (std::size_t j = 0; j < 5; ++j) {
        routed += g(i, j, l);
        if (g(i, j, l) != 0.0) ++nonzero;
      }
      EXPECT_DOUBLE_EQ(routed, up(i, l));
      EXPECT_EQ(nonzero, 1u);
    }
}

TEST(TapeTest, SquareHasDerivativeSix) {
  Tape tape;
  const Var x = tape.Leaf(Tensor::Scalar(3.0));
  const Var loss = Multiply(x, x);
  tape.Backward(loss);
  EXPECT_DOUBLE_EQ(tape.grad(x).item(), 6.0);
  EXPECT_DOUBLE_EQ(tape.grad(loss).item(), 1.0);
}

TEST(TapeTest, GatherBackwardScattersOnes) {
  Tape tape;
  const Var h = tape.Leaf(Iota({4, 4, 2}));
  const std::size_t rows[] = {1, 3}, cols[] = {0, 2};
  tape.Backward(Sum(GatherSubmatrix(h, rows, cols)));
  const Tensor& g = tape.grad(h);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t l = 0; l < 2; ++l) {
        const bool hit = (i == 1 || i == 3) && (j == 0 || j == 2);
        EXPECT_EQ(g(i, j, l), hit ? 1.0 : 0.0) << i << "," << j << "," << l;
      }
}

TEST(TapeTest, UnreachedNodesHaveZeroGradient) {
  Tape tape;
  const Var a = tape.Leaf(Tensor::Vector({1, 2}));
  const Var b = tape.Leaf(Tensor::Vector({3, 4}));
  const Var unused = Tanh(b);
  tape.Backward(Sum(a));
  EXPECT_EQ(tape.grad(b).vec(), (std::vector<double>{0, 0}));
  EXPECT_EQ(tape.grad(unused).vec(), (std::vector<double>{0, 0}));
}

TEST(TapeTest, BackwardRequiresAScalar) {
  Tape tape;
  const Var a = tape.Leaf(Tensor::Vector({1, 2}));
  EXPECT_THROW(tape.Backward(a), ShapeError);
}

TEST(TapeTest, SecondBackwardIsRejected) {
  Tape tape;
  const Var x = tape.Leaf(Tensor::Scalar(2.0));
  const Var loss = Multiply(x, x);
  tape.Backward(loss);
  EXPECT_THROW(tape.Backward(loss), std::logic_error);
  EXPECT_DOUBLE_EQ(tape.grad(x).item(), 4.0);
}

TEST(TapeTest, GradBeforeBackwardIsRejected) {
  Tape tape;
  const Var x = tape.Leaf(Tensor::Scalar(2.0));
  EXPECT_THROW(tape.grad(x), std::logic_error);
}

TEST(TapeTest, BroadcastAddSumsGradientOverStretchedAxes) {
  Tape tape;
  const Var a = tape.Leaf(Tensor(Shape{3, 2}, 1.0));
  const Var b = tape.Leaf(Tensor::Vector({5, 7}));
  tape.Backward(Sum(Add(a, b)));
  EXPECT_EQ(tape.grad(b).vec(), (std::vector<double>{3, 3}));
}

TEST(TapeTest, BceOfSigmoidMatchesFiniteDifferences) {
  Rng rng(21);
  Tensor x(Shape{6, 3});
  for (double& v : x.values()) v = UniformRange(rng, -1, 1);
  Tensor w(Shape{3, 1});
  for (double& v : w.values()) v = UniformRange(rng, -1, 1);
  const Tensor y(Shape{6, 1}, std::vector<double>{1, 0, 1, 1, 0, 0});
  const ScalarFn f = [&](Tape& tape, Var wv) { return BinaryCrossEntropy(Sigmoid(MatMul(tape.Leaf(x), wv)), y); };
  EXPECT_LT(FiniteDifferenceCheck(f, w), 1e-6);
}

TEST(FiniteDifferenceTest, LinearFunctionIsExactUpToRounding) {
  const ScalarFn f = [](Tape&, Var x) { return Sum(x); };
  // Central differences have no truncation error here; what remains is
  // cancellation, about machine epsilon over eps.
  EXPECT_LT(FiniteDifferenceCheck(f, Tensor(Shape{3, 2}, 0.7)), 1e-9);
}

TEST(FiniteDifferenceTest, TanhAtOrigin) {
  const ScalarFn f = [](Tape&, Var x) { return Sum(Tanh(x)); };
  EXPECT_LT(FiniteDifferenceCheck(f, Tensor(Shape{4})), 1e-9);
}

TEST(FiniteDifferenceTest, RejectsNonScalarFunctionsAndBadSteps) {
  const ScalarFn vec = [](Tape&, Var x) { return Tanh(x); };
  EXPECT_THROW(FiniteDifferenceCheck(vec, Tensor(Shape{2})), ShapeError);
  const ScalarFn ok = [](Tape&, Var x) { return Sum(x); };
  EXPECT_THROW(FiniteDifferenceCheck(ok, Tensor(Shape{2}), 1e-2), std::invalid_argument);
  EXPECT_THROW(FiniteDifferenceCheck(ok, Tensor(Shape{2}), 1e-9), std::invalid_argument);
}

// 100 seeded points per op, per the gradient-integrity property.
TEST(GradCheckSuite, EveryOpAndTheEndToEndLossPass) {
  for (const GradCheckResult& r : RunGradCheckSuite(100)) {
    if (r.name.rfind("end_to_end", 0) == 0) continue;
    EXPECT_TRUE(r.passed) << r.name << " max error " << r.max_error;
  }
  for (const GradCheckResult& r : RunGradCheckSuite(3)) {
    EXPECT_TRUE(r.passed) << r.name << " max error " << r.max_error;
  }
}

}  // namespace
}  // namespace rrcn
