#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rrcn/gradcheck.h"

namespace rrcn {
namespace {

double Evaluate(const ScalarFn& f, const Tensor& point) {
  Tape tape;
  Var out = f(tape, tape.Leaf(point));
  if (out.value().size() != 1) {
    throw ShapeError("finite_difference_check: function returned " + ShapeString(out.shape()));
  }
  return out.value()[0];
}

}  // namespace

double FiniteDifferenceCheck(const ScalarFn& f, const Tensor& point, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw std::invalid_argument("finite_difference_check: eps must lie in [1e-7, 1e-3]");
  }
  Tape tape;
  Var x = tape.Leaf(point);
  Var out = f(tape, x);
  if (out.value().size() != 1) {
    throw ShapeError("finite_difference_check: function returned " + ShapeString(out.shape()));
  }
  tape.Backward(out);
  const Tensor analytic = tape.grad(x);

  double worst = 0.0;
  Tensor probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    probe[i] = point[i] + eps;
    const double up = Evaluate(f, probe);
    probe[i] = point[i] - eps;
    const double down = Evaluate(f, probe);
    probe[i] = point[i];
    const double central = (up - down) / (2.0 * eps);
    worst = std::max(worst, std::abs(analytic[i] - central) / std::max(1.0, std::abs(central)));
  }
  return worst;
}

}  // namespace rrcn
