#ifndef RRCN_GRADCHECK_H_
#define RRCN_GRADCHECK_H_

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "rrcn/tape.h"
#include "rrcn/tensor.h"

namespace rrcn {

// Builds a scalar from `x` on `tape`. Called once per evaluation on a fresh
// tape, so the function must be deterministic in `x`.
using ScalarFn = std::function<Var(Tape& tape, Var x)>;

// Max over coordinates of |analytic - central| / max(1, |central|).
// Requires eps in [1e-7, 1e-3]; throws ShapeError if `f` is not scalar.
double FiniteDifferenceCheck(const ScalarFn& f, const Tensor& point, double eps = 1e-5);

struct GradCheckResult {
  std::string name;
  double max_error = 0.0;
  bool passed = false;
};

// Checks every primitive op and the end-to-end pair loss (L=4, d=2) at
// `trials` seeded points each. Used by `rrcn gradcheck` and the tests.
std::vector<GradCheckResult> RunGradCheckSuite(int trials = 5, double tolerance = 1e-4,
                                               unsigned seed = 7);

}  // namespace rrcn

#endif  // RRCN_GRADCHECK_H_
