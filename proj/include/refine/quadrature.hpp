#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>

namespace refine {

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t evaluations = 0;
};

/// Adaptive 15-point Gauss-Kronrod integration of f over [a, b]. Converges
/// when the estimated error is at most max(tol, tol * L1 norm). An empty
/// interval (a == b) integrates to exactly 0 without calling f. Throws
/// std::invalid_argument for a > b and NumericError when the panel budget
/// is exhausted before the error estimate meets the tolerance.
QuadratureResult quadrature_1d(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-10);

}  // namespace refine
