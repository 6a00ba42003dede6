#include "refine/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

namespace refine {

namespace {

struct Segment {
  double a, b, value, error, l1;
  bool operator<(const Segment& o) const { return error < o.error; }
};

}  // namespace

// Global adaptive bisection over single-panel 15-point Gauss-Kronrod rules.
// Boost's own recursive driver compares an error estimate on the reference
// interval [-1, 1] against a tolerance on the mapped one, which makes short
// intervals recurse to full depth; here each panel's error is rescaled.
QuadratureResult quadrature_1d(const std::function<double(double)>& f, double a, double b,
                               double tol) {
  if (!(a <= b)) throw std::invalid_argument("quadrature_1d: need a <= b");
  if (a == b) return {};

  constexpr std::size_t kMaxPanels = 1u << 16;
  std::size_t calls = 0;
  auto counted = [&](double x) {
    ++calls;
    const double y = f(x);
    if (!std::isfinite(y)) throw NumericError("quadrature_1d: integrand is not finite");
    return y;
  };
  auto panel = [&](double lo, double hi) {
    double err = 0.0, l1 = 0.0;
    const double v =
        boost::math::quadrature::gauss_kronrod<double, 15>::integrate(counted, lo, hi, 0, 0.0, &err, &l1);
    return Segment{lo, hi, v, err * 0.5 * (hi - lo), l1};
  };

  std::priority_queue<Segment> heap;
  heap.push(panel(a, b));
  double value = heap.top().value, error = heap.top().error, l1 = heap.top().l1;
  while (error > std::max(tol, tol * l1) && heap.size() < kMaxPanels) {
    const Segment s = heap.top();
    const double mid = 0.5 * (s.a + s.b);
    if (!(s.a < mid && mid < s.b)) break;  // cannot split further in double precision
    heap.pop();
    const Segment left = panel(s.a, mid), right = panel(mid, s.b);
    value += left.value + right.value - s.value;
    error += left.error + right.error - s.error;
    l1 += left.l1 + right.l1 - s.l1;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed drift from the running updates.
  value = error = l1 = 0.0;
  for (; !heap.empty(); heap.pop()) {
    value += heap.top().value;
    error += heap.top().error;
    l1 += heap.top().l1;
  }
  if (error > std::max(tol, tol * l1)) {
    std::ostringstream os;
    os << "quadrature_1d: error estimate " << error << " above tolerance " << tol << " on [" << a
       << ", " << b << "]";
    throw NumericError(os.str());
  }
  return QuadratureResult{value, error, calls};
}

}  // namespace refine
