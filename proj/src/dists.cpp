#include "refine/dists.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "refine/rng.hpp"
#include "refine/tolerances.hpp"

namespace refine {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kExponentialTail = 1e-9;

// H/(H-1), the normalizer of the truncated equal-revenue law.
double tser_scale(const TruncatedShiftedEqualRevenue& d) { return d.H / (d.H - 1.0); }

}  // namespace

bool operator==(const Uniform& a, const Uniform& b) { return a.lo == b.lo && a.hi == b.hi; }
bool operator==(const Exponential& a, const Exponential& b) { return a.rate == b.rate; }
bool operator==(const TruncatedShiftedEqualRevenue& a, const TruncatedShiftedEqualRevenue& b) {
  return a.H == b.H && a.b == b.b;
}
bool operator==(const Distribution& a, const Distribution& b) { return a.kind_ == b.kind_; }

Distribution::Distribution(Kind kind) : kind_(kind) {
  std::visit(overloaded{
                 [](const Uniform& u) {
                   if (!(std::isfinite(u.lo) && std::isfinite(u.hi) && u.lo < u.hi))
                     throw std::invalid_argument("uniform: need finite lo < hi");
                 },
                 [](const Exponential& e) {
                   if (!(std::isfinite(e.rate) && e.rate > 0.0))
                     throw std::invalid_argument("exponential: need rate > 0");
                 },
                 [](const TruncatedShiftedEqualRevenue& t) {
                   if (!(std::isfinite(t.H) && t.H > 1.0))
                     throw std::invalid_argument("tser: need H > 1");
                   if (!std::isfinite(t.b)) throw std::invalid_argument("tser: b must be finite");
                 },
             },
             kind_);
}

std::string Distribution::name() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const Uniform& u) { os << "Uniform(" << u.lo << "," << u.hi << ")"; },
                 [&](const Exponential& e) { os << "Exponential(" << e.rate << ")"; },
                 [&](const TruncatedShiftedEqualRevenue& t) {
                   os << "TSER(" << t.H << "," << t.b << ")";
                 },
             },
             kind_);
  return os.str();
}

Interval Distribution::support() const noexcept {
  return std::visit(overloaded{
                        [](const Uniform& u) { return Interval{u.lo, u.hi}; },
                        [](const Exponential&) {
                          return Interval{0.0, std::numeric_limits<double>::infinity()};
                        },
                        [](const TruncatedShiftedEqualRevenue& t) {
                          return Interval{1.0 - t.b, t.H - t.b};
                        },
                    },
                    kind_);
}

Interval Distribution::finite_support() const noexcept {
  if (const auto* e = std::get_if<Exponential>(&kind_))
    return Interval{0.0, -std::log(kExponentialTail) / e->rate};
  return support();
}

void Distribution::require_in_support(double v, const char* op) const {
  if (!support().contains(v)) {
    std::ostringstream os;
    os << op << ": value " << v << " outside support of " << name();
    throw std::domain_error(os.str());
  }
}

double Distribution::cdf(double v) const {
  require_in_support(v, "cdf");
  return std::visit(overloaded{
                        [v](const Uniform& u) { return (v - u.lo) / (u.hi - u.lo); },
                        [v](const Exponential& e) { return -std::expm1(-e.rate * v); },
                        [v](const TruncatedShiftedEqualRevenue& t) {
                          return tser_scale(t) * (1.0 - 1.0 / (v + t.b));
                        },
                    },
                    kind_);
}

double Distribution::pdf(double v) const {
  require_in_support(v, "pdf");
  return std::visit(overloaded{
                        [](const Uniform& u) { return 1.0 / (u.hi - u.lo); },
                        [v](const Exponential& e) { return e.rate * std::exp(-e.rate * v); },
                        [v](const TruncatedShiftedEqualRevenue& t) {
                          const double x = v + t.b;
                          return tser_scale(t) / (x * x);
                        },
                    },
                    kind_);
}

double Distribution::inverse_hazard_rate(double v) const {
  require_in_support(v, "inverse_hazard_rate");
  return std::visit(overloaded{
                        [v](const Uniform& u) { return u.hi - v; },
                        [](const Exponential& e) { return 1.0 / e.rate; },
                        [v](const TruncatedShiftedEqualRevenue& t) {
                          const double x = v + t.b;
                          return x - x * x / t.H;
                        },
                    },
                    kind_);
}

double Distribution::virtual_value(double v) const { return v - inverse_hazard_rate(v); }

double Distribution::alpha_virtual_value(double v, double alpha) const {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("alpha must lie in [0, 1]");
  return v - alpha * inverse_hazard_rate(v);
}

double Distribution::penalty_fraction(double v) const {
  if (!(v > 0.0)) throw std::domain_error("penalty_fraction: value must be positive");
  return inverse_hazard_rate(v) / v;
}

double Distribution::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must lie in [0, 1]");
  return std::visit(overloaded{
                        [p](const Uniform& u) { return u.lo + p * (u.hi - u.lo); },
                        [p](const Exponential& e) { return -std::log1p(-p) / e.rate; },
                        [p, this](const TruncatedShiftedEqualRevenue& t) {
                          if (p == 1.0) return support().hi;
                          return 1.0 / (1.0 - p / tser_scale(t)) - t.b;
                        },
                    },
                    kind_);
}

double Distribution::virtual_value_inverse(double phi) const {
  const Interval s = support();
  if (phi <= virtual_value(s.lo)) return s.lo;
  if (std::isfinite(s.hi) && phi >= virtual_value(s.hi)) return s.hi;
  return std::visit(overloaded{
                        [phi](const Uniform& u) { return 0.5 * (phi + u.hi); },
                        [phi](const Exponential& e) { return phi + 1.0 / e.rate; },
                        [phi](const TruncatedShiftedEqualRevenue& t) {
                          return std::sqrt(t.H * (phi + t.b)) - t.b;
                        },
                    },
                    kind_);
}

double Distribution::mean() const noexcept {
  return std::visit(overloaded{
                        [](const Uniform& u) { return 0.5 * (u.lo + u.hi); },
                        [](const Exponential& e) { return 1.0 / e.rate; },
                        [](const TruncatedShiftedEqualRevenue& t) {
                          // E[X] over [1, H] is H log H / (H - 1), then shift.
                          return t.H * std::log(t.H) / (t.H - 1.0) - t.b;
                        },
                    },
                    kind_);
}

std::vector<double> Distribution::sample(std::uint64_t seed, std::size_t n,
                                         std::uint64_t stream) const {
  CounterRng rng(seed, stream);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(quantile(rng.uniform()));
  return out;
}

bool Distribution::mhr_by_construction() const noexcept {
  return !std::holds_alternative<TruncatedShiftedEqualRevenue>(kind_);
}

std::vector<double> interior_grid(const Distribution& dist, std::size_t n) {
  const Interval s = dist.finite_support();
  std::vector<double> grid;
  grid.reserve(n);
  const double step = s.width() / static_cast<double>(n + 1);
  for (std::size_t k = 1; k <= n; ++k) grid.push_back(s.lo + step * static_cast<double>(k));
  return grid;
}

namespace {

// `sign` = -1 certifies non-increasing, +1 non-decreasing.
template <typename F>
Certificate certify_monotone(const Distribution& dist, std::size_t grid_size, int sign, F fn) {
  if (grid_size < 2) throw std::invalid_argument("certification grid needs at least 2 points");
  const auto grid = interior_grid(dist, grid_size);
  double prev = fn(grid.front());
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double cur = fn(grid[k]);
    if (sign * (cur - prev) < -kTol.monotone)
      return Certificate{false, Witness{grid[k - 1], grid[k], prev, cur}};
    prev = cur;
  }
  return Certificate{true, std::nullopt};
}

}  // namespace

Certificate certify_mhr(const Distribution& dist, std::size_t grid_size) {
  return certify_monotone(dist, grid_size, -1,
                          [&](double v) { return dist.inverse_hazard_rate(v); });
}

Certificate certify_regular(const Distribution& dist, std::size_t grid_size) {
  return certify_monotone(dist, grid_size, +1, [&](double v) { return dist.virtual_value(v); });
}

}  // namespace refine
