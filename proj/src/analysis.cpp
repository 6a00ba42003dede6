#include "refine/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace refine {
namespace {

void require_permutation(const Ranking& r, std::size_t n) {
  if (r.size() != n) throw std::invalid_argument("ranking size does not match realized values");
  std::vector<bool> seen(n, false);
  for (std::size_t a : r) {
    if (a >= n || seen[a]) throw std::invalid_argument("ranking is not a permutation");
    seen[a] = true;
  }
}

std::vector<std::size_t> positions(const Ranking& r) {
  std::vector<std::size_t> pos(r.size());
  for (std::size_t x = 0; x < r.size(); ++x) pos[r[x]] = x;
  return pos;
}

// `first_of[i][j]` is true when i precedes j in efficient order.
bool more_ordered_fast(const std::vector<std::size_t>& pos1, const std::vector<std::size_t>& pos2,
                       const std::vector<std::size_t>& efficient) {
  const std::size_t n = efficient.size();
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = x + 1; y < n; ++y) {
      const std::size_t i = efficient[x];  // belongs ahead of j
      const std::size_t j = efficient[y];
      if (pos2[i] < pos2[j] && !(pos1[i] < pos1[j])) return false;
    }
  }
  return true;
}

}  // namespace

bool more_ordered(const Ranking& pi1, const Ranking& pi2, std::span<const double> realized) {
  require_permutation(pi1, realized.size());
  require_permutation(pi2, realized.size());
  return more_ordered_fast(positions(pi1), positions(pi2), rank_by_score(realized));
}

double rearrangement_dot(const Ranking& ranking, std::span<const double> realized,
                         const SlotProfile& slots) {
  double sum = 0.0;
  for (std::size_t x = 0; x < ranking.size(); ++x) sum += slots[x] * realized[ranking[x]];
  return sum;
}

RearrangementAudit audit_rearrangement(std::span<const double> realized, const SlotProfile& slots,
                                       double tol) {
  const std::size_t n = realized.size();
  if (n > 8) throw std::invalid_argument("exhaustive audit limited to 8 advertisers");

  std::vector<Ranking> all;
  Ranking r(n);
  std::iota(r.begin(), r.end(), std::size_t{0});
  do all.push_back(r);
  while (std::next_permutation(r.begin(), r.end()));

  std::vector<std::vector<std::size_t>> pos;
  std::vector<double> dot;
  pos.reserve(all.size());
  dot.reserve(all.size());
  for (const auto& p : all) {
    pos.push_back(positions(p));
    dot.push_back(rearrangement_dot(p, realized, slots));
  }
  const auto efficient = rank_by_score(realized);

  RearrangementAudit audit;
  audit.rankings = all.size();
  const double best = *std::max_element(dot.begin(), dot.end());
  audit.efficient_is_max = rearrangement_dot(efficient, realized, slots) >= best - tol;
  for (std::size_t a = 0; a < all.size(); ++a) {
    for (std::size_t b = 0; b < all.size(); ++b) {
      if (!more_ordered_fast(pos[a], pos[b], efficient)) continue;
      ++audit.comparable_pairs;
      if (dot[a] < dot[b] - tol) ++audit.violations;
    }
  }
  return audit;
}

double brute_force_best_objective(const AuctionInstance& instance, double alpha) {
  const std::size_t n = instance.advertisers.size();
  const std::size_t m = instance.slots.size();
  std::vector<double> contrib(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = instance.advertisers[i];
    contrib[i] = a.relevance * ((1.0 - alpha) * a.value + alpha * instance.dist.virtual_value(a.value));
  }
  std::vector<bool> used(m, false);
  double best = 0.0;  // the empty assignment
  std::function<void(std::size_t, double)> walk = [&](std::size_t i, double acc) {
    if (i == n) {
      best = std::max(best, acc);
      return;
    }
    walk(i + 1, acc);
    for (std::size_t j = 0; j < m; ++j) {
      if (used[j]) continue;
      used[j] = true;
      walk(i + 1, acc + instance.slots[j] * contrib[i]);
      used[j] = false;
    }
  };
  walk(0, 0.0);
  return best;
}

namespace {

struct VirtualPair {
  double phi;
  double phi_prime;
};

VirtualPair condition_inputs(double v, double v_prime, const Distribution& dist) {
  if (!(v_prime > 0.0) || v < v_prime)
    throw std::domain_error("condition checks need v >= v' > 0");
  return {dist.virtual_value(v), dist.virtual_value(v_prime)};
}

}  // namespace

bool check_condition_hurts(double v, double v_prime, const Distribution& dist, double c) {
  const auto [phi, phi_prime] = condition_inputs(v, v_prime, dist);
  if (phi <= 0.0 || phi_prime < 0.0) return false;
  return v_prime / v < c && c < phi_prime / phi;
}

bool check_condition_helps(double v, double v_prime, const Distribution& dist, double c) {
  const auto [phi, phi_prime] = condition_inputs(v, v_prime, dist);
  if (phi <= 0.0 || phi_prime < 0.0) return false;
  return c < std::min(v_prime / v, phi_prime / phi);
}

double value_at_scaled_virtual(const Distribution& dist, double v_prime, double c) {
  return std::min(dist.virtual_value_inverse(dist.virtual_value(v_prime) / c),
                  dist.finite_support().hi);
}

namespace {

// Roots of each kink function on [lo, hi], located by a sign scan followed by
// bisection. Splitting the outer integral there keeps the integrand smooth on
// every piece.
std::vector<double> breakpoints(double lo, double hi,
                                const std::vector<std::function<double(double)>>& kinks) {
  std::vector<double> out{lo, hi};
  constexpr int kScan = 256;
  for (const auto& h : kinks) {
    double x0 = lo;
    double h0 = h(x0);
    for (int k = 1; k <= kScan; ++k) {
      const double x1 = lo + (hi - lo) * k / kScan;
      const double h1 = h(x1);
      if ((h0 < 0.0) != (h1 < 0.0)) {
        double a = x0, b = x1;
        for (int it = 0; it < 100 && b - a > 1e-14 * std::max(1.0, std::abs(b)); ++it) {
          const double mid = 0.5 * (a + b);
          ((h(mid) < 0.0) == (h0 < 0.0) ? a : b) = mid;
        }
        out.push_back(0.5 * (a + b));
      }
      x0 = x1;
      h0 = h1;
    }
  }
  // Drop slivers: a kink sitting on an endpoint bisects to a point a few ulps away.
  std::sort(out.begin(), out.end());
  const double eps = 1e-12 * std::max(1.0, hi - lo);
  std::vector<double> cuts{lo};
  for (double x : out)
    if (x - cuts.back() > eps && hi - x > eps) cuts.push_back(x);
  cuts.push_back(hi);
  return cuts;
}

// Integral over v' in [lo, hi] of f(v') * Integral_{bounds(v')} g(v, v') f(v) dv.
QuadratureResult nested(const Distribution& dist, double lo, double hi,
                        const std::function<std::pair<double, double>(double)>& bounds,
                        const std::function<double(double, double)>& g,
                        const std::vector<std::function<double(double)>>& kinks, double tol) {
  QuadratureResult total;
  if (!(lo < hi)) return total;
  std::size_t inner_calls = 0;
  auto outer = [&](double vp) {
    const auto [a, b] = bounds(vp);
    if (!(a < b)) return 0.0;
    const auto inner =
        quadrature_1d([&](double v) { return g(v, vp) * dist.pdf(v); }, a, b, tol);
    inner_calls += inner.evaluations;
    return inner.value * dist.pdf(vp);
  };
  const auto cuts = breakpoints(lo, hi, kinks);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const auto piece = quadrature_1d(outer, cuts[k], cuts[k + 1], tol);
    total.value += piece.value;
    total.error_estimate += piece.error_estimate;
    total.evaluations += piece.evaluations;
  }
  total.evaluations += inner_calls;
  return total;
}

double reserve_value(const Distribution& dist) { return dist.virtual_value_inverse(0.0); }

}  // namespace

QuadratureResult loss_integral_refinement(const Distribution& dist, double c, double tol) {
  if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("refinement loss needs 0 < c <= 1");
  const Interval s = dist.finite_support();
  auto v_bar = [&](double vp) { return value_at_scaled_virtual(dist, vp, c); };
  return nested(
      dist, std::max(s.lo, reserve_value(dist)), s.hi,
      [&](double vp) { return std::pair{vp / c, std::min(v_bar(vp), s.hi)}; },
      [c](double v, double vp) { return c * v - vp; },
      {[&](double vp) { return vp / c - s.hi; }, [&](double vp) { return v_bar(vp) - s.hi; },
       [&](double vp) { return v_bar(vp) - vp / c; }},
      tol);
}

CoarsenessLoss loss_integral_coarseness(const Distribution& dist, double c, double tol) {
  if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("coarseness loss needs 0 <= c <= 1");
  const Interval s = dist.finite_support();
  auto upper = [&](double vp) { return c > 0.0 ? std::min(vp / c, s.hi) : s.hi; };

  CoarsenessLoss out;
  out.as_written = nested(
      dist, s.lo, s.hi, [&](double vp) { return std::pair{s.lo, upper(vp)}; },
      [c](double v, double vp) { return c * v - vp; },
      {[&](double vp) { return c * s.hi - vp; }}, tol);

  if (c == 0.0) return out;  // phi < phi'/0 holds nowhere useful; v_bar undefined
  auto v_bar = [&](double vp) { return value_at_scaled_virtual(dist, vp, c); };
  out.active = nested(
      dist, std::max(s.lo, reserve_value(dist)), s.hi,
      [&](double vp) { return std::pair{vp, std::min(upper(vp), v_bar(vp))}; },
      [c](double v, double vp) { return vp - c * v; },
      {[&](double vp) { return vp / c - s.hi; }, [&](double vp) { return v_bar(vp) - s.hi; },
       [&](double vp) { return v_bar(vp) - vp / c; }},
      tol);
  return out;
}

std::optional<bool> refinement_region_provably_empty(const Distribution& dist, double c) {
  if (!dist.mhr_by_construction()) return std::nullopt;
  return c > 0.0 && c <= 1.0;
}

double s_bar(double s_prime, double H) {
  if (!(H > 0.0)) throw std::invalid_argument("s_bar needs H > 0");
  const double x = s_prime - 1.0;
  return 1.0 + std::sqrt(2.0 * x * x + H);
}

AppendixDelta appendix_delta(double H, double b) {
  if (!(H > 1.0)) throw std::invalid_argument("appendix_delta needs H > 1");
  if (!(b < 0.0)) throw std::invalid_argument("appendix_delta needs b < 0");

  const double a = -b * H;  // equals H in the worked example (b = -1)
  const double ra = std::sqrt(a);

  AppendixDelta d;
  d.H = H;
  d.b = b;

  // First integral: (1/2) Int_1^H log(2x^2 + a) / x^2 dx.
  auto F1 = [&](double x) {
    return std::sqrt(2.0) * std::atan(std::sqrt(2.0) * x / ra) / ra -
           std::log(a + 2.0 * x * x) / (2.0 * x);
  };
  d.I1 = F1(H) - F1(1.0);

  // Second integral: Int_1^H x^-2 dx - Int_1^H (2x - b) / (x^2 sqrt(2x^2 + a)) dx.
  auto F2 = [&](double x) {
    const double R = std::sqrt(a + 2.0 * x * x);
    return b * R / (a * x) - 2.0 * std::log(std::sqrt(a * (a + 2.0 * x * x)) + a) / ra +
           2.0 * std::log(ra * x) / ra;
  };
  d.I2 = 1.0 - 1.0 / H - (F2(H) - F2(1.0));

  // Third integral: Int_1^H (x - b) / x^3 + log(x) / x^2 dx.
  auto F3 = [&](double x) { return -1.0 / x + b / (2.0 * x * x) - (std::log(x) + 1.0) / x; };
  d.I3 = F3(H) - F3(1.0);

  const double k = H / (H - 1.0);
  d.delta_closed = 0.5 * k * k * (d.I1 - d.I2 - d.I3);

  constexpr double kTol = 1e-12;
  const auto q1 = quadrature_1d(
      [&](double x) { return 0.5 * std::log(2.0 * x * x + a) / (x * x); }, 1.0, H, kTol);
  const auto q2 = quadrature_1d(
      [&](double x) {
        const double R = std::sqrt(2.0 * x * x + a);
        return (R - 2.0 * x + b) / (x * x * R);
      },
      1.0, H, kTol);
  const auto q3 = quadrature_1d(
      [&](double x) { return (x - b) / (x * x * x) + std::log(x) / (x * x); }, 1.0, H, kTol);
  d.I1_quad = q1.value;
  d.I2_quad = q2.value;
  d.I3_quad = q3.value;
  d.delta_quad = 0.5 * k * k * (d.I1_quad - d.I2_quad - d.I3_quad);
  d.evaluations = q1.evaluations + q2.evaluations + q3.evaluations;
  return d;
}

}  // namespace refine
