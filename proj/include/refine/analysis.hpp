#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "refine/auction.hpp"
#include "refine/dists.hpp"
#include "refine/quadrature.hpp"

namespace refine {

/// rank -> advertiser.
using Ranking = std::vector<std::size_t>;

/// True iff every pair that `pi2` places in efficient order (descending
/// realized value, ties by index) is also in efficient order in `pi1`.
/// Throws std::invalid_argument unless both are permutations of the indices
/// of `realized`.
bool more_ordered(const Ranking& pi1, const Ranking& pi2, std::span<const double> realized);

/// sum_x s_x * r_{ranking[x]}; slots past the profile count as zero.
double rearrangement_dot(const Ranking& ranking, std::span<const double> realized,
                         const SlotProfile& slots);

struct RearrangementAudit {
  std::size_t rankings = 0;
  std::size_t comparable_pairs = 0;  // pairs with more_ordered == true
  std::size_t violations = 0;        // comparable pairs where the dot product drops
  bool efficient_is_max = true;      // efficient order attains the maximum
};

/// Exhaustive check over all n! x n! ranking pairs.
RearrangementAudit audit_rearrangement(std::span<const double> realized, const SlotProfile& slots,
                                       double tol = 1e-12);

/// Maximum of objective(instance, asg, alpha) over every injective partial
/// assignment of advertisers to slots.
double brute_force_best_objective(const AuctionInstance& instance, double alpha);

/// v'/v < c < phi'/phi: a value pair on which refinement can cost welfare.
/// False whenever phi <= 0 or phi' < 0, where refinement leaves the
/// revenue-optimal allocation unchanged. Throws std::domain_error unless
/// v >= v' > 0.
bool check_condition_hurts(double v, double v_prime, const Distribution& dist, double c = 0.5);

/// c < min(v'/v, phi'/phi): a value pair on which coarseness can cost welfare.
/// Same preconditions as check_condition_hurts.
bool check_condition_helps(double v, double v_prime, const Distribution& dist, double c = 0.5);

/// Value whose virtual value is phi(v') / c, clamped to the finite support.
double value_at_scaled_virtual(const Distribution& dist, double v_prime, double c);

/// Expected welfare lost to refinement in the two-bidder, one-slot location
/// example: integral of (c v - v') f(v) f(v') over v' with phi(v') >= 0 and
/// v' / c <= v <= v_bar(v'). Nested adaptive quadrature.
/// Throws std::invalid_argument unless 0 < c <= 1.
QuadratureResult loss_integral_refinement(const Distribution& dist, double c = 0.5,
                                          double tol = 1e-9);

struct CoarsenessLoss {
  /// Integral of (c v - v') f f over v_min <= v <= v'/c, exactly as stated.
  /// Typically negative: the integrand is negative wherever c v < v'.
  QuadratureResult as_written;
  /// Loss magnitude (v' - c v) f f restricted to the pairs where coarseness
  /// actually misallocates: phi(v') >= 0 and v' <= v < min(v'/c, v_bar(v')).
  QuadratureResult active;
};

/// Throws std::invalid_argument unless 0 <= c <= 1.
CoarsenessLoss loss_integral_coarseness(const Distribution& dist, double c = 0.5,
                                        double tol = 1e-9);

/// Analytic certificate that the refinement-loss region is empty. For an MHR
/// family and c in (0, 1], lambda(v'/c) <= lambda(v') <= lambda(v')/c forces
/// phi(v'/c) >= phi(v')/c, so no v > v'/c satisfies phi(v) < phi(v')/c.
/// nullopt when the family is not MHR by construction.
std::optional<bool> refinement_region_provably_empty(const Distribution& dist, double c);

/// The value s with phi(s) = 2 phi(s') under TSER(H, -1).
double s_bar(double s_prime, double H);

struct AppendixDelta {
  double H = 0.0;
  double b = 0.0;
  // Closed-form antiderivative evaluations.
  double I1 = 0.0;
  double I2 = 0.0;
  double I3 = 0.0;
  double delta_closed = 0.0;
  // Direct quadrature of the same three integrands.
  double I1_quad = 0.0;
  double I2_quad = 0.0;
  double I3_quad = 0.0;
  double delta_quad = 0.0;
  std::size_t evaluations = 0;
};

/// Difference between the expected welfare lost to refinement and to
/// coarseness under TSER(H, b): (1/2) (H/(H-1))^2 (I1 - I2 - I3), after the
/// substitution x = s' + b over x in [1, H]. Needs H > 1 and b < 0 so that
/// a = -b H > 0. Throws std::invalid_argument otherwise, NumericError on
/// quadrature failure.
AppendixDelta appendix_delta(double H = 1000.0, double b = -1.0);

}  // namespace refine
