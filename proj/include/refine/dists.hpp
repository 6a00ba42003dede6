#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace refine {

struct Uniform {
  double lo;
  double hi;
};

struct Exponential {
  double rate;
};

/// Equal-revenue law truncated to [1, H] and shifted by -b:
/// F(v) = H/(H-1) * (1 - 1/(v+b)) on [1-b, H-b].
struct TruncatedShiftedEqualRevenue {
  double H;
  double b;
};

struct Interval {
  double lo;
  double hi;

  double width() const noexcept { return hi - lo; }
  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

/// Non-decreasing (or non-increasing) failure on a certification grid:
/// `lo < hi` with the checked function moving the wrong way between them.
struct Witness {
  double lo;
  double hi;
  double f_lo;
  double f_hi;
};

struct Certificate {
  bool holds = false;
  std::optional<Witness> witness;

  explicit operator bool() const noexcept { return holds; }
};

/// A value distribution from the supported parametric families, with the
/// information-rent and virtual-value machinery used by the mechanisms.
class Distribution {
 public:
  using Kind = std::variant<Uniform, Exponential, TruncatedShiftedEqualRevenue>;

  /// Throws std::invalid_argument on malformed parameters.
  explicit Distribution(Kind kind);

  static Distribution uniform(double lo, double hi) { return Distribution(Uniform{lo, hi}); }
  static Distribution exponential(double rate) { return Distribution(Exponential{rate}); }
  static Distribution tser(double H, double b) {
    return Distribution(TruncatedShiftedEqualRevenue{H, b});
  }

  const Kind& kind() const noexcept { return kind_; }
  std::string name() const;

  /// True support; unbounded above for Exponential.
  Interval support() const noexcept;
  /// Support with the exponential tail cut at quantile 1 - 1e-9. Used for
  /// grids and quadrature only.
  Interval finite_support() const noexcept;

  // The members below throw std::domain_error for values outside support().
  double cdf(double v) const;
  double pdf(double v) const;
  double inverse_hazard_rate(double v) const;
  double virtual_value(double v) const;
  /// v - alpha * lambda(v); throws std::invalid_argument unless 0 <= alpha <= 1.
  double alpha_virtual_value(double v, double alpha) const;
  /// lambda(v) / v; throws std::domain_error for v <= 0.
  double penalty_fraction(double v) const;

  /// Throws std::invalid_argument unless 0 <= p <= 1.
  double quantile(double p) const;

  /// Smallest v in support() with virtual_value(v) >= phi, clamped to the
  /// support ends. Closed form per family.
  double virtual_value_inverse(double phi) const;

  double mean() const noexcept;

  /// Inverse-CDF draws from stream `stream` of `seed`.
  std::vector<double> sample(std::uint64_t seed, std::size_t n, std::uint64_t stream = 0) const;

  /// Analytic MHR membership of the family (all supported Uniform and
  /// Exponential laws are MHR, the equal-revenue variant is not).
  bool mhr_by_construction() const noexcept;

  friend bool operator==(const Distribution& a, const Distribution& b);

 private:
  void require_in_support(double v, const char* op) const;

  Kind kind_;
};

bool operator==(const Uniform& a, const Uniform& b);
bool operator==(const Exponential& a, const Exponential& b);
bool operator==(const TruncatedShiftedEqualRevenue& a, const TruncatedShiftedEqualRevenue& b);

/// Evenly spaced interior grid of `n` points (support endpoints excluded).
std::vector<double> interior_grid(const Distribution& dist, std::size_t n);

/// MHR iff the inverse hazard rate is non-increasing on an interior grid.
/// Throws std::invalid_argument for grid_size < 2.
Certificate certify_mhr(const Distribution& dist, std::size_t grid_size = 10000);

/// Regular iff the virtual value is non-decreasing on an interior grid.
Certificate certify_regular(const Distribution& dist, std::size_t grid_size = 10000);

}  // namespace refine
