#pragma once

namespace refine {

// Slack for identities that hold exactly in real arithmetic.
struct Tolerances {
  double algebraic = 1e-12;
  double monotone = 1e-9;
  double transform = 1e-8;
  double expectation = 1e-9;
  double threshold = 1e-9;  // bisection width in value space
  double quadrature = 1e-7;
};

inline constexpr Tolerances kTol{};

}  // namespace refine
