#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "refine/analysis.hpp"
#include "refine/prediction.hpp"
#include "refine/rng.hpp"

using namespace refine;

namespace {

const Distribution kU01 = Distribution::uniform(0.0, 1.0);
const Distribution kU35 = Distribution::uniform(3.0, 5.0);
const Distribution kExp = Distribution::exponential(1.0);
const Distribution kTser = Distribution::tser(1000.0, -1.0);

// Independent nested scipy quad runs (epsrel 1e-12) over the same regions.
constexpr double kTserRefinementLoss = 0.44223556301350125;
constexpr double kTserCoarsenessActive = 0.29492169862323847;
constexpr double kTserCoarsenessAsWritten = -5.969177141938836;

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("more ordered examples") {
    const std::vector<double> r{3, 2, 1};
    const Ranking id{0, 1, 2}, swap12{0, 2, 1}, rev{2, 1, 0};
    CHECK(more_ordered(id, id, r));
    CHECK(more_ordered(rev, rev, r));
    for (const Ranking& p : {id, swap12, rev}) CHECK(more_ordered(id, p, r));
    CHECK_FALSE(more_ordered(swap12, id, r));
    CHECK_THROWS_AS(more_ordered(Ranking{0, 1}, id, r), std::invalid_argument);
    CHECK_THROWS_AS(more_ordered(Ranking{0, 0, 1}, id, r), std::invalid_argument);
  }

  TEST_CASE("rearrangement dot examples") {
    const std::vector<double> r{3, 2, 1};
    const SlotProfile s({1.0, 0.5, 0.0});
    CHECK(rearrangement_dot({0, 1, 2}, r, s) == 4.0);
    CHECK(rearrangement_dot({1, 0, 2}, r, s) == 3.5);
    CHECK(rearrangement_dot({0, 1, 2}, r, SlotProfile({0.0, 0.0, 0.0})) == 0.0);
    CHECK(rearrangement_dot({0, 1, 2}, r, SlotProfile({1.0})) == 3.0);
  }

  TEST_CASE("generalized rearrangement, exhaustive") {
    CounterRng rng(101);
    for (std::size_t n = 1; n <= 6; ++n) {
      for (int t = 0; t < (n <= 4 ? 20 : 3); ++t) {
        std::vector<double> r(n), s(n);
        for (auto& x : r) x = rng.uniform();
        if (t == 0 && n > 1) r[1] = r[0];  // a tie
        for (auto& x : s) x = rng.uniform();
        std::sort(s.begin(), s.end(), std::greater<>());
        const auto audit = audit_rearrangement(r, SlotProfile(s));
        std::size_t fact = 1;
        for (std::size_t k = 2; k <= n; ++k) fact *= k;
        CHECK(audit.rankings == fact);
        CHECK(audit.comparable_pairs >= fact);  // every ranking against itself
        CHECK(audit.violations == 0);
        CHECK(audit.efficient_is_max);
      }
    }
    CHECK_THROWS_AS(audit_rearrangement(std::vector<double>(9, 1.0), SlotProfile()),
                    std::invalid_argument);
  }

  TEST_CASE("condition examples") {
    CHECK_FALSE(check_condition_hurts(100.0, 10.0, kTser));
    CHECK(check_condition_hurts(10.0, 4.9, kTser));
    CHECK(check_condition_helps(0.7, 0.7, kU01));
    CHECK(check_condition_helps(3.3, 3.3, kU35, 0.99));
    CHECK_FALSE(check_condition_helps(0.9, 0.6, kU01));
    CHECK(check_condition_helps(0.9, 0.8, kU01));
    // Negative virtual values leave the revenue-optimal allocation alone.
    CHECK_FALSE(check_condition_hurts(0.9, 0.3, kU01));
    CHECK_THROWS_AS(check_condition_hurts(0.3, 0.9, kU01), std::domain_error);
    CHECK_THROWS_AS(check_condition_helps(0.3, 0.0, kU01), std::domain_error);
  }

  TEST_CASE("no refinement harm under the uniform prior, exhaustive grid") {
    const auto g = interior_grid(kU01, 1000);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j <= i; ++j) hits += check_condition_hurts(g[i], g[j], kU01);
    CHECK(hits == 0);
  }

  TEST_CASE("quadrature") {
    auto r = quadrature_1d([](double x) { return x; }, 0.0, 1.0);
    CHECK(r.value == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.error_estimate >= 0.0);
    CHECK(r.evaluations > 0);

    r = quadrature_1d([](double x) { return std::log(2 * x * x + 1000.0) / (x * x); }, 1.0, 1000.0);
    CHECK(std::abs(r.value - 2 * 3.51487) <= 2 * 5e-6);  // printed to five decimals
    r = quadrature_1d([](double x) { return (x + 1) / (x * x * x) + std::log(x) / (x * x); }, 1.0,
                      1000.0);
    CHECK(std::abs(r.value - 2.4911) <= 5e-5);

    const auto empty = quadrature_1d([](double) -> double { throw std::logic_error("called"); },
                                     2.0, 2.0);
    CHECK(empty.value == 0.0);
    CHECK(empty.evaluations == 0);
    CHECK_THROWS_AS(quadrature_1d([](double x) { return x; }, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(
        quadrature_1d([](double) { return std::numeric_limits<double>::quiet_NaN(); }, 0.0, 1.0),
        NumericError);
  }

  TEST_CASE("quadrature on short intervals") {
    for (double w : {1e-3, 1e-9, 1e-15}) {
      const auto r = quadrature_1d([](double x) { return x * x; }, 0.0, w, 1e-12);
      CHECK(r.value == doctest::Approx(w * w * w / 3).epsilon(1e-12));
      CHECK(r.evaluations <= 45);
    }
    const auto kinked = quadrature_1d([](double x) { return std::abs(x - 1e-7); }, 0.0, 1e-6, 1e-9);
    CHECK(kinked.value == doctest::Approx(0.5 * (1e-14 + 0.81e-12)).epsilon(1e-9));
    // A kink on the endpoint must not leave a sliver piece behind.
    const auto z = loss_integral_coarseness(kU01, 0.0);
    CHECK(z.as_written.value == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(z.as_written.evaluations < 10000);
  }

  TEST_CASE("refinement loss") {
    const auto u = loss_integral_refinement(kU01, 0.5);
    CHECK(u.value == 0.0);
    CHECK(loss_integral_refinement(kU35, 0.5).value == 0.0);
    CHECK(std::abs(loss_integral_refinement(kExp, 0.5).value) <= 1e-12);
    CHECK(refinement_region_provably_empty(kU01, 0.5) == std::optional<bool>(true));
    CHECK(refinement_region_provably_empty(kExp, 0.5) == std::optional<bool>(true));
    CHECK_FALSE(refinement_region_provably_empty(kTser, 0.5).has_value());

    const auto t = loss_integral_refinement(kTser, 0.5);
    CHECK(t.value > 0.0);
    CHECK(std::abs(t.value - kTserRefinementLoss) <= 1e-7 * kTserRefinementLoss);
    CHECK_THROWS_AS(loss_integral_refinement(kU01, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(loss_integral_refinement(kU01, 1.5), std::invalid_argument);
  }

  TEST_CASE("coarseness loss") {
    const auto t = loss_integral_coarseness(kTser, 0.5);
    CHECK(std::abs(t.active.value - kTserCoarsenessActive) <= 1e-7 * kTserCoarsenessActive);
    CHECK(std::abs(t.as_written.value - kTserCoarsenessAsWritten) <=
          1e-7 * std::abs(kTserCoarsenessAsWritten));

    const auto u = loss_integral_coarseness(kU01, 0.5);
    CHECK(u.active.value == doctest::Approx(1.0 / 48.0).epsilon(1e-9));
    CHECK(u.as_written.value == doctest::Approx(-7.0 / 24.0).epsilon(1e-9));

    const auto zero = loss_integral_coarseness(kU01, 0.0);
    CHECK(zero.as_written.value < 0.0);
    CHECK_THROWS_AS(loss_integral_coarseness(kU01, -0.5), std::invalid_argument);
  }

  TEST_CASE("uniform coarseness loss agrees with Monte Carlo") {
    // (v' - v/2) on v' >= 1/2, v' <= v < min(2 v', (4 v' - 1)/2), v and v' i.i.d.
    CounterRng rng(4242);
    const std::size_t n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = rng.uniform(), vp = rng.uniform();
      double x = 0.0;
      if (vp >= 0.5 && v >= vp && v < std::min({2 * vp, (4 * vp - 1) / 2, 1.0})) x = vp - v / 2;
      sum += x;
      sum2 += x * x;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / (n - 1));
    const double q = loss_integral_coarseness(kU01, 0.5).active.value;
    CHECK(q > 0.0);
    CHECK(std::abs(mean - q) <= 3 * se);
  }

  TEST_CASE("refinement minus coarseness matches the appendix difference") {
    // The direct integrals clip v at the top of the support; the appendix does
    // not, which accounts for the 2e-5 gap.
    const double diff =
        loss_integral_refinement(kTser, 0.5).value - loss_integral_coarseness(kTser, 0.5).active.value;
    const auto d = appendix_delta();
    CHECK(std::abs(diff - d.delta_closed) <= 1e-4);
    CHECK(diff > 0.0);
  }

  TEST_CASE("s_bar") {
    CHECK(s_bar(2.0, 1000.0) == doctest::Approx(1.0 + std::sqrt(1002.0)).epsilon(1e-15));
    CHECK(s_bar(501.0, 1000.0) == doctest::Approx(1.0 + std::sqrt(501000.0)).epsilon(1e-15));
    for (int k = 32; k < 60; ++k) {
      const double sp = 1.0 + std::sqrt((k * k - 1000.0) / 2.0);
      CHECK(s_bar(sp, 1000.0) == doctest::Approx(1.0 + k).epsilon(1e-14));
    }
    for (double sp : {2.0, 3.5, 10.0, 100.0, 400.0}) {
      const double s = s_bar(sp, 1000.0);
      const double phi = (s - 1) * (s - 1) / 1000.0 + 1.0;  // unclipped formula
      CHECK(std::abs(phi - 2.0 * kTser.virtual_value(sp)) <= 1e-9);
    }
    CHECK_THROWS_AS(s_bar(2.0, 0.0), std::invalid_argument);
  }

  TEST_CASE("appendix delta") {
    const auto d = appendix_delta(1000.0, -1.0);
    CHECK(std::abs(d.I1 - 3.51487) <= 5e-4);
    CHECK(std::abs(d.I2 - 0.7298) <= 5e-4);
    CHECK(std::abs(d.I3 - 2.4911) <= 5e-4);
    CHECK(std::abs(d.delta_closed - 0.1473) <= 1e-3);
    CHECK(std::abs(d.delta_quad - 0.1473) <= 1e-3);
    CHECK(std::abs(d.delta_closed - d.delta_quad) <= 1e-3);
    // Independent values from scipy, far tighter than the printed digits.
    CHECK(d.I1 == doctest::Approx(3.514871707678329).epsilon(1e-12));
    CHECK(d.I2 == doctest::Approx(0.7297810396915181).epsilon(1e-12));
    CHECK(d.I3 == doctest::Approx(2.491091744721018).epsilon(1e-12));
    CHECK(d.delta_closed == doctest::Approx(0.14729390214328).epsilon(1e-11));

    for (auto [H, b] : {std::pair{50.0, -1.0}, {2.0, -1.0}, {1000.0, -3.0}, {200.0, -0.5}}) {
      const auto g = appendix_delta(H, b);
      INFO("H=" << H << " b=" << b);
      CHECK(g.I1 == doctest::Approx(g.I1_quad).epsilon(1e-9));
      CHECK(g.I2 == doctest::Approx(g.I2_quad).epsilon(1e-9));
      CHECK(g.I3 == doctest::Approx(g.I3_quad).epsilon(1e-9));
    }
    CHECK_THROWS_AS(appendix_delta(1.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(appendix_delta(1000.0, 0.5), std::invalid_argument);
  }

  TEST_CASE("MHR values grow apart after the alpha transform") {
    for (const auto& d : {kU01, kU35, kExp, Distribution::exponential(3.0)}) {
      CounterRng rng(55);
      std::size_t premises = 0;
      for (int k = 0; k < 100000; ++k) {
        const double v1 = d.quantile(rng.uniform()), v2 = d.quantile(rng.uniform());
        const double a = 0.25 * static_cast<double>(rng.below(5));
        const double f1 = d.alpha_virtual_value(v1, a), f2 = d.alpha_virtual_value(v2, a);
        if (!(f1 > 0.0 && f2 > 0.0)) continue;
        if (v1 / v2 < f1 / f2) {
          ++premises;
          REQUIRE(v1 > v2);
        }
      }
      CHECK(premises > 0);
    }
  }

  TEST_CASE("refined relevance misordering survives coarsening") {
    CounterRng rng(808);
    std::size_t premises = 0;
    for (int t = 0; t < 3000; ++t) {
      const Distribution& d = t % 3 == 0 ? kU01 : t % 3 == 1 ? kU35 : kExp;
      std::vector<double> coarse{rng.uniform(0.05, 1.0), rng.uniform(0.05, 1.0)};
      const auto rs = generate_flip_spread_refinement(coarse, 1000 + t, 2 + rng.below(3));
      for (const auto& q : rs.fine.queries()) {
        const double p1 = rs.fine.relevance_of(q, 0), p2 = rs.fine.relevance_of(q, 1);
        const double c1 = rs.coarse.relevance_of(q, 0), c2 = rs.coarse.relevance_of(q, 1);
        for (int k = 0; k < 20; ++k) {
          const double v1 = d.quantile(rng.uniform()), v2 = d.quantile(rng.uniform());
          const double a = 0.25 * static_cast<double>(rng.below(5));
          const double f1 = d.alpha_virtual_value(v1, a), f2 = d.alpha_virtual_value(v2, a);
          if (p1 * v1 < p2 * v2 && p1 * f1 >= p2 * f2 && p2 * f2 > 0.0) {
            ++premises;
            CHECK(c1 * f1 >= c2 * f2 * (1 - 1e-12));
          }
        }
      }
    }
    CHECK(premises > 0);
  }

  TEST_CASE("brute force optimum on a hand example") {
    const AuctionInstance inst{SlotProfile({1.0, 0.5}), {{4.0, 1.0}, {2.0, 1.0}},
                               Distribution::uniform(0.0, 5.0)};
    CHECK(brute_force_best_objective(inst, 0.0) == doctest::Approx(5.0));
    // phi = 2v - 5: only the first advertiser is worth placing.
    CHECK(brute_force_best_objective(inst, 1.0) == doctest::Approx(3.0));
  }
}
