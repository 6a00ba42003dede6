#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "refine/dists.hpp"
#include "refine/tolerances.hpp"

using namespace refine;

namespace {

const Distribution kU01 = Distribution::uniform(0.0, 1.0);
const Distribution kU35 = Distribution::uniform(3.0, 5.0);
const Distribution kExp = Distribution::exponential(1.0);
const Distribution kTser = Distribution::tser(1000.0, -1.0);

std::vector<Distribution> all_kinds() {
  return {kU01, kU35, kExp, kTser, Distribution::exponential(2.5),
          Distribution::tser(50.0, -3.0)};
}

}  // namespace

TEST_SUITE("dists") {
  TEST_CASE("cdf examples") {
    CHECK(kU01.cdf(0.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(kTser.cdf(2.0) == 0.0);
    // (H/(H-1)) (1 - 1/(H+1-1)) = (H/(H-1)) (H-1)/H = 1
    CHECK(kTser.cdf(1001.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(kU01.cdf(1.5), std::domain_error);
    CHECK_THROWS_AS(kTser.cdf(1.0), std::domain_error);
    CHECK_THROWS_AS(kExp.cdf(-0.1), std::domain_error);
  }

  TEST_CASE("pdf examples") {
    CHECK(kU35.pdf(4.0) == 0.5);
    CHECK(kTser.pdf(2.0) == doctest::Approx(1000.0 / 999.0).epsilon(1e-15));
    CHECK(kExp.pdf(0.0) == 1.0);
    CHECK_THROWS_AS(kU35.pdf(2.0), std::domain_error);
  }

  TEST_CASE("inverse hazard rate examples") {
    CHECK(kU01.inverse_hazard_rate(0.5) == doctest::Approx(0.5).epsilon(1e-15));
    for (double v : {3.0, 3.3, 4.0, 4.9, 5.0})
      CHECK(kU35.inverse_hazard_rate(v) == doctest::Approx(5.0 - v).epsilon(1e-12));
    for (double v : {2.0, 10.0, 250.0, 501.0, 900.0})
      CHECK(kTser.inverse_hazard_rate(v) ==
            doctest::Approx(v - (v - 1.0) * (v - 1.0) / 1000.0 - 1.0).epsilon(1e-12));
    CHECK(kU01.inverse_hazard_rate(1.0) == 0.0);
    CHECK(kTser.inverse_hazard_rate(1001.0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(kExp.inverse_hazard_rate(3.0) == doctest::Approx(1.0));
  }

  TEST_CASE("virtual value examples") {
    for (double v : {0.0, 0.2, 0.5, 0.9, 1.0})
      CHECK(kU01.virtual_value(v) == doctest::Approx(2.0 * v - 1.0).epsilon(1e-12));
    CHECK(kU35.virtual_value(3.0) == doctest::Approx(1.0));
    for (double v : {2.0, 10.0, 100.0, 1001.0})
      CHECK(kTser.virtual_value(v) ==
            doctest::Approx((v - 1.0) * (v - 1.0) / 1000.0 + 1.0).epsilon(1e-12));
    CHECK(kU35.virtual_value(5.0) == 5.0);
  }

  TEST_CASE("alpha virtual value") {
    for (const auto& d : all_kinds()) {
      const double v = d.quantile(0.37);
      CHECK(d.alpha_virtual_value(v, 0.0) == v);
      CHECK(d.alpha_virtual_value(v, 1.0) == doctest::Approx(d.virtual_value(v)).epsilon(1e-15));
    }
    CHECK(kU01.alpha_virtual_value(0.8, 0.5) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK_THROWS_AS(kU01.alpha_virtual_value(0.5, -0.01), std::invalid_argument);
    CHECK_THROWS_AS(kU01.alpha_virtual_value(0.5, 1.01), std::invalid_argument);
  }

  TEST_CASE("penalty fraction") {
    CHECK(kU01.penalty_fraction(0.5) == doctest::Approx(1.0));
    CHECK(kU35.penalty_fraction(4.0) == doctest::Approx(0.25));
    CHECK(kU35.penalty_fraction(5.0) == 0.0);
    CHECK_THROWS_AS(kU01.penalty_fraction(0.0), std::domain_error);
  }

  TEST_CASE("quantile") {
    CHECK(kU35.quantile(0.5) == 4.0);
    CHECK(kU01.quantile(0.25) == 0.25);
    CHECK(kTser.quantile(0.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_THROWS_AS(kU01.quantile(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(kU01.quantile(1.1), std::invalid_argument);
    for (const auto& d : all_kinds())
      for (double p : {0.0, 0.01, 0.3, 0.5, 0.77, 0.999})
        CHECK(d.cdf(d.quantile(p)) == doctest::Approx(p).epsilon(1e-10).scale(1.0));
  }

  TEST_CASE("sampling") {
    CHECK(kU01.sample(7, 0).empty());
    CHECK(kU01.sample(7, 3) == kU01.sample(7, 3));
    CHECK(kU01.sample(7, 3) != kU01.sample(8, 3));

    const auto xs = kU35.sample(11, 10000);
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    CHECK(std::abs(mean - 4.0) < 0.05);

    for (const auto& d : all_kinds()) {
      auto s = d.sample(2024, 10000);
      for (double x : s) REQUIRE(d.support().contains(x));
      std::sort(s.begin(), s.end());
      double ks = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double F = d.cdf(s[i]);
        ks = std::max({ks, std::abs(F - double(i) / s.size()),
                       std::abs(F - double(i + 1) / s.size())});
      }
      INFO(d.name());
      CHECK(ks < 0.02);
    }
  }

  TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(Distribution::uniform(1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Distribution::uniform(2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Distribution::exponential(0.0), std::invalid_argument);
    CHECK_THROWS_AS(Distribution::tser(1.0, -1.0), std::invalid_argument);
  }

  TEST_CASE("certification") {
    CHECK(certify_mhr(kU01));
    CHECK(certify_mhr(kU35));
    CHECK(certify_mhr(kExp));
    CHECK(certify_regular(kU01));
    CHECK(certify_regular(kU35));
    CHECK(certify_regular(kTser));

    const auto c = certify_mhr(kTser);
    CHECK_FALSE(c);
    REQUIRE(c.witness);
    CHECK(c.witness->lo < c.witness->hi);
    CHECK(c.witness->f_lo < c.witness->f_hi);
    CHECK(c.witness->lo >= 2.0);
    CHECK(c.witness->hi <= 501.0);

    CHECK_THROWS_AS(certify_mhr(kU01, 1), std::invalid_argument);
    CHECK_THROWS_AS(certify_regular(kU01, 0), std::invalid_argument);
  }

  TEST_CASE("virtual value minus rent is exact") {
    for (const auto& d : all_kinds())
      for (double v : interior_grid(d, 200))
        CHECK(d.virtual_value(v) == v - d.inverse_hazard_rate(v));
  }

  TEST_CASE("alpha virtual value is a convex combination") {
    for (const auto& d : all_kinds())
      for (double v : interior_grid(d, 50))
        for (double a : {0.0, 0.1, 0.25, 0.5, 0.9, 1.0})
          CHECK(std::abs(d.alpha_virtual_value(v, a) - ((1 - a) * v + a * d.virtual_value(v))) <=
                kTol.algebraic * std::max(1.0, std::abs(v)));
  }

  TEST_CASE("MHR implies non-increasing penalty fraction") {
    for (const auto& d : all_kinds()) {
      if (!certify_mhr(d, 2000)) continue;
      std::vector<double> g;
      for (double v : interior_grid(d, 400))
        if (v > 0.0) g.push_back(v);
      for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
          REQUIRE(d.penalty_fraction(g[i]) <= d.penalty_fraction(g[j]) + kTol.monotone);
    }
  }

  TEST_CASE("realized-value transform identities") {
    // G(r) = F(r/p): density g(r) = f(r/p)/p, obtained here by central
    // differences of G so the identity is checked independently.
    for (const auto& d : all_kinds()) {
      for (double p : {1.0, 0.8, 0.35, 0.05}) {
        for (double v : interior_grid(d, 40)) {
          const double r = p * v;
          const double h = 1e-5 * std::max(1.0, r);
          auto G = [&](double x) { return d.cdf(x / p); };
          if (!d.support().contains((r - h) / p) || !d.support().contains((r + h) / p)) continue;
          const double g = (G(r + h) - G(r - h)) / (2 * h);
          // Skip points where cdf rounding alone would swamp the tolerance.
          if (4e-16 / (h * g) > 0.1 * kTol.transform) continue;
          const double lambda_g = (1.0 - G(r)) / g;
          const double phi_g = r - lambda_g;
          INFO(d.name() << " p=" << p << " v=" << v);
          CHECK(std::abs(lambda_g - p * d.inverse_hazard_rate(v)) <=
                kTol.transform * std::max(1.0, std::abs(lambda_g)));
          CHECK(std::abs(phi_g - p * d.virtual_value(v)) <=
                kTol.transform * std::max(1.0, std::abs(phi_g)));
        }
      }
    }
  }

  TEST_CASE("pdf matches the derivative of cdf") {
    for (const auto& d : all_kinds())
      for (double v : interior_grid(d, 100)) {
        const double h = 1e-6 * std::max(1.0, v);
        if (!d.support().contains(v - h) || !d.support().contains(v + h)) continue;
        if (4e-16 / (h * d.pdf(v)) > 1e-7) continue;
        const double num = (d.cdf(v + h) - d.cdf(v - h)) / (2 * h);
        CHECK(std::abs(num - d.pdf(v)) <= 1e-6 * d.pdf(v));
      }
  }

  TEST_CASE("MHR certificate implies regular certificate") {
    for (const auto& d : all_kinds())
      if (certify_mhr(d)) CHECK(certify_regular(d));
  }

  TEST_CASE("virtual value inverse") {
    CHECK(kU01.virtual_value_inverse(0.0) == doctest::Approx(0.5));
    CHECK(kU35.virtual_value_inverse(0.0) == 3.0);  // clamped to the support
    CHECK(kTser.virtual_value_inverse(2.0 * kTser.virtual_value(2.0)) ==
          doctest::Approx(1.0 + std::sqrt(1002.0)));
    for (const auto& d : all_kinds())
      for (double v : interior_grid(d, 30))
        CHECK(d.virtual_value_inverse(d.virtual_value(v)) ==
              doctest::Approx(v).epsilon(1e-9).scale(1.0));
  }
}
