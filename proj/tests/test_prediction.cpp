#include <doctest.h>

#include "refine/prediction.hpp"
#include "refine/rng.hpp"

using namespace refine;

TEST_SUITE("prediction") {
  TEST_CASE("scheme construction") {
    PredictionScheme s;
    s.add_part("a", 0.3);
    CHECK_THROWS_AS(s.add_part("a", 0.4), std::invalid_argument);
    CHECK_THROWS_AS(s.add_part("b", 1.2), std::invalid_argument);
    s.assign("q", 0, "a");
    CHECK_THROWS_AS(s.assign("q", 0, "a"), std::invalid_argument);
    CHECK_THROWS_AS(s.assign("q", 1, "zzz"), std::invalid_argument);
    CHECK(s.relevance_of("q", 0) == 0.3);
    CHECK_THROWS_AS(s.relevance_of("q", 7), std::out_of_range);
  }

  TEST_CASE("relevance lookups in the pizzeria example") {
    const auto rs = examples::sf_sj();
    for (const char* q : {"SF", "SJ"})
      for (AdvertiserId a : {1u, 2u}) CHECK(rs.coarse.relevance_of(q, a) == 0.75);
    CHECK(rs.fine.relevance_of("SF", 1) == 1.0);
    CHECK(rs.fine.relevance_of("SF", 2) == 0.5);
    CHECK(rs.fine.relevance_of("SJ", 2) == 1.0);
  }

  TEST_CASE("validate refinement examples") {
    CHECK(validate_refinement(examples::sf_sj()));
    CHECK(validate_refinement(examples::chain_vs_local(0.01)));
    const auto bad = validate_refinement(examples::chain_vs_local(0.01, 0.0));
    CHECK_FALSE(bad);
    CHECK(bad.issue == RefinementIssue::ExpectationMismatch);
  }

  TEST_CASE("validate refinement failure modes") {
    auto rs = examples::sf_sj();
    SUBCASE("probability sum") {
      rs.subparts.begin()->second.front().prob += 0.1;
      const auto v = validate_refinement(rs);
      CHECK_FALSE(v);
      CHECK(v.issue == RefinementIssue::ProbabilitySum);
    }
    SUBCASE("universe mismatch") {
      rs.fine.add_part("extra", 0.2);
      rs.fine.assign("LA", 1, "extra");
      const auto v = validate_refinement(rs);
      CHECK_FALSE(v);
      CHECK(v.issue == RefinementIssue::UniverseMismatch);
    }
    SUBCASE("subpart mismatch") {
      rs.subparts.begin()->second.pop_back();
      const auto v = validate_refinement(rs);
      CHECK_FALSE(v);
    }
  }

  TEST_CASE("classify pair examples") {
    CHECK(classify_pair(1.0, 0.5, 0.75, 0.75) == PairRelation::Spread);
    CHECK(classify_pair(0.8, 0.4, 0.8, 0.1) == PairRelation::Neither);
    CHECK(classify_pair(0.5, 1.0, 2.0, 1.0) == PairRelation::Flipped);
    CHECK(classify_pair(0.0, 0.5, 0.2, 0.4) == PairRelation::Spread);
    CHECK(classify_pair(0.5, 0.0, 0.2, 0.4) == PairRelation::Flipped);
    CHECK_THROWS_AS(classify_pair(0.0, 0.0, 0.2, 0.4), std::domain_error);
    CHECK_THROWS_AS(classify_pair(-0.1, 0.2, 0.2, 0.4), std::domain_error);
    CHECK(std::string(to_string(PairRelation::Neither)) == "neither");
  }

  TEST_CASE("classify pair symmetry, scaling and unit coarse ratio") {
    CounterRng rng(5);
    for (int t = 0; t < 5000; ++t) {
      const double a = rng.uniform(), b = rng.uniform(), c = rng.uniform(), d = rng.uniform();
      const auto r = classify_pair(a, b, c, d);
      CHECK(classify_pair(b, a, d, c) == r);
      const double k1 = rng.uniform(0.1, 1.0), k2 = rng.uniform(0.1, 1.0);
      CHECK(classify_pair(k1 * a, k1 * b, k2 * c, k2 * d) == r);
      CHECK(classify_pair(a, b, c, c) != PairRelation::Neither);
    }
  }

  TEST_CASE("flip-spread examples") {
    CHECK(is_flip_spread(examples::sf_sj()));
    const auto v = is_flip_spread(examples::chain_vs_local(0.01));
    CHECK_FALSE(v);
    REQUIRE(v.witness);
    CHECK(v.witness->query == "SF");
    CHECK(v.witness->first == 1);
    CHECK(v.witness->second == 2);
    CHECK(is_flip_spread(examples::chain_vs_local(0.01), {"notSF"}));
  }

  TEST_CASE("any refinement of an undistinguishing scheme is flip-spread") {
    CounterRng rng(9);
    for (int t = 0; t < 100; ++t) {
      const double c = rng.uniform(0.05, 1.0);
      const std::vector<double> coarse(2 + rng.below(4), c);
      CHECK(is_flip_spread(generate_flip_spread_refinement(coarse, t, 2 + rng.below(3))));
    }
  }

  TEST_CASE("identity refinement") {
    const std::vector<double> coarse{0.3, 0.8, 0.1};
    const auto rs = identity_refinement(coarse);
    CHECK(validate_refinement(rs));
    CHECK(is_flip_spread(rs));
    CHECK(generate_flip_spread_refinement(coarse, 1, 1) == rs);
  }

  TEST_CASE("generator round trip over many seeds") {
    CounterRng rng(77);
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      std::vector<double> coarse(1 + rng.below(6));
      for (auto& c : coarse) c = rng.uniform(0.01, 1.0);
      const std::size_t k = 1 + rng.below(5);
      const auto rs = generate_flip_spread_refinement(coarse, seed, k);
      REQUIRE(validate_refinement(rs));
      REQUIRE(is_flip_spread(rs));
      CHECK(generate_flip_spread_refinement(coarse, seed, k) == rs);
    }
  }

  TEST_CASE("generator keeps strongly separated coarse pairs flip-spread") {
    const std::vector<double> coarse{0.8, 0.1};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto rs = generate_flip_spread_refinement(coarse, seed, 3);
      for (const auto& q : rs.fine.queries()) {
        const double ratio = rs.fine.relevance_of(q, 0) / rs.fine.relevance_of(q, 1);
        CHECK((ratio >= 8.0 * (1 - 1e-12) || ratio <= 1.0));
      }
    }
  }

  TEST_CASE("generator input validation") {
    const std::vector<double> zero{0.0, 0.5};
    const std::vector<double> fine{0.5};
    CHECK_THROWS_AS(generate_flip_spread_refinement(zero, 1, 2), std::invalid_argument);
    CHECK_THROWS_AS(generate_flip_spread_refinement(fine, 1, 0), std::invalid_argument);
  }

  TEST_CASE("chain versus local delta") {
    CHECK(examples::chain_vs_local_delta(0.01) == doctest::Approx(0.15 / 7.8));
  }
}
