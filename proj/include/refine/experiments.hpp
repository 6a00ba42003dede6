#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "refine/auction.hpp"
#include "refine/dists.hpp"
#include "refine/prediction.hpp"

namespace refine {

inline const std::vector<double> kAlphaGrid{0.0, 0.25, 0.5, 0.75, 1.0};

/// One alpha of a coarse-versus-fine comparison. Both arms are scored with
/// the fine (true) relevances; they differ only in the allocation.
struct AlphaOutcome {
  double alpha = 0.0;
  double welfare_coarse = 0.0;
  double welfare_fine = 0.0;
  double objective_coarse = 0.0;
  double objective_fine = 0.0;
  bool pass = true;
};

struct TrialReport {
  std::uint64_t seed = 0;
  std::string summary;
  std::vector<AlphaOutcome> outcomes;
  bool pass = true;

  static constexpr const char* kCsvHeader =
      "seed,alpha,welfare_coarse,welfare_fine,objective_coarse,objective_fine,verdict,summary";
  /// One CSV row per alpha.
  std::vector<std::string> csv_rows() const;
};

AlphaOutcome compare_pointwise(const AuctionInstance& instance, std::span<const double> coarse,
                               std::span<const double> fine, double alpha);

/// Values indexed like `rs.fine.advertisers()`. Welfare must not drop under
/// the fine scheme on `query` for any alpha in `alphas`.
TrialReport check_refinement_welfare(std::span<const double> values, const SlotProfile& slots,
                                     const Distribution& dist, const RefinementStructure& rs,
                                     const QueryId& query, std::span<const double> alphas,
                                     double tol = 1e-12);

/// Random instance: i.i.d. values, coarse relevances in (0.05, 1), random slot
/// effects, a generated flip-spread refinement with 1 to 4 queries and one
/// query drawn by weight. Throws std::invalid_argument for a prior that is not
/// MHR, GenerationError from the refinement generator.
TrialReport theorem_main_trial(std::uint64_t seed, std::size_t n, std::size_t m,
                               const Distribution& dist,
                               std::span<const double> alphas = kAlphaGrid, double tol = 1e-12);

/// Arbitrary mean-preserving refinement (not necessarily flip-spread) over
/// `n_queries` weighted queries, same naming as the flip-spread generator.
RefinementStructure generate_refinement(std::span<const double> coarse, std::uint64_t seed,
                                        std::size_t n_queries);

struct TradeoffConfig {
  std::string label;
  Distribution dist = Distribution::uniform(0.0, 1.0);
  SlotProfile slots;
  RefinementStructure rs;
  double alpha = 1.0;
  std::size_t samples = 10000;
};

struct TradeoffReport {
  std::string label;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  double objective_coarse = 0.0;
  double objective_fine = 0.0;
  double objective_diff = 0.0;  // fine - coarse
  double objective_diff_se = 0.0;
  double welfare_coarse = 0.0;
  double welfare_fine = 0.0;
  double welfare_diff = 0.0;
  double welfare_diff_se = 0.0;
  /// Value profiles whose query-averaged objective drops under refinement.
  std::size_t pointwise_violations = 0;
  bool pass = true;

  static constexpr const char* kCsvHeader =
      "label,seed,samples,objective_coarse,objective_fine,objective_diff,objective_diff_se,"
      "welfare_coarse,welfare_fine,welfare_diff,welfare_diff_se,pointwise_violations,verdict";
  std::string csv_row() const;
};

/// Paired Monte Carlo: each sample draws one value profile and one query and
/// runs both arms on them. PASS iff the mean objective difference is at least
/// -3 standard errors and no value profile loses objective after averaging
/// exactly over queries.
TradeoffReport theorem_tradeoff_trial(std::uint64_t seed, const TradeoffConfig& cfg,
                                      double tol = 1e-12);

/// Random regular prior, slots, coarse relevances and refinement.
TradeoffConfig random_tradeoff_config(std::uint64_t seed, std::size_t samples = 10000);

/// Chain-versus-local example under Uniform(3,5), one slot, alpha = 1.
TradeoffConfig nonflipspread_config(double epsilon, std::size_t samples);

struct WelfareGap {
  double welfare_fine = 0.0;
  double welfare_coarse = 0.0;
  double welfare_fine_se = 0.0;
  double welfare_coarse_se = 0.0;
  double diff_se = 0.0;  // of fine - coarse, paired
};

/// Throws std::invalid_argument unless 0 < epsilon < 0.4.
WelfareGap nonflipspread_welfare_gap(double epsilon, std::size_t samples, std::uint64_t seed);

struct Figure2Row {
  double p2 = 0.0;
  double loss = 0.0;
  double stderr_ = 0.0;
};

/// Expected welfare of the efficient auction minus that of the revenue-optimal
/// one, two advertisers with Uniform(3,5) values, one slot, p1 = 0.8. The same
/// value draws are reused at every grid point. Throws std::invalid_argument
/// for grid points outside [0, 0.8].
std::vector<Figure2Row> figure2_sweep(std::span<const double> p2_grid, std::size_t samples,
                                      std::uint64_t seed);

struct NonIidScenario {
  WelfareGap gap;
  /// Largest per-sample difference from the i.i.d. chain-versus-local SF case.
  double max_mismatch = 0.0;
};

/// Advertiser 2 with Uniform(1.2, 2) values and relevance flipping from 0.25
/// to 1 on the SF query; advertiser 1 with Uniform(3, 5) at 0.8; one slot,
/// alpha = 1.
NonIidScenario noniid_scenario(std::size_t samples, std::uint64_t seed);

struct RevenueIdentity {
  double mean_payment = 0.0;
  double mean_virtual_surplus = 0.0;
  double diff_se = 0.0;
};

/// Paired comparison of threshold payments and realized virtual surplus over
/// `samples` value profiles with fixed relevances.
RevenueIdentity revenue_identity(const Distribution& dist, const SlotProfile& slots,
                                 std::span<const double> relevances, double alpha,
                                 std::size_t samples, std::uint64_t seed);

}  // namespace refine
