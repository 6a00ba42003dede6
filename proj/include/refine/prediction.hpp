#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace refine {

using QueryId = std::string;
using PartId = std::string;
using AdvertiserId = std::size_t;
using Pair = std::pair<QueryId, AdvertiserId>;

/// Partition of query-advertiser pairs with a relevance per part.
class PredictionScheme {
 public:
  PredictionScheme() = default;

  /// Throws std::invalid_argument for relevance outside [0,1] or a duplicate id.
  void add_part(const PartId& id, double relevance);
  /// Throws std::invalid_argument for an unknown part or a pair already placed.
  void assign(const QueryId& query, AdvertiserId advertiser, const PartId& part);

  /// Throws std::out_of_range for a pair outside the universe.
  double relevance_of(const QueryId& query, AdvertiserId advertiser) const;
  const PartId& part_of(const QueryId& query, AdvertiserId advertiser) const;

  const std::map<PartId, double>& parts() const noexcept { return parts_; }
  const std::map<Pair, PartId>& membership() const noexcept { return membership_; }

  std::set<QueryId> queries() const;
  /// Advertisers with a pair on `query`, ascending.
  std::vector<AdvertiserId> advertisers_on(const QueryId& query) const;
  /// Every advertiser that appears in the universe, ascending.
  std::vector<AdvertiserId> advertisers() const;

  friend bool operator==(const PredictionScheme&, const PredictionScheme&) = default;

 private:
  std::map<PartId, double> parts_;
  std::map<Pair, PartId> membership_;
};

struct Subpart {
  PartId id;
  double prob;

  friend bool operator==(const Subpart&, const Subpart&) = default;
};

/// A coarse scheme, its candidate refinement, the distribution over subparts
/// of every coarse part, and (optionally) the probability of each query.
struct RefinementStructure {
  PredictionScheme coarse;
  PredictionScheme fine;
  std::map<PartId, std::vector<Subpart>> subparts;
  std::map<QueryId, double> query_weights;

  friend bool operator==(const RefinementStructure&, const RefinementStructure&) = default;
};

enum class RefinementIssue {
  UniverseMismatch,
  NotNested,
  SubpartMismatch,
  ProbabilitySum,
  ExpectationMismatch,
  QueryWeights,
};

struct RefinementVerdict {
  bool valid = true;
  std::optional<RefinementIssue> issue;
  std::string reason;

  explicit operator bool() const noexcept { return valid; }
};

/// Checks nesting, per-part probability sums and the mean-preservation
/// condition p_coarse = E[p_fine | coarse part].
RefinementVerdict validate_refinement(const RefinementStructure& rs);

enum class PairRelation { Spread, Flipped, Neither };

const char* to_string(PairRelation r) noexcept;

/// Relation of (a, b) to (c, d) through the ratios a/b and c/d, compared by
/// cross-multiplication so zero relevances need no special case. A ratio of
/// exactly 1 satisfies both definitions and is reported as Spread. Ratios
/// whose cross products agree within 1e-12 relative are treated as equal. Throws
/// std::domain_error for negative inputs or an undefined 0/0 ratio.
PairRelation classify_pair(double a, double b, double c, double d);

struct FlipSpreadWitness {
  QueryId query;
  AdvertiserId first;
  AdvertiserId second;
};

struct FlipSpreadVerdict {
  bool flip_spread = true;
  std::optional<FlipSpreadWitness> witness;

  explicit operator bool() const noexcept { return flip_spread; }
};

/// Every advertiser pair that meets on a listed query must be spread or
/// flipped relative to its coarse pair. An empty `queries` checks all queries.
FlipSpreadVerdict is_flip_spread(const RefinementStructure& rs, const std::set<QueryId>& queries = {});

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Random flip-spread refinement over `n_subparts` equally structured queries
/// ("q0", "q1", ...). Advertiser i owns coarse part "c<i>" with relevance
/// coarse[i] on every query and fine part "f<i>_<query>" on each query.
/// Deterministic per seed. Throws std::invalid_argument for relevances outside
/// (0,1] or zero subparts, GenerationError if no candidate passes validation.
RefinementStructure generate_flip_spread_refinement(std::span<const double> coarse,
                                                    std::uint64_t seed, std::size_t n_subparts);

/// The identity refinement: one query, fine parts equal to coarse parts.
RefinementStructure identity_refinement(std::span<const double> coarse);

namespace examples {

/// Two pizzerias, one coarse Bay Area part at 0.75 refined by user location
/// into (1, 0.5) for SF and (0.5, 1) for SJ, each with probability 1/2.
/// Advertisers are numbered 1 (SF) and 2 (SJ); queries are "SF" and "SJ".
RefinementStructure sf_sj();

/// Nationwide chain (advertiser 1, 0.8 everywhere) against a local SF shop
/// (advertiser 2, coarse 0.1) refined into 0.4 on "SF" and epsilon on "notSF",
/// with P(SF) = 1/4 - delta and delta = 15 eps / (8 - 20 eps).
RefinementStructure chain_vs_local(double epsilon, std::optional<double> delta = std::nullopt);

double chain_vs_local_delta(double epsilon);

}  // namespace examples

}  // namespace refine
