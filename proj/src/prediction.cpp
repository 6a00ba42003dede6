#include "refine/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "refine/rng.hpp"
#include "refine/tolerances.hpp"

namespace refine {

void PredictionScheme::add_part(const PartId& id, double relevance) {
  if (!(relevance >= 0.0 && relevance <= 1.0))
    throw std::invalid_argument("part relevance outside [0,1]: " + id);
  if (!parts_.emplace(id, relevance).second) throw std::invalid_argument("duplicate part: " + id);
}

void PredictionScheme::assign(const QueryId& query, AdvertiserId advertiser, const PartId& part) {
  if (!parts_.contains(part)) throw std::invalid_argument("unknown part: " + part);
  if (!membership_.emplace(Pair{query, advertiser}, part).second)
    throw std::invalid_argument("pair already assigned: (" + query + ", " +
                                std::to_string(advertiser) + ")");
}

const PartId& PredictionScheme::part_of(const QueryId& query, AdvertiserId advertiser) const {
  const auto it = membership_.find(Pair{query, advertiser});
  if (it == membership_.end())
    throw std::out_of_range("pair not in universe: (" + query + ", " + std::to_string(advertiser) +
                            ")");
  return it->second;
}

double PredictionScheme::relevance_of(const QueryId& query, AdvertiserId advertiser) const {
  return parts_.at(part_of(query, advertiser));
}

std::set<QueryId> PredictionScheme::queries() const {
  std::set<QueryId> out;
  for (const auto& [pair, part] : membership_) out.insert(pair.first);
  return out;
}

std::vector<AdvertiserId> PredictionScheme::advertisers_on(const QueryId& query) const {
  std::vector<AdvertiserId> out;
  for (auto it = membership_.lower_bound(Pair{query, 0});
       it != membership_.end() && it->first.first == query; ++it)
    out.push_back(it->first.second);
  return out;
}

std::vector<AdvertiserId> PredictionScheme::advertisers() const {
  std::set<AdvertiserId> ids;
  for (const auto& [pair, part] : membership_) ids.insert(pair.second);
  return {ids.begin(), ids.end()};
}

namespace {

RefinementVerdict reject(RefinementIssue issue, std::string reason) {
  return RefinementVerdict{false, issue, std::move(reason)};
}

}  // namespace

RefinementVerdict validate_refinement(const RefinementStructure& rs) {
  const auto& coarse = rs.coarse.membership();
  const auto& fine = rs.fine.membership();

  if (coarse.size() != fine.size() ||
      !std::equal(coarse.begin(), coarse.end(), fine.begin(),
                  [](const auto& x, const auto& y) { return x.first == y.first; }))
    return reject(RefinementIssue::UniverseMismatch,
                  "coarse and fine schemes cover different query-advertiser pairs");

  std::map<PartId, PartId> parent;
  for (const auto& [pair, fine_part] : fine) {
    const PartId& coarse_part = coarse.at(pair);
    const auto [it, inserted] = parent.emplace(fine_part, coarse_part);
    if (!inserted && it->second != coarse_part)
      return reject(RefinementIssue::NotNested,
                    "fine part " + fine_part + " straddles coarse parts " + it->second + " and " +
                        coarse_part);
  }

  std::map<PartId, std::set<PartId>> children;
  for (const auto& [child, par] : parent) children[par].insert(child);

  for (const auto& [coarse_part, kids] : children) {
    const auto sp = rs.subparts.find(coarse_part);
    if (sp == rs.subparts.end())
      return reject(RefinementIssue::SubpartMismatch, "no subpart list for " + coarse_part);
    std::set<PartId> listed;
    double total = 0.0;
    double mean = 0.0;
    for (const auto& s : sp->second) {
      if (!listed.insert(s.id).second || !kids.contains(s.id))
        return reject(RefinementIssue::SubpartMismatch,
                      "subpart " + s.id + " is not a distinct child of " + coarse_part);
      if (!(s.prob >= 0.0))
        return reject(RefinementIssue::ProbabilitySum, "negative subpart probability in " +
                                                           coarse_part);
      total += s.prob;
      mean += s.prob * rs.fine.parts().at(s.id);
    }
    if (listed != kids)
      return reject(RefinementIssue::SubpartMismatch,
                    "subpart list of " + coarse_part + " misses a nested fine part");
    if (std::abs(total - 1.0) > kTol.algebraic) {
      std::ostringstream os;
      os << "subpart probabilities of " << coarse_part << " sum to " << total;
      return reject(RefinementIssue::ProbabilitySum, os.str());
    }
    const double target = rs.coarse.parts().at(coarse_part);
    if (std::abs(mean - target) > kTol.expectation) {
      std::ostringstream os;
      os << "expectation mismatch in " << coarse_part << ": subparts average " << mean
         << ", coarse relevance " << target;
      return reject(RefinementIssue::ExpectationMismatch, os.str());
    }
  }

  if (!rs.query_weights.empty()) {
    double total = 0.0;
    for (const QueryId& q : rs.coarse.queries()) {
      const auto it = rs.query_weights.find(q);
      if (it == rs.query_weights.end() || !(it->second >= 0.0))
        return reject(RefinementIssue::QueryWeights, "missing or negative weight for " + q);
      total += it->second;
    }
    if (std::abs(total - 1.0) > kTol.algebraic)
      return reject(RefinementIssue::QueryWeights, "query weights do not sum to 1");

    // Per advertiser and coarse part, the query-weighted fine relevance must
    // reproduce the coarse one.
    std::map<std::pair<AdvertiserId, PartId>, std::pair<double, double>> acc;
    for (const auto& [pair, coarse_part] : coarse) {
      const double w = rs.query_weights.at(pair.first);
      auto& [mass, weighted] = acc[{pair.second, coarse_part}];
      mass += w;
      weighted += w * rs.fine.relevance_of(pair.first, pair.second);
    }
    for (const auto& [key, mw] : acc) {
      if (mw.first <= 0.0) continue;
      const double target = rs.coarse.parts().at(key.second);
      if (std::abs(mw.second / mw.first - target) > kTol.expectation)
        return reject(RefinementIssue::QueryWeights,
                      "query-weighted fine relevance of advertiser " + std::to_string(key.first) +
                          " does not average to coarse part " + key.second);
    }
  }
  return {};
}

const char* to_string(PairRelation r) noexcept {
  switch (r) {
    case PairRelation::Spread:
      return "spread";
    case PairRelation::Flipped:
      return "flipped";
    case PairRelation::Neither:
      return "neither";
  }
  return "?";
}

PairRelation classify_pair(double a, double b, double c, double d) {
  if (a < 0.0 || b < 0.0 || c < 0.0 || d < 0.0)
    throw std::domain_error("classify_pair: relevances must be non-negative");
  if ((a == 0.0 && b == 0.0) || (c == 0.0 && d == 0.0))
    throw std::domain_error("classify_pair: ratio 0/0 is undefined");
  // a/b >= c/d  <=>  a*d >= c*b for non-negative denominators. Products that
  // agree to rounding count as equal ratios, so rescaling a pair by a common
  // factor keeps it on the spread boundary.
  double ad = a * d;
  double cb = c * b;
  if (std::abs(ad - cb) <= kTol.algebraic * std::max(ad, cb)) ad = cb;
  const bool spread = (ad >= cb && c >= d) || (d >= c && cb >= ad);
  if (spread) return PairRelation::Spread;
  const bool flipped = (a >= b && d >= c) || (c >= d && b >= a);
  return flipped ? PairRelation::Flipped : PairRelation::Neither;
}

FlipSpreadVerdict is_flip_spread(const RefinementStructure& rs, const std::set<QueryId>& queries) {
  const std::set<QueryId> scope = queries.empty() ? rs.fine.queries() : queries;
  for (const QueryId& q : scope) {
    const auto ids = rs.fine.advertisers_on(q);
    for (std::size_t x = 0; x < ids.size(); ++x) {
      for (std::size_t y = x + 1; y < ids.size(); ++y) {
        const auto rel = classify_pair(rs.fine.relevance_of(q, ids[x]),
                                       rs.fine.relevance_of(q, ids[y]),
                                       rs.coarse.relevance_of(q, ids[x]),
                                       rs.coarse.relevance_of(q, ids[y]));
        if (rel == PairRelation::Neither)
          return FlipSpreadVerdict{false, FlipSpreadWitness{q, ids[x], ids[y]}};
      }
    }
  }
  return {};
}

namespace {

struct QueryDraw {
  double weight;
  std::vector<double> relevance;
};

std::string query_name(std::size_t k) { return "q" + std::to_string(k); }

RefinementStructure assemble(std::span<const double> coarse, const std::vector<QueryDraw>& qs) {
  RefinementStructure rs;
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    const PartId cid = "c" + std::to_string(i);
    rs.coarse.add_part(cid, coarse[i]);
    auto& list = rs.subparts[cid];
    for (std::size_t k = 0; k < qs.size(); ++k) {
      const PartId fid = "f" + std::to_string(i) + "_" + query_name(k);
      rs.fine.add_part(fid, qs[k].relevance[i]);
      rs.coarse.assign(query_name(k), i, cid);
      rs.fine.assign(query_name(k), i, fid);
      list.push_back({fid, qs[k].weight});
    }
  }
  for (std::size_t k = 0; k < qs.size(); ++k) rs.query_weights[query_name(k)] = qs[k].weight;
  return rs;
}

// Uniform draw from [lo, hi] shrunk by a relative margin; nullopt if empty.
std::optional<double> draw_between(CounterRng& rng, double lo, double hi) {
  const double margin = 1e-6 * std::max(1.0, std::abs(hi));
  if (!(hi - lo > 2.0 * margin)) return std::nullopt;
  return rng.uniform(lo + margin, hi - margin);
}

// Two queries that rescale every relevance by a common factor each.
std::optional<std::vector<QueryDraw>> scale_split(std::span<const double> c, CounterRng& rng) {
  const double cmax = *std::max_element(c.begin(), c.end());
  const double w = rng.uniform(0.1, 0.9);
  const auto ka = draw_between(rng, std::max(0.0, (1.0 - (1.0 - w) / cmax) / w),
                               std::min(1.0 / cmax, 1.0 / w));
  if (!ka) return std::nullopt;
  const double kb = (1.0 - w * *ka) / (1.0 - w);
  QueryDraw a{w, {}}, b{1.0 - w, {}};
  for (double x : c) {
    a.relevance.push_back(std::min(1.0, *ka * x));
    b.relevance.push_back(std::min(1.0, kb * x));
  }
  return std::vector<QueryDraw>{a, b};
}

// Two queries in which a random group G of advertisers is promoted (scale
// nu_a against mu_a for the rest) and then demoted. Within each query the
// relative order inside G and inside the rest is preserved, and every G-rest
// pair either keeps its orientation with a wider ratio or crosses over.
std::optional<std::vector<QueryDraw>> group_move(std::span<const double> c, CounterRng& rng) {
  const std::size_t n = c.size();
  std::vector<bool> in_group(n);
  std::size_t members = 0;
  do {
    members = 0;
    for (std::size_t i = 0; i < n; ++i) members += (in_group[i] = rng.uniform() < 0.5);
  } while (members == 0 || members == n);

  double g_max = 0.0, r_max = 0.0;
  double up = 1.0;    // promoted G must clear max c_r / c_g over pairs with c_g < c_r
  double down = 1.0;  // demoted G must sink below min c_r / c_g over pairs with c_g > c_r
  for (std::size_t g = 0; g < n; ++g) {
    if (!in_group[g]) continue;
    g_max = std::max(g_max, c[g]);
    for (std::size_t r = 0; r < n; ++r) {
      if (in_group[r]) continue;
      if (c[g] < c[r]) up = std::max(up, c[r] / c[g]);
      if (c[g] > c[r]) down = std::min(down, c[r] / c[g]);
    }
  }
  for (std::size_t r = 0; r < n; ++r)
    if (!in_group[r]) r_max = std::max(r_max, c[r]);

  const double w = rng.uniform(0.05, 0.95);
  const auto mu_a = draw_between(rng, std::max(0.0, (1.0 - (1.0 - w) / r_max) / w),
                                 std::min(1.0 / r_max, 1.0 / w));
  if (!mu_a) return std::nullopt;
  const double mu_b = (1.0 - w * *mu_a) / (1.0 - w);

  const double nu_lo = std::max({*mu_a * up, (1.0 - (1.0 - w) * mu_b * down) / w,
                                 (1.0 - (1.0 - w) / g_max) / w});
  const double nu_hi = std::min(1.0 / g_max, 1.0 / w);
  const auto nu_a = draw_between(rng, nu_lo, nu_hi);
  if (!nu_a) return std::nullopt;
  const double nu_b = (1.0 - w * *nu_a) / (1.0 - w);

  QueryDraw a{w, {}}, b{1.0 - w, {}};
  for (std::size_t i = 0; i < n; ++i) {
    a.relevance.push_back(std::min(1.0, (in_group[i] ? *nu_a : *mu_a) * c[i]));
    b.relevance.push_back(std::min(1.0, (in_group[i] ? nu_b : mu_b) * c[i]));
  }
  return std::vector<QueryDraw>{a, b};
}

}  // namespace

RefinementStructure identity_refinement(std::span<const double> coarse) {
  return assemble(coarse, {QueryDraw{1.0, {coarse.begin(), coarse.end()}}});
}

RefinementStructure generate_flip_spread_refinement(std::span<const double> coarse,
                                                    std::uint64_t seed, std::size_t n_subparts) {
  if (n_subparts == 0) throw std::invalid_argument("need at least one subpart");
  if (coarse.empty()) throw std::invalid_argument("need at least one advertiser");
  for (double x : coarse)
    if (!(x > 0.0 && x <= 1.0)) throw std::invalid_argument("coarse relevance outside (0,1]");
  if (n_subparts == 1) return identity_refinement(coarse);

  constexpr std::size_t kMaxAttempts = 10000;
  for (std::size_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
    CounterRng rng(seed, attempt);

    // A mixture of mean-preserving components, each flip-spread against the
    // coarse relevances on its own queries.
    std::vector<std::vector<QueryDraw>> components;
    std::size_t remaining = n_subparts;
    bool ok = true;
    while (remaining >= 2 && ok) {
      auto part = (coarse.size() >= 2 && rng.uniform() < 0.8) ? group_move(coarse, rng)
                                                               : scale_split(coarse, rng);
      if (!part) ok = false;
      else components.push_back(std::move(*part));
      remaining -= 2;
    }
    if (!ok) continue;
    if (remaining == 1)
      components.push_back({QueryDraw{1.0, {coarse.begin(), coarse.end()}}});

    std::vector<double> theta;
    double theta_sum = 0.0;
    for (std::size_t j = 0; j < components.size(); ++j) {
      theta.push_back(rng.uniform(0.2, 1.0));
      theta_sum += theta.back();
    }
    std::vector<QueryDraw> queries;
    for (std::size_t j = 0; j < components.size(); ++j)
      for (auto q : components[j]) {
        q.weight *= theta[j] / theta_sum;
        queries.push_back(std::move(q));
      }

    RefinementStructure rs = assemble(coarse, queries);
    if (validate_refinement(rs) && is_flip_spread(rs)) return rs;
  }
  throw GenerationError("no flip-spread refinement found within the retry budget");
}

namespace examples {

RefinementStructure sf_sj() {
  RefinementStructure rs;
  rs.coarse.add_part("bay", 0.75);
  rs.fine.add_part("near", 1.0);
  rs.fine.add_part("far", 0.5);
  for (const char* q : {"SF", "SJ"})
    for (AdvertiserId a : {1, 2}) rs.coarse.assign(q, a, "bay");
  rs.fine.assign("SF", 1, "near");
  rs.fine.assign("SF", 2, "far");
  rs.fine.assign("SJ", 1, "far");
  rs.fine.assign("SJ", 2, "near");
  rs.subparts["bay"] = {{"near", 0.5}, {"far", 0.5}};
  rs.query_weights = {{"SF", 0.5}, {"SJ", 0.5}};
  return rs;
}

double chain_vs_local_delta(double epsilon) { return 15.0 * epsilon / (8.0 - 20.0 * epsilon); }

RefinementStructure chain_vs_local(double epsilon, std::optional<double> delta) {
  const double d = delta.value_or(chain_vs_local_delta(epsilon));
  const double p_sf = 0.25 - d;
  RefinementStructure rs;
  rs.coarse.add_part("chain", 0.8);
  rs.coarse.add_part("local", 0.1);
  rs.fine.add_part("chain", 0.8);
  rs.fine.add_part("local_sf", 0.4);
  rs.fine.add_part("local_else", epsilon);
  for (const char* q : {"SF", "notSF"}) {
    rs.coarse.assign(q, 1, "chain");
    rs.coarse.assign(q, 2, "local");
    rs.fine.assign(q, 1, "chain");
  }
  rs.fine.assign("SF", 2, "local_sf");
  rs.fine.assign("notSF", 2, "local_else");
  rs.subparts["chain"] = {{"chain", 1.0}};
  rs.subparts["local"] = {{"local_sf", p_sf}, {"local_else", 1.0 - p_sf}};
  rs.query_weights = {{"SF", p_sf}, {"notSF", 1.0 - p_sf}};
  return rs;
}

}  // namespace examples

}  // namespace refine
