#include "refine/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "refine/parallel.hpp"
#include "refine/rng.hpp"

namespace refine {
namespace {

constexpr std::size_t kBlock = 4096;

// Running mean and squared deviations; merging in a fixed order keeps
// results identical across worker counts.
struct Stats {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  void merge(const Stats& o) {
    if (o.n == 0.0) return;
    const double total = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / total;
    m2 += o.m2 + d * d * n * o.n / total;
    n = total;
  }
  double se() const { return n > 1.0 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0; }
};

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

struct WeightedQuery {
  QueryId id;
  double weight;
};

std::vector<WeightedQuery> weighted_queries(const RefinementStructure& rs) {
  std::vector<WeightedQuery> out;
  const auto qs = rs.fine.queries();
  for (const auto& q : qs) {
    double w = 1.0 / static_cast<double>(qs.size());
    if (!rs.query_weights.empty()) {
      const auto it = rs.query_weights.find(q);
      w = it == rs.query_weights.end() ? 0.0 : it->second;
    }
    out.push_back({q, w});
  }
  return out;
}

std::size_t draw_query(const std::vector<WeightedQuery>& qs, double u) {
  double acc = 0.0;
  for (std::size_t k = 0; k < qs.size(); ++k) {
    acc += qs[k].weight;
    if (u < acc) return k;
  }
  return qs.size() - 1;
}

std::vector<double> relevances_on(const PredictionScheme& scheme, const QueryId& q,
                                  const std::vector<AdvertiserId>& advs) {
  std::vector<double> out;
  out.reserve(advs.size());
  for (AdvertiserId a : advs) out.push_back(scheme.relevance_of(q, a));
  return out;
}

AuctionInstance make_instance(std::span<const double> values, std::span<const double> relevances,
                              const SlotProfile& slots, const Distribution& dist) {
  AuctionInstance inst{slots, {}, dist};
  for (std::size_t i = 0; i < values.size(); ++i)
    inst.advertisers.push_back({values[i], relevances[i]});
  return inst;
}

SlotProfile random_slots(CounterRng& rng, std::size_t m) {
  std::vector<double> s(m);
  for (auto& x : s) x = rng.uniform();
  std::sort(s.begin(), s.end(), std::greater<>());
  return SlotProfile(std::move(s));
}

}  // namespace

std::vector<std::string> TrialReport::csv_rows() const {
  std::vector<std::string> rows;
  for (const auto& o : outcomes) {
    rows.push_back(std::to_string(seed) + ',' + fmt(o.alpha) + ',' + fmt(o.welfare_coarse) + ',' +
                   fmt(o.welfare_fine) + ',' + fmt(o.objective_coarse) + ',' +
                   fmt(o.objective_fine) + ',' + (o.pass ? "PASS" : "FAIL") + ",\"" + summary + '"');
  }
  return rows;
}

AlphaOutcome compare_pointwise(const AuctionInstance& instance, std::span<const double> coarse,
                               std::span<const double> fine, double alpha) {
  const AuctionInstance truth = instance.with_relevances(fine);
  const Assignment a_coarse = allocate(instance.with_relevances(coarse), alpha);
  const Assignment a_fine = allocate(truth, alpha);
  AlphaOutcome out;
  out.alpha = alpha;
  out.welfare_coarse = welfare(truth, a_coarse);
  out.welfare_fine = welfare(truth, a_fine);
  out.objective_coarse = objective(truth, a_coarse, alpha);
  out.objective_fine = objective(truth, a_fine, alpha);
  return out;
}

TrialReport check_refinement_welfare(std::span<const double> values, const SlotProfile& slots,
                                     const Distribution& dist, const RefinementStructure& rs,
                                     const QueryId& query, std::span<const double> alphas,
                                     double tol) {
  const auto advs = rs.fine.advertisers();
  if (advs.size() != values.size())
    throw std::invalid_argument("one value per advertiser of the refinement is required");
  const auto coarse = relevances_on(rs.coarse, query, advs);
  const auto fine = relevances_on(rs.fine, query, advs);
  const AuctionInstance inst = make_instance(values, fine, slots, dist);

  TrialReport report;
  for (double alpha : alphas) {
    AlphaOutcome o = compare_pointwise(inst, coarse, fine, alpha);
    o.pass = o.welfare_fine >= o.welfare_coarse - tol;
    report.pass = report.pass && o.pass;
    report.outcomes.push_back(o);
  }
  return report;
}

TrialReport theorem_main_trial(std::uint64_t seed, std::size_t n, std::size_t m,
                               const Distribution& dist, std::span<const double> alphas,
                               double tol) {
  if (!dist.mhr_by_construction())
    throw std::invalid_argument("the welfare theorem needs an MHR prior");
  if (n == 0) throw std::invalid_argument("need at least one advertiser");

  CounterRng rng(seed, 0);
  std::vector<double> values(n), coarse(n);
  for (auto& v : values) v = dist.quantile(rng.uniform());
  for (auto& p : coarse) p = rng.uniform(0.05, 1.0);
  const SlotProfile slots = random_slots(rng, m);
  const std::size_t n_queries = 1 + rng.below(4);
  const auto rs = generate_flip_spread_refinement(coarse, mix64(seed ^ 0x5eed), n_queries);
  const auto qs = weighted_queries(rs);
  const QueryId& query = qs[draw_query(qs, rng.uniform())].id;

  TrialReport report = check_refinement_welfare(values, slots, dist, rs, query, alphas, tol);
  report.seed = seed;
  std::ostringstream os;
  os << "dist=" << dist.name() << " n=" << n << " m=" << m << " queries=" << n_queries
     << " query=" << query;
  report.summary = os.str();
  return report;
}

RefinementStructure generate_refinement(std::span<const double> coarse, std::uint64_t seed,
                                        std::size_t n_queries) {
  if (n_queries == 0) throw std::invalid_argument("need at least one query");
  for (double c : coarse)
    if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("coarse relevance outside [0,1]");
  if (n_queries == 1) return identity_refinement(coarse);

  CounterRng rng(seed, 1);
  std::vector<double> w(n_queries);
  double wsum = 0.0;
  for (auto& x : w) wsum += (x = rng.uniform(0.2, 1.0));
  for (auto& x : w) x /= wsum;

  RefinementStructure rs;
  for (std::size_t k = 0; k < n_queries; ++k) rs.query_weights["q" + std::to_string(k)] = w[k];
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    const double c = coarse[i];
    const PartId cid = "c" + std::to_string(i);
    rs.coarse.add_part(cid, c);

    // Random direction with zero weighted mean, scaled to stay inside [0,1].
    std::vector<double> d(n_queries);
    double mean = 0.0;
    for (std::size_t k = 0; k < n_queries; ++k) mean += w[k] * (d[k] = rng.uniform());
    double t_max = std::numeric_limits<double>::infinity();
    for (auto& x : d) {
      x -= mean;
      if (x > 0.0) t_max = std::min(t_max, (1.0 - c) / x);
      if (x < 0.0) t_max = std::min(t_max, c / -x);
    }
    const double t = std::isfinite(t_max) ? rng.uniform() * t_max : 0.0;

    auto& subs = rs.subparts[cid];
    for (std::size_t k = 0; k < n_queries; ++k) {
      const QueryId q = "q" + std::to_string(k);
      const PartId fid = "f" + std::to_string(i) + "_" + q;
      rs.fine.add_part(fid, std::clamp(c + t * d[k], 0.0, 1.0));
      rs.coarse.assign(q, i, cid);
      rs.fine.assign(q, i, fid);
      subs.push_back({fid, w[k]});
    }
  }
  if (const auto verdict = validate_refinement(rs); !verdict)
    throw GenerationError("generated refinement failed validation: " + verdict.reason);
  return rs;
}

namespace {

struct PairedRun {
  Stats obj_coarse, obj_fine, obj_diff;
  Stats w_coarse, w_fine, w_diff;
  std::size_t violations = 0;

  void merge(const PairedRun& o) {
    obj_coarse.merge(o.obj_coarse);
    obj_fine.merge(o.obj_fine);
    obj_diff.merge(o.obj_diff);
    w_coarse.merge(o.w_coarse);
    w_fine.merge(o.w_fine);
    w_diff.merge(o.w_diff);
    violations += o.violations;
  }
};

PairedRun run_paired(std::uint64_t seed, const TradeoffConfig& cfg, double tol) {
  const auto advs = cfg.rs.fine.advertisers();
  const auto qs = weighted_queries(cfg.rs);
  std::vector<std::vector<double>> coarse, fine;
  for (const auto& q : qs) {
    coarse.push_back(relevances_on(cfg.rs.coarse, q.id, advs));
    fine.push_back(relevances_on(cfg.rs.fine, q.id, advs));
  }
  const std::size_t n = advs.size();

  auto blocks = map_blocks<PairedRun>(cfg.samples, kBlock, [&](std::size_t lo, std::size_t hi) {
    PairedRun run;
    std::vector<double> values(n);
    for (std::size_t s = lo; s < hi; ++s) {
      CounterRng rng(seed, s);
      for (auto& v : values) v = cfg.dist.quantile(rng.uniform());
      const std::size_t k = draw_query(qs, rng.uniform());

      double averaged_diff = 0.0;
      AlphaOutcome drawn;
      for (std::size_t j = 0; j < qs.size(); ++j) {
        const auto inst = make_instance(values, fine[j], cfg.slots, cfg.dist);
        const AlphaOutcome o = compare_pointwise(inst, coarse[j], fine[j], cfg.alpha);
        averaged_diff += qs[j].weight * (o.objective_fine - o.objective_coarse);
        if (j == k) drawn = o;
      }
      if (averaged_diff < -tol * std::max(1.0, std::abs(drawn.objective_coarse)))
        ++run.violations;

      run.obj_coarse.add(drawn.objective_coarse);
      run.obj_fine.add(drawn.objective_fine);
      run.obj_diff.add(drawn.objective_fine - drawn.objective_coarse);
      run.w_coarse.add(drawn.welfare_coarse);
      run.w_fine.add(drawn.welfare_fine);
      run.w_diff.add(drawn.welfare_fine - drawn.welfare_coarse);
    }
    return run;
  });
  PairedRun total;
  for (const auto& b : blocks) total.merge(b);
  return total;
}

}  // namespace

std::string TradeoffReport::csv_row() const {
  return label + ',' + std::to_string(seed) + ',' + std::to_string(samples) + ',' +
         fmt(objective_coarse) + ',' + fmt(objective_fine) + ',' + fmt(objective_diff) + ',' +
         fmt(objective_diff_se) + ',' + fmt(welfare_coarse) + ',' + fmt(welfare_fine) + ',' +
         fmt(welfare_diff) + ',' + fmt(welfare_diff_se) + ',' +
         std::to_string(pointwise_violations) + ',' + (pass ? "PASS" : "FAIL");
}

TradeoffReport theorem_tradeoff_trial(std::uint64_t seed, const TradeoffConfig& cfg, double tol) {
  if (!certify_regular(cfg.dist, 256))
    throw std::invalid_argument("the trade-off theorem needs a regular prior");
  if (const auto verdict = validate_refinement(cfg.rs); !verdict)
    throw std::invalid_argument("invalid refinement: " + verdict.reason);

  const PairedRun run = run_paired(seed, cfg, tol);
  TradeoffReport r;
  r.label = cfg.label;
  r.seed = seed;
  r.samples = cfg.samples;
  r.objective_coarse = run.obj_coarse.mean;
  r.objective_fine = run.obj_fine.mean;
  r.objective_diff = run.obj_diff.mean;
  r.objective_diff_se = run.obj_diff.se();
  r.welfare_coarse = run.w_coarse.mean;
  r.welfare_fine = run.w_fine.mean;
  r.welfare_diff = run.w_diff.mean;
  r.welfare_diff_se = run.w_diff.se();
  r.pointwise_violations = run.violations;
  r.pass = r.objective_diff >= -3.0 * r.objective_diff_se && r.pointwise_violations == 0;
  return r;
}

TradeoffConfig random_tradeoff_config(std::uint64_t seed, std::size_t samples) {
  CounterRng rng(seed, 0);
  static const Distribution kPriors[] = {
      Distribution::uniform(0.0, 1.0), Distribution::uniform(3.0, 5.0),
      Distribution::exponential(1.0), Distribution::tser(1000.0, -1.0)};
  TradeoffConfig cfg;
  cfg.dist = kPriors[rng.below(4)];
  const std::size_t n = 2 + rng.below(4);
  cfg.slots = random_slots(rng, 1 + rng.below(3));
  std::vector<double> coarse(n);
  for (auto& p : coarse) p = rng.uniform(0.05, 1.0);
  const std::size_t n_queries = 2 + rng.below(3);
  const bool flip_spread = rng.uniform() < 0.5;
  cfg.rs = flip_spread ? generate_flip_spread_refinement(coarse, mix64(seed), n_queries)
                       : generate_refinement(coarse, mix64(seed), n_queries);
  cfg.alpha = kAlphaGrid[rng.below(kAlphaGrid.size())];
  cfg.samples = samples;
  cfg.label = "random-" + std::to_string(seed) + (flip_spread ? "-fs" : "-any");
  return cfg;
}

TradeoffConfig nonflipspread_config(double epsilon, std::size_t samples) {
  TradeoffConfig cfg;
  cfg.label = "chain-vs-local";
  cfg.dist = Distribution::uniform(3.0, 5.0);
  cfg.slots = SlotProfile({1.0});
  cfg.rs = examples::chain_vs_local(epsilon);
  cfg.alpha = 1.0;
  cfg.samples = samples;
  return cfg;
}

WelfareGap nonflipspread_welfare_gap(double epsilon, std::size_t samples, std::uint64_t seed) {
  if (!(epsilon > 0.0 && epsilon < 0.4)) throw std::invalid_argument("need 0 < epsilon < 0.4");
  const PairedRun run = run_paired(seed, nonflipspread_config(epsilon, samples), 1e-12);
  return {run.w_fine.mean, run.w_coarse.mean, run.w_fine.se(), run.w_coarse.se(),
          run.w_diff.se()};
}

std::vector<Figure2Row> figure2_sweep(std::span<const double> p2_grid, std::size_t samples,
                                      std::uint64_t seed) {
  for (double p2 : p2_grid)
    if (!(p2 >= 0.0 && p2 <= 0.8)) throw std::invalid_argument("p2 grid must lie in [0, 0.8]");
  const Distribution dist = Distribution::uniform(3.0, 5.0);
  const SlotProfile slots({1.0});
  const std::size_t g = p2_grid.size();

  auto blocks =
      map_blocks<std::vector<Stats>>(samples, kBlock, [&](std::size_t lo, std::size_t hi) {
        std::vector<Stats> acc(g);
        for (std::size_t s = lo; s < hi; ++s) {
          CounterRng rng(seed, s);
          const double v1 = dist.quantile(rng.uniform());
          const double v2 = dist.quantile(rng.uniform());
          for (std::size_t k = 0; k < g; ++k) {
            const AuctionInstance inst{slots, {{v1, 0.8}, {v2, p2_grid[k]}}, dist};
            acc[k].add(welfare(inst, allocate(inst, 0.0)) - welfare(inst, allocate(inst, 1.0)));
          }
        }
        return acc;
      });
  std::vector<Stats> total(g);
  for (const auto& b : blocks)
    for (std::size_t k = 0; k < g; ++k) total[k].merge(b[k]);

  std::vector<Figure2Row> rows;
  for (std::size_t k = 0; k < g; ++k) rows.push_back({p2_grid[k], total[k].mean, total[k].se()});
  return rows;
}

NonIidScenario noniid_scenario(std::size_t samples, std::uint64_t seed) {
  const Distribution big = Distribution::uniform(3.0, 5.0);
  const Distribution small = Distribution::uniform(1.2, 2.0);
  const SlotProfile slots({1.0});

  struct Acc {
    Stats fine, coarse, diff;
    double mismatch = 0.0;
  };
  // Single slot: winner by score, ties to the lower index; welfare uses the
  // fine relevance of the winner.
  auto single_slot = [](double s1, double s2, double r1, double r2) {
    const double scores[] = {s1, s2};
    const Assignment a = allocate_by_scores(scores, 1);
    if (a.slot_of[0]) return r1;
    if (a.slot_of[1]) return r2;
    return 0.0;
  };

  auto blocks = map_blocks<Acc>(samples, kBlock, [&](std::size_t lo, std::size_t hi) {
    Acc acc;
    for (std::size_t s = lo; s < hi; ++s) {
      CounterRng rng(seed, s);
      const double u1 = rng.uniform();
      const double u2 = rng.uniform();
      const double v1 = big.quantile(u1);
      const double w2 = small.quantile(u2);
      const double phi1 = big.virtual_value(v1);
      const double phi2 = small.virtual_value(w2);

      const double fine = single_slot(0.8 * phi1, 1.0 * phi2, 0.8 * v1, 1.0 * w2);
      const double coarse = single_slot(0.8 * phi1, 0.25 * phi2, 0.8 * v1, 1.0 * w2);

      // The i.i.d. chain-versus-local SF query with the same uniforms.
      const double v2 = big.quantile(u2);
      const AuctionInstance sf_fine{slots, {{v1, 0.8}, {v2, 0.4}}, big};
      const AuctionInstance sf_coarse{slots, {{v1, 0.8}, {v2, 0.1}}, big};
      const double iid_fine = welfare(sf_fine, allocate(sf_fine, 1.0));
      const double iid_coarse = welfare(sf_fine, allocate(sf_coarse, 1.0));

      acc.fine.add(fine);
      acc.coarse.add(coarse);
      acc.diff.add(fine - coarse);
      acc.mismatch = std::max({acc.mismatch, std::abs(fine - iid_fine),
                               std::abs(coarse - iid_coarse)});
    }
    return acc;
  });
  Acc total;
  for (const auto& b : blocks) {
    total.fine.merge(b.fine);
    total.coarse.merge(b.coarse);
    total.diff.merge(b.diff);
    total.mismatch = std::max(total.mismatch, b.mismatch);
  }
  return {{total.fine.mean, total.coarse.mean, total.fine.se(), total.coarse.se(),
           total.diff.se()},
          total.mismatch};
}

RevenueIdentity revenue_identity(const Distribution& dist, const SlotProfile& slots,
                                 std::span<const double> relevances, double alpha,
                                 std::size_t samples, std::uint64_t seed) {
  struct Acc {
    Stats pay, surplus, diff;
  };
  const std::size_t n = relevances.size();
  auto blocks = map_blocks<Acc>(samples, kBlock, [&](std::size_t lo, std::size_t hi) {
    Acc acc;
    std::vector<double> values(n);
    for (std::size_t s = lo; s < hi; ++s) {
      CounterRng rng(seed, s);
      for (auto& v : values) v = dist.quantile(rng.uniform());
      const AuctionInstance inst = make_instance(values, relevances, slots, dist);
      const Assignment asg = allocate(inst, alpha);
      const double pay = total(threshold_payments(inst, alpha, asg));
      const double vs = realized_virtual_surplus(inst, asg);
      acc.pay.add(pay);
      acc.surplus.add(vs);
      acc.diff.add(pay - vs);
    }
    return acc;
  });
  Acc t;
  for (const auto& b : blocks) {
    t.pay.merge(b.pay);
    t.surplus.merge(b.surplus);
    t.diff.merge(b.diff);
  }
  return {t.pay.mean, t.surplus.mean, t.diff.se()};
}

}  // namespace refine
