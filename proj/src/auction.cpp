#include "refine/auction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "refine/tolerances.hpp"

namespace refine {

SlotProfile::SlotProfile(std::vector<double> effects) : effects_(std::move(effects)) {
  for (std::size_t j = 0; j < effects_.size(); ++j) {
    const double s = effects_[j];
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("slot effect outside [0,1]");
    if (j > 0 && s > effects_[j - 1])
      throw std::invalid_argument("slot effects must be non-increasing");
  }
}

void AuctionInstance::validate() const {
  for (const auto& a : advertisers) {
    if (!(a.value >= 0.0)) throw std::invalid_argument("advertiser value must be >= 0");
    if (!(a.relevance >= 0.0 && a.relevance <= 1.0))
      throw std::invalid_argument("advertiser relevance outside [0,1]");
  }
}

AuctionInstance AuctionInstance::with_relevances(std::span<const double> relevances) const {
  if (relevances.size() != advertisers.size())
    throw std::invalid_argument("relevance count does not match advertisers");
  AuctionInstance out = *this;
  for (std::size_t i = 0; i < relevances.size(); ++i) out.advertisers[i].relevance = relevances[i];
  return out;
}

std::size_t Assignment::assigned_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(slot_of.begin(), slot_of.end(), [](const auto& s) { return s.has_value(); }));
}

std::vector<std::size_t> Assignment::by_slot() const {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < slot_of.size(); ++i)
    if (slot_of[i]) pairs.emplace_back(*slot_of[i], i);
  std::sort(pairs.begin(), pairs.end());
  std::vector<std::size_t> out;
  out.reserve(pairs.size());
  for (const auto& [slot, adv] : pairs) out.push_back(adv);
  return out;
}

void Assignment::validate(std::size_t n, std::size_t m) const {
  if (slot_of.size() != n) throw std::invalid_argument("assignment size mismatch");
  std::vector<bool> used(m, false);
  for (const auto& s : slot_of) {
    if (!s) continue;
    if (*s >= m) throw std::invalid_argument("slot index out of range");
    if (used[*s]) throw std::invalid_argument("slot assigned twice");
    used[*s] = true;
  }
}

std::string OutcomeMetrics::csv_row() const {
  std::ostringstream os;
  os.precision(12);
  os << alpha << ',' << welfare << ',' << virtual_surplus << ',' << payment_total;
  return os.str();
}

double realized_value(const Advertiser& adv) noexcept { return adv.relevance * adv.value; }

std::vector<std::size_t> rank_by_score(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

std::vector<double> alpha_scores(const AuctionInstance& instance, double alpha) {
  std::vector<double> scores;
  scores.reserve(instance.advertisers.size());
  for (const auto& a : instance.advertisers)
    scores.push_back(a.relevance * instance.dist.alpha_virtual_value(a.value, alpha));
  return scores;
}

Assignment allocate_by_scores(std::span<const double> scores, std::size_t slots) {
  Assignment asg;
  asg.slot_of.assign(scores.size(), std::nullopt);
  std::size_t next = 0;
  for (std::size_t i : rank_by_score(scores)) {
    if (next == slots || scores[i] < 0.0) break;
    asg.slot_of[i] = next++;
  }
  return asg;
}

Assignment allocate(const AuctionInstance& instance, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  const auto scores = alpha_scores(instance, alpha);
  return allocate_by_scores(scores, instance.slots.size());
}

namespace {

template <typename F>
double sum_assigned(const AuctionInstance& instance, const Assignment& asg, F per_click) {
  double total = 0.0;
  for (std::size_t i = 0; i < asg.slot_of.size(); ++i) {
    if (!asg.slot_of[i]) continue;
    const auto& a = instance.advertisers[i];
    total += instance.slots[*asg.slot_of[i]] * a.relevance * per_click(a.value);
  }
  return total;
}

}  // namespace

double welfare(const AuctionInstance& instance, const Assignment& asg) {
  return sum_assigned(instance, asg, [](double v) { return v; });
}

double realized_virtual_surplus(const AuctionInstance& instance, const Assignment& asg) {
  return sum_assigned(instance, asg, [&](double v) { return instance.dist.virtual_value(v); });
}

double objective(const AuctionInstance& instance, const Assignment& asg, double alpha) {
  return (1.0 - alpha) * welfare(instance, asg) + alpha * realized_virtual_surplus(instance, asg);
}

std::vector<WinnerPayment> threshold_payments(const AuctionInstance& instance, double alpha,
                                              const Assignment& asg) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  if (!certify_regular(instance.dist, 256))
    throw UnsupportedConfiguration("threshold payments need a regular prior");

  const std::size_t n = instance.advertisers.size();
  const std::size_t m = instance.slots.size();
  asg.validate(n, m);
  const auto scores = alpha_scores(instance, alpha);
  const double floor_value = instance.dist.support().lo;

  std::vector<WinnerPayment> out;
  for (std::size_t i : asg.by_slot()) {
    const std::size_t slot = *asg.slot_of[i];
    const auto& me = instance.advertisers[i];
    if (me.relevance == 0.0) {
      out.push_back({i, slot, 0.0});
      continue;
    }

    std::vector<std::size_t> others;
    for (std::size_t o = 0; o < n; ++o)
      if (o != i) others.push_back(o);
    std::stable_sort(others.begin(), others.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    auto score_at = [&](double v) {
      return me.relevance * instance.dist.alpha_virtual_value(v, alpha);
    };
    // Earns slot k or better at report v.
    auto attains = [&](double v, std::size_t k) {
      const double x = score_at(v);
      if (x < 0.0) return false;
      if (k >= others.size()) return true;
      const std::size_t rival = others[k];
      return x > scores[rival] || (x == scores[rival] && i < rival);
    };

    double amount = 0.0;
    for (std::size_t k = slot; k < m; ++k) {
      const double weight = instance.slots[k] - instance.slots[k + 1];
      if (weight == 0.0) continue;
      double lo = floor_value;
      double hi = me.value;
      double threshold;
      if (attains(lo, k)) {
        threshold = lo;
      } else {
        while (hi - lo > kTol.threshold) {
          const double mid = 0.5 * (lo + hi);
          (attains(mid, k) ? hi : lo) = mid;
        }
        threshold = 0.5 * (lo + hi);
      }
      amount += weight * threshold;
    }
    out.push_back({i, slot, me.relevance * amount});
  }
  return out;
}

double total(std::span<const WinnerPayment> payments) noexcept {
  double sum = 0.0;
  for (const auto& p : payments) sum += p.amount;
  return sum;
}

OutcomeMetrics evaluate(const AuctionInstance& instance, double alpha) {
  const Assignment asg = allocate(instance, alpha);
  const auto pay = threshold_payments(instance, alpha, asg);
  return OutcomeMetrics{alpha, welfare(instance, asg), realized_virtual_surplus(instance, asg),
                        total(pay)};
}

}  // namespace refine
