#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "refine/dists.hpp"

namespace refine {

/// Raised when a mechanism is asked to run outside the regime where it is
/// truthful (e.g. pricing under an irregular prior).
class UnsupportedConfiguration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Slot effects 1 >= s_1 >= ... >= s_m >= 0.
class SlotProfile {
 public:
  SlotProfile() = default;
  /// Throws std::invalid_argument if effects leave [0,1] or increase.
  explicit SlotProfile(std::vector<double> effects);

  std::size_t size() const noexcept { return effects_.size(); }
  bool empty() const noexcept { return effects_.empty(); }
  /// Effect of slot j, or 0 past the last slot.
  double operator[](std::size_t j) const noexcept {
    return j < effects_.size() ? effects_[j] : 0.0;
  }
  const std::vector<double>& effects() const noexcept { return effects_; }

 private:
  std::vector<double> effects_;
};

struct Advertiser {
  double value = 0.0;      // per click
  double relevance = 1.0;  // query-advertiser click propensity
};

/// Advertisers are identified by their index.
struct AuctionInstance {
  SlotProfile slots;
  std::vector<Advertiser> advertisers;
  Distribution dist;

  /// Throws std::invalid_argument for negative values or relevance outside [0,1].
  void validate() const;
  /// Same instance with relevances replaced.
  AuctionInstance with_relevances(std::span<const double> relevances) const;
};

/// Injective advertiser -> slot map.
struct Assignment {
  std::vector<std::optional<std::size_t>> slot_of;

  std::size_t assigned_count() const noexcept;
  bool empty() const noexcept { return assigned_count() == 0; }
  /// Advertiser holding each filled slot, in slot order.
  std::vector<std::size_t> by_slot() const;
  /// Throws std::invalid_argument unless injective with slots in [0, m).
  void validate(std::size_t n, std::size_t m) const;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct WinnerPayment {
  std::size_t advertiser;
  std::size_t slot;
  double amount;
};

struct OutcomeMetrics {
  double alpha = 0.0;
  double welfare = 0.0;
  double virtual_surplus = 0.0;
  double payment_total = 0.0;

  static constexpr const char* kCsvHeader = "alpha,welfare,virtual_surplus,payment_total";
  std::string csv_row() const;
};

/// r = p * v.
double realized_value(const Advertiser& adv) noexcept;

/// Indices ordered by descending score; equal scores by ascending index.
std::vector<std::size_t> rank_by_score(std::span<const double> scores);

/// Realized alpha-virtual values p_i * (v_i - alpha * lambda(v_i)).
std::vector<double> alpha_scores(const AuctionInstance& instance, double alpha);

/// Fills slots top-down with the highest non-negative scores.
Assignment allocate_by_scores(std::span<const double> scores, std::size_t slots);

/// The alpha-virtual-value mechanism. Throws std::invalid_argument for alpha
/// outside [0,1] and std::domain_error for values outside the prior's support.
Assignment allocate(const AuctionInstance& instance, double alpha);

/// Sum of s_slot * p_i * v_i over assigned advertisers.
double welfare(const AuctionInstance& instance, const Assignment& asg);

/// Sum of s_slot * p_i * phi(v_i) over assigned advertisers.
double realized_virtual_surplus(const AuctionInstance& instance, const Assignment& asg);

/// (1 - alpha) * welfare + alpha * realized virtual surplus.
double objective(const AuctionInstance& instance, const Assignment& asg, double alpha);

/// Threshold prices of the deterministic truthful mechanism that allocates by
/// `allocate(instance, alpha)`. The winner of slot j pays
///   p_i * sum_{k >= j} (s_k - s_{k+1}) * t_{i,k}
/// where t_{i,k} is the least value-per-click that still earns slot k or
/// better with the other reports fixed. Thresholds are found by bisection.
/// Throws UnsupportedConfiguration if the prior fails a regularity check.
std::vector<WinnerPayment> threshold_payments(const AuctionInstance& instance, double alpha,
                                              const Assignment& asg);

double total(std::span<const WinnerPayment> payments) noexcept;

/// Allocation, welfare, virtual surplus and threshold payments at one alpha.
OutcomeMetrics evaluate(const AuctionInstance& instance, double alpha);

}  // namespace refine
