#ifndef GBH_TESTING_HPP
#define GBH_TESTING_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "gbh/classification.hpp"
#include "gbh/weights.hpp"

namespace gbh {

struct TestOutcome {
  std::vector<bool> rejected;
  std::vector<double> weighted_p;
  std::size_t threshold_index = 0;  // number of rejections
  double alpha = 0.05;
};

struct OutcomeMetrics {
  std::size_t rejections = 0;
  std::size_t false_rejections = 0;
  std::size_t false_nulls = 0;
  double fdp = 0.0;
  double power = 0.0;
};

/// W_i * P_i, with +inf whenever W_i is +inf.
std::vector<double> weighted_pvalues(std::span<const double> pvalues, const WeightVector& weights);

/// Level-alpha BH step-up on the weighted p-values W_i P_i.
///
/// Rejects the k smallest weighted p-values, where k is the largest j with
/// P^W_(j) <= j alpha / N. Ties are ordered by index; tied values at the
/// cut are always rejected together. Weighted p-values are not clipped.
/// Throws std::invalid_argument on length mismatch or alpha outside (0, 1).
TestOutcome weighted_bh(std::span<const double> pvalues, const WeightVector& weights, double alpha);

/// Plain BH (all weights 1).
TestOutcome bh(std::span<const double> pvalues, double alpha);

/// FDP = V / max(R, 1); power = (R - V) / #false nulls, 0 without false nulls.
OutcomeMetrics outcome_metrics(const TestOutcome& outcome, const TruthAssignment& truth);

}  // namespace gbh

#endif  // GBH_TESTING_HPP
