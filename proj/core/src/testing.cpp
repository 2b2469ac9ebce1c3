#include "gbh/testing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gbh {

std::vector<double> weighted_pvalues(std::span<const double> pvalues, const WeightVector& weights) {
  if (pvalues.size() != weights.size()) {
    throw std::invalid_argument("weighted_pvalues: " + std::to_string(pvalues.size()) +
                                " p-values but " + std::to_string(weights.size()) + " weights");
  }
  std::vector<double> out(pvalues.size());
  for (std::size_t i = 0; i < pvalues.size(); ++i) {
    out[i] = std::isinf(weights[i]) ? std::numeric_limits<double>::infinity()
                                    : weights[i] * pvalues[i];
  }
  return out;
}

TestOutcome weighted_bh(std::span<const double> pvalues, const WeightVector& weights,
                        double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  TestOutcome out;
  out.alpha = alpha;
  out.weighted_p = weighted_pvalues(pvalues, weights);
  const std::size_t n = pvalues.size();
  out.rejected.assign(n, false);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& wp = out.weighted_p;
  std::sort(order.begin(), order.end(), [&wp](std::size_t a, std::size_t b) {
    return wp[a] < wp[b] || (wp[a] == wp[b] && a < b);
  });

  const double total = static_cast<double>(n);
  for (std::size_t j = n; j >= 1; --j) {
    if (wp[order[j - 1]] <= static_cast<double>(j) * alpha / total) {
      out.threshold_index = j;
      break;
    }
  }
  for (std::size_t r = 0; r < out.threshold_index; ++r) {
    out.rejected[order[r]] = true;
  }
  return out;
}

TestOutcome bh(std::span<const double> pvalues, double alpha) {
  return weighted_bh(pvalues, WeightVector(pvalues.size(), 1.0), alpha);
}

OutcomeMetrics outcome_metrics(const TestOutcome& outcome, const TruthAssignment& truth) {
  if (outcome.rejected.size() != truth.size()) {
    throw std::invalid_argument("outcome_metrics: outcome has " +
                                std::to_string(outcome.rejected.size()) +
                                " hypotheses, truth has " + std::to_string(truth.size()));
  }
  OutcomeMetrics m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!truth.is_null[i]) {
      ++m.false_nulls;
    }
    if (outcome.rejected[i]) {
      ++m.rejections;
      if (truth.is_null[i]) {
        ++m.false_rejections;
      }
    }
  }
  m.fdp = static_cast<double>(m.false_rejections) /
          static_cast<double>(std::max<std::size_t>(m.rejections, 1));
  m.power = m.false_nulls == 0 ? 0.0
                               : static_cast<double>(m.rejections - m.false_rejections) /
                                     static_cast<double>(m.false_nulls);
  return m;
}

}  // namespace gbh
