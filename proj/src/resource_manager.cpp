#include "cerl/resource_manager.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cerl/error.hpp"

namespace cerl {

std::size_t Allocation::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::vector<double> normalize_values(std::span<const double> values) {
  if (values.empty()) throw UsageError("empty portfolio");
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError("non-finite learner value");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  std::vector<double> out(values.size(), 0.5);
  if (*hi > *lo) {
    const double span = *hi - *lo;
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / span;
  }
  return out;
}

std::vector<double> ucb_from_normalized(std::span<const double> normalized,
                                        std::span<const std::int64_t> counts, double ucb_c) {
  if (normalized.empty()) throw UsageError("empty portfolio");
  if (normalized.size() != counts.size()) throw UsageError("values and counts differ in length");
  if (ucb_c < 0.0) throw UsageError("ucb_c must be >= 0");
  std::int64_t total = 0;
  for (auto y : counts) {
    if (y < 0) throw UsageError("rollout counts must be non-negative");
    total += y;
  }
  const double log_total = total < 2 ? 0.0 : std::log(static_cast<double>(total));
  std::vector<double> u(normalized.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (counts[i] == 0) {
      u[i] = std::numeric_limits<double>::infinity();
    } else {
      u[i] = normalized[i] + ucb_c * std::sqrt(log_total / static_cast<double>(counts[i]));
    }
  }
  return u;
}

std::vector<double> ucb_scores(std::span<const double> values, std::span<const std::int64_t> counts,
                               const UcbConfig& cfg) {
  const auto vn = normalize_values(values);
  return ucb_from_normalized(vn, counts, cfg.ucb_c);
}

Allocation allocate(std::span<const double> scores, std::size_t budget, Rng& rng) {
  if (scores.empty()) throw UsageError("empty portfolio");
  if (budget == 0) throw UsageError("rollout budget must be >= 1");
  const std::size_t q = scores.size();
  Allocation a;
  a.counts.assign(q, 0);
  if (q == 1) {
    a.counts[0] = budget;
    return a;
  }

  std::size_t remaining = budget;
  for (std::size_t i = 0; i < q && remaining > 0; ++i) {
    if (std::isinf(scores[i]) && scores[i] > 0) {
      ++a.counts[i];
      --remaining;
    }
  }
  if (remaining == 0) return a;

  double lowest = std::numeric_limits<double>::infinity();
  for (double s : scores) {
    if (std::isnan(s)) throw NumericError("NaN UCB score");
    if (std::isfinite(s)) lowest = std::min(lowest, s);
  }
  std::vector<double> weights(q, 0.0);
  double mass = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    if (std::isfinite(scores[i])) {
      weights[i] = lowest < 0.0 ? scores[i] - lowest : scores[i];
      mass += weights[i];
    }
  }
  if (!(mass > 0.0)) std::fill(weights.begin(), weights.end(), 1.0);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  for (std::size_t w = 0; w < remaining; ++w) ++a.counts[pick(rng)];
  return a;
}

Allocation initial_allocation(std::size_t q, std::size_t budget) {
  if (q == 0) throw UsageError("empty portfolio");
  Allocation a;
  a.counts.assign(q, 0);
  if (q > budget) {
    for (std::size_t i = 0; i < budget; ++i) a.counts[i] = 1;
    return a;
  }
  for (std::size_t i = 0; i < q; ++i) a.counts[i] = budget / q + (i < budget % q ? 1 : 0);
  return a;
}

}  // namespace cerl
