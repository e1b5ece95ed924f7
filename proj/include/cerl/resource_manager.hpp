#pragma once

// Soft algorithm selection over the learner portfolio: UCB scores per learner,
// then a sampled allocation of the rollout budget.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cerl/rng.hpp"

namespace cerl {

struct UcbConfig {
  double ucb_c = 0.9;
  std::size_t budget = 10;
};

struct Allocation {
  std::vector<std::size_t> counts;

  std::size_t total() const noexcept;
  bool operator==(const Allocation&) const = default;
};

/// Portfolio-wide min-max normalization into [0, 1]; all-equal maps to 0.5.
std::vector<double> normalize_values(std::span<const double> values);

/// U_i = vn_i + c sqrt(ln(H) / y_i) with H = sum y and ln H taken as 0 for H < 2.
/// y_i = 0 yields +infinity (must sample).
std::vector<double> ucb_from_normalized(std::span<const double> normalized,
                                        std::span<const std::int64_t> counts, double ucb_c);

/// normalize_values followed by ucb_from_normalized.
std::vector<double> ucb_scores(std::span<const double> values, std::span<const std::int64_t> counts,
                               const UcbConfig& cfg);

/// Infinite scores get one worker each (in learner order) first; the rest are
/// drawn i.i.d. in proportion to the finite scores, shifted to be non-negative.
/// Uniform over all learners when no finite score carries weight.
Allocation allocate(std::span<const double> scores, std::size_t budget, Rng& rng);

/// Even split, the first (b mod q) learners get the extra worker; with q > b
/// the first b learners get one worker each.
Allocation initial_allocation(std::size_t q, std::size_t budget);

}  // namespace cerl
