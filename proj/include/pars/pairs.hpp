#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "pars/dataset.hpp"

namespace pars {

// A filtered, labeled training pair. a/b index into the generating dataset;
// y = +1 iff L_a > L_b, -1 iff L_a < L_b (exact ties never become pairs);
// rel_diff = |L_a - L_b| / max(L_a, L_b) and is >= the generating delta.
struct RankedPair {
  uint32_t a = 0;
  uint32_t b = 0;
  int y = 0;
  double rel_diff = 0.0;
};

inline double relative_length_difference(int64_t len_a, int64_t len_b) {
  return static_cast<double>(std::llabs(len_a - len_b)) /
         static_cast<double>(std::max(len_a, len_b));
}

// max(0, -y * (s_a - s_b) + margin)
inline double margin_ranking_loss(double s_a, double s_b, int y,
                                  double margin) {
  double v = -static_cast<double>(y) * (s_a - s_b) + margin;
  return v > 0.0 ? v : 0.0;
}

// Candidate pairs are drawn uniformly with replacement (seeded); a draw is
// kept iff the lengths differ and rel_diff >= delta. Stops at max_pairs or
// after kSamplingBudgetFactor * max_pairs draws.
inline constexpr uint64_t kSamplingBudgetFactor = 50;

std::vector<RankedPair> build_pairs(const Dataset& ds, double delta,
                                    size_t max_pairs, uint64_t seed);

}  // namespace pars
