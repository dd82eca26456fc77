#include "pars/pairs.hpp"

#include "pars/error.hpp"
#include "pars/rng.hpp"

namespace pars {

std::vector<RankedPair> build_pairs(const Dataset& ds, double delta,
                                    size_t max_pairs, uint64_t seed) {
  if (ds.records.empty()) throw Error("build_pairs: empty dataset");
  if (delta < 0.0 || delta >= 1.0)
    fail("build_pairs: delta %g outside [0, 1)", delta);
  if (max_pairs == 0) fail("build_pairs: max_pairs must be >= 1");

  std::vector<RankedPair> pairs;
  const size_t n = ds.records.size();
  if (n >= 2) {
    pairs.reserve(max_pairs);
    Rng rng(seed);
    const uint64_t budget = kSamplingBudgetFactor * max_pairs;
    for (uint64_t draw = 0; draw < budget && pairs.size() < max_pairs;
         ++draw) {
      uint32_t i = static_cast<uint32_t>(rng.below(n));
      uint32_t j = static_cast<uint32_t>(rng.below(n - 1));
      if (j >= i) ++j;  // uniform over ordered distinct pairs
      int64_t la = ds.records[i].output_len;
      int64_t lb = ds.records[j].output_len;
      if (la == lb) continue;  // y has no tie value
      double rel = relative_length_difference(la, lb);
      if (rel < delta) continue;
      pairs.push_back({i, j, la > lb ? +1 : -1, rel});
    }
  }
  if (pairs.empty()) throw Error("no informative pairs");
  return pairs;
}

}  // namespace pars
