#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace pars {

struct SimResult;

// Kendall tau-b with tie correction:
//   tau_b = (n_c - n_d) / sqrt((n0 - n1) * (n0 - n2))
// where n0 = n(n-1)/2, n1/n2 are pair counts tied in x/y. Pairs tied in both
// contribute to both n1 and n2 and to neither n_c nor n_d.
struct TauResult {
  double tau_b = 0.0;
  uint64_t n_c = 0;
  uint64_t n_d = 0;
  uint64_t n0 = 0;
  uint64_t n1 = 0;
  uint64_t n2 = 0;
};

// Exact O(n^2) pair counting, OpenMP-parallel. Integer reductions only, so
// the result is identical for any thread count.
TauResult kendall_tau_b(std::span<const double> x, std::span<const double> y);

// Serial reference kernel; same contract, kept for tests and the benchmark.
TauResult kendall_tau_b_serial(std::span<const double> x,
                               std::span<const double> y);

struct LatencySummary {
  double mean_per_token_ms = 0.0;
  double p90_per_token_ms = 0.0;
  uint64_t count = 0;
  std::optional<double> speedup_vs_fcfs;  // filled by compare_policies
};

// Nearest-rank percentile: the ceil(pct/100 * N)-th smallest value.
double percentile_nearest_rank(std::vector<double> values, int pct);

LatencySummary latency_summary(std::span<const double> per_token_latency_s);
LatencySummary latency_summary(const SimResult& result);

// (max / min - 1) * 100 over repeated-run output lengths.
double relative_variance_pct(std::span<const int64_t> samples);

}  // namespace pars
