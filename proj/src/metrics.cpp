#include "pars/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "pars/error.hpp"
#include "pars/simulator.hpp"

namespace pars {

namespace {

TauResult finish_tau(uint64_t n, uint64_t nc, uint64_t nd, uint64_t n1,
                     uint64_t n2) {
  TauResult r;
  r.n_c = nc;
  r.n_d = nd;
  r.n0 = n * (n - 1) / 2;
  r.n1 = n1;
  r.n2 = n2;
  if (r.n1 == r.n0)
    throw Error("degenerate ranking: all values tied in first argument");
  if (r.n2 == r.n0)
    throw Error("degenerate ranking: all values tied in second argument");
  // sqrt of the product, not a product of sqrts: when n1 == n2 the radicand
  // is a perfect square and perfect (anti)agreement yields exactly +-1
  double denom = std::sqrt(static_cast<double>(r.n0 - r.n1) *
                           static_cast<double>(r.n0 - r.n2));
  double tau = (static_cast<double>(nc) - static_cast<double>(nd)) / denom;
  r.tau_b = std::clamp(tau, -1.0, 1.0);
  return r;
}

void check_tau_inputs(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    fail("kendall_tau_b: size mismatch (%zu vs %zu)", x.size(), y.size());
  if (x.size() < 2) fail("kendall_tau_b: need at least 2 items, got %zu", x.size());
}

}  // namespace

TauResult kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  check_tau_inputs(x, y);
  const int64_t n = static_cast<int64_t>(x.size());
  uint64_t nc = 0, nd = 0, n1 = 0, n2 = 0;
#pragma omp parallel for schedule(dynamic, 64) reduction(+ : nc, nd, n1, n2)
  for (int64_t i = 0; i < n - 1; ++i) {
    for (int64_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      const bool tx = dx == 0.0;
      const bool ty = dy == 0.0;
      n1 += tx;
      n2 += ty;
      if (!tx && !ty) {
        if ((dx < 0.0) == (dy < 0.0))
          ++nc;
        else
          ++nd;
      }
    }
  }
  return finish_tau(static_cast<uint64_t>(n), nc, nd, n1, n2);
}

TauResult kendall_tau_b_serial(std::span<const double> x,
                               std::span<const double> y) {
  check_tau_inputs(x, y);
  const size_t n = x.size();
  uint64_t nc = 0, nd = 0, n1 = 0, n2 = 0;
  for (size_t i = 0; i + 1 < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0.0) ++n1;
      if (dy == 0.0) ++n2;
      if (dx != 0.0 && dy != 0.0) {
        if ((dx > 0.0) == (dy > 0.0))
          ++nc;
        else
          ++nd;
      }
    }
  }
  return finish_tau(n, nc, nd, n1, n2);
}

double percentile_nearest_rank(std::vector<double> values, int pct) {
  if (values.empty()) throw Error("percentile: empty input");
  if (pct < 1 || pct > 100) fail("percentile: pct %d outside [1,100]", pct);
  std::sort(values.begin(), values.end());
  // integer ceil(pct/100 * N), immune to FP rounding
  size_t rank = (static_cast<size_t>(pct) * values.size() + 99) / 100;
  return values[rank - 1];
}

LatencySummary latency_summary(std::span<const double> per_token_latency_s) {
  if (per_token_latency_s.empty())
    throw Error("latency_summary: no completed requests");
  LatencySummary s;
  s.count = per_token_latency_s.size();
  double sum = 0.0;
  std::vector<double> ms;
  ms.reserve(per_token_latency_s.size());
  for (double v : per_token_latency_s) {
    sum += v * 1000.0;
    ms.push_back(v * 1000.0);
  }
  s.mean_per_token_ms = sum / static_cast<double>(s.count);
  s.p90_per_token_ms = percentile_nearest_rank(std::move(ms), 90);
  return s;
}

LatencySummary latency_summary(const SimResult& result) {
  std::vector<double> lat;
  lat.reserve(result.requests.size());
  for (const auto& r : result.requests) lat.push_back(r.per_token_latency_s);
  return latency_summary(lat);
}

double relative_variance_pct(std::span<const int64_t> samples) {
  if (samples.size() < 2)
    fail("relative_variance: need >= 2 samples, got %zu", samples.size());
  int64_t lo = samples[0], hi = samples[0];
  for (int64_t s : samples) {
    if (s < 1) fail("relative_variance: sample %lld < 1", static_cast<long long>(s));
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return (static_cast<double>(hi) / static_cast<double>(lo) - 1.0) * 100.0;
}

}  // namespace pars
