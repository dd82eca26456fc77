// Benchmark of the OpenMP kernels against their serial reference
// implementations: Kendall tau-b pair counting and batch feature extraction.
// Verifies both implementations agree exactly before reporting timings.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pars/dataset.hpp"
#include "pars/features.hpp"
#include "pars/metrics.hpp"
#include "pars/rng.hpp"

namespace {

template <typename F>
double best_seconds(F&& f, int reps) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto start = std::chrono::steady_clock::now();
    f();
    std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start;
    best = std::min(best, elapsed.count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  size_t tau_n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 4000;
  size_t feat_n = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 20000;
  int reps = 3;

#ifdef _OPENMP
  std::printf("openmp: %d threads\n", omp_get_max_threads());
#else
  std::printf("openmp: disabled at build time\n");
#endif

  // tau-b: n(n-1)/2 pair comparisons over noisy scores vs lengths
  pars::SynthConfig synth;
  synth.n = std::max(tau_n, feat_n);
  synth.seed = 13;
  pars::Dataset ds = pars::synthesize_dataset(synth);

  pars::Rng rng(99);
  std::vector<double> x(tau_n), y(tau_n);
  for (size_t i = 0; i < tau_n; ++i) {
    y[i] = static_cast<double>(ds.records[i].output_len);
    x[i] = y[i] * rng.uniform(0.5, 1.5);
  }

  pars::TauResult serial_tau;
  pars::TauResult parallel_tau;
  double t_serial = best_seconds(
      [&] { serial_tau = pars::kendall_tau_b_serial(x, y); }, reps);
  double t_parallel =
      best_seconds([&] { parallel_tau = pars::kendall_tau_b(x, y); }, reps);
  if (serial_tau.n_c != parallel_tau.n_c ||
      serial_tau.n_d != parallel_tau.n_d ||
      serial_tau.n1 != parallel_tau.n1 ||
      serial_tau.n2 != parallel_tau.n2 ||
      serial_tau.tau_b != parallel_tau.tau_b) {
    std::fprintf(stderr, "FAIL: tau-b kernels disagree\n");
    return 1;
  }
  std::printf("kendall_tau_b     n=%zu  serial %8.3f ms  parallel %8.3f ms  "
              "speedup %.2fx\n",
              tau_n, t_serial * 1e3, t_parallel * 1e3, t_serial / t_parallel);

  // feature extraction over feat_n prompts
  pars::Dataset feat_ds;
  feat_ds.records.assign(ds.records.begin(), ds.records.begin() + feat_n);
  pars::FeatureExtractor extractor;

  std::vector<pars::FeatureVec> serial_feats, parallel_feats;
  double f_serial = best_seconds(
      [&] { serial_feats = pars::extract_all_serial(extractor, feat_ds); },
      reps);
  double f_parallel = best_seconds(
      [&] { parallel_feats = pars::extract_all(extractor, feat_ds); }, reps);
  for (size_t i = 0; i < feat_n; ++i) {
    if (serial_feats[i].entries != parallel_feats[i].entries) {
      std::fprintf(stderr, "FAIL: feature kernels disagree at record %zu\n", i);
      return 1;
    }
  }
  std::printf("extract_features  n=%zu  serial %8.3f ms  parallel %8.3f ms  "
              "speedup %.2fx\n",
              feat_n, f_serial * 1e3, f_parallel * 1e3, f_serial / f_parallel);

  std::printf("kernels agree exactly\n");
  return 0;
}
