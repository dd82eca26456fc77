#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pars/dataset.hpp"
#include "pars/features.hpp"
#include "pars/pairs.hpp"
#include "pars/scorer.hpp"

namespace pars {

enum class Objective { Pairwise, PointwiseL1, ListwiseListMLE };

const char* objective_name(Objective obj);
Objective objective_from_name(const std::string& name);

struct TrainConfig {
  Objective objective = Objective::Pairwise;
  double delta = 0.2;   // pairwise filter threshold
  double margin = 1.0;  // margin ranking loss margin
  int epochs = 5;
  int batch_size = 128;
  double learning_rate = 0.1;
  uint64_t seed = 0;
  size_t pairs_per_epoch = 100000;  // pairwise
  size_t lists_per_epoch = 2000;   // listwise
  int list_size = 10;              // listwise
  FeatureExtractor extractor;

  bool operator==(const TrainConfig&) const = default;
};

struct TrainedModel {
  LinearScorer scorer;
  Objective objective = Objective::Pairwise;
  TrainConfig config;
  std::vector<double> loss_trace;  // mean loss per epoch
};

// Per-sample loss at the current weights; d(loss)/dw is added into grad.
// The pair objective's bias gradient cancels (s_a - s_b), as does ListMLE's
// (softmax normalization), so only the pointwise form takes bias_grad.
double pairwise_loss_grad(const LinearScorer& scorer, const FeatureVec& a,
                          const FeatureVec& b, int y, double margin,
                          std::vector<double>& grad);
double pointwise_l1_loss_grad(const LinearScorer& scorer, const FeatureVec& x,
                              double target, std::vector<double>& grad,
                              double& bias_grad);
// list_true_order indexes `features` longest-first.
double listmle_loss_grad(const LinearScorer& scorer,
                         const std::vector<FeatureVec>& features,
                         std::span<const uint32_t> list_true_order,
                         std::vector<double>& grad);

// Minibatch gradient descent from all-zero weights; single-threaded and
// bit-deterministic under (dataset, config).
TrainedModel train(const Dataset& ds, const TrainConfig& cfg);

// log(1 + output_len): the pointwise regression target.
double pointwise_target(int64_t output_len);

}  // namespace pars
