#include "pars/train.hpp"

#include <algorithm>
#include <cmath>

#include "pars/error.hpp"
#include "pars/rng.hpp"

namespace pars {

const char* objective_name(Objective obj) {
  switch (obj) {
    case Objective::Pairwise:
      return "pairwise";
    case Objective::PointwiseL1:
      return "pointwise_l1";
    case Objective::ListwiseListMLE:
      return "listwise_listmle";
  }
  return "?";
}

Objective objective_from_name(const std::string& name) {
  if (name == "pairwise") return Objective::Pairwise;
  if (name == "pointwise_l1") return Objective::PointwiseL1;
  if (name == "listwise_listmle") return Objective::ListwiseListMLE;
  fail("unknown objective '%s'", name.c_str());
}

double pointwise_target(int64_t output_len) {
  return std::log1p(static_cast<double>(output_len));
}

double pairwise_loss_grad(const LinearScorer& scorer, const FeatureVec& a,
                          const FeatureVec& b, int y, double margin,
                          std::vector<double>& grad) {
  double loss = margin_ranking_loss(scorer.score(a), scorer.score(b), y, margin);
  if (loss > 0.0) {
    // d/dw max(0, -y(s_a - s_b) + m) = -y (x_a - x_b) on the active branch
    for (const auto& [idx, v] : a.entries) grad[idx] -= y * v;
    for (const auto& [idx, v] : b.entries) grad[idx] += y * v;
  }
  return loss;
}

double pointwise_l1_loss_grad(const LinearScorer& scorer, const FeatureVec& x,
                              double target, std::vector<double>& grad,
                              double& bias_grad) {
  double diff = scorer.score(x) - target;
  double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
  for (const auto& [idx, v] : x.entries) grad[idx] += sign * v;
  bias_grad += sign;
  return std::fabs(diff);
}

namespace {

double log_add_exp(double a, double b) {
  double hi = std::max(a, b);
  double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

double listmle_loss_grad(const LinearScorer& scorer,
                         const std::vector<FeatureVec>& features,
                         std::span<const uint32_t> list_true_order,
                         std::vector<double>& grad) {
  const size_t k = list_true_order.size();
  if (k < 2) throw Error("listmle: list needs >= 2 items");

  std::vector<double> s(k);
  for (size_t i = 0; i < k; ++i)
    s[i] = scorer.score(features[list_true_order[i]]);

  // suffix log-sum-exp: lse[i] = log sum_{j >= i} exp(s_j)
  std::vector<double> lse(k);
  lse[k - 1] = s[k - 1];
  for (size_t i = k - 1; i-- > 0;) lse[i] = log_add_exp(s[i], lse[i + 1]);

  double loss = 0.0;
  std::vector<double> coef(k, 0.0);  // d(loss)/d(s_j)
  for (size_t i = 0; i < k; ++i) {
    loss += lse[i] - s[i];
    coef[i] -= 1.0;
    for (size_t j = i; j < k; ++j) coef[j] += std::exp(s[j] - lse[i]);
  }
  for (size_t j = 0; j < k; ++j) {
    for (const auto& [idx, v] : features[list_true_order[j]].entries)
      grad[idx] += coef[j] * v;
  }
  return loss;
}

namespace {

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 0) fail("train: epochs must be >= 0");
  if (cfg.batch_size < 1) fail("train: batch_size must be >= 1");
  if (cfg.learning_rate <= 0.0) fail("train: learning_rate must be > 0");
  if (cfg.margin < 0.0) fail("train: margin must be >= 0");
  if (cfg.delta < 0.0 || cfg.delta >= 1.0)
    fail("train: delta %g outside [0, 1)", cfg.delta);
  if (cfg.pairs_per_epoch < 1) fail("train: pairs_per_epoch must be >= 1");
  if (cfg.lists_per_epoch < 1) fail("train: lists_per_epoch must be >= 1");
  if (cfg.list_size < 2) fail("train: list_size must be >= 2");
}

// Orders a sampled list longest-first; ties broken by id for determinism.
void sort_by_true_order(const Dataset& ds, std::vector<uint32_t>& list) {
  std::sort(list.begin(), list.end(), [&](uint32_t a, uint32_t b) {
    const auto& ra = ds.records[a];
    const auto& rb = ds.records[b];
    if (ra.output_len != rb.output_len) return ra.output_len > rb.output_len;
    return ra.id < rb.id;
  });
}

}  // namespace

TrainedModel train(const Dataset& ds, const TrainConfig& cfg) {
  validate(cfg);
  if (ds.records.empty()) throw Error("train: empty dataset");

  const std::vector<FeatureVec> feats = extract_all(cfg.extractor, ds);
  TrainedModel model;
  model.objective = cfg.objective;
  model.config = cfg;
  model.scorer = LinearScorer(cfg.extractor);  // all-zero init

  const uint32_t dim = cfg.extractor.dim;
  std::vector<double> grad(dim, 0.0);
  const size_t n = ds.records.size();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const uint64_t epoch_seed = derive_seed(cfg.seed, 0x10000u + epoch);
    double epoch_loss = 0.0;
    size_t epoch_samples = 0;

    auto apply = [&](size_t batch_n, double bias_grad) {
      const double scale = cfg.learning_rate / static_cast<double>(batch_n);
      auto& w = model.scorer.weights();
      for (uint32_t d = 0; d < dim; ++d) {
        if (grad[d] != 0.0) {
          w[d] -= scale * grad[d];
          grad[d] = 0.0;
        }
      }
      model.scorer.bias() -= scale * bias_grad;
    };

    switch (cfg.objective) {
      case Objective::Pairwise: {
        auto pairs = build_pairs(ds, cfg.delta, cfg.pairs_per_epoch, epoch_seed);
        for (size_t start = 0; start < pairs.size();
             start += cfg.batch_size) {
          size_t end = std::min(pairs.size(), start + cfg.batch_size);
          for (size_t p = start; p < end; ++p)
            epoch_loss += pairwise_loss_grad(model.scorer, feats[pairs[p].a],
                                             feats[pairs[p].b], pairs[p].y,
                                             cfg.margin, grad);
          apply(end - start, 0.0);
          epoch_samples += end - start;
        }
        break;
      }
      case Objective::PointwiseL1: {
        std::vector<uint32_t> order(n);
        for (size_t i = 0; i < n; ++i) order[i] = static_cast<uint32_t>(i);
        Rng rng(epoch_seed);
        rng.shuffle(order);
        for (size_t start = 0; start < n; start += cfg.batch_size) {
          size_t end = std::min(n, start + cfg.batch_size);
          double bias_grad = 0.0;
          for (size_t p = start; p < end; ++p)
            epoch_loss += pointwise_l1_loss_grad(
                model.scorer, feats[order[p]],
                pointwise_target(ds.records[order[p]].output_len), grad,
                bias_grad);
          apply(end - start, bias_grad);
          epoch_samples += end - start;
        }
        break;
      }
      case Objective::ListwiseListMLE: {
        if (n < 2) throw Error("train: listwise needs >= 2 records");
        const size_t list_size = std::min<size_t>(cfg.list_size, n);
        Rng rng(epoch_seed);
        std::vector<uint32_t> pool(n);
        for (size_t i = 0; i < n; ++i) pool[i] = static_cast<uint32_t>(i);
        std::vector<uint32_t> list(list_size);
        size_t in_batch = 0;
        for (size_t l = 0; l < cfg.lists_per_epoch; ++l) {
          // partial Fisher-Yates: prefix is a uniform sample w/o replacement
          for (size_t k = 0; k < list_size; ++k)
            std::swap(pool[k], pool[k + rng.below(n - k)]);
          std::copy_n(pool.begin(), list_size, list.begin());
          sort_by_true_order(ds, list);
          epoch_loss += listmle_loss_grad(model.scorer, feats, list, grad);
          ++epoch_samples;
          if (++in_batch == static_cast<size_t>(cfg.batch_size) ||
              l + 1 == cfg.lists_per_epoch) {
            apply(in_batch, 0.0);
            in_batch = 0;
          }
        }
        break;
      }
    }

    double mean_loss = epoch_loss / static_cast<double>(epoch_samples);
    if (!std::isfinite(mean_loss))
      fail("training diverged at epoch %d", epoch);
    model.loss_trace.push_back(mean_loss);
  }
  return model;
}

}  // namespace pars
