#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "pars/dataset.hpp"
#include "pars/features.hpp"
#include "pars/metrics.hpp"

namespace pars {

// Prompt -> scalar score; higher score means longer expected output.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(const PromptRecord& record) const = 0;

  std::vector<double> score_batch(const Dataset& ds) const;
};

// weights . features(prompt) + bias
class LinearScorer : public Scorer {
 public:
  LinearScorer() : weights_(extractor_.dim, 0.0) {}
  explicit LinearScorer(FeatureExtractor extractor)
      : extractor_(std::move(extractor)), weights_(extractor_.dim, 0.0) {}
  LinearScorer(FeatureExtractor extractor, std::vector<double> weights,
               double bias);

  double score(const PromptRecord& record) const override;
  double score(const FeatureVec& features) const;

  const FeatureExtractor& extractor() const { return extractor_; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& weights() { return weights_; }
  double bias() const { return bias_; }
  double& bias() { return bias_; }

 private:
  FeatureExtractor extractor_;
  std::vector<double> weights_;
  double bias_ = 0.0;
};

// Rank agreement between predicted scores and true output lengths over a
// dataset. Throws if either side is degenerate (all tied).
TauResult evaluate_ranking(const Scorer& scorer, const Dataset& ds);

// Ground-truth lengths as scores; perfect foresight for Oracle SJF.
class OracleScorer : public Scorer {
 public:
  explicit OracleScorer(const Dataset& ds);
  double score(const PromptRecord& record) const override;

 private:
  std::unordered_map<std::string, int64_t> lengths_;
};

}  // namespace pars
