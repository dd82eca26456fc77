#include "pars/scorer.hpp"

#include <exception>

#include "pars/error.hpp"

namespace pars {

std::vector<double> Scorer::score_batch(const Dataset& ds) const {
  std::vector<double> out(ds.records.size());
  const int64_t n = static_cast<int64_t>(ds.records.size());
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 256)
  for (int64_t i = 0; i < n; ++i) {
    try {
      out[i] = score(ds.records[i]);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

LinearScorer::LinearScorer(FeatureExtractor extractor,
                           std::vector<double> weights, double bias)
    : extractor_(std::move(extractor)),
      weights_(std::move(weights)),
      bias_(bias) {
  if (weights_.size() != extractor_.dim)
    fail("weight vector length %zu != extractor dimension %u", weights_.size(),
         extractor_.dim);
}

double LinearScorer::score(const PromptRecord& record) const {
  return score(extract_features(extractor_, record));
}

double LinearScorer::score(const FeatureVec& features) const {
  return features.dot(weights_) + bias_;
}

TauResult evaluate_ranking(const Scorer& scorer, const Dataset& ds) {
  std::vector<double> scores = scorer.score_batch(ds);
  std::vector<double> truth(ds.records.size());
  for (size_t i = 0; i < ds.records.size(); ++i)
    truth[i] = static_cast<double>(ds.records[i].output_len);
  return kendall_tau_b(scores, truth);
}

OracleScorer::OracleScorer(const Dataset& ds) {
  lengths_.reserve(ds.records.size());
  for (const PromptRecord& rec : ds.records)
    lengths_.emplace(rec.id, rec.output_len);
}

double OracleScorer::score(const PromptRecord& record) const {
  auto it = lengths_.find(record.id);
  if (it == lengths_.end())
    fail("oracle scorer: unknown prompt id '%s'", record.id.c_str());
  return static_cast<double>(it->second);
}

}  // namespace pars
