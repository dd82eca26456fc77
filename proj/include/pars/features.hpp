#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pars/dataset.hpp"

namespace pars {

enum class FeatureKind { HashedText, PrecomputedEmbedding };
enum class Normalization { None, L2 };

// Descriptor for the pluggable feature source feeding the linear scorer.
// HashedText: sign-hashed word n-grams plus within-token character n-grams.
// PrecomputedEmbedding: the dataset's embedding vectors verbatim.
struct FeatureExtractor {
  FeatureKind kind = FeatureKind::HashedText;
  uint32_t dim = 4096;
  std::vector<int> word_ngrams{1};
  std::vector<int> char_ngrams{3};
  Normalization norm = Normalization::L2;

  bool operator==(const FeatureExtractor&) const = default;
};

// Sparse feature vector; entries sorted by index, indices unique, all < dim.
struct FeatureVec {
  std::vector<std::pair<uint32_t, double>> entries;

  double dot(const std::vector<double>& weights) const {
    double s = 0.0;
    for (const auto& [idx, v] : entries) s += weights[idx] * v;
    return s;
  }
};

// Deterministic per prompt; output length is exactly `extractor.dim` slots.
FeatureVec extract_features(const FeatureExtractor& extractor,
                            const PromptRecord& record);

// OpenMP-parallel over records; slot-per-record writes keep it deterministic.
std::vector<FeatureVec> extract_all(const FeatureExtractor& extractor,
                                    const Dataset& ds);
std::vector<FeatureVec> extract_all_serial(const FeatureExtractor& extractor,
                                           const Dataset& ds);

const char* feature_kind_name(FeatureKind kind);
const char* normalization_name(Normalization norm);

}  // namespace pars
