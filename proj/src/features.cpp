#include "pars/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <string_view>

#include "pars/error.hpp"
#include "pars/rng.hpp"

namespace pars {

namespace {

// FNV-1a 64-bit; stable across platforms, unlike std::hash.
uint64_t fnv1a(const char* data, size_t len, uint64_t h) {
  for (size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t salt(uint64_t field, uint64_t order) {
  return splitmix64(0xcbf29ce484222325ull ^ (field << 32) ^ order);
}

void add_hashed(std::vector<std::pair<uint32_t, double>>& out, uint64_t h,
                uint32_t dim) {
  uint32_t idx = static_cast<uint32_t>((h >> 1) % dim);
  double sign = (h & 1) ? 1.0 : -1.0;
  out.emplace_back(idx, sign);
}

std::vector<std::string_view> split_tokens(const std::string& text) {
  std::vector<std::string_view> tokens;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    size_t start = i;
    while (i < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    if (i > start) tokens.push_back({text.data() + start, i - start});
  }
  return tokens;
}

}  // namespace

const char* feature_kind_name(FeatureKind kind) {
  return kind == FeatureKind::HashedText ? "hashed_text"
                                         : "precomputed_embedding";
}

const char* normalization_name(Normalization norm) {
  return norm == Normalization::L2 ? "l2" : "none";
}

FeatureVec extract_features(const FeatureExtractor& extractor,
                            const PromptRecord& record) {
  if (extractor.dim == 0) throw Error("feature extractor dimension is 0");
  FeatureVec out;

  if (extractor.kind == FeatureKind::PrecomputedEmbedding) {
    if (record.embedding.empty())
      fail("prompt '%s' has no embedding but extractor kind is precomputed_embedding",
           record.id.c_str());
    if (record.embedding.size() != extractor.dim)
      fail("prompt '%s': embedding length %zu != extractor dimension %u",
           record.id.c_str(), record.embedding.size(), extractor.dim);
    out.entries.reserve(record.embedding.size());
    for (uint32_t i = 0; i < record.embedding.size(); ++i)
      out.entries.emplace_back(i, record.embedding[i]);
  } else {
    auto tokens = split_tokens(record.prompt_text);
    std::vector<std::pair<uint32_t, double>> raw;
    for (int order : extractor.word_ngrams) {
      if (order < 1) throw Error("word n-gram order must be >= 1");
      const uint64_t s = salt(1, static_cast<uint64_t>(order));
      if (tokens.size() < static_cast<size_t>(order)) continue;
      for (size_t i = 0; i + order <= tokens.size(); ++i) {
        uint64_t h = s;
        for (int k = 0; k < order; ++k) {
          h = fnv1a(tokens[i + k].data(), tokens[i + k].size(), h);
          h = fnv1a("\x1f", 1, h);  // token separator
        }
        add_hashed(raw, h, extractor.dim);
      }
    }
    for (int order : extractor.char_ngrams) {
      if (order < 1) throw Error("char n-gram order must be >= 1");
      const uint64_t s = salt(2, static_cast<uint64_t>(order));
      for (const auto& tok : tokens) {
        if (tok.size() < static_cast<size_t>(order)) continue;
        for (size_t i = 0; i + order <= tok.size(); ++i)
          add_hashed(raw, fnv1a(tok.data() + i, order, s), extractor.dim);
      }
    }
    std::sort(raw.begin(), raw.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [idx, v] : raw) {
      if (!out.entries.empty() && out.entries.back().first == idx)
        out.entries.back().second += v;
      else
        out.entries.emplace_back(idx, v);
    }
    std::erase_if(out.entries, [](const auto& e) { return e.second == 0.0; });
  }

  if (extractor.norm == Normalization::L2) {
    double sq = 0.0;
    for (const auto& [idx, v] : out.entries) sq += v * v;
    if (sq > 0.0) {
      double inv = 1.0 / std::sqrt(sq);
      for (auto& [idx, v] : out.entries) v *= inv;
    }
  }
  return out;
}

std::vector<FeatureVec> extract_all(const FeatureExtractor& extractor,
                                    const Dataset& ds) {
  std::vector<FeatureVec> out(ds.records.size());
  const int64_t n = static_cast<int64_t>(ds.records.size());
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 256)
  for (int64_t i = 0; i < n; ++i) {
    try {
      out[i] = extract_features(extractor, ds.records[i]);
    } catch (...) {
      // exceptions must not unwind out of the parallel region
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

std::vector<FeatureVec> extract_all_serial(const FeatureExtractor& extractor,
                                           const Dataset& ds) {
  std::vector<FeatureVec> out;
  out.reserve(ds.records.size());
  for (const PromptRecord& rec : ds.records)
    out.push_back(extract_features(extractor, rec));
  return out;
}

}  // namespace pars
