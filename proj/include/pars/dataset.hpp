#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pars {

// A prompt with its ground-truth output length; the unit of workloads and
// training data. output_len is the number of decode tokens the simulator
// charges and the label source for ranking.
struct PromptRecord {
  std::string id;
  std::string prompt_text;
  int64_t output_len = 0;
  std::vector<int64_t> output_len_samples;  // empty = absent
  std::vector<double> embedding;            // empty = absent
  int64_t prompt_len = 0;                   // whitespace tokens if not given

  bool operator==(const PromptRecord&) const = default;
};

struct Dataset {
  std::vector<PromptRecord> records;
  int64_t embedding_dim = 0;  // 0 = no embeddings declared

  const PromptRecord& by_index(size_t i) const { return records[i]; }
  size_t size() const { return records.size(); }
  // id -> index; throws on unknown id
  size_t index_of(const std::string& id) const;
  void build_index() const;

 private:
  mutable std::unordered_map<std::string, size_t> index_;
};

// Whitespace token count; the simulator only needs a proportional prefill
// cost, not a real tokenizer.
int64_t whitespace_token_count(const std::string& text);

// Rounded-down median used to collapse repeated-run samples into output_len.
int64_t median_floor(std::vector<int64_t> samples);

// One record per line, versioned header line first. Errors name the 1-based
// line number of the offending record.
Dataset load_dataset(const std::string& path,
                     std::optional<size_t> limit = std::nullopt);
void save_dataset(const std::string& path, const Dataset& ds);

// Lognormal mixture over output lengths; weights need not be normalized.
struct LengthComponent {
  double mu = 5.0;
  double sigma = 1.2;
  double weight = 1.0;
};

struct SynthConfig {
  size_t n = 0;
  std::vector<LengthComponent> components{LengthComponent{}};
  int64_t min_len = 1;
  int64_t max_len = 16384;
  double noise = 0.0;           // multiplicative: len * U(1-noise, 1+noise)
  int samples_per_record = 0;   // >0 emits output_len_samples per record
  int64_t embed_dim = 0;        // >0 attaches synthetic embeddings
  uint64_t seed = 0;
};

// Deterministic under (n, spec, seed). Each prompt embeds latent tokens
// "len<q>" and thermometer tokens "lvl0".."lvl<q'>", where q = round(z / 0.05)
// for the sampled log-length z and q' = clamp(q, 0, log(max_len) / 0.05);
// the clean output length is clamp(round(exp(0.05 * q)),
// min_len, max_len), so with noise = 0 the length is an exact function of
// the prompt text. With embed_dim > 0, embedding[0] carries the clean
// log-length 0.05 * q and the remaining dims are N(0,1) filler.
Dataset synthesize_dataset(const SynthConfig& cfg);

// Seeded shuffle split into (train, validation).
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double val_frac,
                                          uint64_t seed);

}  // namespace pars
