#include "pars/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include <json.hpp>

#include "pars/error.hpp"
#include "pars/rng.hpp"

namespace pars {

using nlohmann::json;

size_t Dataset::index_of(const std::string& id) const {
  build_index();
  auto it = index_.find(id);
  if (it == index_.end()) fail("unknown prompt id '%s'", id.c_str());
  return it->second;
}

void Dataset::build_index() const {
  if (index_.size() == records.size()) return;
  index_.clear();
  index_.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i) index_.emplace(records[i].id, i);
}

int64_t whitespace_token_count(const std::string& text) {
  int64_t count = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

int64_t median_floor(std::vector<int64_t> samples) {
  if (samples.empty()) throw Error("median of empty sample list");
  std::sort(samples.begin(), samples.end());
  size_t n = samples.size();
  if (n % 2 == 1) return samples[n / 2];
  return (samples[n / 2 - 1] + samples[n / 2]) / 2;
}

namespace {

constexpr const char* kDatasetFormat = "pars.dataset";
constexpr int kDatasetVersion = 1;

[[noreturn]] void line_fail(const std::string& path, size_t line,
                            const std::string& msg) {
  fail("%s: line %zu: %s", path.c_str(), line, msg.c_str());
}

int64_t require_positive_int(const json& v, const char* field,
                             const std::string& path, size_t line) {
  if (!v.is_number_integer() || v.get<int64_t>() < 1)
    line_fail(path, line, strf("field '%s' must be a positive integer", field));
  return v.get<int64_t>();
}

}  // namespace

Dataset load_dataset(const std::string& path, std::optional<size_t> limit) {
  std::ifstream in(path);
  if (!in) fail("cannot open dataset file '%s'", path.c_str());

  Dataset ds;
  std::string line;
  size_t line_no = 0;

  if (!std::getline(in, line)) fail("%s: empty file, missing header", path.c_str());
  ++line_no;
  try {
    json header = json::parse(line);
    if (header.value("format", "") != kDatasetFormat)
      line_fail(path, line_no, "not a pars dataset (bad format field)");
    if (header.value("version", 0) != kDatasetVersion)
      line_fail(path, line_no,
                strf("unsupported version %d", header.value("version", 0)));
    ds.embedding_dim = header.value("embedding_dim", int64_t{0});
    if (ds.embedding_dim < 0)
      line_fail(path, line_no, "embedding_dim must be >= 0");
  } catch (const json::exception& e) {
    line_fail(path, line_no, strf("malformed header: %s", e.what()));
  }

  std::unordered_set<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (limit && ds.records.size() >= *limit) break;

    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      line_fail(path, line_no, strf("malformed record: %s", e.what()));
    }
    if (!j.is_object()) line_fail(path, line_no, "record must be an object");

    PromptRecord rec;
    if (!j.contains("id") || !j["id"].is_string() ||
        j["id"].get<std::string>().empty())
      line_fail(path, line_no, "missing or invalid field 'id'");
    rec.id = j["id"].get<std::string>();
    if (!seen_ids.insert(rec.id).second)
      line_fail(path, line_no, strf("duplicate id '%s'", rec.id.c_str()));

    if (!j.contains("prompt") || !j["prompt"].is_string())
      line_fail(path, line_no, "missing or invalid field 'prompt'");
    rec.prompt_text = j["prompt"].get<std::string>();

    if (j.contains("output_len_samples")) {
      const json& arr = j["output_len_samples"];
      if (!arr.is_array() || arr.empty())
        line_fail(path, line_no, "'output_len_samples' must be a non-empty array");
      for (const json& v : arr)
        rec.output_len_samples.push_back(
            require_positive_int(v, "output_len_samples", path, line_no));
    }

    if (j.contains("output_len")) {
      rec.output_len = require_positive_int(j["output_len"], "output_len",
                                            path, line_no);
      if (!rec.output_len_samples.empty() &&
          rec.output_len != median_floor(rec.output_len_samples))
        line_fail(path, line_no,
                  "output_len does not equal the median of output_len_samples");
    } else if (!rec.output_len_samples.empty()) {
      rec.output_len = median_floor(rec.output_len_samples);
    } else {
      line_fail(path, line_no, "missing field 'output_len'");
    }

    if (j.contains("embedding")) {
      const json& arr = j["embedding"];
      if (!arr.is_array())
        line_fail(path, line_no, "'embedding' must be an array");
      for (const json& v : arr) {
        if (!v.is_number())
          line_fail(path, line_no, "'embedding' entries must be numbers");
        rec.embedding.push_back(v.get<double>());
      }
      if (static_cast<int64_t>(rec.embedding.size()) != ds.embedding_dim)
        line_fail(path, line_no,
                  strf("embedding length %zu does not match declared dimension %lld",
                       rec.embedding.size(),
                       static_cast<long long>(ds.embedding_dim)));
    }

    if (j.contains("prompt_len")) {
      rec.prompt_len = require_positive_int(j["prompt_len"], "prompt_len",
                                            path, line_no);
    } else {
      rec.prompt_len = whitespace_token_count(rec.prompt_text);
      if (rec.prompt_len < 1)
        line_fail(path, line_no, "prompt has no tokens and no prompt_len");
    }

    ds.records.push_back(std::move(rec));
  }
  return ds;
}

void save_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) fail("cannot write dataset file '%s'", path.c_str());
  json header;
  header["format"] = kDatasetFormat;
  header["version"] = kDatasetVersion;
  header["embedding_dim"] = ds.embedding_dim;
  out << header.dump() << '\n';
  for (const PromptRecord& rec : ds.records) {
    json j;
    j["id"] = rec.id;
    j["prompt"] = rec.prompt_text;
    j["output_len"] = rec.output_len;
    j["prompt_len"] = rec.prompt_len;
    if (!rec.output_len_samples.empty())
      j["output_len_samples"] = rec.output_len_samples;
    if (!rec.embedding.empty()) j["embedding"] = rec.embedding;
    out << j.dump() << '\n';
  }
  if (!out) fail("write failed for '%s'", path.c_str());
}

namespace {

// Latent log-length resolution; one token "len<q>" pins the clean length.
constexpr double kLatentStep = 0.05;

}  // namespace

Dataset synthesize_dataset(const SynthConfig& cfg) {
  if (cfg.n < 1) fail("synthesize: n must be >= 1");
  if (cfg.components.empty()) fail("synthesize: no mixture components");
  double total_weight = 0.0;
  for (const auto& c : cfg.components) {
    if (c.sigma <= 0.0) fail("synthesize: sigma must be > 0 (got %g)", c.sigma);
    if (c.weight <= 0.0) fail("synthesize: weight must be > 0 (got %g)", c.weight);
    total_weight += c.weight;
  }
  if (cfg.min_len < 1) fail("synthesize: min_len must be >= 1");
  if (cfg.max_len < cfg.min_len) fail("synthesize: max_len < min_len");
  if (cfg.noise < 0.0 || cfg.noise >= 1.0)
    fail("synthesize: noise must be in [0, 1)");
  if (cfg.embed_dim < 0) fail("synthesize: embed_dim must be >= 0");

  Rng rng(cfg.seed);
  Dataset ds;
  ds.embedding_dim = cfg.embed_dim;
  ds.records.reserve(cfg.n);

  auto clamp_len = [&](double v) {
    int64_t len = static_cast<int64_t>(std::llround(v));
    return std::clamp(len, cfg.min_len, cfg.max_len);
  };

  for (size_t i = 0; i < cfg.n; ++i) {
    // mixture component by weight
    double pick = rng.uniform01() * total_weight;
    const LengthComponent* comp = &cfg.components.back();
    double acc = 0.0;
    for (const auto& c : cfg.components) {
      acc += c.weight;
      if (pick < acc) {
        comp = &c;
        break;
      }
    }

    double z = comp->mu + comp->sigma * rng.normal();
    int64_t q = static_cast<int64_t>(std::llround(z / kLatentStep));
    int64_t clean = clamp_len(std::exp(kLatentStep * static_cast<double>(q)));

    PromptRecord rec;
    rec.id = strf("p%06zu", i);

    auto noisy_len = [&]() {
      if (cfg.noise == 0.0) return clean;
      double u = rng.uniform(1.0 - cfg.noise, 1.0 + cfg.noise);
      return clamp_len(static_cast<double>(clean) * u);
    };
    if (cfg.samples_per_record > 0) {
      for (int s = 0; s < cfg.samples_per_record; ++s)
        rec.output_len_samples.push_back(noisy_len());
      rec.output_len = median_floor(rec.output_len_samples);
    } else {
      rec.output_len = noisy_len();
    }

    // Latent tokens: the exact magnitude token len<q> plus thermometer
    // tokens lvl0..lvl<q'> with q' = clamp(q, 0, log(max_len)/step). The
    // thermometer makes the log-length a linear function of shared token
    // presence, so linear scorers both learn it quickly and interpolate to
    // magnitudes unseen in training.
    int64_t q_cap = static_cast<int64_t>(
        std::llround(std::log(static_cast<double>(cfg.max_len)) / kLatentStep));
    int64_t q_therm = std::clamp<int64_t>(q, 0, q_cap);
    std::vector<std::string> tokens;
    tokens.push_back(strf("len%lld", static_cast<long long>(q)));
    for (int64_t lvl = 0; lvl <= q_therm; ++lvl)
      tokens.push_back(strf("lvl%lld", static_cast<long long>(lvl)));
    size_t n_filler = 4 + rng.below(21);
    for (size_t w = 0; w < n_filler; ++w)
      tokens.push_back(strf("w%llu", static_cast<unsigned long long>(rng.below(50))));
    rng.shuffle(tokens);

    std::string text;
    for (const std::string& tok : tokens) {
      if (!text.empty()) text += ' ';
      text += tok;
    }
    rec.prompt_text = std::move(text);
    rec.prompt_len = static_cast<int64_t>(tokens.size());

    if (cfg.embed_dim > 0) {
      rec.embedding.resize(cfg.embed_dim);
      rec.embedding[0] = kLatentStep * static_cast<double>(q);
      for (int64_t d = 1; d < cfg.embed_dim; ++d)
        rec.embedding[d] = rng.normal();
    }

    ds.records.push_back(std::move(rec));
  }
  return ds;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double val_frac,
                                          uint64_t seed) {
  require(val_frac >= 0.0 && val_frac < 1.0,
          "split_dataset: val_frac must be in [0, 1), got %g", val_frac);
  size_t n = ds.records.size();
  auto n_val = static_cast<size_t>(std::llround(val_frac * static_cast<double>(n)));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(derive_seed(seed, 0x53504c49u));  // stream tag for the split
  rng.shuffle(order);

  Dataset train, val;
  train.embedding_dim = val.embedding_dim = ds.embedding_dim;
  for (size_t i = 0; i < n; ++i) {
    auto& dst = i < n_val ? val : train;
    dst.records.push_back(ds.records[order[i]]);
  }
  return {std::move(train), std::move(val)};
}

}  // namespace pars
