#include "pars/model_io.hpp"

#include <fstream>

#include <json.hpp>

#include "pars/error.hpp"

namespace pars {

using nlohmann::json;

namespace {

constexpr const char* kModelFormat = "pars.model";
constexpr int kModelVersion = 1;

json extractor_to_json(const FeatureExtractor& ex) {
  json j;
  j["kind"] = feature_kind_name(ex.kind);
  j["dim"] = ex.dim;
  j["word_ngrams"] = ex.word_ngrams;
  j["char_ngrams"] = ex.char_ngrams;
  j["normalization"] = normalization_name(ex.norm);
  return j;
}

FeatureExtractor extractor_from_json(const json& j) {
  FeatureExtractor ex;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "hashed_text")
    ex.kind = FeatureKind::HashedText;
  else if (kind == "precomputed_embedding")
    ex.kind = FeatureKind::PrecomputedEmbedding;
  else
    fail("model file: unknown extractor kind '%s'", kind.c_str());
  ex.dim = j.at("dim").get<uint32_t>();
  ex.word_ngrams = j.value("word_ngrams", std::vector<int>{1});
  ex.char_ngrams = j.value("char_ngrams", std::vector<int>{3});
  std::string norm = j.value("normalization", "l2");
  if (norm == "l2")
    ex.norm = Normalization::L2;
  else if (norm == "none")
    ex.norm = Normalization::None;
  else
    fail("model file: unknown normalization '%s'", norm.c_str());
  return ex;
}

}  // namespace

void save_model(const std::string& path, const TrainedModel& model) {
  json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["objective"] = objective_name(model.objective);
  j["extractor"] = extractor_to_json(model.scorer.extractor());
  j["weights"] = model.scorer.weights();
  j["bias"] = model.scorer.bias();
  j["loss_trace"] = model.loss_trace;

  const TrainConfig& c = model.config;
  json cfg;
  cfg["objective"] = objective_name(c.objective);
  cfg["delta"] = c.delta;
  cfg["margin"] = c.margin;
  cfg["epochs"] = c.epochs;
  cfg["batch_size"] = c.batch_size;
  cfg["learning_rate"] = c.learning_rate;
  cfg["seed"] = c.seed;
  cfg["pairs_per_epoch"] = c.pairs_per_epoch;
  cfg["lists_per_epoch"] = c.lists_per_epoch;
  cfg["list_size"] = c.list_size;
  j["config"] = cfg;

  std::ofstream out(path);
  if (!out) fail("cannot write model file '%s'", path.c_str());
  out << j.dump(2) << '\n';
  if (!out) fail("write failed for '%s'", path.c_str());
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open model file '%s'", path.c_str());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail("%s: malformed model file: %s", path.c_str(), e.what());
  }
  try {
    if (j.value("format", "") != kModelFormat)
      fail("%s: not a pars model file", path.c_str());
    if (j.value("version", 0) != kModelVersion)
      fail("%s: unsupported model version", path.c_str());

    TrainedModel model;
    model.objective = objective_from_name(j.at("objective").get<std::string>());
    FeatureExtractor ex = extractor_from_json(j.at("extractor"));
    auto weights = j.at("weights").get<std::vector<double>>();
    double bias = j.at("bias").get<double>();
    model.scorer = LinearScorer(ex, std::move(weights), bias);
    model.loss_trace = j.value("loss_trace", std::vector<double>{});

    if (j.contains("config")) {
      const json& cfg = j["config"];
      TrainConfig& c = model.config;
      c.objective = model.objective;
      c.delta = cfg.value("delta", c.delta);
      c.margin = cfg.value("margin", c.margin);
      c.epochs = cfg.value("epochs", c.epochs);
      c.batch_size = cfg.value("batch_size", c.batch_size);
      c.learning_rate = cfg.value("learning_rate", c.learning_rate);
      c.seed = cfg.value("seed", c.seed);
      c.pairs_per_epoch = cfg.value("pairs_per_epoch", c.pairs_per_epoch);
      c.lists_per_epoch = cfg.value("lists_per_epoch", c.lists_per_epoch);
      c.list_size = cfg.value("list_size", c.list_size);
      c.extractor = ex;
    }
    return model;
  } catch (const json::exception& e) {
    fail("%s: invalid model file: %s", path.c_str(), e.what());
  }
}

}  // namespace pars
