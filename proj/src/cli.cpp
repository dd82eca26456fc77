#include "pars/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pars/arrivals.hpp"
#include "pars/dataset.hpp"
#include "pars/error.hpp"
#include "pars/features.hpp"
#include "pars/metrics.hpp"
#include "pars/model_io.hpp"
#include "pars/scheduler.hpp"
#include "pars/scorer.hpp"
#include "pars/simulator.hpp"
#include "pars/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pars {
namespace {

// ---------------------------------------------------------------------------
// flag parsing helpers

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& flag, const std::string& s) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail("%s: '%s' is not a number", flag.c_str(), s.c_str());
  }
}

uint64_t parse_u64(const std::string& flag, const std::string& s) {
  try {
    size_t used = 0;
    unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail("%s: '%s' is not a non-negative integer", flag.c_str(), s.c_str());
  }
}

std::vector<double> parse_csv_doubles(const std::string& flag,
                                      const std::string& s) {
  std::vector<double> out;
  for (const std::string& part : split(s, ','))
    out.push_back(parse_double(flag, part));
  return out;
}

std::vector<uint64_t> parse_csv_u64(const std::string& flag,
                                    const std::string& s) {
  std::vector<uint64_t> out;
  for (const std::string& part : split(s, ','))
    out.push_back(parse_u64(flag, part));
  return out;
}

// "lognormal:MU,SIGMA" or "mixture:MU,SIGMA,WEIGHT;MU,SIGMA,WEIGHT;..."
std::vector<LengthComponent> parse_dist_spec(const std::string& flag,
                                             const std::string& spec) {
  auto bad = [&](const char* why) -> void {
    fail("%s: invalid distribution spec '%s' (%s); expected "
         "lognormal:MU,SIGMA or mixture:MU,SIGMA,WEIGHT;...",
         flag.c_str(), spec.c_str(), why);
  };
  size_t colon = spec.find(':');
  if (colon == std::string::npos) bad("missing ':'");
  std::string kind = spec.substr(0, colon);
  std::string rest = spec.substr(colon + 1);
  std::vector<LengthComponent> comps;
  if (kind == "lognormal") {
    auto params = split(rest, ',');
    if (params.size() != 2) bad("lognormal takes MU,SIGMA");
    comps.push_back({parse_double(flag, params[0]),
                     parse_double(flag, params[1]), 1.0});
  } else if (kind == "mixture") {
    for (const std::string& part : split(rest, ';')) {
      auto params = split(part, ',');
      if (params.size() != 3) bad("each mixture component takes MU,SIGMA,WEIGHT");
      comps.push_back({parse_double(flag, params[0]),
                       parse_double(flag, params[1]),
                       parse_double(flag, params[2])});
    }
  } else {
    bad("unknown family");
  }
  for (const LengthComponent& c : comps) {
    if (c.sigma <= 0.0) bad("sigma must be > 0");
    if (c.weight <= 0.0) bad("weight must be > 0");
  }
  return comps;
}

json dist_to_json(const std::vector<LengthComponent>& comps) {
  json arr = json::array();
  for (const LengthComponent& c : comps)
    arr.push_back({{"mu", c.mu}, {"sigma", c.sigma}, {"weight", c.weight}});
  return arr;
}

// "burst" or "poisson:RATE"
struct ArrivalSpec {
  ArrivalMode mode = ArrivalMode::Burst;
  double rate = 0.0;
};

ArrivalSpec parse_arrival_spec(const std::string& flag,
                               const std::string& spec) {
  if (spec == "burst") return {ArrivalMode::Burst, 0.0};
  if (spec.rfind("poisson:", 0) == 0) {
    double rate = parse_double(flag, spec.substr(8));
    if (rate <= 0.0)
      fail("%s: poisson rate must be > 0, got %g", flag.c_str(), rate);
    return {ArrivalMode::Poisson, rate};
  }
  fail("%s: invalid arrival spec '%s'; expected burst or poisson:RATE",
       flag.c_str(), spec.c_str());
}

std::string arrival_spec_string(const ArrivalSpec& spec) {
  if (spec.mode == ArrivalMode::Burst) return "burst";
  return strf("poisson:%s", json(spec.rate).dump().c_str());
}

// ---------------------------------------------------------------------------
// shared option bundles

struct FeatureFlags {
  std::string kind = "hashed";
  uint32_t dim = 4096;
  std::string word_ngrams = "1";
  std::string char_ngrams = "3";
  std::string norm = "l2";

  void attach(CLI::App* cmd) {
    cmd->add_option("--features", kind,
                    "Feature source: hashed (text n-grams) or embedding "
                    "(dataset-provided vectors)")
        ->capture_default_str();
    cmd->add_option("--feature-dim", dim, "Hashed feature dimension")
        ->capture_default_str();
    cmd->add_option("--word-ngrams", word_ngrams,
                    "Word n-gram orders, comma separated")
        ->capture_default_str();
    cmd->add_option("--char-ngrams", char_ngrams,
                    "Within-token character n-gram orders, comma separated")
        ->capture_default_str();
    cmd->add_option("--feature-norm", norm, "Feature normalization: l2 or none")
        ->capture_default_str();
  }

  FeatureExtractor build() const {
    FeatureExtractor ex;
    if (kind == "hashed")
      ex.kind = FeatureKind::HashedText;
    else if (kind == "embedding")
      ex.kind = FeatureKind::PrecomputedEmbedding;
    else
      fail("--features: unknown feature source '%s' (hashed or embedding)",
           kind.c_str());
    ex.dim = dim;
    ex.word_ngrams.clear();
    for (uint64_t n : parse_csv_u64("--word-ngrams", word_ngrams))
      ex.word_ngrams.push_back(static_cast<int>(n));
    ex.char_ngrams.clear();
    if (!char_ngrams.empty() && char_ngrams != "none")
      for (uint64_t n : parse_csv_u64("--char-ngrams", char_ngrams))
        ex.char_ngrams.push_back(static_cast<int>(n));
    if (norm == "l2")
      ex.norm = Normalization::L2;
    else if (norm == "none")
      ex.norm = Normalization::None;
    else
      fail("--feature-norm: unknown normalization '%s' (l2 or none)",
           norm.c_str());
    return ex;
  }
};

json extractor_to_json(const FeatureExtractor& ex) {
  return {{"kind", feature_kind_name(ex.kind)},
          {"dim", ex.dim},
          {"word_ngrams", ex.word_ngrams},
          {"char_ngrams", ex.char_ngrams},
          {"norm", normalization_name(ex.norm)}};
}

struct CostFlags {
  CostModel cost;

  void attach(CLI::App* cmd) {
    cmd->add_option("--t-base", cost.t_base,
                    "Per-iteration fixed cost, seconds")
        ->capture_default_str();
    cmd->add_option("--t-decode", cost.t_decode,
                    "Per-running-request per-iteration cost, seconds")
        ->capture_default_str();
    cmd->add_option("--t-prefill-token", cost.t_prefill_token,
                    "One-time per-prompt-token admission cost, seconds")
        ->capture_default_str();
  }

  json to_json() const {
    return {{"t_base", cost.t_base},
            {"t_decode", cost.t_decode},
            {"t_prefill_token", cost.t_prefill_token}};
  }
};

struct SimFlags {
  CostFlags cost;
  std::string batching = "continuous";
  double static_max_wait_s = 1.0;
  double starvation_threshold_s = 120.0;
  int batch_limit = 32;

  void attach(CLI::App* cmd) {
    cost.attach(cmd);
    cmd->add_option("--batching", batching,
                    "Batching mode: continuous or static")
        ->capture_default_str();
    cmd->add_option("--max-wait", static_max_wait_s,
                    "Static batching: max seconds the oldest request waits "
                    "before a partial batch launches")
        ->capture_default_str();
    cmd->add_option("--starvation-threshold", starvation_threshold_s,
                    "Boost waiting requests older than this many seconds")
        ->capture_default_str();
    cmd->add_option("--batch-limit", batch_limit,
                    "Maximum concurrent running requests")
        ->capture_default_str();
  }

  SimConfig build() const {
    SimConfig cfg;
    cfg.cost = cost.cost;
    if (batching == "continuous")
      cfg.batching = BatchingMode::Continuous;
    else if (batching == "static")
      cfg.batching = BatchingMode::Static;
    else
      fail("--batching: unknown mode '%s' (continuous or static)",
           batching.c_str());
    cfg.static_max_wait_s = static_max_wait_s;
    cfg.policy.starvation_threshold_s = starvation_threshold_s;
    cfg.policy.batch_limit = batch_limit;
    return cfg;
  }

  json to_json() const {
    json j = cost.to_json();
    j["batching"] = batching;
    j["static_max_wait_s"] = static_max_wait_s;
    j["starvation_threshold_s"] = starvation_threshold_s;
    j["batch_limit"] = batch_limit;
    return j;
  }
};

// ---------------------------------------------------------------------------
// shared behavior

// Mutates cfg so callers that persist it (compare's comparison.json) store
// exactly what was echoed.
void echo_config(const std::string& command, json& cfg) {
  cfg["command"] = command;
  std::printf("config: %s\n", cfg.dump().c_str());
}

void write_text_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) fail("cannot open '%s' for writing", path.string().c_str());
  out << body;
  if (!out) fail("write to '%s' failed", path.string().c_str());
}

Dataset load_data(const std::string& path, uint64_t limit) {
  return load_dataset(path, limit > 0 ? std::optional<size_t>(limit)
                                      : std::nullopt);
}

std::shared_ptr<const Scorer> scorer_for(const std::string& source,
                                         const Dataset& ds,
                                         Objective* objective_out = nullptr) {
  if (source == "oracle") {
    if (objective_out) *objective_out = Objective::Pairwise;
    return std::make_shared<OracleScorer>(ds);
  }
  TrainedModel model = load_model(source);
  if (objective_out) *objective_out = model.objective;
  return std::make_shared<LinearScorer>(std::move(model.scorer));
}

// policy tag -> objective the backing model must have been trained with
Objective expected_objective(const std::string& policy) {
  if (policy == "pars") return Objective::Pairwise;
  if (policy == "pointwise") return Objective::PointwiseL1;
  if (policy == "listwise") return Objective::ListwiseListMLE;
  fail("unknown policy '%s' (fcfs, pointwise, listwise, oracle, pars)",
       policy.c_str());
}

Policy build_policy(const std::string& name, const Dataset& ds,
                    const std::string& model_path) {
  if (name == "fcfs") return make_fcfs_policy();
  if (name == "oracle")
    return make_sjf_policy("oracle", std::make_shared<OracleScorer>(ds));
  Objective want = expected_objective(name);
  if (model_path.empty())
    fail("policy '%s' requires a trained model file", name.c_str());
  TrainedModel model = load_model(model_path);
  if (model.objective != want)
    fail("model '%s' has objective '%s' but policy '%s' expects '%s'",
         model_path.c_str(), objective_name(model.objective), name.c_str(),
         objective_name(want));
  return make_sjf_policy(name, std::make_shared<LinearScorer>(
                                   std::move(model.scorer)));
}

json summary_to_json(const PolicyRunResult& run) {
  json j;
  j["policy"] = run.policy;
  j["n_requests"] = run.latency.count;
  j["mean_per_token_ms"] = run.latency.mean_per_token_ms;
  j["p90_per_token_ms"] = run.latency.p90_per_token_ms;
  if (run.latency.speedup_vs_fcfs)
    j["speedup_vs_fcfs"] = *run.latency.speedup_vs_fcfs;
  if (run.tau_b) j["tau_b"] = *run.tau_b;
  j["iterations"] = run.result.iterations;
  j["simulated_seconds"] = run.result.simulated_seconds;
  return j;
}

std::string format_cell(const json& j, const char* key) {
  if (!j.contains(key)) return "-";
  return strf("%.3f", j[key].get<double>());
}

void print_summary_table(const std::vector<json>& rows) {
  std::printf("  %-10s %9s %14s %14s %10s %8s\n", "policy", "n", "mean_ms",
              "p90_ms", "speedup", "tau_b");
  for (const json& row : rows) {
    std::printf("  %-10s %9llu %14.3f %14.3f %10s %8s\n",
                row["policy"].get<std::string>().c_str(),
                static_cast<unsigned long long>(row["n_requests"].get<uint64_t>()),
                row["mean_per_token_ms"].get<double>(),
                row["p90_per_token_ms"].get<double>(),
                format_cell(row, "speedup_vs_fcfs").c_str(),
                format_cell(row, "tau_b").c_str());
  }
}

// ---------------------------------------------------------------------------
// gen-workload

struct GenWorkloadOpts {
  uint64_t n = 0;
  std::string dist = "lognormal:5,1.2";
  int64_t min_len = 1;
  int64_t max_len = 16384;
  double noise = 0.0;
  int samples_per_record = 0;
  int64_t embed_dim = 0;
  std::string arrivals;  // empty = no trace
  uint64_t seed = 0;
  std::string out = "workload";
};

void cmd_gen_workload(const GenWorkloadOpts& opt) {
  SynthConfig cfg;
  cfg.n = opt.n;
  cfg.components = parse_dist_spec("--dist", opt.dist);
  cfg.min_len = opt.min_len;
  cfg.max_len = opt.max_len;
  cfg.noise = opt.noise;
  cfg.samples_per_record = opt.samples_per_record;
  cfg.embed_dim = opt.embed_dim;
  cfg.seed = opt.seed;

  json echo{{"n", opt.n},
            {"dist", dist_to_json(cfg.components)},
            {"min_len", opt.min_len},
            {"max_len", opt.max_len},
            {"noise", opt.noise},
            {"samples_per_record", opt.samples_per_record},
            {"embed_dim", opt.embed_dim},
            {"arrivals", opt.arrivals.empty() ? json() : json(opt.arrivals)},
            {"seed", opt.seed},
            {"out", opt.out}};
  echo_config("gen-workload", echo);

  Dataset ds = synthesize_dataset(cfg);
  fs::create_directories(opt.out);
  fs::path dataset_path = fs::path(opt.out) / "dataset.jsonl";
  save_dataset(dataset_path.string(), ds);

  std::vector<int64_t> lens;
  lens.reserve(ds.records.size());
  for (const PromptRecord& r : ds.records) lens.push_back(r.output_len);
  std::sort(lens.begin(), lens.end());
  std::printf("wrote %s: %zu records, output_len min %lld median %lld max %lld\n",
              dataset_path.string().c_str(), ds.records.size(),
              static_cast<long long>(lens.front()),
              static_cast<long long>(lens[lens.size() / 2]),
              static_cast<long long>(lens.back()));

  if (!opt.arrivals.empty()) {
    ArrivalSpec spec = parse_arrival_spec("--arrivals", opt.arrivals);
    ArrivalTrace trace = spec.mode == ArrivalMode::Burst
                             ? generate_burst_arrivals(ds, opt.seed)
                             : generate_poisson_arrivals(ds, spec.rate, opt.seed);
    fs::path trace_path = fs::path(opt.out) / "trace.csv";
    save_trace(trace_path.string(), trace);
    std::printf("wrote %s: %zu arrivals (%s)\n", trace_path.string().c_str(),
                trace.entries.size(), arrival_mode_name(trace.mode));
  }
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string data;
  uint64_t limit = 0;
  std::string out = "model.json";
  std::string objective = "pairwise";
  double delta = 0.2;
  double margin = 1.0;
  int epochs = 5;
  int batch_size = 128;
  double learning_rate = 0.1;
  uint64_t pairs_per_epoch = 100000;
  uint64_t lists_per_epoch = 2000;
  int list_size = 10;
  double val_frac = 0.2;
  uint64_t seed = 0;
  FeatureFlags features;
};

void cmd_train(const TrainOpts& opt) {
  TrainConfig cfg;
  cfg.objective = objective_from_name(opt.objective);
  cfg.delta = opt.delta;
  cfg.margin = opt.margin;
  cfg.epochs = opt.epochs;
  cfg.batch_size = opt.batch_size;
  cfg.learning_rate = opt.learning_rate;
  cfg.seed = opt.seed;
  cfg.pairs_per_epoch = opt.pairs_per_epoch;
  cfg.lists_per_epoch = opt.lists_per_epoch;
  cfg.list_size = opt.list_size;
  cfg.extractor = opt.features.build();

  json echo{{"data", opt.data},
            {"limit", opt.limit},
            {"out", opt.out},
            {"objective", objective_name(cfg.objective)},
            {"delta", cfg.delta},
            {"margin", cfg.margin},
            {"epochs", cfg.epochs},
            {"batch_size", cfg.batch_size},
            {"learning_rate", cfg.learning_rate},
            {"pairs_per_epoch", cfg.pairs_per_epoch},
            {"lists_per_epoch", cfg.lists_per_epoch},
            {"list_size", cfg.list_size},
            {"val_frac", opt.val_frac},
            {"seed", opt.seed},
            {"features", extractor_to_json(cfg.extractor)}};
  echo_config("train", echo);

  Dataset full = load_data(opt.data, opt.limit);
  auto [train_ds, val_ds] = split_dataset(full, opt.val_frac, opt.seed);
  require(!train_ds.records.empty(),
          "training split is empty (n=%zu, val_frac=%g)", full.records.size(),
          opt.val_frac);

  TrainedModel model = train(train_ds, cfg);
  for (size_t e = 0; e < model.loss_trace.size(); ++e)
    std::printf("epoch %zu/%d mean loss %.6f\n", e + 1, cfg.epochs,
                model.loss_trace[e]);

  if (!val_ds.records.empty()) {
    try {
      TauResult tau = evaluate_ranking(model.scorer, val_ds);
      std::printf("validation tau_b %.4f over %zu prompts\n", tau.tau_b,
                  val_ds.records.size());
    } catch (const Error& e) {
      if (std::string_view(e.what()).find("degenerate ranking") ==
          std::string_view::npos)
        throw;
      std::printf("validation tau_b undefined: %s\n", e.what());
    }
  }

  if (fs::path(opt.out).has_parent_path())
    fs::create_directories(fs::path(opt.out).parent_path());
  save_model(opt.out, model);
  std::printf("wrote %s\n", opt.out.c_str());
}

// ---------------------------------------------------------------------------
// eval-predictor

struct EvalOpts {
  std::string model;  // file path or "oracle"
  std::string data;
  uint64_t limit = 0;
  std::string out;  // optional report file
  uint64_t seed = 0;
};

void cmd_eval_predictor(const EvalOpts& opt) {
  json echo{{"model", opt.model},
            {"data", opt.data},
            {"limit", opt.limit},
            {"out", opt.out.empty() ? json() : json(opt.out)},
            {"seed", opt.seed}};
  echo_config("eval-predictor", echo);

  Dataset ds = load_data(opt.data, opt.limit);
  Objective objective = Objective::Pairwise;
  std::shared_ptr<const Scorer> scorer = scorer_for(opt.model, ds, &objective);

  json report{{"model", opt.model}, {"n", ds.records.size()}};
  if (opt.model != "oracle") report["objective"] = objective_name(objective);
  try {
    TauResult tau = evaluate_ranking(*scorer, ds);
    report["tau_b"] = tau.tau_b;
    report["concordant"] = tau.n_c;
    report["discordant"] = tau.n_d;
    report["pairs"] = tau.n0;
    report["ties_score"] = tau.n1;
    report["ties_length"] = tau.n2;
    std::printf("tau_b %.6f (n %zu, concordant %llu, discordant %llu)\n",
                tau.tau_b, ds.records.size(),
                static_cast<unsigned long long>(tau.n_c),
                static_cast<unsigned long long>(tau.n_d));
  } catch (const Error& e) {
    if (std::string_view(e.what()).find("degenerate ranking") ==
        std::string_view::npos)
      throw;
    report["tau_b"] = nullptr;
    report["warning"] = e.what();
    std::printf("warning: %s; tau_b undefined\n", e.what());
  }

  if (!opt.out.empty()) {
    if (fs::path(opt.out).has_parent_path())
      fs::create_directories(fs::path(opt.out).parent_path());
    write_text_file(opt.out, report.dump(2) + "\n");
    std::printf("wrote %s\n", opt.out.c_str());
  }
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
  std::string data;
  uint64_t limit = 0;
  std::string policy = "fcfs";
  std::string model;
  std::string trace;
  std::string arrivals = "burst";
  bool events = false;
  uint64_t seed = 0;
  std::string out = "simout";
  SimFlags sim;
};

// Burst runs default to the desk-scale 500-prompt workload unless --limit
// says otherwise.
constexpr uint64_t kDefaultBurstLimit = 500;

ArrivalTrace make_trace(const std::string& trace_path,
                        const std::string& arrival_spec, const Dataset& ds,
                        uint64_t seed) {
  if (!trace_path.empty()) return load_trace(trace_path);
  ArrivalSpec spec = parse_arrival_spec("--arrivals", arrival_spec);
  return spec.mode == ArrivalMode::Burst
             ? generate_burst_arrivals(ds, seed)
             : generate_poisson_arrivals(ds, spec.rate, seed);
}

void cmd_simulate(const SimulateOpts& opt) {
  uint64_t limit = opt.limit;
  if (limit == 0 && opt.trace.empty() && opt.arrivals == "burst")
    limit = kDefaultBurstLimit;

  json echo{{"data", opt.data},
            {"limit", limit},
            {"policy", opt.policy},
            {"model", opt.model.empty() ? json() : json(opt.model)},
            {"trace", opt.trace.empty() ? json() : json(opt.trace)},
            {"arrivals", opt.trace.empty() ? json(opt.arrivals) : json()},
            {"events", opt.events},
            {"seed", opt.seed},
            {"out", opt.out}};
  json sim_echo = opt.sim.to_json();
  for (auto& [k, v] : sim_echo.items()) echo[k] = v;
  echo_config("simulate", echo);

  Dataset ds = load_data(opt.data, limit);
  ArrivalTrace trace = make_trace(opt.trace, opt.arrivals, ds, opt.seed);

  SimConfig cfg = opt.sim.build();
  cfg.policy.policy = build_policy(opt.policy, ds, opt.model);
  cfg.seed = opt.seed;
  cfg.record_events = opt.events;

  SimResult result = run_simulation(trace, ds, cfg);
  LatencySummary latency = latency_summary(result);

  fs::create_directories(opt.out);
  fs::path requests_path = fs::path(opt.out) / "requests.csv";
  save_requests_csv(requests_path.string(), result);

  PolicyRunResult run{opt.policy, latency, std::nullopt, SimResult{}};
  json summary = summary_to_json(run);
  summary["iterations"] = result.iterations;
  summary["simulated_seconds"] = result.simulated_seconds;
  summary["seed"] = opt.seed;
  write_text_file(fs::path(opt.out) / "summary.json", summary.dump(2) + "\n");

  if (opt.events)
    save_events((fs::path(opt.out) / "events.log").string(), result);

  std::printf("policy %s: %llu requests, mean %.3f ms/token, p90 %.3f "
              "ms/token, %llu iterations, %.3f simulated seconds\n",
              opt.policy.c_str(),
              static_cast<unsigned long long>(latency.count),
              latency.mean_per_token_ms, latency.p90_per_token_ms,
              static_cast<unsigned long long>(result.iterations),
              result.simulated_seconds);
  std::printf("wrote %s\n", requests_path.string().c_str());
}

// ---------------------------------------------------------------------------
// compare

struct CompareOpts {
  std::string data;
  uint64_t limit = 0;
  std::string policies = "fcfs,pointwise,listwise,oracle,pars";
  std::string model_pars;
  std::string model_pointwise;
  std::string model_listwise;
  std::string trace;
  std::string arrivals = "burst";
  std::string rates;  // multipliers, poisson only
  std::string seeds;  // defaults to {seed}
  uint64_t seed = 0;
  std::string out = "compare_out";
  SimFlags sim;
};

std::string rate_dir_name(double multiplier) {
  std::string tag = json(multiplier).dump();
  for (char& c : tag)
    if (c == '.') c = 'p';
  return "rate" + tag;
}

void cmd_compare(const CompareOpts& opt) {
  uint64_t limit = opt.limit;
  if (limit == 0 && opt.trace.empty() && opt.arrivals == "burst")
    limit = kDefaultBurstLimit;

  std::vector<std::string> policy_names = split(opt.policies, ',');
  require(policy_names.size() >= 2,
          "--policies: need at least two policies to compare, got '%s'",
          opt.policies.c_str());
  require(std::set<std::string>(policy_names.begin(), policy_names.end())
                  .size() == policy_names.size(),
          "--policies: duplicate policy in '%s'", opt.policies.c_str());

  std::vector<double> rate_multipliers;
  if (!opt.rates.empty()) {
    rate_multipliers = parse_csv_doubles("--rates", opt.rates);
    for (double m : rate_multipliers)
      require(m > 0.0, "--rates: multipliers must be > 0, got %g", m);
    std::sort(rate_multipliers.begin(), rate_multipliers.end());
  }
  std::vector<uint64_t> seeds = opt.seeds.empty()
                                    ? std::vector<uint64_t>{opt.seed}
                                    : parse_csv_u64("--seeds", opt.seeds);
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

  ArrivalSpec arrival_spec{ArrivalMode::Burst, 0.0};
  if (opt.trace.empty())
    arrival_spec = parse_arrival_spec("--arrivals", opt.arrivals);

  if (!rate_multipliers.empty()) {
    require(opt.trace.empty(),
            "--rates: rate sweeps regenerate arrivals; incompatible with "
            "--trace");
    require(arrival_spec.mode == ArrivalMode::Poisson,
            "--rates: rate sweeps need poisson arrivals (--arrivals "
            "poisson:RATE)");
  }
  require(opt.trace.empty() || seeds.size() == 1,
          "--seeds: a fixed --trace admits only one seed");

  json echo{{"data", opt.data},
            {"limit", limit},
            {"policies", policy_names},
            {"trace", opt.trace.empty() ? json() : json(opt.trace)},
            {"arrivals", opt.trace.empty() ? json(opt.arrivals) : json()},
            {"rates", rate_multipliers},
            {"seeds", seeds},
            {"out", opt.out}};
  json sim_echo = opt.sim.to_json();
  for (auto& [k, v] : sim_echo.items()) echo[k] = v;
  echo_config("compare", echo);

  Dataset ds = load_data(opt.data, limit);

  std::vector<Policy> policies;
  for (const std::string& name : policy_names) {
    const std::string& model_path = name == "pars"        ? opt.model_pars
                                    : name == "pointwise" ? opt.model_pointwise
                                    : name == "listwise"  ? opt.model_listwise
                                                          : std::string();
    policies.push_back(build_policy(name, ds, model_path));
  }

  SimConfig base = opt.sim.build();
  fs::create_directories(opt.out);

  struct SweepPoint {
    double multiplier = 1.0;  // 1.0 when not sweeping
    double rate = 0.0;        // 0 = burst
    bool swept = false;
  };
  std::vector<SweepPoint> points;
  if (rate_multipliers.empty()) {
    points.push_back({1.0, arrival_spec.rate, false});
  } else {
    for (double m : rate_multipliers)
      points.push_back({m, arrival_spec.rate * m, true});
  }

  std::vector<json> rows;  // one per (point, seed, policy), in that order
  for (const SweepPoint& point : points) {
    for (uint64_t seed : seeds) {
      ArrivalTrace trace;
      if (!opt.trace.empty()) {
        trace = load_trace(opt.trace);
      } else if (arrival_spec.mode == ArrivalMode::Burst) {
        trace = generate_burst_arrivals(ds, seed);
      } else {
        trace = generate_poisson_arrivals(ds, point.rate, seed);
      }

      SimConfig cfg = base;
      cfg.seed = seed;
      ComparisonReport report = compare_policies(trace, ds, cfg, policies);

      fs::path point_dir = opt.out;
      if (point.swept) point_dir /= rate_dir_name(point.multiplier);
      for (const PolicyRunResult& run : report.runs) {
        fs::path run_dir =
            point_dir / strf("%s_seed%llu", run.policy.c_str(),
                             static_cast<unsigned long long>(seed));
        fs::create_directories(run_dir);
        save_requests_csv((run_dir / "requests.csv").string(), run.result);

        json row = summary_to_json(run);
        row["seed"] = seed;
        if (point.swept) {
          row["rate_multiplier"] = point.multiplier;
          row["rate"] = point.rate;
        }
        write_text_file(run_dir / "summary.json", row.dump(2) + "\n");
        rows.push_back(std::move(row));
      }
    }
  }

  // aggregate across seeds per (point, policy), preserving policy order
  json aggregates = json::array();
  for (const SweepPoint& point : points) {
    for (const std::string& name : policy_names) {
      double mean_sum = 0.0, p90_sum = 0.0, speedup_sum = 0.0, tau_sum = 0.0;
      uint64_t speedup_n = 0, tau_n = 0, n = 0;
      for (const json& row : rows) {
        if (row["policy"] != name) continue;
        if (point.swept && row["rate_multiplier"] != point.multiplier) continue;
        ++n;
        mean_sum += row["mean_per_token_ms"].get<double>();
        p90_sum += row["p90_per_token_ms"].get<double>();
        if (row.contains("speedup_vs_fcfs")) {
          speedup_sum += row["speedup_vs_fcfs"].get<double>();
          ++speedup_n;
        }
        if (row.contains("tau_b")) {
          tau_sum += row["tau_b"].get<double>();
          ++tau_n;
        }
      }
      if (n == 0) continue;
      json agg{{"policy", name},
               {"seeds", n},
               {"mean_per_token_ms", mean_sum / static_cast<double>(n)},
               {"p90_per_token_ms", p90_sum / static_cast<double>(n)}};
      if (point.swept) {
        agg["rate_multiplier"] = point.multiplier;
        agg["rate"] = point.rate;
      }
      if (speedup_n > 0)
        agg["speedup_vs_fcfs"] = speedup_sum / static_cast<double>(speedup_n);
      if (tau_n > 0) agg["tau_b"] = tau_sum / static_cast<double>(tau_n);
      aggregates.push_back(std::move(agg));
    }
  }

  json comparison{{"config", echo}, {"runs", rows}, {"aggregates", aggregates}};
  write_text_file(fs::path(opt.out) / "comparison.json",
                  comparison.dump(2) + "\n");

  for (const SweepPoint& point : points) {
    if (point.swept)
      std::printf("rate x%s (%s requests/s):\n",
                  json(point.multiplier).dump().c_str(),
                  json(point.rate).dump().c_str());
    else
      std::printf("%s:\n", opt.trace.empty()
                               ? arrival_spec_string(arrival_spec).c_str()
                               : opt.trace.c_str());
    std::vector<json> table;
    for (const json& agg : aggregates) {
      if (point.swept && agg["rate_multiplier"] != point.multiplier) continue;
      if (!point.swept && agg.contains("rate_multiplier")) continue;
      json row = agg;
      row["n_requests"] = ds.records.size();
      table.push_back(std::move(row));
    }
    print_summary_table(table);
  }
  std::printf("wrote %s\n",
              (fs::path(opt.out) / "comparison.json").string().c_str());
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{
      "Length-prediction-driven shortest-job-first scheduling toolkit: "
      "workload synthesis, ranking predictors, and a deterministic batching "
      "simulator."};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "Read defaults from an INI/TOML file ([subcommand] "
                 "sections); command-line flags win");
  app.get_formatter()->column_width(34);

  GenWorkloadOpts gen;
  CLI::App* gen_cmd = app.add_subcommand(
      "gen-workload", "Synthesize a prompt dataset (and optional trace)");
  gen_cmd->add_option("--n", gen.n, "Number of records")->required();
  gen_cmd->add_option("--dist", gen.dist,
                      "Length distribution: lognormal:MU,SIGMA or "
                      "mixture:MU,SIGMA,WEIGHT;...")
      ->capture_default_str();
  gen_cmd->add_option("--min-len", gen.min_len, "Length lower clamp")
      ->capture_default_str();
  gen_cmd->add_option("--max-len", gen.max_len, "Length upper clamp")
      ->capture_default_str();
  gen_cmd->add_option("--noise", gen.noise,
                      "Multiplicative length noise half-width in [0,1)")
      ->capture_default_str();
  gen_cmd->add_option("--samples-per-record", gen.samples_per_record,
                      "Emit this many repeated-run length samples per record")
      ->capture_default_str();
  gen_cmd->add_option("--embed-dim", gen.embed_dim,
                      "Attach synthetic embeddings of this dimension")
      ->capture_default_str();
  gen_cmd->add_option("--arrivals", gen.arrivals,
                      "Also write a trace: burst or poisson:RATE");
  gen_cmd->add_option("--seed", gen.seed, "Master seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")
      ->capture_default_str();
  gen_cmd->callback([&gen] { cmd_gen_workload(gen); });

  TrainOpts tr;
  CLI::App* train_cmd =
      app.add_subcommand("train", "Train a length-ranking predictor");
  train_cmd->add_option("--data", tr.data, "Dataset file")->required();
  train_cmd->add_option("--limit", tr.limit, "Use only the first N records");
  train_cmd->add_option("--out", tr.out, "Model file to write")
      ->capture_default_str();
  train_cmd->add_option("--objective", tr.objective,
                        "pairwise, pointwise_l1, or listwise_listmle")
      ->capture_default_str();
  train_cmd->add_option("--delta", tr.delta,
                        "Pairwise filter: keep pairs with relative length "
                        "difference >= delta")
      ->capture_default_str();
  train_cmd->add_option("--margin", tr.margin, "Margin ranking loss margin")
      ->capture_default_str();
  train_cmd->add_option("--epochs", tr.epochs, "Training epochs")
      ->capture_default_str();
  train_cmd->add_option("--batch-size", tr.batch_size, "Minibatch size")
      ->capture_default_str();
  train_cmd->add_option("--lr", tr.learning_rate, "Learning rate")
      ->capture_default_str();
  train_cmd->add_option("--pairs-per-epoch", tr.pairs_per_epoch,
                        "Pairwise: pairs sampled per epoch")
      ->capture_default_str();
  train_cmd->add_option("--lists-per-epoch", tr.lists_per_epoch,
                        "Listwise: lists sampled per epoch")
      ->capture_default_str();
  train_cmd->add_option("--list-size", tr.list_size,
                        "Listwise: prompts per list")
      ->capture_default_str();
  train_cmd->add_option("--val-frac", tr.val_frac,
                        "Held-out validation fraction")
      ->capture_default_str();
  train_cmd->add_option("--seed", tr.seed, "Master seed")
      ->capture_default_str();
  tr.features.attach(train_cmd);
  train_cmd->callback([&tr] { cmd_train(tr); });

  EvalOpts ev;
  CLI::App* eval_cmd = app.add_subcommand(
      "eval-predictor", "Rank-agreement report for a model on a dataset");
  eval_cmd->add_option("--model", ev.model,
                       "Model file, or 'oracle' for ground-truth scores")
      ->required();
  eval_cmd->add_option("--data", ev.data, "Dataset file")->required();
  eval_cmd->add_option("--limit", ev.limit, "Use only the first N records");
  eval_cmd->add_option("--out", ev.out, "Report file to write (optional)");
  eval_cmd->add_option("--seed", ev.seed, "Master seed (unused; accepted for "
                       "uniformity)");
  eval_cmd->callback([&ev] { cmd_eval_predictor(ev); });

  SimulateOpts si;
  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "Run one policy through the simulator");
  sim_cmd->add_option("--data", si.data, "Dataset file")->required();
  sim_cmd->add_option("--limit", si.limit,
                      "Use only the first N records (burst default: 500)");
  sim_cmd->add_option("--policy", si.policy,
                      "fcfs, pointwise, listwise, oracle, or pars")
      ->capture_default_str();
  sim_cmd->add_option("--model", si.model,
                      "Model file backing pointwise/listwise/pars");
  auto* sim_trace =
      sim_cmd->add_option("--trace", si.trace, "Arrival trace file");
  sim_cmd->add_option("--arrivals", si.arrivals,
                      "Generated arrivals: burst or poisson:RATE")
      ->excludes(sim_trace)
      ->capture_default_str();
  sim_cmd->add_flag("--events", si.events, "Also write an event log");
  sim_cmd->add_option("--seed", si.seed, "Master seed")->capture_default_str();
  sim_cmd->add_option("--out", si.out, "Output directory")
      ->capture_default_str();
  si.sim.attach(sim_cmd);
  sim_cmd->callback([&si] { cmd_simulate(si); });

  CompareOpts co;
  CLI::App* cmp_cmd = app.add_subcommand(
      "compare", "Run several policies on identical arrivals and compare");
  cmp_cmd->add_option("--data", co.data, "Dataset file")->required();
  cmp_cmd->add_option("--limit", co.limit,
                      "Use only the first N records (burst default: 500)");
  cmp_cmd->add_option("--policies", co.policies, "Comma-separated policy list")
      ->capture_default_str();
  cmp_cmd->add_option("--model-pars", co.model_pars,
                      "Model file for the pars policy");
  cmp_cmd->add_option("--model-pointwise", co.model_pointwise,
                      "Model file for the pointwise policy");
  cmp_cmd->add_option("--model-listwise", co.model_listwise,
                      "Model file for the listwise policy");
  auto* cmp_trace =
      cmp_cmd->add_option("--trace", co.trace, "Arrival trace file");
  cmp_cmd->add_option("--arrivals", co.arrivals,
                      "Generated arrivals: burst or poisson:RATE")
      ->excludes(cmp_trace)
      ->capture_default_str();
  cmp_cmd->add_option("--rates", co.rates,
                      "Arrival-rate sweep multipliers, e.g. 0.5,1,2,4");
  cmp_cmd->add_option("--seeds", co.seeds,
                      "Comma-separated seeds (default: --seed)");
  cmp_cmd->add_option("--seed", co.seed, "Master seed")->capture_default_str();
  cmp_cmd->add_option("--out", co.out, "Output directory")
      ->capture_default_str();
  co.sim.attach(cmp_cmd);
  cmp_cmd->callback([&co] { cmd_compare(co); });

  // let --config (a top-level option) appear after the subcommand name
  for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace pars
