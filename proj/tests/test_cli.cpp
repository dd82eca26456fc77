#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "capture.hpp"
#include "doctest.h"
#include "pars/arrivals.hpp"
#include "pars/cli.hpp"
#include "pars/dataset.hpp"
#include "pars/model_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "pars");
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());

  CaptureStream out(stdout);
  CaptureStream err(stderr);
  CliResult r;
  r.code = pars::run_cli(static_cast<int>(argv.size()), argv.data());
  r.err = err.stop();
  r.out = out.stop();
  return r;
}

// Fresh scratch directory per test case; wiped up front so reruns start clean.
std::string scratch(const std::string& name) {
  std::string dir = "cli_scratch_" + name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE_MESSAGE(in.good(), "missing file: " << path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json slurp_json(const fs::path& path) { return json::parse(slurp(path)); }

size_t line_count(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

// small, fast dataset most cases share
std::string gen_small(const std::string& dir, const char* extra_flag = nullptr,
                      const char* extra_value = nullptr) {
  std::vector<std::string> args = {"gen-workload", "--n",    "80",
                                   "--dist",       "lognormal:3,0.8",
                                   "--max-len",    "256",
                                   "--seed",       "5",
                                   "--out",        dir};
  if (extra_flag) {
    args.push_back(extra_flag);
    args.push_back(extra_value);
  }
  CliResult r = run(args);
  REQUIRE_MESSAGE(r.code == 0, "gen failed: " << r.err);
  return dir + "/dataset.jsonl";
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("gen-workload writes a dataset, echoes config, and is reproducible") {
  std::string dir = scratch("gen");
  CliResult r = run({"gen-workload", "--n", "50", "--seed", "3", "--out",
                     dir + "/a", "--arrivals", "poisson:4"});
  CHECK(r.code == 0);
  CHECK(r.err.empty());
  CHECK(r.out.find("config: {") != std::string::npos);
  CHECK(r.out.find("\"command\":\"gen-workload\"") != std::string::npos);
  CHECK(r.out.find("wrote " + dir + "/a/dataset.jsonl") != std::string::npos);

  pars::Dataset ds = pars::load_dataset(dir + "/a/dataset.jsonl");
  CHECK(ds.records.size() == 50);
  pars::ArrivalTrace trace = pars::load_trace(dir + "/a/trace.csv");
  CHECK(trace.entries.size() == 50);
  CHECK(trace.mode == pars::ArrivalMode::Poisson);

  CliResult again = run({"gen-workload", "--n", "50", "--seed", "3", "--out",
                         dir + "/b", "--arrivals", "poisson:4"});
  CHECK(again.code == 0);
  CHECK(slurp(dir + "/a/dataset.jsonl") == slurp(dir + "/b/dataset.jsonl"));
  CHECK(slurp(dir + "/a/trace.csv") == slurp(dir + "/b/trace.csv"));
}

TEST_CASE("gen-workload rejects a bad distribution spec") {
  std::string dir = scratch("gen_bad");
  CliResult r = run({"gen-workload", "--n", "10", "--dist", "weibull:1",
                     "--out", dir});
  CHECK(r.code == 1);
  CHECK(r.err.find("invalid distribution spec 'weibull:1'") !=
        std::string::npos);
}

TEST_CASE("train writes a model and reports validation agreement") {
  std::string dir = scratch("train");
  std::string data = gen_small(dir);
  CliResult r = run({"train", "--data", data, "--out", dir + "/model.json",
                     "--epochs", "2", "--feature-dim", "512",
                     "--pairs-per-epoch", "2000", "--seed", "1"});
  CHECK(r.code == 0);
  CHECK(r.out.find("\"command\":\"train\"") != std::string::npos);
  CHECK(r.out.find("epoch 1/2 mean loss") != std::string::npos);
  CHECK(r.out.find("epoch 2/2 mean loss") != std::string::npos);
  CHECK(r.out.find("validation tau_b") != std::string::npos);
  CHECK(r.out.find("wrote " + dir + "/model.json") != std::string::npos);

  pars::TrainedModel model = pars::load_model(dir + "/model.json");
  CHECK(model.objective == pars::Objective::Pairwise);
  CHECK(model.scorer.extractor().dim == 512);
  CHECK(model.loss_trace.size() == 2);

  // reruns produce byte-identical model files
  CliResult again = run({"train", "--data", data, "--out", dir + "/model2.json",
                         "--epochs", "2", "--feature-dim", "512",
                         "--pairs-per-epoch", "2000", "--seed", "1"});
  CHECK(again.code == 0);
  std::string a = slurp(dir + "/model.json");
  std::string b = slurp(dir + "/model2.json");
  CHECK(a == b);
}

TEST_CASE("train accepts the alternative objectives by tag") {
  std::string dir = scratch("train_obj");
  std::string data = gen_small(dir);
  CliResult r = run({"train", "--data", data, "--out", dir + "/pw.json",
                     "--objective", "pointwise_l1", "--epochs", "1",
                     "--feature-dim", "256"});
  CHECK(r.code == 0);
  CHECK(pars::load_model(dir + "/pw.json").objective ==
        pars::Objective::PointwiseL1);

  CliResult lw = run({"train", "--data", data, "--out", dir + "/lw.json",
                      "--objective", "listwise_listmle", "--epochs", "1",
                      "--feature-dim", "256", "--lists-per-epoch", "200"});
  CHECK(lw.code == 0);
  CHECK(pars::load_model(dir + "/lw.json").objective ==
        pars::Objective::ListwiseListMLE);

  CliResult bad = run({"train", "--data", data, "--objective", "zenwise"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("unknown objective 'zenwise'") != std::string::npos);
}

TEST_CASE("eval-predictor scores the oracle at exactly 1 and writes a report") {
  std::string dir = scratch("eval");
  std::string data = gen_small(dir);
  CliResult r = run({"eval-predictor", "--model", "oracle", "--data", data,
                     "--out", dir + "/report.json"});
  CHECK(r.code == 0);
  CHECK(r.out.find("tau_b 1.000000") != std::string::npos);
  json report = slurp_json(dir + "/report.json");
  CHECK(report["model"] == "oracle");
  CHECK(report["n"] == 80);
  CHECK(report["tau_b"] == 1.0);
  CHECK(report["pairs"] == 80 * 79 / 2);
}

TEST_CASE("eval-predictor reports a degenerate ranking without failing") {
  std::string dir = scratch("eval_degenerate");
  std::string data = gen_small(dir);
  // zero training epochs leaves all weights zero: every score ties
  CliResult tr = run({"train", "--data", data, "--out", dir + "/zero.json",
                      "--epochs", "0", "--feature-dim", "128"});
  REQUIRE(tr.code == 0);
  CHECK(tr.out.find("validation tau_b undefined") != std::string::npos);

  CliResult ev = run({"eval-predictor", "--model", dir + "/zero.json",
                      "--data", data, "--out", dir + "/report.json"});
  CHECK(ev.code == 0);
  CHECK(ev.out.find("tau_b undefined") != std::string::npos);
  json report = slurp_json(dir + "/report.json");
  CHECK(report["tau_b"].is_null());
  CHECK(report["warning"].get<std::string>().find("degenerate ranking") !=
        std::string::npos);
}

TEST_CASE("simulate writes requests.csv and summary.json deterministically") {
  std::string dir = scratch("simulate");
  std::string data = gen_small(dir);
  CliResult r = run({"simulate", "--data", data, "--policy", "fcfs", "--out",
                     dir + "/sim", "--events"});
  CHECK(r.code == 0);
  CHECK(r.out.find("policy fcfs:") != std::string::npos);
  CHECK(line_count(dir + "/sim/requests.csv") == 81);  // header + 80 rows
  CHECK(fs::exists(dir + "/sim/events.log"));

  json summary = slurp_json(dir + "/sim/summary.json");
  CHECK(summary["policy"] == "fcfs");
  CHECK(summary["n_requests"] == 80);
  CHECK(summary["mean_per_token_ms"].get<double>() > 0.0);
  CHECK(summary["p90_per_token_ms"].get<double>() > 0.0);
  CHECK(summary["iterations"].get<uint64_t>() > 0);
  CHECK(summary["simulated_seconds"].get<double>() > 0.0);
  CHECK(summary["seed"] == 0);
  CHECK_FALSE(summary.contains("tau_b"));

  CliResult again = run({"simulate", "--data", data, "--policy", "fcfs",
                         "--out", dir + "/sim2", "--events"});
  CHECK(again.code == 0);
  CHECK(slurp(dir + "/sim/requests.csv") == slurp(dir + "/sim2/requests.csv"));
  CHECK(slurp(dir + "/sim/summary.json") == slurp(dir + "/sim2/summary.json"));
  CHECK(slurp(dir + "/sim/events.log") == slurp(dir + "/sim2/events.log"));
}

TEST_CASE("simulate wires models to policies and validates the pairing") {
  std::string dir = scratch("simulate_model");
  std::string data = gen_small(dir);
  CliResult tr = run({"train", "--data", data, "--out", dir + "/model.json",
                      "--epochs", "1", "--feature-dim", "256",
                      "--pairs-per-epoch", "1000"});
  REQUIRE(tr.code == 0);

  CliResult ok = run({"simulate", "--data", data, "--policy", "pars",
                      "--model", dir + "/model.json", "--out", dir + "/sim"});
  CHECK(ok.code == 0);
  CHECK(slurp_json(dir + "/sim/summary.json")["policy"] == "pars");

  CliResult missing = run({"simulate", "--data", data, "--policy", "pars",
                           "--out", dir + "/sim_missing"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("policy 'pars' requires a trained model file") !=
        std::string::npos);

  CliResult mismatch = run({"simulate", "--data", data, "--policy",
                            "pointwise", "--model", dir + "/model.json",
                            "--out", dir + "/sim_mismatch"});
  CHECK(mismatch.code == 1);
  CHECK(mismatch.err.find("expects 'pointwise_l1'") != std::string::npos);

  CliResult unknown = run({"simulate", "--data", data, "--policy", "sjf3000",
                           "--out", dir + "/sim_unknown"});
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("unknown policy 'sjf3000'") != std::string::npos);
}

TEST_CASE("simulate accepts a saved trace and refuses --trace with --arrivals") {
  std::string dir = scratch("simulate_trace");
  gen_small(dir, "--arrivals", "poisson:2");
  std::string data = dir + "/dataset.jsonl";
  std::string trace = dir + "/trace.csv";

  CliResult r = run({"simulate", "--data", data, "--trace", trace, "--out",
                     dir + "/sim"});
  CHECK(r.code == 0);
  CHECK(slurp_json(dir + "/sim/summary.json")["n_requests"] == 80);

  CliResult conflict = run({"simulate", "--data", data, "--trace", trace,
                            "--arrivals", "burst", "--out", dir + "/sim2"});
  CHECK(conflict.code != 0);
  CHECK_FALSE(conflict.err.empty());
}

TEST_CASE("simulate caps burst runs at 500 requests by default") {
  std::string dir = scratch("simulate_cap");
  CliResult gen = run({"gen-workload", "--n", "600", "--dist",
                       "lognormal:2.5,0.6", "--max-len", "64", "--seed", "8",
                       "--out", dir});
  REQUIRE(gen.code == 0);
  CliResult r = run({"simulate", "--data", dir + "/dataset.jsonl", "--policy",
                     "fcfs", "--out", dir + "/sim"});
  CHECK(r.code == 0);
  CHECK(slurp_json(dir + "/sim/summary.json")["n_requests"] == 500);

  CliResult all = run({"simulate", "--data", dir + "/dataset.jsonl",
                       "--policy", "fcfs", "--limit", "600", "--out",
                       dir + "/sim_all"});
  CHECK(all.code == 0);
  CHECK(slurp_json(dir + "/sim_all/summary.json")["n_requests"] == 600);
}

TEST_CASE("compare runs policies on identical arrivals and aggregates") {
  std::string dir = scratch("compare");
  std::string data = gen_small(dir);
  CliResult r = run({"compare", "--data", data, "--policies", "fcfs,oracle",
                     "--out", dir + "/cmp", "--seed", "1"});
  CHECK(r.code == 0);
  CHECK(r.out.find("burst:") != std::string::npos);
  CHECK(r.out.find("policy") != std::string::npos);  // table header

  CHECK(fs::exists(dir + "/cmp/fcfs_seed1/requests.csv"));
  CHECK(fs::exists(dir + "/cmp/fcfs_seed1/summary.json"));
  CHECK(fs::exists(dir + "/cmp/oracle_seed1/requests.csv"));
  CHECK(fs::exists(dir + "/cmp/oracle_seed1/summary.json"));

  json cmp = slurp_json(dir + "/cmp/comparison.json");
  CHECK(cmp["config"]["command"] == "compare");
  REQUIRE(cmp["runs"].size() == 2);
  REQUIRE(cmp["aggregates"].size() == 2);

  const json& fcfs = cmp["aggregates"][0];
  const json& oracle = cmp["aggregates"][1];
  REQUIRE(fcfs["policy"] == "fcfs");
  REQUIRE(oracle["policy"] == "oracle");
  CHECK(fcfs["speedup_vs_fcfs"] == 1.0);
  CHECK(oracle["tau_b"] == 1.0);  // noise-free data, ground-truth scores
  CHECK(oracle["mean_per_token_ms"].get<double>() <=
        fcfs["mean_per_token_ms"].get<double>());
  CHECK(oracle["speedup_vs_fcfs"].get<double>() >= 1.0);
}

TEST_CASE("compare validates its policy list") {
  std::string dir = scratch("compare_bad");
  std::string data = gen_small(dir);

  CliResult dup = run({"compare", "--data", data, "--policies", "fcfs,fcfs",
                       "--out", dir + "/cmp"});
  CHECK(dup.code == 1);
  CHECK(dup.err.find("duplicate policy") != std::string::npos);

  CliResult single = run({"compare", "--data", data, "--policies", "fcfs",
                          "--out", dir + "/cmp"});
  CHECK(single.code == 1);
  CHECK(single.err.find("need at least two policies") != std::string::npos);

  CliResult rates = run({"compare", "--data", data, "--policies",
                         "fcfs,oracle", "--rates", "0.5,2", "--out",
                         dir + "/cmp"});
  CHECK(rates.code == 1);
  CHECK(rates.err.find("rate sweeps need poisson arrivals") !=
        std::string::npos);
}

TEST_CASE("compare sweeps arrival rates into per-rate directories") {
  std::string dir = scratch("compare_rates");
  std::string data = gen_small(dir);
  CliResult r = run({"compare", "--data", data, "--policies", "fcfs,oracle",
                     "--arrivals", "poisson:8", "--rates", "0.5,2", "--out",
                     dir + "/cmp", "--seed", "2"});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir + "/cmp/rate0p5/fcfs_seed2/summary.json"));
  CHECK(fs::exists(dir + "/cmp/rate2p0/oracle_seed2/summary.json"));

  json cmp = slurp_json(dir + "/cmp/comparison.json");
  CHECK(cmp["runs"].size() == 4);  // 2 rates x 1 seed x 2 policies
  CHECK(cmp["aggregates"].size() == 4);
  for (const json& row : cmp["runs"]) {
    CHECK(row.contains("rate_multiplier"));
    CHECK(row.contains("rate"));
  }
  json low = slurp_json(dir + "/cmp/rate0p5/fcfs_seed2/summary.json");
  CHECK(low["rate"] == 4.0);  // 8 * 0.5
}

TEST_CASE("compare averages across seeds and rejects seeds with a trace") {
  std::string dir = scratch("compare_seeds");
  gen_small(dir, "--arrivals", "poisson:4");
  std::string data = dir + "/dataset.jsonl";

  CliResult r = run({"compare", "--data", data, "--policies", "fcfs,oracle",
                     "--arrivals", "poisson:8", "--seeds", "3,1,3", "--out",
                     dir + "/cmp"});
  CHECK(r.code == 0);  // seeds deduplicate and sort
  json cmp = slurp_json(dir + "/cmp/comparison.json");
  CHECK(cmp["runs"].size() == 4);  // 2 unique seeds x 2 policies
  CHECK(cmp["config"]["seeds"] == json::array({1, 3}));
  CHECK(fs::exists(dir + "/cmp/fcfs_seed1/summary.json"));
  CHECK(fs::exists(dir + "/cmp/fcfs_seed3/summary.json"));
  for (const json& agg : cmp["aggregates"]) CHECK(agg["seeds"] == 2);

  CliResult bad = run({"compare", "--data", data, "--policies", "fcfs,oracle",
                       "--trace", dir + "/trace.csv", "--seeds", "1,2",
                       "--out", dir + "/cmp2"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("a fixed --trace admits only one seed") !=
        std::string::npos);
}

TEST_CASE("a config file supplies defaults and explicit flags win") {
  std::string dir = scratch("config_file");
  std::string ini = dir + "/defaults.ini";
  {
    std::ofstream out(ini);
    out << "[gen-workload]\n"
        << "n=25\n"
        << "seed=9\n"
        << "max-len=128\n"
        << "out=" << dir << "/from_config\n";
  }
  CliResult r = run({"gen-workload", "--config", ini});
  CHECK(r.code == 0);
  CHECK(pars::load_dataset(dir + "/from_config/dataset.jsonl").records.size() ==
        25);

  CliResult o = run({"gen-workload", "--config", ini, "--n", "30", "--out",
                     dir + "/overridden"});
  CHECK(o.code == 0);
  CHECK(pars::load_dataset(dir + "/overridden/dataset.jsonl").records.size() ==
        30);
}

TEST_CASE("--help succeeds and a missing subcommand fails") {
  CliResult help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("gen-workload") != std::string::npos);
  CHECK(help.out.find("compare") != std::string::npos);

  CliResult none = run({});
  CHECK(none.code != 0);

  CliResult unknown = run({"frobnicate"});
  CHECK(unknown.code != 0);
}

TEST_SUITE_END();
