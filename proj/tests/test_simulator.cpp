#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "pars/arrivals.hpp"
#include "pars/error.hpp"
#include "pars/simulator.hpp"

using namespace pars;

namespace {

// Dyadic cost constants make every simulated timestamp exactly representable,
// so closed-form checks can use == instead of tolerances.
CostModel dyadic_costs() { return CostModel{0.25, 0.5, 0.125}; }

struct Spec {
  std::string id;
  int64_t output_len;
  int64_t prompt_len;
};

Dataset dataset_from_specs(const std::vector<Spec>& specs) {
  Dataset ds;
  for (const Spec& s : specs) {
    PromptRecord r;
    r.id = s.id;
    r.prompt_text = "text " + s.id;
    r.output_len = s.output_len;
    r.output_len_samples = {s.output_len};
    r.prompt_len = s.prompt_len;
    ds.records.push_back(std::move(r));
  }
  ds.build_index();
  return ds;
}

ArrivalTrace trace_of(std::vector<std::pair<std::string, double>> arrivals) {
  ArrivalTrace t;
  for (auto& [id, at] : arrivals) t.entries.push_back({std::move(id), at});
  return t;
}

SimConfig base_config() {
  SimConfig cfg;
  cfg.cost = dyadic_costs();
  cfg.policy.policy = make_fcfs_policy();
  cfg.policy.batch_limit = 32;
  cfg.policy.starvation_threshold_s = 1e9;  // effectively off unless tested
  return cfg;
}

const RequestRecord& record_for(const SimResult& res, const std::string& id) {
  for (const RequestRecord& r : res.requests)
    if (r.prompt_id == id) return r;
  REQUIRE_MESSAGE(false, "no record for id " << id);
  static RequestRecord dummy;
  return dummy;
}

std::string temp_path(const char* name) {
  return std::string("sim_test_") + name;
}

}  // namespace

TEST_SUITE_BEGIN("simulator");

TEST_CASE("single request finishes at the closed-form time") {
  Dataset ds = dataset_from_specs({{"r", 8, 4}});
  ArrivalTrace trace = trace_of({{"r", 2.0}});
  SimConfig cfg = base_config();
  SimResult res = run_simulation(trace, ds, cfg);

  // 8 iterations at t_base + t_decode, plus prefill once: 8*0.75 + 4*0.125
  REQUIRE(res.requests.size() == 1);
  const RequestRecord& r = res.requests[0];
  CHECK(r.arrival_s == 2.0);
  CHECK(r.admit_s == 2.0);
  CHECK(r.finish_s == 8.5);
  CHECK(r.output_len == 8);
  CHECK(r.prompt_len == 4);
  CHECK(r.per_token_latency_s == 0.8125);  // 6.5 / 8
  CHECK(res.iterations == 8);
  CHECK(res.simulated_seconds == 8.5);
}

TEST_CASE("serial FCFS matches a prefix-sum oracle") {
  // burst at t = 0 with batch_limit 1: requests run back to back in id order,
  // so finish_k = sum of service times of the first k requests, where
  // service_i = len_i * (t_base + t_decode) + prompt_len_i * t_prefill.
  std::vector<Spec> specs;
  for (int i = 0; i < 9; ++i) {
    char id[8];
    std::snprintf(id, sizeof id, "r%02d", i);
    specs.push_back({id, 2 + (i * 5) % 7, i});
  }
  Dataset ds = dataset_from_specs(specs);
  std::vector<std::pair<std::string, double>> arrivals;
  for (const Spec& s : specs) arrivals.emplace_back(s.id, 0.0);
  ArrivalTrace trace = trace_of(arrivals);

  SimConfig cfg = base_config();
  cfg.policy.batch_limit = 1;
  SimResult res = run_simulation(trace, ds, cfg);
  REQUIRE(res.requests.size() == specs.size());

  double clock = 0.0;
  int64_t total_tokens = 0;
  for (size_t i = 0; i < specs.size(); ++i) {
    const Spec& s = specs[i];
    const RequestRecord& r = res.requests[i];  // completion order == id order
    CHECK(r.prompt_id == s.id);
    CHECK(r.admit_s == clock);
    clock += static_cast<double>(s.output_len) * 0.75 +
             static_cast<double>(s.prompt_len) * 0.125;
    CHECK(r.finish_s == clock);
    total_tokens += s.output_len;
  }
  CHECK(res.iterations == static_cast<uint64_t>(total_tokens));
  CHECK(res.simulated_seconds == clock);
}

TEST_CASE("event log upholds conservation, causality, and the batch limit") {
  SynthConfig scfg;
  scfg.n = 60;
  scfg.seed = 17;
  scfg.components = {{2.0, 0.5, 1.0}};
  scfg.max_len = 64;
  Dataset ds = synthesize_dataset(scfg);
  ArrivalTrace trace = generate_poisson_arrivals(ds, 100.0, 3);

  SimConfig cfg = base_config();
  cfg.cost = CostModel{};  // realistic milliseconds; values don't matter here
  cfg.policy.batch_limit = 4;
  cfg.record_events = true;
  SimResult res = run_simulation(trace, ds, cfg);

  REQUIRE(res.requests.size() == ds.records.size());
  std::set<std::string> seen;
  for (const RequestRecord& r : res.requests) {
    CHECK(seen.insert(r.prompt_id).second);  // each id completes exactly once
    CHECK(r.arrival_s <= r.admit_s);
    CHECK(r.admit_s < r.finish_s);
    CHECK(r.per_token_latency_s ==
          (r.finish_s - r.arrival_s) / static_cast<double>(r.output_len));
  }
  CHECK(seen.size() == ds.records.size());

  int in_flight = 0;
  int peak = 0;
  std::map<std::string, int> phase;  // 1 arrived, 2 admitted, 3 finished
  double last_time = 0.0;
  uint64_t last_iter = 0;
  for (const Event& e : res.events) {
    CHECK(e.iteration >= last_iter);
    last_iter = e.iteration;
    CHECK(e.time_s >= last_time - 1e-12);
    last_time = std::max(last_time, e.time_s);
    switch (e.kind) {
      case EventKind::Arrive:
        CHECK(phase[e.prompt_id] == 0);
        phase[e.prompt_id] = 1;
        break;
      case EventKind::Boost:
        CHECK(phase[e.prompt_id] == 1);
        break;
      case EventKind::Admit:
        CHECK(phase[e.prompt_id] == 1);
        phase[e.prompt_id] = 2;
        peak = std::max(peak, ++in_flight);
        break;
      case EventKind::Finish:
        CHECK(phase[e.prompt_id] == 2);
        phase[e.prompt_id] = 3;
        --in_flight;
        break;
    }
  }
  CHECK(in_flight == 0);
  CHECK(peak <= cfg.policy.batch_limit);
  CHECK(peak == cfg.policy.batch_limit);  // this load saturates the batch
  for (const auto& [id, ph] : phase) CHECK(ph == 3);
}

TEST_CASE("idle gaps jump straight to the next arrival") {
  Dataset ds = dataset_from_specs({{"a", 2, 0}, {"b", 2, 0}});
  ArrivalTrace trace = trace_of({{"a", 0.0}, {"b", 100.0}});
  SimConfig cfg = base_config();
  SimResult res = run_simulation(trace, ds, cfg);
  CHECK(res.iterations == 4);  // no iterations burned while idle
  CHECK(record_for(res, "a").finish_s == 1.5);
  CHECK(record_for(res, "b").admit_s == 100.0);
  CHECK(res.simulated_seconds == 101.5);
}

TEST_CASE("sjf with an oracle scorer reproduces oracle sjf event for event") {
  SynthConfig scfg;
  scfg.n = 40;
  scfg.seed = 23;
  scfg.components = {{2.5, 0.8, 1.0}};
  scfg.max_len = 128;
  Dataset ds = synthesize_dataset(scfg);
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    ArrivalTrace trace = generate_poisson_arrivals(ds, 40.0, seed);
    SimConfig cfg = base_config();
    cfg.cost = CostModel{};
    cfg.policy.batch_limit = 4;
    cfg.record_events = true;

    cfg.policy.policy =
        make_sjf_policy("oracle", std::make_shared<OracleScorer>(ds));
    SimResult oracle_run = run_simulation(trace, ds, cfg);

    cfg.policy.policy =
        make_sjf_policy("pars", std::make_shared<OracleScorer>(ds));
    SimResult pars_run = run_simulation(trace, ds, cfg);

    CHECK(oracle_run.events == pars_run.events);
    CHECK(oracle_run.iterations == pars_run.iterations);
    CHECK(oracle_run.simulated_seconds == pars_run.simulated_seconds);
  }
}

TEST_CASE("starvation boost promotes a long-waiting request") {
  // one long job against a wall of shorts; oracle SJF with batch_limit 1
  // would otherwise leave the long job last
  std::vector<Spec> specs = {{"long", 100, 0}};
  std::vector<std::pair<std::string, double>> arrivals = {{"long", 0.0}};
  for (int i = 0; i < 30; ++i) {
    char id[8];
    std::snprintf(id, sizeof id, "s%02d", i);
    specs.push_back({id, 1, 0});
    arrivals.emplace_back(id, 0.0);
  }
  Dataset ds = dataset_from_specs(specs);
  ArrivalTrace trace = trace_of(arrivals);

  SimConfig cfg = base_config();
  cfg.policy.policy =
      make_sjf_policy("oracle", std::make_shared<OracleScorer>(ds));
  cfg.policy.batch_limit = 1;
  cfg.record_events = true;

  cfg.policy.starvation_threshold_s = 5.0;
  SimResult boosted = run_simulation(trace, ds, cfg);

  cfg.policy.starvation_threshold_s = 1e9;
  SimResult unboosted = run_simulation(trace, ds, cfg);

  double last_short_admit = 0.0;
  for (const RequestRecord& r : boosted.requests)
    if (r.prompt_id != "long")
      last_short_admit = std::max(last_short_admit, r.admit_s);
  CHECK(record_for(boosted, "long").admit_s < last_short_admit);
  CHECK(record_for(unboosted, "long").admit_s >
        record_for(boosted, "long").admit_s);

  bool saw_boost = false;
  for (const Event& e : boosted.events)
    if (e.kind == EventKind::Boost && e.prompt_id == "long") saw_boost = true;
  CHECK(saw_boost);
  for (const Event& e : unboosted.events) CHECK(e.kind != EventKind::Boost);
}

TEST_CASE("static batching admits on size or timeout and runs to completion") {
  Dataset ds = dataset_from_specs({{"a", 3, 0}, {"b", 5, 0}, {"c", 2, 0}});
  ArrivalTrace trace = trace_of({{"a", 0.0}, {"b", 0.25}, {"c", 0.5}});
  SimConfig cfg = base_config();
  cfg.cost = CostModel{0.25, 0.25, 0.125};
  cfg.batching = BatchingMode::Static;
  cfg.static_max_wait_s = 1.0;
  cfg.policy.batch_limit = 2;
  SimResult res = run_simulation(trace, ds, cfg);

  // batch 1 dispatches when b arrives (size trigger): 3 iterations of two
  // running (0.75 each) then 2 of one (0.5 each) ending at 3.5. c arrived at
  // 0.5 mid-batch, so it waits for the drain and dispatches on the timeout.
  CHECK(record_for(res, "a").admit_s == 0.25);
  CHECK(record_for(res, "b").admit_s == 0.25);
  CHECK(record_for(res, "a").finish_s == 2.5);
  CHECK(record_for(res, "b").finish_s == 3.5);
  CHECK(record_for(res, "c").admit_s == 3.5);
  CHECK(record_for(res, "c").finish_s == 4.5);
  CHECK(res.iterations == 7);
  CHECK(res.simulated_seconds == 4.5);
}

TEST_CASE("static batching dispatches a partial batch after max_wait") {
  Dataset ds = dataset_from_specs({{"a", 2, 0}});
  ArrivalTrace trace = trace_of({{"a", 0.0}});
  SimConfig cfg = base_config();
  cfg.batching = BatchingMode::Static;
  cfg.static_max_wait_s = 1.0;
  cfg.policy.batch_limit = 8;
  SimResult res = run_simulation(trace, ds, cfg);
  CHECK(record_for(res, "a").admit_s == 1.0);  // held exactly max_wait
  CHECK(record_for(res, "a").finish_s == 2.5);
}

TEST_CASE("trace and config validation") {
  Dataset ds = dataset_from_specs({{"a", 2, 0}});
  SimConfig cfg = base_config();

  CHECK_THROWS_WITH_AS(
      run_simulation(trace_of({{"nope", 0.0}}), ds, cfg),
      "unknown prompt id 'nope'", Error);
  CHECK_THROWS_WITH_AS(
      run_simulation(trace_of({{"a", 1.0}, {"a", 0.5}}), ds, cfg),
      "simulator: trace arrival times must be non-decreasing", Error);

  ArrivalTrace ok = trace_of({{"a", 0.0}});
  auto expect_reject = [&](auto mutate, const char* message) {
    SimConfig bad = base_config();
    mutate(bad);
    CHECK_THROWS_WITH_AS(run_simulation(ok, ds, bad), message, Error);
  };
  expect_reject([](SimConfig& c) { c.policy.batch_limit = 0; },
                "simulator: batch_limit must be >= 1");
  expect_reject([](SimConfig& c) { c.cost.t_decode = 0.0; },
                "simulator: t_decode must be > 0");
  expect_reject([](SimConfig& c) { c.cost.t_base = -0.1; },
                "simulator: cost constants must be >= 0");
  expect_reject([](SimConfig& c) { c.cost.t_prefill_token = -0.1; },
                "simulator: cost constants must be >= 0");
  expect_reject(
      [](SimConfig& c) {
        c.batching = BatchingMode::Static;
        c.static_max_wait_s = -1.0;
      },
      "simulator: static max_wait must be >= 0");
  expect_reject([](SimConfig& c) { c.policy.starvation_threshold_s = 0.0; },
                "simulator: starvation threshold must be > 0");
}

TEST_CASE("compare_policies shares the trace and reports against fcfs") {
  SynthConfig scfg;
  scfg.n = 50;
  scfg.seed = 29;
  scfg.components = {{2.5, 1.0, 1.0}};
  scfg.max_len = 256;
  Dataset ds = synthesize_dataset(scfg);
  ArrivalTrace trace = generate_burst_arrivals(ds);

  SimConfig base = base_config();
  base.cost = CostModel{};
  base.policy.batch_limit = 8;
  std::vector<Policy> policies = {
      make_fcfs_policy(),
      make_sjf_policy("oracle", std::make_shared<OracleScorer>(ds))};
  ComparisonReport report = compare_policies(trace, ds, base, policies);

  REQUIRE(report.runs.size() == 2);
  CHECK(report.runs[0].policy == "fcfs");
  CHECK(report.runs[1].policy == "oracle");
  CHECK_FALSE(report.runs[0].tau_b.has_value());
  REQUIRE(report.runs[1].tau_b.has_value());
  CHECK(*report.runs[1].tau_b == 1.0);

  REQUIRE(report.runs[0].latency.speedup_vs_fcfs.has_value());
  CHECK(*report.runs[0].latency.speedup_vs_fcfs == 1.0);
  REQUIRE(report.runs[1].latency.speedup_vs_fcfs.has_value());
  CHECK(*report.runs[1].latency.speedup_vs_fcfs >= 1.0);  // SJF helps a burst

  // the fan-out must equal a standalone run of the same policy
  SimConfig solo = base;
  solo.policy.policy = policies[1];
  SimResult alone = run_simulation(trace, ds, solo);
  REQUIRE(alone.requests.size() == report.runs[1].result.requests.size());
  for (size_t i = 0; i < alone.requests.size(); ++i) {
    CHECK(alone.requests[i].prompt_id ==
          report.runs[1].result.requests[i].prompt_id);
    CHECK(alone.requests[i].finish_s ==
          report.runs[1].result.requests[i].finish_s);
  }

  CHECK_THROWS_WITH_AS(
      compare_policies(trace, ds, base, {make_fcfs_policy()}),
      "compare_policies: need at least 2 policies", Error);
}

TEST_CASE("compare_policies surfaces per-policy failures by name") {
  struct ThrowingScorer : Scorer {
    double score(const PromptRecord&) const override {
      throw Error("scorer exploded");
    }
  };
  Dataset ds = dataset_from_specs({{"a", 2, 0}, {"b", 3, 0}});
  ArrivalTrace trace = trace_of({{"a", 0.0}, {"b", 0.0}});
  SimConfig base = base_config();
  std::vector<Policy> policies = {
      make_fcfs_policy(),
      make_sjf_policy("bad", std::make_shared<ThrowingScorer>())};
  CHECK_THROWS_WITH_AS(compare_policies(trace, ds, base, policies),
                       doctest::Contains("policy 'bad'"), Error);
}

TEST_CASE("request csv and event log serialize exactly") {
  Dataset ds = dataset_from_specs({{"r", 8, 4}});
  ArrivalTrace trace = trace_of({{"r", 2.0}});
  SimConfig cfg = base_config();
  cfg.record_events = true;
  SimResult res = run_simulation(trace, ds, cfg);

  std::string csv = temp_path("requests.csv");
  save_requests_csv(csv, res);
  std::ifstream in(csv);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "prompt_id,arrival,admit,finish,output_len,per_token_latency_ms");
  std::getline(in, line);
  CHECK(line == "r,2.0,2.0,8.5,8,812.5");
  CHECK_FALSE(std::getline(in, line));
  std::remove(csv.c_str());

  std::string evp = temp_path("events.log");
  save_events(evp, res);
  std::ifstream ein(evp);
  REQUIRE(ein.good());
  std::vector<std::string> lines;
  while (std::getline(ein, line)) lines.push_back(line);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "0 arrive 2.0 r");
  CHECK(lines[1] == "0 admit 2.0 r");
  CHECK(lines[2] == "8 finish 8.5 r");
  std::remove(evp.c_str());
}

TEST_CASE("simulation output is identical across repeated runs") {
  SynthConfig scfg;
  scfg.n = 30;
  scfg.seed = 31;
  Dataset ds = synthesize_dataset(scfg);
  ArrivalTrace trace = generate_poisson_arrivals(ds, 2.0, 7);
  SimConfig cfg = base_config();
  cfg.cost = CostModel{};
  cfg.policy.batch_limit = 4;
  cfg.record_events = true;
  SimResult a = run_simulation(trace, ds, cfg);
  SimResult b = run_simulation(trace, ds, cfg);
  CHECK(a.events == b.events);
  CHECK(a.iterations == b.iterations);
  CHECK(a.simulated_seconds == b.simulated_seconds);
  REQUIRE(a.requests.size() == b.requests.size());
  for (size_t i = 0; i < a.requests.size(); ++i) {
    CHECK(a.requests[i].prompt_id == b.requests[i].prompt_id);
    CHECK(a.requests[i].finish_s == b.requests[i].finish_s);
    CHECK(a.requests[i].per_token_latency_s == b.requests[i].per_token_latency_s);
  }
}

TEST_SUITE_END();
