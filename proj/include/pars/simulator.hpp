#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pars/arrivals.hpp"
#include "pars/dataset.hpp"
#include "pars/metrics.hpp"
#include "pars/scheduler.hpp"

namespace pars {

// Iteration cost is t_base + t_decode * |running|, plus a one-time
// t_prefill_token * prompt_len surcharge on the admitting iteration. Every
// running request generates exactly one token per iteration.
struct CostModel {
  double t_base = 0.002;
  double t_decode = 0.0005;
  double t_prefill_token = 0.0001;
};

enum class BatchingMode { Continuous, Static };

struct SimConfig {
  CostModel cost;
  BatchingMode batching = BatchingMode::Continuous;
  double static_max_wait_s = 1.0;  // static batching trigger timeout
  PolicyConfig policy;
  uint64_t seed = 0;  // reserved; built-in policies draw no randomness
  bool record_events = false;
};

enum class EventKind { Arrive, Boost, Admit, Finish };
const char* event_kind_name(EventKind kind);

struct Event {
  EventKind kind = EventKind::Arrive;
  uint64_t iteration = 0;
  double time_s = 0.0;
  std::string prompt_id;

  bool operator==(const Event&) const = default;
};

struct RequestRecord {
  std::string prompt_id;
  double arrival_s = 0.0;
  double admit_s = 0.0;
  double finish_s = 0.0;
  int64_t output_len = 0;
  int64_t prompt_len = 0;
  double per_token_latency_s = 0.0;  // (finish - arrival) / output_len
};

struct SimResult {
  std::vector<RequestRecord> requests;  // in completion order
  uint64_t iterations = 0;
  double simulated_seconds = 0.0;
  std::vector<Event> events;  // only when record_events
};

// Deterministic discrete-event run; throws before starting if any trace id
// does not resolve against the dataset.
SimResult run_simulation(const ArrivalTrace& trace, const Dataset& ds,
                         const SimConfig& config);

struct PolicyRunResult {
  std::string policy;
  LatencySummary latency;
  std::optional<double> tau_b;  // scorer policies only
  SimResult result;
};

struct ComparisonReport {
  std::vector<PolicyRunResult> runs;  // in input policy order
};

// Runs every policy on the identical trace and cost model (parallel across
// policies; each run is single-threaded and deterministic). Speedups are
// relative to the fcfs run when one is present.
ComparisonReport compare_policies(const ArrivalTrace& trace, const Dataset& ds,
                                  const SimConfig& base,
                                  const std::vector<Policy>& policies);

void save_requests_csv(const std::string& path, const SimResult& result);
void save_events(const std::string& path, const SimResult& result);

}  // namespace pars
