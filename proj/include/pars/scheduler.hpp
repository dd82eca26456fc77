#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pars/dataset.hpp"
#include "pars/scorer.hpp"

namespace pars {

enum class RequestState { Waiting, Running, Finished };

// A prompt instance in flight. score is cached once at enqueue and never
// recomputed; boosted is monotone.
struct Request {
  uint32_t record_idx = 0;  // into the dataset
  std::string prompt_id;
  double arrival_time = 0.0;
  RequestState state = RequestState::Waiting;
  int64_t tokens_generated = 0;
  double score = 0.0;
  bool boosted = false;
  std::optional<double> admit_time;
  std::optional<double> finish_time;
};

enum class PolicyKind { Fcfs, Sjf };

// The SJF variants (pointwise / listwise / oracle / pars) differ only in the
// scorer behind them; name is the reporting tag.
struct Policy {
  std::string name = "fcfs";
  PolicyKind kind = PolicyKind::Fcfs;
  std::shared_ptr<const Scorer> scorer;  // required for Sjf
};

Policy make_fcfs_policy();
Policy make_sjf_policy(std::string name, std::shared_ptr<const Scorer> scorer);

struct PolicyConfig {
  Policy policy;
  double starvation_threshold_s = 120.0;
  int batch_limit = 32;
};

// Caches the ordering key: FCFS keys on arrival time, SJF variants on the
// scorer output. Throws if the scorer cannot score the prompt.
void enqueue(Request& request, const PolicyConfig& config,
             const PromptRecord& record);

// Admission order: boosted requests first, FIFO by (arrival, id); then
// normal requests ascending by score, ties by (arrival, id). Returns indices
// into `waiting` for the first `free_slots` requests in that order.
std::vector<size_t> select_batch(std::span<const Request> waiting, double now,
                                 size_t free_slots,
                                 const PolicyConfig& config);

// Boosts every waiting request with now - arrival > threshold (strict).
// Idempotent; returns the count of newly boosted requests, optionally their
// indices.
size_t update_boosts(std::span<Request> waiting, double now, double threshold,
                     std::vector<size_t>* newly_boosted = nullptr);

}  // namespace pars
