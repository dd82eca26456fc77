#include "pars/simulator.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "pars/error.hpp"

namespace pars {

const char* event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::Arrive:
      return "arrive";
    case EventKind::Boost:
      return "boost";
    case EventKind::Admit:
      return "admit";
    case EventKind::Finish:
      return "finish";
  }
  return "?";
}

namespace {

struct Sim {
  const Dataset& ds;
  const SimConfig& cfg;
  SimResult out;

  std::vector<Request> pending;  // arrival order
  size_t next = 0;
  std::vector<Request> waiting;  // stays arrival-ordered
  std::vector<Request> running;
  double now = 0.0;

  Sim(const ArrivalTrace& trace, const Dataset& dataset,
      const SimConfig& config)
      : ds(dataset), cfg(config) {
    if (cfg.policy.batch_limit < 1)
      throw Error("simulator: batch_limit must be >= 1");
    if (cfg.cost.t_decode <= 0.0)
      throw Error("simulator: t_decode must be > 0");
    if (cfg.cost.t_base < 0.0 || cfg.cost.t_prefill_token < 0.0)
      throw Error("simulator: cost constants must be >= 0");
    if (cfg.batching == BatchingMode::Static && cfg.static_max_wait_s < 0.0)
      throw Error("simulator: static max_wait must be >= 0");
    if (cfg.policy.starvation_threshold_s <= 0.0)
      throw Error("simulator: starvation threshold must be > 0");

    pending.reserve(trace.entries.size());
    double prev = 0.0;
    for (const ArrivalEntry& e : trace.entries) {
      if (e.arrival_time_s < prev)
        throw Error("simulator: trace arrival times must be non-decreasing");
      prev = e.arrival_time_s;
      Request r;
      r.record_idx = static_cast<uint32_t>(ds.index_of(e.prompt_id));
      r.prompt_id = e.prompt_id;
      r.arrival_time = e.arrival_time_s;
      pending.push_back(std::move(r));
    }
  }

  const PromptRecord& record_of(const Request& r) const {
    return ds.records[r.record_idx];
  }

  void emit(EventKind kind, double t, const std::string& id) {
    if (cfg.record_events)
      out.events.push_back({kind, out.iterations, t, id});
  }

  void move_arrivals() {
    while (next < pending.size() &&
           pending[next].arrival_time <= now) {
      Request r = pending[next++];
      enqueue(r, cfg.policy, record_of(r));
      emit(EventKind::Arrive, r.arrival_time, r.prompt_id);
      waiting.push_back(std::move(r));
    }
  }

  void apply_boosts() {
    std::vector<size_t> boosted;
    update_boosts(waiting, now, cfg.policy.starvation_threshold_s, &boosted);
    for (size_t i : boosted) emit(EventKind::Boost, now, waiting[i].prompt_id);
  }

  void flush_finished() {
    for (Request& r : running) {
      if (r.tokens_generated == record_of(r).output_len) {
        r.state = RequestState::Finished;
        RequestRecord rec;
        rec.prompt_id = r.prompt_id;
        rec.arrival_s = r.arrival_time;
        rec.admit_s = *r.admit_time;
        rec.finish_s = *r.finish_time;
        rec.output_len = record_of(r).output_len;
        rec.prompt_len = record_of(r).prompt_len;
        rec.per_token_latency_s =
            (rec.finish_s - rec.arrival_s) / static_cast<double>(rec.output_len);
        emit(EventKind::Finish, rec.finish_s, rec.prompt_id);
        out.requests.push_back(std::move(rec));
      }
    }
    std::erase_if(running,
                  [](const Request& r) { return r.state == RequestState::Finished; });
  }

  // Moves the selected waiting requests into running; returns the prefill
  // token total for the admitting iteration.
  double admit(const std::vector<size_t>& selected) {
    double prefill_tokens = 0.0;
    std::vector<bool> taken(waiting.size(), false);
    for (size_t idx : selected) {
      Request& r = waiting[idx];
      r.state = RequestState::Running;
      r.admit_time = now;
      prefill_tokens += static_cast<double>(record_of(r).prompt_len);
      emit(EventKind::Admit, now, r.prompt_id);
      running.push_back(std::move(r));
      taken[idx] = true;
    }
    size_t keep = 0;
    for (size_t i = 0; i < waiting.size(); ++i) {
      if (!taken[i]) {
        if (keep != i) waiting[keep] = std::move(waiting[i]);
        ++keep;
      }
    }
    waiting.resize(keep);
    return prefill_tokens;
  }

  void advance_iteration(double prefill_tokens) {
    double duration = cfg.cost.t_base +
                      cfg.cost.t_decode * static_cast<double>(running.size()) +
                      cfg.cost.t_prefill_token * prefill_tokens;
    now += duration;
    ++out.iterations;
    for (Request& r : running) {
      ++r.tokens_generated;
      if (r.tokens_generated == record_of(r).output_len) r.finish_time = now;
    }
  }

  void run_continuous() {
    while (next < pending.size() || !waiting.empty() || !running.empty()) {
      move_arrivals();
      apply_boosts();
      flush_finished();
      size_t free_slots =
          static_cast<size_t>(cfg.policy.batch_limit) - running.size();
      double prefill = admit(select_batch(waiting, now, free_slots, cfg.policy));
      if (!running.empty()) {
        advance_iteration(prefill);
      } else if (next < pending.size()) {
        now = pending[next].arrival_time;  // idle: jump to next arrival
      } else if (!waiting.empty()) {
        throw Error("simulator stalled (internal error)");
      } else {
        break;  // drained: no arrivals left and both queues empty
      }
    }
  }

  void run_static() {
    while (next < pending.size() || !waiting.empty()) {
      move_arrivals();
      if (waiting.empty()) {
        now = pending[next].arrival_time;
        continue;
      }
      double oldest = waiting.front().arrival_time;
      bool trigger =
          waiting.size() >= static_cast<size_t>(cfg.policy.batch_limit) ||
          now - oldest >= cfg.static_max_wait_s;
      if (!trigger) {
        double deadline = oldest + cfg.static_max_wait_s;
        if (next < pending.size() &&
            pending[next].arrival_time <= deadline)
          now = pending[next].arrival_time;
        else
          now = deadline;
        continue;
      }
      apply_boosts();
      double prefill = admit(select_batch(
          waiting, now, static_cast<size_t>(cfg.policy.batch_limit),
          cfg.policy));
      // run the batch to completion; no mid-batch admissions
      bool first = true;
      while (!running.empty()) {
        advance_iteration(first ? prefill : 0.0);
        first = false;
        flush_finished();
      }
    }
  }

  SimResult run(size_t expected) && {
    if (cfg.batching == BatchingMode::Continuous) {
      if (next < pending.size()) now = pending[next].arrival_time;
      run_continuous();
    } else {
      if (next < pending.size()) now = pending[next].arrival_time;
      run_static();
    }
    if (out.requests.size() != expected)
      throw Error("simulator conservation violated (internal error)");
    out.simulated_seconds = now;
    return std::move(out);
  }
};

}  // namespace

SimResult run_simulation(const ArrivalTrace& trace, const Dataset& ds,
                         const SimConfig& config) {
  return Sim(trace, ds, config).run(trace.entries.size());
}

ComparisonReport compare_policies(const ArrivalTrace& trace, const Dataset& ds,
                                  const SimConfig& base,
                                  const std::vector<Policy>& policies) {
  if (policies.size() < 2)
    throw Error("compare_policies: need at least 2 policies");

  ComparisonReport report;
  report.runs.resize(policies.size());
  std::vector<std::string> errors(policies.size());

  const int64_t n = static_cast<int64_t>(policies.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int64_t i = 0; i < n; ++i) {
    try {
      SimConfig cfg = base;
      cfg.policy.policy = policies[i];
      PolicyRunResult& run = report.runs[i];
      run.policy = policies[i].name;
      run.result = run_simulation(trace, ds, cfg);
      run.latency = latency_summary(run.result);
      if (policies[i].kind == PolicyKind::Sjf) {
        std::vector<double> scores, lens;
        scores.reserve(trace.entries.size());
        lens.reserve(trace.entries.size());
        for (const ArrivalEntry& e : trace.entries) {
          const PromptRecord& rec = ds.records[ds.index_of(e.prompt_id)];
          scores.push_back(policies[i].scorer->score(rec));
          lens.push_back(static_cast<double>(rec.output_len));
        }
        try {
          run.tau_b = kendall_tau_b(scores, lens).tau_b;
        } catch (const Error&) {
          run.tau_b = std::nullopt;  // degenerate ranking
        }
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
      if (errors[i].empty()) errors[i] = "unknown error";
    }
  }
  for (size_t i = 0; i < policies.size(); ++i) {
    if (!errors[i].empty())
      fail("policy '%s': %s", policies[i].name.c_str(), errors[i].c_str());
  }

  std::optional<double> fcfs_mean;
  for (size_t i = 0; i < policies.size(); ++i) {
    if (policies[i].kind == PolicyKind::Fcfs) {
      fcfs_mean = report.runs[i].latency.mean_per_token_ms;
      break;
    }
  }
  if (fcfs_mean) {
    for (auto& run : report.runs)
      run.latency.speedup_vs_fcfs = *fcfs_mean / run.latency.mean_per_token_ms;
  }
  return report;
}

namespace {

std::string num(double v) { return nlohmann::json(v).dump(); }

}  // namespace

void save_requests_csv(const std::string& path, const SimResult& result) {
  std::ofstream out(path);
  if (!out) fail("cannot write '%s'", path.c_str());
  out << "prompt_id,arrival,admit,finish,output_len,per_token_latency_ms\n";
  for (const RequestRecord& r : result.requests) {
    out << r.prompt_id << ',' << num(r.arrival_s) << ',' << num(r.admit_s)
        << ',' << num(r.finish_s) << ',' << r.output_len << ','
        << num(r.per_token_latency_s * 1000.0) << '\n';
  }
  if (!out) fail("write failed for '%s'", path.c_str());
}

void save_events(const std::string& path, const SimResult& result) {
  std::ofstream out(path);
  if (!out) fail("cannot write '%s'", path.c_str());
  for (const Event& e : result.events) {
    out << e.iteration << ' ' << event_kind_name(e.kind) << ' '
        << num(e.time_s) << ' ' << e.prompt_id << '\n';
  }
  if (!out) fail("write failed for '%s'", path.c_str());
}

}  // namespace pars
