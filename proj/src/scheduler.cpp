#include "pars/scheduler.hpp"

#include <algorithm>

#include "pars/error.hpp"

namespace pars {

Policy make_fcfs_policy() { return Policy{"fcfs", PolicyKind::Fcfs, nullptr}; }

Policy make_sjf_policy(std::string name,
                       std::shared_ptr<const Scorer> scorer) {
  if (!scorer) throw Error("sjf policy needs a scorer");
  return Policy{std::move(name), PolicyKind::Sjf, std::move(scorer)};
}

void enqueue(Request& request, const PolicyConfig& config,
             const PromptRecord& record) {
  if (request.state != RequestState::Waiting)
    fail("enqueue: request '%s' is not waiting", request.prompt_id.c_str());
  if (config.policy.kind == PolicyKind::Fcfs) {
    request.score = request.arrival_time;
  } else {
    try {
      request.score = config.policy.scorer->score(record);
    } catch (const Error& e) {
      fail("enqueue: cannot score request '%s': %s", request.prompt_id.c_str(),
           e.what());
    }
  }
}

std::vector<size_t> select_batch(std::span<const Request> waiting, double now,
                                 size_t free_slots,
                                 const PolicyConfig& config) {
  (void)config;
  std::vector<size_t> order(waiting.size());
  for (size_t i = 0; i < waiting.size(); ++i) order[i] = i;

  auto tie_key = [&](const Request& r) {
    return std::tie(r.arrival_time, r.prompt_id);
  };
  std::sort(order.begin(), order.end(), [&](size_t ia, size_t ib) {
    const Request& a = waiting[ia];
    const Request& b = waiting[ib];
    if (a.boosted != b.boosted) return a.boosted;  // boosted precede all
    if (!a.boosted && a.score != b.score) return a.score < b.score;
    if (tie_key(a) != tie_key(b)) return tie_key(a) < tie_key(b);
    return ia < ib;  // total order even for duplicate (arrival, id)
  });

  for (size_t i : order) {
    if (waiting[i].arrival_time > now)
      fail("select_batch: request '%s' has not arrived yet",
           waiting[i].prompt_id.c_str());
  }

  order.resize(std::min(free_slots, order.size()));
  return order;
}

size_t update_boosts(std::span<Request> waiting, double now, double threshold,
                     std::vector<size_t>* newly_boosted) {
  if (threshold <= 0.0) fail("update_boosts: threshold must be > 0");
  size_t count = 0;
  for (size_t i = 0; i < waiting.size(); ++i) {
    Request& r = waiting[i];
    if (!r.boosted && now - r.arrival_time > threshold) {
      r.boosted = true;
      ++count;
      if (newly_boosted) newly_boosted->push_back(i);
    }
  }
  return count;
}

}  // namespace pars
