#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pars/dataset.hpp"

namespace pars {

enum class ArrivalMode { Poisson, Burst };

struct ArrivalEntry {
  std::string prompt_id;
  double arrival_time_s = 0.0;

  bool operator==(const ArrivalEntry&) const = default;
};

struct ArrivalTrace {
  std::vector<ArrivalEntry> entries;  // arrival times non-decreasing
  ArrivalMode mode = ArrivalMode::Burst;
  double rate = 0.0;  // poisson only, requests/second
  uint64_t seed = 0;

  bool operator==(const ArrivalTrace&) const = default;
};

// Poisson: i.i.d. exponential(rate) inter-arrival gaps, prompts in dataset
// order. Burst: all arrivals at t = 0.
ArrivalTrace generate_poisson_arrivals(const Dataset& ds, double rate,
                                       uint64_t seed);
ArrivalTrace generate_burst_arrivals(const Dataset& ds, uint64_t seed = 0);

ArrivalTrace load_trace(const std::string& path);
void save_trace(const std::string& path, const ArrivalTrace& trace);

const char* arrival_mode_name(ArrivalMode mode);

}  // namespace pars
