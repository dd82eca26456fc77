#include "pars/arrivals.hpp"

#include <fstream>

#include <json.hpp>

#include "pars/error.hpp"
#include "pars/rng.hpp"

namespace pars {

using nlohmann::json;

const char* arrival_mode_name(ArrivalMode mode) {
  return mode == ArrivalMode::Poisson ? "poisson" : "burst";
}

ArrivalTrace generate_poisson_arrivals(const Dataset& ds, double rate,
                                       uint64_t seed) {
  if (ds.records.empty()) throw Error("generate_arrivals: empty dataset");
  if (rate <= 0.0) fail("generate_arrivals: rate must be > 0 (got %g)", rate);
  ArrivalTrace trace;
  trace.mode = ArrivalMode::Poisson;
  trace.rate = rate;
  trace.seed = seed;
  Rng rng(seed);
  double t = 0.0;
  trace.entries.reserve(ds.records.size());
  for (const PromptRecord& rec : ds.records) {
    t += rng.exponential(rate);
    trace.entries.push_back({rec.id, t});
  }
  return trace;
}

ArrivalTrace generate_burst_arrivals(const Dataset& ds, uint64_t seed) {
  if (ds.records.empty()) throw Error("generate_arrivals: empty dataset");
  ArrivalTrace trace;
  trace.mode = ArrivalMode::Burst;
  trace.seed = seed;
  trace.entries.reserve(ds.records.size());
  for (const PromptRecord& rec : ds.records)
    trace.entries.push_back({rec.id, 0.0});
  return trace;
}

namespace {
constexpr const char* kTraceFormat = "pars.trace";
constexpr int kTraceVersion = 1;
}  // namespace

ArrivalTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open trace file '%s'", path.c_str());
  std::string line;
  if (!std::getline(in, line)) fail("%s: empty file, missing header", path.c_str());

  ArrivalTrace trace;
  try {
    json header = json::parse(line);
    if (header.value("format", "") != kTraceFormat)
      fail("%s: not a pars trace (bad format field)", path.c_str());
    if (header.value("version", 0) != kTraceVersion)
      fail("%s: unsupported trace version", path.c_str());
    std::string mode = header.value("mode", "");
    if (mode == "poisson")
      trace.mode = ArrivalMode::Poisson;
    else if (mode == "burst")
      trace.mode = ArrivalMode::Burst;
    else
      fail("%s: unknown mode '%s'", path.c_str(), mode.c_str());
    trace.rate = header.value("rate", 0.0);
    trace.seed = header.value("seed", uint64_t{0});
  } catch (const json::exception& e) {
    fail("%s: malformed header: %s", path.c_str(), e.what());
  }

  size_t line_no = 1;
  double prev = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    size_t comma = line.rfind(',');
    if (comma == std::string::npos || comma == 0)
      fail("%s: line %zu: expected 'prompt_id,arrival_time_s'", path.c_str(),
           line_no);
    ArrivalEntry e;
    e.prompt_id = line.substr(0, comma);
    try {
      e.arrival_time_s = json::parse(line.substr(comma + 1)).get<double>();
    } catch (const json::exception&) {
      fail("%s: line %zu: bad arrival time", path.c_str(), line_no);
    }
    if (e.arrival_time_s < 0.0)
      fail("%s: line %zu: negative arrival time", path.c_str(), line_no);
    if (e.arrival_time_s < prev)
      fail("%s: line %zu: arrival times must be non-decreasing", path.c_str(),
           line_no);
    prev = e.arrival_time_s;
    trace.entries.push_back(std::move(e));
  }
  return trace;
}

void save_trace(const std::string& path, const ArrivalTrace& trace) {
  std::ofstream out(path);
  if (!out) fail("cannot write trace file '%s'", path.c_str());
  json header;
  header["format"] = kTraceFormat;
  header["version"] = kTraceVersion;
  header["mode"] = arrival_mode_name(trace.mode);
  if (trace.mode == ArrivalMode::Poisson) header["rate"] = trace.rate;
  header["seed"] = trace.seed;
  out << header.dump() << '\n';
  for (const ArrivalEntry& e : trace.entries) {
    // json round-trip formatting keeps times exact across save/load
    out << e.prompt_id << ',' << json(e.arrival_time_s).dump() << '\n';
  }
  if (!out) fail("write failed for '%s'", path.c_str());
}

}  // namespace pars
