#pragma once

#include <string>

#include "pars/train.hpp"

namespace pars {

// Model file: single JSON document with format version, extractor
// descriptor, weights, bias, objective tag, config snapshot and loss trace.
void save_model(const std::string& path, const TrainedModel& model);
TrainedModel load_model(const std::string& path);

}  // namespace pars
