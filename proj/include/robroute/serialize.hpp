#pragma once

#include <string>

#include "robroute/rsolve.hpp"

namespace robroute {

/// Structured text format: `key = value` scalars plus bracketed CSV blocks
/// (vectors one row, matrices one row per line). Solver-ready on reload.
void save_model(const UncertaintyModel& model, const std::string& path);
UncertaintyModel load_model(const std::string& path);

} // namespace robroute
