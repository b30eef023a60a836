#pragma once

#include <string>
#include <vector>

#include "escape/model.hpp"
#include "escape/solver.hpp"

namespace escape {

/// Fully validated run description parsed from a JSON document with
/// blocks `model`, `query`, `numerics`, `mc` and optional `output`,
/// `method`, `tolerance`.  Unknown keys are rejected by name.
struct RunConfig {
  ProcessModel model;
  EscapeQuery query;
  std::vector<double> x_grid;  // non-empty for sweep/compare grids
  SolveOptions numerics;
  double compare_tol = 5e-4;
  std::string output_path;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// shortest representation that round-trips a double (up to 17 digits)
std::string csv_double(double v);

}  // namespace escape
