#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "escape/mc.hpp"
#include "escape/model.hpp"

namespace escape {

struct SolveOptions {
  int grid = 2000;        // Fredholm nodes
  double tol = 1e-10;     // Picard stopping tolerance
  int nodes = 48;         // Talbot inversion nodes
  long mc_paths = 1000000;
  uint64_t mc_seed = 1;
};

struct EscapeResult {
  double probability = 0.0;
  /// closed forms report their boundary-condition residual; Fredholm the
  /// a-posteriori contraction bound; Monte Carlo the standard error
  double error_bound = 0.0;
  SolverRoute route = SolverRoute::FredholmNumeric;
  bool downgraded = false;  // analytic route failed and a fallback answered
  std::string note;
  std::optional<McEstimate> mc;
};

/// Answers the query through the most specific applicable route, with
/// automatic fallback analytic -> Fredholm -> Monte Carlo.  General (a,b)
/// intervals are translated to (0, b-a); negative drift is reflected.
EscapeResult solve_escape(const ProcessModel& model, const EscapeQuery& query,
                          const SolveOptions& opts = {});

}  // namespace escape
