#pragma once

#include <vector>

#include "escape/model.hpp"

namespace escape {

/// Converged Picard iterate of the escape-probability integral equation
/// on a uniform grid over [0, b].
struct GridSolution {
  double b = 0;
  double L = 0;                     // contraction constant
  int iterations = 0;
  double error_bound = 0;           // L * d_last / (1 - L), sup norm
  bool complement = false;          // solves P(lower exit first) instead
  bool iteration_cap_hit = false;
  double pre_clamp_excursion = 0;   // largest overshoot outside [0,1]
  std::vector<double> nodes;
  std::vector<double> values;
  std::vector<double> sup_diffs;    // successive sup-differences, per sweep

  /// linear interpolation between nodes
  double eval(double x) const;
};

/// L = P(tau_1 <= b/c) * P(J_1 in (-b,b)); throws NotContractive when
/// L >= 1 - 1e-12.
double contraction_constant(const ProcessModel& model, double b);

/// Nystrom/Picard solution of the master integral equation on (0,b),
/// c >= 0 (callers reflect c < 0 first).
GridSolution solve_fredholm(const ProcessModel& model, double b, int M = 2000,
                            double tol = 1e-10);

/// Same kernel with the complementary forcing: probability of exiting
/// through the lower barrier first.
GridSolution solve_fredholm_complement(const ProcessModel& model, double b,
                                       int M = 2000, double tol = 1e-10);

/// Escape probability conditioned on the elapsed time z since the last
/// renewal, evaluated against an existing solution for the same model.
double conditional_ep(const ProcessModel& model, const GridSolution& sol,
                      double x, double z);

}  // namespace escape
