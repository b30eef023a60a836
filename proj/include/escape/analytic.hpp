#pragma once

#include "escape/exppoly.hpp"
#include "escape/model.hpp"

namespace escape {

/// Per-call diagnostics of the closed-form solvers.
struct AnalyticDiag {
  double pre_clamp_excursion = 0.0;  // overshoot outside [0,1] before clamping
  double theta_rcond = 1.0;          // pivot ratio of the determinant at x=b
  double bc_residual = 0.0;          // boundary-condition system residual
  bool has_solution = false;
  ExpPoly solution;                  // N(x) where the route assembles one
};

/// p1 = q1 = 0: no jump can land strictly inside (0,b).
double ep_trivial(const ProcessModel& m, double x, double b);

/// Fundamental solution for Exponential arrivals and one-sided negative
/// severities, normalized so pi(0) = 1.
double poisson_pi(const ProcessModel& m, double x);
/// Same transform inverted numerically on the Talbot contour.
double poisson_pi_talbot(const ProcessModel& m, double x, int nodes = 48);

double ep_poisson_one_sided(const ProcessModel& m, double x, double b,
                            AnalyticDiag* diag = nullptr);
/// P(never hits 0) = (1 - rho*m) * pi(x); zero when rho*m >= 1.
double survival_poisson(const ProcessModel& m, double x);

/// Determinant solution for arrivals with rational Laplace transform and
/// one-sided negative severities.
double ep_rational_arrivals(const ProcessModel& m, double x, double b,
                            AnalyticDiag* diag = nullptr);

/// p1 = 0: positive severity mass lies entirely at or above b-x,
/// hypoexponential-class arrivals.
double ep_two_sided_upper(const ProcessModel& m, double x, double b,
                          AnalyticDiag* diag = nullptr);

/// q1 = 0: negative severity mass lies entirely at or below -b.
double ep_two_sided_lower(const ProcessModel& m, double x, double b,
                          AnalyticDiag* diag = nullptr);

/// Roots of the Lundberg polynomial (1 - s/rho)Q(s) - R(s) for a
/// rational-CF severity (Q - R when c = 0).
RootSet lundberg_roots(const ProcessModel& m);

/// Exponential arrivals, two-sided severity with rational characteristic
/// function: exponential-basis solution on the Lundberg roots.
double ep_poisson_rational_cf(const ProcessModel& m, double x, double b,
                              AnalyticDiag* diag = nullptr);

/// c = 0 dispatcher over the driftless solvable families.
double ep_zero_drift(const ProcessModel& m, double x, double b,
                     AnalyticDiag* diag = nullptr);

}  // namespace escape
