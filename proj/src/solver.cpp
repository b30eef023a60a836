#include "escape/solver.hpp"

#include <cmath>

#include "escape/analytic.hpp"
#include "escape/errors.hpp"
#include "escape/fredholm.hpp"

namespace escape {

namespace {

// analytic answers with a pre-clamp excursion beyond this are treated as
// failed and handed to the numeric fallback
constexpr double kExcursionLimit = 1e-6;

EscapeResult fredholm_result(const ProcessModel& m, double x, double b,
                             const SolveOptions& opts) {
  GridSolution s = solve_fredholm(m, b, opts.grid, opts.tol);
  EscapeResult r;
  r.probability = s.eval(x);
  r.error_bound = s.error_bound;
  r.route = SolverRoute::FredholmNumeric;
  if (s.iteration_cap_hit) r.note = "Picard iteration cap reached";
  return r;
}

EscapeResult mc_result(const ProcessModel& m, double x, double b,
                       const SolveOptions& opts) {
  McEstimate e = estimate_ep(m, x, 0.0, b, opts.mc_paths, opts.mc_seed);
  EscapeResult r;
  r.probability = e.value;
  r.error_bound = e.std_error;
  r.route = SolverRoute::MonteCarloOnly;
  r.mc = e;
  if (!e.valid) r.note = "censored fraction exceeds 1e-6";
  return r;
}

EscapeResult numeric_fallback(const ProcessModel& m, double x, double b,
                              const SolveOptions& opts, const char* why) {
  EscapeResult r;
  try {
    r = fredholm_result(m, x, b, opts);
  } catch (const NotContractive&) {
    r = mc_result(m, x, b, opts);
  }
  r.downgraded = true;
  r.note = why;
  return r;
}

EscapeResult solve_normalized(const ProcessModel& m, double x, double b,
                              Method method, const SolveOptions& opts) {
  if (x <= 0.0) return {0.0, 0.0, SolverRoute::TrivialDouble};
  if (x >= b) return {1.0, 0.0, SolverRoute::TrivialDouble};
  EscapeQuery q;
  q.x = x;
  q.b = b;
  q.method = method;
  SolverRoute rt = route(m, q);

  if (rt == SolverRoute::FredholmNumeric) return fredholm_result(m, x, b, opts);
  if (rt == SolverRoute::MonteCarloOnly) return mc_result(m, x, b, opts);

  AnalyticDiag diag;
  EscapeResult r;
  r.route = rt;
  try {
    switch (rt) {
      case SolverRoute::TrivialDouble:
        r.probability = ep_trivial(m, x, b);
        break;
      case SolverRoute::PoissonOneSided:
        r.probability = ep_poisson_one_sided(m, x, b, &diag);
        break;
      case SolverRoute::RationalArrivalsOneSided:
        r.probability = ep_rational_arrivals(m, x, b, &diag);
        break;
      case SolverRoute::TwoSidedUpper:
        r.probability = ep_two_sided_upper(m, x, b, &diag);
        break;
      case SolverRoute::TwoSidedLower:
        r.probability = ep_two_sided_lower(m, x, b, &diag);
        break;
      case SolverRoute::PoissonRationalCF:
        r.probability = ep_poisson_rational_cf(m, x, b, &diag);
        break;
      case SolverRoute::ZeroDrift:
        r.probability = ep_zero_drift(m, x, b, &diag);
        break;
      default:
        return numeric_fallback(m, x, b, opts, "unreachable route");
    }
  } catch (const Error& e) {
    return numeric_fallback(m, x, b, opts, e.what());
  }
  if (diag.pre_clamp_excursion > kExcursionLimit)
    return numeric_fallback(m, x, b, opts,
                            "analytic value left [0,1] beyond tolerance");
  r.error_bound = diag.bc_residual;
  return r;
}

EscapeResult solve_conditional(const ProcessModel& m, double x, double b,
                               double z, Method method,
                               const SolveOptions& opts) {
  if (method == Method::Mc) {
    McEstimate e = estimate_conditional_ep(m, x, b, z, opts.mc_paths,
                                           opts.mc_seed);
    EscapeResult r;
    r.probability = e.value;
    r.error_bound = e.std_error;
    r.route = SolverRoute::MonteCarloOnly;
    r.mc = e;
    return r;
  }
  GridSolution s = solve_fredholm(m, b, opts.grid, opts.tol);
  EscapeResult r;
  r.probability = conditional_ep(m, s, x, z);
  r.error_bound = s.error_bound;
  r.route = SolverRoute::FredholmNumeric;
  return r;
}

}  // namespace

EscapeResult solve_escape(const ProcessModel& model, const EscapeQuery& query,
                          const SolveOptions& opts) {
  if (!(query.a < query.x && query.x < query.b))
    throw RangeError("query requires a < x < b");
  if (query.z && *query.z < 0.0)
    throw RangeError("backward recurrence time must be >= 0");

  // all solvers work on (0, b-a)
  double b = query.b - query.a;
  double x = query.x - query.a;

  if (model.c < 0.0) {
    // reflected upper escape from b-x; the interarrival law (and hence
    // any history conditioning) is untouched by the reflection
    ProcessModel r = reflect(model);
    EscapeQuery q = query;
    q.a = 0.0;
    q.b = b;
    q.x = b - x;
    EscapeResult res = solve_escape(r, q, opts);
    res.probability = 1.0 - res.probability;
    return res;
  }

  if (query.z && *query.z > 0.0 && model.c > 0.0)
    return solve_conditional(model, x, b, *query.z, query.method, opts);
  // c = 0 escape is history-independent; fall through to the plain solve
  return solve_normalized(model, x, b, query.method, opts);
}

}  // namespace escape
