#pragma once

#include <cstdint>

#include "escape/model.hpp"

namespace escape {

/// Counter-based splittable uniform stream: path i of a run draws from an
/// independent deterministic sequence keyed by (seed, i), so estimates are
/// bit-identical regardless of how paths are scheduled.
class RngStream {
 public:
  RngStream(uint64_t seed, uint64_t path);
  uint64_t next_u64();
  /// uniform in the open interval (0,1)
  double next_u01();

 private:
  uint64_t state_;
};

struct ExitRecord {
  enum class Side { Upper, Lower };
  Side side = Side::Upper;
  double exit_time = 0.0;
  long jumps_seen = 0;
};

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0, ci_high = 0.0;  // value +- 1.96 se, clipped to [0,1]
  long n_paths = 0;
  uint64_t seed = 0;
  long censored = 0;     // non-terminated paths, excluded from the estimate
  bool valid = true;     // false when censored fraction exceeds 1e-6
  bool truncation_bias = false;  // survival: one-sided overestimate
};

/// Exact event-driven simulation until the path leaves (a,b); the path is
/// linear between arrivals, so with c>0 the upper barrier is hit exactly
/// when the next interarrival is at least (b-current)/c.  Caps at 1e7
/// events and throws NonTermination past the cap.
ExitRecord simulate_exit(const ProcessModel& model, double x, double a,
                         double b, RngStream& stream);

McEstimate estimate_ep(const ProcessModel& model, double x, double a, double b,
                       long n_paths, uint64_t seed);

/// Escape probability given an elapsed backward recurrence time z: the
/// first interarrival is drawn from the conditional tail sf(t+z)/sf(z).
McEstimate estimate_conditional_ep(const ProcessModel& model, double x,
                                   double b, double z, long n_paths,
                                   uint64_t seed);

/// Fraction of paths with no ruin before `horizon` (pass <= 0 for the
/// default horizon).  Truncation makes this a one-sided overestimate of
/// the infinite-horizon survival probability.
McEstimate estimate_survival(const ProcessModel& model, double x,
                             double horizon, long n_paths, uint64_t seed);

double default_survival_horizon(const ProcessModel& model, double x);

}  // namespace escape
