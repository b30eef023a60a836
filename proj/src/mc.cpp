#include "escape/mc.hpp"

#include <algorithm>
#include <cmath>

#include "escape/errors.hpp"

namespace escape {

namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr long kEventCap = 10'000'000;

}  // namespace

RngStream::RngStream(uint64_t seed, uint64_t path)
    : state_(mix64(mix64(seed + kGolden) + path * kGolden)) {}

uint64_t RngStream::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double RngStream::next_u01() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

namespace {

double sample_exponential(double rate, RngStream& g) {
  return -std::log(g.next_u01()) / rate;
}

// smallest t with cdf(t) >= target, by bracket doubling + bisection
template <class Cdf>
double invert_time_cdf(const Cdf& cdf, double target) {
  double hi = 1.0;
  for (int i = 0; i < 400 && cdf(hi) < target; ++i) hi *= 2.0;
  if (cdf(hi) < target)
    throw NonFinite("interarrival cdf never reaches the requested quantile");
  double lo = 0.0;
  for (int i = 0; i < 100; ++i) {
    double mid = 0.5 * (lo + hi);
    (cdf(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double sample_interarrival(const ArrivalSpec& a, RngStream& g) {
  using K = ArrivalSpec::Kind;
  switch (a.kind) {
    case K::Exponential:
      return sample_exponential(a.rate, g);
    case K::Erlang: {
      double t = 0.0;
      for (int i = 0; i < a.shape; ++i) t += sample_exponential(a.rate, g);
      return t;
    }
    case K::Hypoexponential: {
      double t = 0.0;
      for (double r : a.rates) t += sample_exponential(r, g);
      return t;
    }
    default:
      return invert_time_cdf([&](double t) { return a.cdf(t); }, g.next_u01());
  }
}

// first interarrival given elapsed age z: tail sf(t+z)/sf(z)
double sample_conditional_interarrival(const ArrivalSpec& a, double z,
                                       RngStream& g) {
  if (z <= 0.0) return sample_interarrival(a, g);
  if (a.kind == ArrivalSpec::Kind::Exponential)
    return sample_exponential(a.rate, g);  // memoryless
  double fz = a.sf(z);
  if (fz < 1e-300)
    throw TailUnderflow("interarrival tail vanishes at the given history");
  double target = 1.0 - g.next_u01() * fz;
  return invert_time_cdf([&](double t) { return a.cdf(t + z); }, target);
}

double sample_standard_normal(RngStream& g) {
  double u1 = g.next_u01(), u2 = g.next_u01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double sample_jump(const JumpSpec& j, double b, RngStream& g) {
  double u = g.next_u01();
  double cum = 0.0;
  for (const auto& a : j.atoms) {
    cum += a.mass;
    if (u < cum) return a.location;
  }
  if (j.density_weight <= 0.0) return j.atoms.back().location;
  double v = (u - cum) / j.density_weight;
  v = std::clamp(v, 1e-16, 1.0 - 1e-16);

  using K = JumpSpec::Kind;
  switch (j.kind) {
    case K::ExponentialNegative:
      return std::log(v) / j.gamma;
    case K::Laplace: {
      double mag = sample_exponential(j.gamma, g);
      return v < 0.5 ? -mag : mag;
    }
    case K::DoubleExponential:
      if (v < j.p) return j.eps_pos * b + sample_exponential(j.gamma_pos, g);
      return j.eps_neg * b - sample_exponential(j.gamma_neg, g);
    case K::GammaHalfNegative: {
      double zn = sample_standard_normal(g);
      return -zn * zn / (2.0 * j.gamma);
    }
    default: {
      // continuous-part cdf with the atoms stripped out
      auto cont_cdf = [&](double y) {
        double m = j.cdf_at(y, b);
        for (const auto& a : j.atoms)
          if (a.location <= y) m -= a.mass;
        return m;
      };
      double target = v * j.density_weight;
      double lo = -1.0, hi = 1.0;
      for (int i = 0; i < 400 && cont_cdf(lo) > target; ++i) lo *= 2.0;
      for (int i = 0; i < 400 && cont_cdf(hi) < target; ++i) hi *= 2.0;
      for (int i = 0; i < 100; ++i) {
        double mid = 0.5 * (lo + hi);
        (cont_cdf(mid) < target ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
  }
}

ExitRecord run_path(const ProcessModel& m, double x, double a, double b,
                    RngStream& g, double z) {
  double X = x, t = 0.0;
  long jumps = 0;
  for (long ev = 0; ev < kEventCap; ++ev) {
    double T = ev == 0 ? sample_conditional_interarrival(m.arrivals, z, g)
                       : sample_interarrival(m.arrivals, g);
    if (m.c > 0.0 && m.c * T >= b - X)
      return {ExitRecord::Side::Upper, t + (b - X) / m.c, jumps};
    if (m.c < 0.0 && m.c * T <= a - X)
      return {ExitRecord::Side::Lower, t + (a - X) / m.c, jumps};
    t += T;
    X += m.c * T + sample_jump(m.jumps, b, g);
    ++jumps;
    if (X >= b) return {ExitRecord::Side::Upper, t, jumps};
    if (X <= a) return {ExitRecord::Side::Lower, t, jumps};
  }
  throw NonTermination("event cap reached before exit");
}

McEstimate finish(long hits, long n, long censored, uint64_t seed) {
  McEstimate e;
  e.n_paths = n;
  e.seed = seed;
  e.censored = censored;
  e.valid = censored <= 1e-6 * static_cast<double>(n);
  long n_eff = n - censored;
  if (n_eff <= 0) {
    e.valid = false;
    return e;
  }
  e.value = static_cast<double>(hits) / static_cast<double>(n_eff);
  e.std_error = std::sqrt(e.value * (1.0 - e.value) / n_eff);
  e.ci_low = std::max(0.0, e.value - 1.96 * e.std_error);
  e.ci_high = std::min(1.0, e.value + 1.96 * e.std_error);
  return e;
}

}  // namespace

ExitRecord simulate_exit(const ProcessModel& model, double x, double a,
                         double b, RngStream& stream) {
  if (!(a < x && x < b)) throw RangeError("start point must lie in (a,b)");
  return run_path(model, x, a, b, stream, 0.0);
}

McEstimate estimate_ep(const ProcessModel& model, double x, double a, double b,
                       long n_paths, uint64_t seed) {
  if (n_paths < 100) throw RangeError("need at least 100 paths");
  if (!(a < x && x < b)) throw RangeError("start point must lie in (a,b)");
  long hits = 0, censored = 0;
  for (long i = 0; i < n_paths; ++i) {
    RngStream g(seed, static_cast<uint64_t>(i));
    try {
      hits += run_path(model, x, a, b, g, 0.0).side == ExitRecord::Side::Upper;
    } catch (const NonTermination&) {
      ++censored;
    }
  }
  return finish(hits, n_paths, censored, seed);
}

McEstimate estimate_conditional_ep(const ProcessModel& model, double x,
                                   double b, double z, long n_paths,
                                   uint64_t seed) {
  if (n_paths < 100) throw RangeError("need at least 100 paths");
  if (z < 0.0) throw RangeError("backward recurrence time must be >= 0");
  if (model.arrivals.sf(z) < 1e-300)
    throw TailUnderflow("interarrival tail vanishes at the given history");
  long hits = 0, censored = 0;
  for (long i = 0; i < n_paths; ++i) {
    RngStream g(seed, static_cast<uint64_t>(i));
    try {
      hits += run_path(model, x, 0.0, b, g, z).side == ExitRecord::Side::Upper;
    } catch (const NonTermination&) {
      ++censored;
    }
  }
  return finish(hits, n_paths, censored, seed);
}

double default_survival_horizon(const ProcessModel& model, double x) {
  double per_cycle =
      model.c * model.arrivals.mean() + model.jumps.mean(0.0);
  if (per_cycle > 0.0 && x > 0.0) return 50.0 * x / per_cycle;
  return 100.0 * model.arrivals.mean();
}

McEstimate estimate_survival(const ProcessModel& model, double x,
                             double horizon, long n_paths, uint64_t seed) {
  if (n_paths < 100) throw RangeError("need at least 100 paths");
  if (!(model.c > 0.0))
    throw RoutingMismatch("survival simulation requires c > 0");
  if (!model.jumps.one_sided_negative(0.0))
    throw RoutingMismatch("survival simulation requires negative severities");
  if (x < 0.0) throw RangeError("start point must be >= 0");
  if (horizon <= 0.0) horizon = default_survival_horizon(model, x);

  long hits = 0, censored = 0;
  for (long i = 0; i < n_paths; ++i) {
    RngStream g(seed, static_cast<uint64_t>(i));
    double X = x, t = 0.0;
    bool ruined = false, done = false;
    for (long ev = 0; ev < kEventCap && !done; ++ev) {
      double T = sample_interarrival(model.arrivals, g);
      if (t + T >= horizon) {
        done = true;
        break;
      }
      t += T;
      X += model.c * T + sample_jump(model.jumps, 0.0, g);
      if (X <= 0.0) {
        ruined = true;
        done = true;
      }
    }
    if (!done)
      ++censored;
    else if (!ruined)
      ++hits;
  }
  McEstimate e = finish(hits, n_paths, censored, seed);
  e.truncation_bias = true;
  return e;
}

}  // namespace escape
