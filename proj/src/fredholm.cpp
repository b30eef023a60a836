#include "escape/fredholm.hpp"

#include <algorithm>
#include <cmath>

#include "escape/errors.hpp"

namespace escape {

double GridSolution::eval(double x) const {
  if (x <= nodes.front()) return values.front();
  if (x >= nodes.back()) return values.back();
  double h = nodes[1] - nodes[0];
  size_t i = std::min(nodes.size() - 2, static_cast<size_t>(x / h));
  double w = (x - nodes[i]) / h;
  return (1.0 - w) * values[i] + w * values[i + 1];
}

double contraction_constant(const ProcessModel& model, double b) {
  double time_part = model.c > 0.0 ? model.arrivals.cdf(b / model.c) : 1.0;
  double jump_part = std::max(
      0.0, 1.0 - model.jumps.tail_geq(b, b) - model.jumps.cdf_at(-b, b));
  double L = time_part * jump_part;
  if (L >= 1.0 - 1e-12)
    throw NotContractive("integral operator is not a contraction on (0,b)");
  return L;
}

namespace {

// 4-point Gauss-Legendre on [-1,1]
constexpr double kGx[4] = {-0.8611363115940526, -0.3399810435848563,
                           0.3399810435848563, 0.8611363115940526};
constexpr double kGw[4] = {0.3478548451374538, 0.6521451548625461,
                           0.6521451548625461, 0.3478548451374538};

// Product-integration kernel: integrals against piecewise-linear
// interpolants, with panel masses taken from the exact cdfs so that
// constant functions are reproduced exactly.
struct Kernel {
  const ProcessModel& m;
  double b;
  int M;
  double h;
  bool complement;
  // severity panel moments, panel d covers offsets [d*h, (d+1)*h]
  std::vector<double> JI0, JI1;  // index d+M, d = -M..M-1
  // arrival panel moments in the drift-mapped variable (c > 0 only)
  std::vector<double> FI0, FI1;  // d = 0..M-1
  std::vector<double> sf_tb;     // exact survival at (b-x_i)/c
  std::vector<double> edge;      // one-jump exit (or ruin) mass at u_j
  std::vector<double> kmass;     // interior jump mass seen from u_j
  struct InteriorAtom {
    double mass;
    double loc;
  };
  std::vector<InteriorAtom> atoms;

  Kernel(const ProcessModel& model, double bb, int MM, bool comp)
      : m(model), b(bb), M(MM), h(bb / MM), complement(comp) {
    // atoms must be known before the panel moments: cont_mass excludes them
    for (const auto& a : m.jumps.atoms)
      if (a.mass > 0.0) atoms.push_back({a.mass, a.location});
    JI0.assign(2 * M, 0.0);
    JI1.assign(2 * M, 0.0);
    for (int d = -M; d < M; ++d) {
      double lo = d * h, hi = (d + 1) * h;
      JI0[d + M] = cont_mass(hi) - cont_mass(lo);
      double acc = 0.0;
      for (int g = 0; g < 4; ++g) {
        double y = 0.5 * (lo + hi) + 0.5 * h * kGx[g];
        acc += kGw[g] * (y - lo) / h * m.jumps.density(y, b);
      }
      JI1[d + M] = acc * 0.5 * h;
    }
    if (m.c > 0.0) {
      FI0.assign(M, 0.0);
      FI1.assign(M, 0.0);
      for (int d = 0; d < M; ++d) {
        double lo = d * h, hi = (d + 1) * h;
        FI0[d] = m.arrivals.cdf(hi / m.c) - m.arrivals.cdf(lo / m.c);
        double acc = 0.0;
        for (int g = 0; g < 4; ++g) {
          double t = 0.5 * (lo + hi) + 0.5 * h * kGx[g];
          acc += kGw[g] * (t - lo) / h * m.arrivals.pdf(t / m.c);
        }
        FI1[d] = acc * 0.5 * h / m.c;
      }
      sf_tb.resize(M + 1);
      for (int i = 0; i <= M; ++i) sf_tb[i] = m.arrivals.sf((b - i * h) / m.c);
    }
    kmass.resize(M + 1);
    edge.resize(M + 1);
    for (int j = 0; j <= M; ++j) {
      double u = j * h;
      double km = cont_mass(b - u) - cont_mass(-u);
      for (const auto& a : atoms) {
        double target = u + a.loc;
        // a jump landing exactly on the lower boundary makes the integrand
        // discontinuous at this node; the averaged value keeps the panel
        // rule second-order accurate
        if (std::abs(target) <= 1e-9 * h)
          km += 0.5 * a.mass;
        else if (target > 0.0 && target < b)
          km += a.mass;
      }
      kmass[j] = km;
      double up = m.jumps.tail_geq(b - u, b);
      edge[j] = complement ? std::max(0.0, 1.0 - up - km) : up;
    }
  }

  // continuous-part severity cdf (atoms excluded)
  double cont_mass(double y) const {
    double v = m.jumps.cdf_at(y, b);
    for (const auto& a : atoms)
      if (a.loc <= y) v -= a.mass;
    return v;
  }

  double interp(const std::vector<double>& N, double x) const {
    if (x <= 0.0) return N.front();
    if (x >= b) return N.back();
    size_t i = std::min<size_t>(M - 1, static_cast<size_t>(x / h));
    double w = (x - i * h) / h;
    return (1.0 - w) * N[i] + w * N[i + 1];
  }

  // G[j] = integral of N(u_j + y) over the interior jump measure
  void gvec(const std::vector<double>& N, std::vector<double>& G) const {
    for (int j = 0; j <= M; ++j) {
      double acc = 0.0;
      for (int d = -j; d < M - j; ++d)
        acc += (JI0[d + M] - JI1[d + M]) * N[j + d] + JI1[d + M] * N[j + d + 1];
      for (const auto& a : atoms) {
        double target = j * h + a.loc;
        if (std::abs(target) <= 1e-9 * h)
          acc += 0.5 * a.mass * N[0];  // averaged boundary-landing value
        else if (target > 0.0 && target < b)
          acc += a.mass * interp(N, target);
      }
      G[j] = acc;
    }
  }

  // one Picard sweep; returns the sup-difference
  double sweep(std::vector<double>& N, std::vector<double>& G,
               std::vector<double>& next) const {
    gvec(N, G);
    double d = 0.0;
    if (m.c > 0.0) {
      for (int i = 0; i <= M; ++i) {
        double acc = complement ? 0.0 : sf_tb[i];
        for (int dd = 0; dd < M - i; ++dd) {
          double bl = edge[i + dd] + G[i + dd];
          double br = edge[i + dd + 1] + G[i + dd + 1];
          acc += (FI0[dd] - FI1[dd]) * bl + FI1[dd] * br;
        }
        next[i] = acc;
        d = std::max(d, std::abs(next[i] - N[i]));
      }
    } else {
      for (int i = 0; i <= M; ++i) {
        next[i] = edge[i] + G[i];
        d = std::max(d, std::abs(next[i] - N[i]));
      }
    }
    N.swap(next);
    return d;
  }
};

}  // namespace

static GridSolution solve_impl(const ProcessModel& model, double b, int M,
                               double tol, bool complement) {
  if (model.c < 0.0)
    throw RoutingMismatch("Fredholm solver requires c >= 0; reflect first");
  if (!(b > 0.0)) throw RangeError("upper barrier must be positive");
  GridSolution sol;
  sol.b = b;
  sol.complement = complement;
  sol.L = contraction_constant(model, b);
  Kernel K(model, b, M, complement);

  std::vector<double> N(M + 1), G(M + 1), next(M + 1);
  for (int i = 0; i <= M; ++i) {
    // trivial-case value as the initial iterate
    if (model.c > 0.0) {
      double p2 = model.jumps.tail_geq(b - i * K.h, b);
      double q2 = model.jumps.cdf_at(-i * K.h, b);
      N[i] = complement ? q2 * (1.0 - K.sf_tb[i])
                        : K.sf_tb[i] + p2 * (1.0 - K.sf_tb[i]);
    } else {
      N[i] = K.edge[i];
    }
  }

  const int cap = 100000;
  for (int it = 0; it < cap; ++it) {
    double d = K.sweep(N, G, next);
    sol.sup_diffs.push_back(d);
    sol.iterations = it + 1;
    if (d <= tol * (1.0 - sol.L)) {
      sol.error_bound = sol.L * d / (1.0 - sol.L);
      break;
    }
    if (it + 1 == cap) {
      sol.iteration_cap_hit = true;
      sol.error_bound = sol.L * d / (1.0 - sol.L);
    }
  }

  for (double& v : N) {
    double ex = std::max(-v, v - 1.0);
    sol.pre_clamp_excursion = std::max(sol.pre_clamp_excursion, ex);
    v = std::clamp(v, 0.0, 1.0);
  }
  sol.values = std::move(N);
  sol.nodes.resize(M + 1);
  for (int i = 0; i <= M; ++i) sol.nodes[i] = i * K.h;
  return sol;
}

GridSolution solve_fredholm(const ProcessModel& model, double b, int M,
                            double tol) {
  return solve_impl(model, b, M, tol, false);
}

GridSolution solve_fredholm_complement(const ProcessModel& model, double b,
                                       int M, double tol) {
  return solve_impl(model, b, M, tol, true);
}

double conditional_ep(const ProcessModel& model, const GridSolution& sol,
                      double x, double z) {
  if (z < 0.0) throw RangeError("backward recurrence time must be >= 0");
  if (sol.complement)
    throw RoutingMismatch("conditional form is defined for the upper-exit solution");
  double fz = model.arrivals.sf(z);
  if (fz < 1e-300)
    throw TailUnderflow("interarrival tail vanishes at the given history");
  if (model.c == 0.0) return sol.eval(x);  // history-independent form

  const int M = static_cast<int>(sol.nodes.size()) - 1;
  const double b = sol.b, h = b / M, c = model.c;
  Kernel K(model, b, M, /*complement=*/false);
  std::vector<double> G(M + 1);
  K.gvec(sol.values, G);

  // panel moments of the time-shifted interarrival density
  std::vector<double> Z0(M), Z1(M);
  for (int d = 0; d < M; ++d) {
    double lo = d * h, hi = (d + 1) * h;
    Z0[d] = model.arrivals.cdf(z + hi / c) - model.arrivals.cdf(z + lo / c);
    double acc = 0.0;
    for (int g = 0; g < 4; ++g) {
      double t = 0.5 * (lo + hi) + 0.5 * h * kGx[g];
      acc += kGw[g] * (t - lo) / h * model.arrivals.pdf(z + t / c);
    }
    Z1[d] = acc * 0.5 * h / c;
  }

  auto at_node = [&](int i) {
    double acc = model.arrivals.sf(z + (b - i * h) / c);
    for (int d = 0; d < M - i; ++d) {
      double bl = K.edge[i + d] + G[i + d];
      double br = K.edge[i + d + 1] + G[i + d + 1];
      acc += (Z0[d] - Z1[d]) * bl + Z1[d] * br;
    }
    return acc;
  };

  double pos = std::clamp(x / h, 0.0, static_cast<double>(M));
  int i = std::min(M - 1, static_cast<int>(pos));
  double w = pos - i;
  double num = (1.0 - w) * at_node(i) + w * at_node(i + 1);
  return std::clamp(num / fz, 0.0, 1.0);
}

}  // namespace escape
