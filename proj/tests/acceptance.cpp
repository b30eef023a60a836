// End-to-end acceptance gate: one pass/fail line per criterion.
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "escape/analytic.hpp"
#include "escape/errors.hpp"
#include "escape/fredholm.hpp"
#include "escape/mc.hpp"
#include "escape/model.hpp"
#include "escape/solver.hpp"

using namespace escape;

namespace {

int failures = 0;

void report(int id, const char* title, bool ok, const std::string& detail) {
  std::printf("[%s] %2d. %s  (%s)\n", ok ? "PASS" : "FAIL", id, title,
              detail.c_str());
  if (!ok) ++failures;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// pi(u) = 1 - (rho/g) e^{(rho-g)u} for Exponential(rho) arrivals and
// Exponential(g) negative jumps, c = 1
double poissexp_closed(double rho, double g, double x, double b) {
  auto pi = [&](double u) { return 1.0 - rho / g * std::exp((rho - g) * u); };
  return pi(x) / pi(b);
}

// explicit 3x3 determinant for hyperexponential arrivals
// f = p l1 e^{-l1 t} + q l2 e^{-l2 t}, Exponential(g) negative jumps, c = 1
double hyperexp_closed(double p, double l1, double l2, double g, double b,
                       double x) {
  double q = 1.0 - p;
  double A = g - l1 - l2;
  double B = l1 * l2 - g * (q * l1 + p * l2);
  double sp = 0.5 * (-A + std::sqrt(A * A - 4.0 * B));
  double sm = 0.5 * (-A - std::sqrt(A * A - 4.0 * B));
  double f0 = p * l1 + q * l2;
  auto num = [&](double u) {
    return sp * (f0 - (sp + g)) * std::exp(sp * b) *
               ((sm + g) * std::exp(sm * u) - g) -
           sm * (f0 - (sm + g)) * std::exp(sm * b) *
               ((sp + g) * std::exp(sp * u) - g);
  };
  return num(x) / num(b);
}

void criterion1() {
  auto m = build_model(1.0, ArrivalSpec::exponential(1.0),
                       JumpSpec::exponential_negative(2.0));
  GridSolution s = solve_fredholm(m, 2.0, 2000);
  double worst = 0.0;
  for (int i = 0; i <= 50; ++i) {
    double x = 2.0 * i / 50.0;
    worst = std::max(worst,
                     std::abs(s.eval(x) - poissexp_closed(1.0, 2.0, x, 2.0)));
  }
  double at1 = s.eval(1.0);
  bool ok = worst <= 1e-4 && std::abs(at1 - 0.87623) <= 1.5e-3;
  report(1, "integral equation matches the one-sided closed form", ok,
         "max dev " + fmt(worst) + ", N(1)=" + fmt(at1));
}

void criterion2() {
  auto m = build_model(1.0, ArrivalSpec::erlang(2, 1.0),
                       JumpSpec::exponential_negative(2.0));
  GridSolution s = solve_fredholm(m, 2.0, 2000);
  AnalyticDiag diag;
  double worst = 0.0;
  for (int i = 0; i <= 50; ++i) {
    double x = 2.0 * i / 50.0;
    worst = std::max(worst,
                     std::abs(ep_rational_arrivals(m, x, 2.0, &diag) - s.eval(x)));
  }
  bool ok = worst <= 5e-4 && diag.bc_residual <= 1e-8 && diag.has_solution &&
            std::abs(diag.solution.eval(2.0) - 1.0) <= 1e-8;
  report(2, "determinant route agrees with the integral equation", ok,
         "max dev " + fmt(worst) + ", bc residual " + fmt(diag.bc_residual));
}

void criterion3() {
  double p = 0.3, l1 = 1.0, l2 = 2.0, g = 1.0, b = 2.0;
  Poly Q{l1 * l2, l1 + l2, 1.0};
  Poly R{l1 * l2, p * l1 + (1.0 - p) * l2};
  auto m = build_model(1.0, ArrivalSpec::rational(RationalTransform::make(Q, R)),
                       JumpSpec::exponential_negative(g));
  double worst = 0.0;
  for (int i = 0; i <= 10; ++i) {
    double x = b * i / 10.0;
    double ref = hyperexp_closed(p, l1, l2, g, b, x);
    double rel = std::abs(ep_rational_arrivals(m, x, b) - ref) /
                 std::max(1.0, std::abs(ref));
    worst = std::max(worst, rel);
  }
  report(3, "hyperexponential arrivals reproduce the explicit determinant",
         worst <= 1e-9, "max rel dev " + fmt(worst));
}

void criterion4() {
  struct Case {
    const char* name;
    ProcessModel m;
    double x, b, analytic;
  };
  auto poiss = build_model(1.0, ArrivalSpec::exponential(1.0),
                           JumpSpec::exponential_negative(2.0));
  auto erl = build_model(1.0, ArrivalSpec::erlang(2, 1.0),
                         JumpSpec::exponential_negative(2.0));
  auto lower = build_model(1.0, ArrivalSpec::exponential(1.0),
                           JumpSpec::double_exponential(0.6, 1.5, 2.0, 0, -1));
  auto lap = build_model(1.0, ArrivalSpec::exponential(1.0),
                         JumpSpec::laplace(1.0));
  auto flat = build_model(0.0, ArrivalSpec::exponential(1.0),
                          JumpSpec::double_exponential(0.3, 2.0, 1.0));
  std::vector<Case> cases = {
      {"poissexp", poiss, 1.0, 2.0, ep_poisson_one_sided(poiss, 1.0, 2.0)},
      {"erlang", erl, 1.0, 2.0, ep_rational_arrivals(erl, 1.0, 2.0)},
      {"lower", lower, 1.0, 2.0, ep_two_sided_lower(lower, 1.0, 2.0)},
      {"laplace", lap, 1.0, 2.0, ep_poisson_rational_cf(lap, 1.0, 2.0)},
      {"flat", flat, 1.0, 2.0, ep_zero_drift(flat, 1.0, 2.0)},
  };
  bool ok = true;
  double worst_sigma = 0.0;
  std::string bad;
  uint64_t seed = 101;
  for (const auto& c : cases) {
    McEstimate e = estimate_ep(c.m, c.x, 0.0, c.b, 1000000, seed++);
    double sig = std::abs(c.analytic - e.value) / e.std_error;
    worst_sigma = std::max(worst_sigma, sig);
    if (!e.valid || sig > 4.0) {
      ok = false;
      bad += std::string(" ") + c.name;
    }
  }
  report(4, "five analytic cases triangulated by Monte Carlo", ok,
         "worst |dev|/stderr " + fmt(worst_sigma) + bad);
}

void criterion5() {
  std::vector<ProcessModel> models = {
      build_model(1.0, ArrivalSpec::exponential(1.0),
                  JumpSpec::exponential_negative(2.0)),
      build_model(1.0, ArrivalSpec::exponential(1.0),
                  JumpSpec::atoms_only({{-0.7, 1.0}})),
      build_model(1.0, ArrivalSpec::exponential(1.0),
                  JumpSpec::gamma_half_negative(2.0)),
      build_model(1.0, ArrivalSpec::exponential(1.0),
                  JumpSpec::rational_cf(
                      RationalTransform::make({4.0, 4.0, 1.0}, {4.0}))),
  };
  double worst0 = 0.0;
  for (const auto& m : models)
    worst0 = std::max(worst0, std::abs(poisson_pi(m, 0.0) - 1.0));

  auto gh = build_model(1.0, ArrivalSpec::exponential(1.0),
                        JumpSpec::gamma_half_negative(2.0));
  double worst_t = 0.0;
  for (int i = 1; i <= 10; ++i) {
    double x = 0.3 * i;
    worst_t = std::max(worst_t,
                       std::abs(poisson_pi_talbot(gh, x) - poisson_pi(gh, x)));
  }
  bool ok = worst0 <= 1e-8 && worst_t <= 1e-7;
  report(5, "fundamental solution normalization and contour inversion", ok,
         "|pi(0)-1| " + fmt(worst0) + ", Talbot dev " + fmt(worst_t));
}

void criterion6() {
  double g = 1.3, b = 2.0;
  auto m = build_model(0.0, ArrivalSpec::exponential(1.0), JumpSpec::laplace(g));
  double worst_sym = 0.0, worst_lin = 0.0;
  for (int i = 0; i <= 50; ++i) {
    double x = b * i / 50.0;
    double n = ep_zero_drift(m, x, b);
    worst_sym = std::max(worst_sym,
                         std::abs(n + ep_zero_drift(m, b - x, b) - 1.0));
    worst_lin = std::max(worst_lin,
                         std::abs(n - (1.0 + g * x) / (2.0 + g * b)));
  }
  bool ok = worst_sym <= 1e-7 && worst_lin <= 1e-8;
  report(6, "zero-drift Laplace symmetry and linear form", ok,
         "symmetry " + fmt(worst_sym) + ", linear " + fmt(worst_lin));
}

void criterion7() {
  // drift up, single fixed negative jump: series solution vs Monte Carlo
  auto up = build_model(1.0, ArrivalSpec::exponential(1.0),
                        JumpSpec::atoms_only({{-0.3, 1.0}}));
  double a_up = ep_poisson_one_sided(up, 1.0, 2.0);
  McEstimate e_up = estimate_ep(up, 1.0, 0.0, 2.0, 1000000, 201);
  double sig_up = std::abs(a_up - e_up.value) / e_up.std_error;

  // no drift, fixed positive jump p / sure-exit negative jump q
  double p = 0.6, y1 = 0.3, x = 1.0, b = 2.0;
  auto flat = build_model(0.0, ArrivalSpec::exponential(1.0),
                          JumpSpec::atoms_only({{y1, p}, {-5.0, 1.0 - p}}));
  double expect = std::pow(p, std::floor((b - x) / y1) + 1.0);
  double a_flat = ep_zero_drift(flat, x, b);
  McEstimate e_flat = estimate_ep(flat, x, 0.0, b, 1000000, 202);
  double sig_flat = std::abs(expect - e_flat.value) / e_flat.std_error;

  bool ok = e_up.valid && sig_up <= 4.0 &&
            std::abs(a_flat - expect) <= 1e-12 && e_flat.valid &&
            sig_flat <= 4.0;
  report(7, "fixed-jump series and driftless power law", ok,
         "|dev|/stderr " + fmt(sig_up) + " and " + fmt(sig_flat) +
             ", exact dev " + fmt(std::abs(a_flat - expect)));
}

void criterion8() {
  auto m = build_model(1.0, ArrivalSpec::exponential(1.0),
                       JumpSpec::exponential_negative(2.0));
  GridSolution s = solve_fredholm(m, 2.0, 2000);
  double worst_ratio = 0.0;
  for (size_t k = 0; k + 1 < s.sup_diffs.size(); ++k) {
    if (s.sup_diffs[k] <= 1e-12) break;
    worst_ratio = std::max(worst_ratio, s.sup_diffs[k + 1] / s.sup_diffs[k]);
  }
  double true_err = 0.0;
  for (size_t i = 0; i < s.nodes.size(); ++i)
    true_err = std::max(true_err, std::abs(s.values[i] -
                                           poissexp_closed(1.0, 2.0,
                                                           s.nodes[i], 2.0)));
  // domination check at a tolerance where iteration error is the
  // dominant term, so the contraction bound must cover the whole deviation
  GridSolution loose = solve_fredholm(m, 2.0, 2000, 3e-5);
  double loose_err = 0.0;
  for (size_t i = 0; i < loose.nodes.size(); ++i)
    loose_err = std::max(loose_err,
                         std::abs(loose.values[i] -
                                  poissexp_closed(1.0, 2.0, loose.nodes[i],
                                                  2.0)));
  bool ok = worst_ratio <= s.L * (1.0 + 1e-6) && true_err <= 1e-4 &&
            loose.error_bound >= loose_err;
  report(8, "Picard contraction rate and a-posteriori bound", ok,
         "worst ratio " + fmt(worst_ratio) + " vs L " + fmt(s.L) +
             ", loose bound " + fmt(loose.error_bound) + " >= err " +
             fmt(loose_err) + ", tight err " + fmt(true_err));
}

void criterion9() {
  auto m = build_model(1.0, ArrivalSpec::erlang(2, 1.0),
                       JumpSpec::exponential_negative(2.0));
  GridSolution s = solve_fredholm(m, 2.0, 2000);
  double c1 = conditional_ep(m, s, 1.0, 1.0);
  double c0 = conditional_ep(m, s, 1.0, 0.0);
  McEstimate e = estimate_conditional_ep(m, 1.0, 2.0, 1.0, 1000000, 301);
  double sig = std::abs(c1 - e.value) / e.std_error;
  double gap = std::abs(c1 - c0) / e.std_error;
  bool ok = e.valid && sig <= 4.0 && gap > 4.0;
  report(9, "history-conditioned probability checked by conditioned paths",
         ok, "|dev|/stderr " + fmt(sig) + ", z-effect " + fmt(gap) + " se");
}

void criterion10() {
  double v = 0.5, g = 200.0, b = 2.0;
  auto m = build_model(0.0, ArrivalSpec::exponential(1.0),
                       JumpSpec::double_exponential(0.5, g + v, g - v));
  double worst = 0.0;
  for (int i = 0; i <= 20; ++i) {
    double x = b * i / 20.0;
    double bm = (1.0 - std::exp(v * x)) / (1.0 - std::exp(v * b));
    worst = std::max(worst, std::abs(ep_zero_drift(m, x, b) - bm));
  }
  report(10, "small-jump limit approaches the Brownian scale function",
         worst <= 0.02, "max dev " + fmt(worst));
}

void criterion11() {
  std::mt19937_64 rng(20260824);
  auto uni = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  int done = 0, tried = 0;
  double w_tr = 0.0, w_rf = 0.0, w_cp = 0.0, w_mx = 0.0, w_mb = 0.0;
  while (done < 100 && tried < 1000) {
    ++tried;
    double c = rng() % 4 == 0 ? 0.0 : uni(0.4, 1.6);
    ArrivalSpec arr = rng() % 2 == 0 ? ArrivalSpec::exponential(uni(0.5, 1.5))
                                     : ArrivalSpec::erlang(2, uni(1.0, 2.5));
    JumpSpec j;
    switch (rng() % 3) {
      case 0: j = JumpSpec::exponential_negative(uni(0.8, 2.5)); break;
      case 1: j = JumpSpec::laplace(uni(0.8, 2.5)); break;
      default:
        j = JumpSpec::double_exponential(uni(0.25, 0.75), uni(0.8, 2.5),
                                         uni(0.8, 2.5));
    }
    if (c == 0.0 && j.kind == JumpSpec::Kind::ExponentialNegative) continue;
    ProcessModel m = build_model(c, arr, j);
    double a = uni(-1.0, 1.0), span = uni(1.0, 2.2);
    double b = a + span, x = a + uni(0.15, 0.85) * span;
    double t = uni(-2.0, 2.0);
    try {
      double n = solve_escape(m, {x, a, b}).probability;

      double tr = solve_escape(m, {x + t, a + t, b + t}).probability;
      w_tr = std::max(w_tr, std::abs(n - tr));

      double rf = solve_escape(reflect(m), {a + b - x, a, b}).probability;
      w_rf = std::max(w_rf, std::abs(n + rf - 1.0));

      ProcessModel mm = m.c < 0.0 ? reflect(m) : m;
      double xx = m.c < 0.0 ? b - x + a : x;
      GridSolution up = solve_fredholm(mm, span, 400);
      GridSolution dn = solve_fredholm_complement(mm, span, 400);
      double gap = std::abs(up.eval(xx - a) + dn.eval(xx - a) - 1.0) -
                   up.error_bound - dn.error_bound;
      w_cp = std::max(w_cp, gap);

      double x2 = x + 0.1 * (b - x);
      double n2 = solve_escape(m, {x2, a, b}).probability;
      w_mx = std::max(w_mx, n - n2);

      double nb = solve_escape(m, {x, a, b + 0.3}).probability;
      w_mb = std::max(w_mb, nb - n);
    } catch (const Error&) {
      continue;  // non-contractive draw; take another
    }
    ++done;
  }
  bool ok = done == 100 && w_tr <= 1e-9 && w_rf <= 1e-7 && w_cp <= 5e-4 &&
            w_mx <= 1e-7 && w_mb <= 1e-7;
  report(11, "translation, reflection, complementarity, monotonicity", ok,
         "draws " + std::to_string(done) + ", trans " + fmt(w_tr) +
             ", refl " + fmt(w_rf) + ", compl " + fmt(w_cp) + ", mono " +
             fmt(std::max(w_mx, w_mb)));
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  criterion11();
  std::printf("%s: %d/11 criteria passed\n",
              failures == 0 ? "ACCEPTED" : "REJECTED", 11 - failures);
  return failures == 0 ? 0 : 1;
}
