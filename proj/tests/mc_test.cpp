#include <doctest.h>

#include <cmath>

#include "escape/analytic.hpp"
#include "escape/errors.hpp"
#include "escape/fredholm.hpp"
#include "escape/mc.hpp"

using namespace escape;

namespace {

bool within_4se(const McEstimate& e, double truth) {
  return std::abs(e.value - truth) <= 4.0 * std::max(e.std_error, 1e-12);
}

}  // namespace

TEST_CASE("stream reproducibility and independence") {
  RngStream a(42, 7), b(42, 7), c(42, 8);
  bool differ = false;
  for (int i = 0; i < 100; ++i) {
    uint64_t va = a.next_u64();
    CHECK(va == b.next_u64());
    if (va != c.next_u64()) differ = true;
  }
  CHECK(differ);

  auto m = build_model(1.0, ArrivalSpec::exponential(1.0),
                       JumpSpec::exponential_negative(2.0));
  McEstimate e1 = estimate_ep(m, 1.0, 0.0, 2.0, 20000, 5);
  McEstimate e2 = estimate_ep(m, 1.0, 0.0, 2.0, 20000, 5);
  CHECK(e1.value == e2.value);
  McEstimate e3 = estimate_ep(m, 1.0, 0.0, 2.0, 20000, 6);
  CHECK(e1.value != e3.value);
}

TEST_CASE("degenerate exits") {
  // all mass escapes upward: certain escape, zero jumps needed downward
  auto up = build_model(1.0, ArrivalSpec::exponential(1.0),
                        JumpSpec::atoms_only({{5.0, 1.0}}));
  McEstimate e = estimate_ep(up, 1.0, 0.0, 2.0, 500, 1);
  CHECK(e.value == 1.0);
  CHECK(e.std_error == 0.0);

  // only a far negative atom: escape means the drift reaches b first
  auto m = build_model(1.0, ArrivalSpec::exponential(1.0),
                       JumpSpec::atoms_only({{-4.0, 1.0}}));
  McEstimate d = estimate_ep(m, 1.0, 0.0, 2.0, 200000, 2);
  CHECK(within_4se(d, std::exp(-1.0)));
}

TEST_CASE("per-path upper/lower complement") {
  auto m = build_model(1.0, ArrivalSpec::exponential(1.0),
                       JumpSpec::exponential_negative(1.0));
  int upper = 0, lower = 0;
  for (int i = 0; i < 2000; ++i) {
    RngStream g(11, i);
    ExitRecord r = simulate_exit(m, 1.0, 0.0, 2.0, g);
    (r.side == ExitRecord::Side::Upper ? upper : lower)++;
    CHECK(r.exit_time >= 0.0);
  }
  CHECK(upper + lower == 2000);
}

TEST_CASE("matches the Poisson + exponential closed form") {
  auto m = build_model(1.0, ArrivalSpec::exponential(1.0),
                       JumpSpec::exponential_negative(2.0));
  double truth = ep_poisson_one_sided(m, 1.0, 2.0);
  McEstimate e = estimate_ep(m, 1.0, 0.0, 2.0, 400000, 3);
  CHECK(within_4se(e, truth));
  CHECK(e.censored == 0);
  CHECK(e.valid);
  CHECK(e.ci_low <= e.value);
  CHECK(e.ci_high >= e.value);
}

TEST_CASE("zero drift symmetric Laplace gives one half") {
  auto m = build_model(0.0, ArrivalSpec::exponential(1.0), JumpSpec::laplace(1.0));
  McEstimate e = estimate_ep(m, 1.0, 0.0, 2.0, 200000, 4);
  CHECK(within_4se(e, 0.5));
}

TEST_CASE("Gamma(1/2) severities agree with the erf closed form") {
  auto m = build_model(1.0, ArrivalSpec::exponential(1.0),
                       JumpSpec::gamma_half_negative(1.0));
  double truth = ep_poisson_one_sided(m, 1.0, 3.0);
  McEstimate e = estimate_ep(m, 1.0, 0.0, 3.0, 200000, 12);
  CHECK(within_4se(e, truth));
}

TEST_CASE("rational severity sampling agrees with Fredholm") {
  double g = 1.5;
  auto erl2 = RationalTransform::make({g * g, 2.0 * g, 1.0}, {g * g});
  auto m = build_model(1.0, ArrivalSpec::exponential(0.7),
                       JumpSpec::rational_cf(erl2));
  GridSolution s = solve_fredholm(m, 2.0, 800);
  McEstimate e = estimate_ep(m, 1.0, 0.0, 2.0, 100000, 13);
  CHECK(within_4se(e, s.eval(1.0)));
}

TEST_CASE("Erlang arrivals agree with the determinant route") {
  auto m = build_model(1.0, ArrivalSpec::erlang(2, 1.0),
                       JumpSpec::exponential_negative(1.0));
  double truth = ep_rational_arrivals(m, 1.0, 2.0);
  McEstimate e = estimate_ep(m, 1.0, 0.0, 2.0, 200000, 9);
  CHECK(within_4se(e, truth));
}

TEST_CASE("reflection identity for negative drift") {
  auto m = build_model(-1.0, ArrivalSpec::exponential(1.0),
                       JumpSpec::double_exponential(0.7, 1.0, 2.0));
  ProcessModel r = reflect(m);
  McEstimate e = estimate_ep(m, 0.7, 0.0, 2.0, 150000, 21);
  McEstimate f = estimate_ep(r, 2.0 - 0.7, 0.0, 2.0, 150000, 22);
  double joint = std::hypot(e.std_error, f.std_error);
  CHECK(std::abs(e.value - (1.0 - f.value)) <= 4.0 * joint);
}

TEST_CASE("translation leaves shared-stream estimates bit-identical") {
  auto m = build_model(1.0, ArrivalSpec::exponential(1.0),
                       JumpSpec::exponential_negative(2.0));
  McEstimate e = estimate_ep(m, 1.0, 0.0, 2.0, 20000, 8);
  McEstimate f = estimate_ep(m, 4.5, 3.5, 5.5, 20000, 8);
  CHECK(e.value == f.value);
}

TEST_CASE("conditional history sampling") {
  auto exp_m = build_model(1.0, ArrivalSpec::exponential(1.0),
                           JumpSpec::exponential_negative(1.0));
  // memoryless arrivals: any history gives the same law
  McEstimate base = estimate_ep(exp_m, 1.0, 0.0, 2.0, 150000, 31);
  McEstimate cond = estimate_conditional_ep(exp_m, 1.0, 2.0, 2.0, 150000, 32);
  CHECK(std::abs(base.value - cond.value) <=
        4.0 * std::hypot(base.std_error, cond.std_error));

  // Erlang(2): an old clock is closer to firing, so history matters
  auto erl = build_model(1.0, ArrivalSpec::erlang(2, 1.0),
                         JumpSpec::exponential_negative(1.0));
  McEstimate z0 = estimate_conditional_ep(erl, 1.0, 2.0, 0.0, 400000, 33);
  McEstimate z1 = estimate_conditional_ep(erl, 1.0, 2.0, 1.0, 400000, 34);
  CHECK(std::abs(z0.value - z1.value) >
        4.0 * std::hypot(z0.std_error, z1.std_error));

  // z = 0 is the unconditional law
  McEstimate u = estimate_ep(erl, 1.0, 0.0, 2.0, 150000, 35);
  McEstimate v = estimate_conditional_ep(erl, 1.0, 2.0, 0.0, 150000, 36);
  CHECK(std::abs(u.value - v.value) <=
        4.0 * std::hypot(u.std_error, v.std_error));

  CHECK_THROWS_AS(estimate_conditional_ep(erl, 1.0, 2.0, 1e6, 1000, 1),
                  TailUnderflow);
}

TEST_CASE("truncated survival") {
  auto m = build_model(1.0, ArrivalSpec::exponential(1.0),
                       JumpSpec::exponential_negative(2.0));
  double truth = survival_poisson(m, 0.0);  // = 0.5
  McEstimate e = estimate_survival(m, 0.0, 200.0, 150000, 41);
  CHECK(e.truncation_bias);
  // one-sided truncation bias: the estimate can only sit above the truth
  CHECK(e.value >= truth - 4.0 * e.std_error);
  CHECK(e.value <= truth + 4.0 * e.std_error + 0.01);

  McEstimate far = estimate_survival(m, 50.0, 0.0, 1000, 42);
  CHECK(far.value > 0.999);

  // mean drop >= drift per arrival: ruin is certain
  auto ruin = build_model(1.0, ArrivalSpec::exponential(2.0),
                          JumpSpec::exponential_negative(1.0));
  McEstimate dead = estimate_survival(ruin, 1.0, 400.0, 5000, 43);
  CHECK(dead.value < 0.05);

  CHECK_THROWS_AS(estimate_survival(m, -1.0, 10.0, 1000, 1), RangeError);
  auto flat = build_model(0.0, ArrivalSpec::exponential(1.0),
                          JumpSpec::exponential_negative(1.0));
  CHECK_THROWS_AS(estimate_survival(flat, 1.0, 10.0, 1000, 1), RoutingMismatch);
}

TEST_CASE("estimate preconditions") {
  auto m = build_model(1.0, ArrivalSpec::exponential(1.0),
                       JumpSpec::exponential_negative(1.0));
  CHECK_THROWS_AS(estimate_ep(m, 1.0, 0.0, 2.0, 50, 1), RangeError);
  CHECK_THROWS_AS(estimate_ep(m, 2.5, 0.0, 2.0, 1000, 1), RangeError);
}
