#include <doctest.h>

#include <cmath>

#include "escape/analytic.hpp"
#include "escape/errors.hpp"
#include "escape/solver.hpp"

using namespace escape;

namespace {

EscapeQuery q(double x, double b, double a = 0.0) {
  EscapeQuery e;
  e.x = x;
  e.a = a;
  e.b = b;
  return e;
}

}  // namespace

TEST_CASE("dispatch picks the closed form and reports the route") {
  auto m = build_model(1.0, ArrivalSpec::exponential(1.0),
                       JumpSpec::exponential_negative(2.0));
  EscapeResult r = solve_escape(m, q(1.0, 2.0));
  CHECK(r.route == SolverRoute::PoissonOneSided);
  CHECK(!r.downgraded);
  CHECK(r.probability == doctest::Approx(ep_poisson_one_sided(m, 1.0, 2.0))
                             .epsilon(1e-14));
}

TEST_CASE("translation invariance at the dispatch level") {
  auto m = build_model(1.0, ArrivalSpec::erlang(2, 1.0),
                       JumpSpec::exponential_negative(1.0));
  EscapeResult base = solve_escape(m, q(1.0, 2.0));
  EscapeResult moved = solve_escape(m, q(4.0, 5.0, 3.0));
  CHECK(base.probability == doctest::Approx(moved.probability).epsilon(1e-12));
  CHECK(base.route == moved.route);
}

TEST_CASE("negative drift is answered through reflection") {
  auto m = build_model(-1.0, ArrivalSpec::exponential(1.0),
                       JumpSpec::double_exponential(0.7, 1.0, 2.0));
  EscapeResult r = solve_escape(m, q(0.7, 2.0));
  ProcessModel refl = reflect(m);
  EscapeResult rr = solve_escape(refl, q(2.0 - 0.7, 2.0));
  CHECK(r.probability == doctest::Approx(1.0 - rr.probability).epsilon(1e-12));
  CHECK(r.probability > 0.0);
  CHECK(r.probability < 1.0);
}

TEST_CASE("method hints force the numeric and sampling routes") {
  auto m = build_model(1.0, ArrivalSpec::exponential(1.0),
                       JumpSpec::exponential_negative(2.0));
  double truth = ep_poisson_one_sided(m, 1.0, 2.0);

  EscapeQuery fq = q(1.0, 2.0);
  fq.method = Method::Fredholm;
  EscapeResult f = solve_escape(m, fq);
  CHECK(f.route == SolverRoute::FredholmNumeric);
  CHECK(std::abs(f.probability - truth) < 1e-4);

  EscapeQuery mq = q(1.0, 2.0);
  mq.method = Method::Mc;
  SolveOptions opts;
  opts.mc_paths = 200000;
  EscapeResult mc = solve_escape(m, mq, opts);
  CHECK(mc.route == SolverRoute::MonteCarloOnly);
  REQUIRE(mc.mc.has_value());
  CHECK(std::abs(mc.probability - truth) <= 4.0 * mc.mc->std_error);
}

TEST_CASE("interior-reachable positive atoms go to the numeric solver") {
  auto m = build_model(1.0, ArrivalSpec::exponential(1.0),
                       JumpSpec::exponential_negative(1.0, {{1.5, 0.2}}));
  EscapeResult r = solve_escape(m, q(1.0, 2.0));
  CHECK(r.route == SolverRoute::FredholmNumeric);
  // grid-refined reference
  CHECK(r.probability == doctest::Approx(0.77659936).epsilon(2e-5));
}

TEST_CASE("zero drift dispatch") {
  auto m = build_model(0.0, ArrivalSpec::erlang(3, 2.0), JumpSpec::laplace(1.0));
  EscapeResult r = solve_escape(m, q(0.5, 2.0));
  CHECK(r.route == SolverRoute::ZeroDrift);
  CHECK(r.probability == doctest::Approx((1.0 + 0.5) / 4.0).epsilon(1e-10));
}

TEST_CASE("conditional queries use the history-aware forms") {
  auto m = build_model(1.0, ArrivalSpec::erlang(2, 1.0),
                       JumpSpec::exponential_negative(1.0));
  EscapeQuery cq = q(1.0, 2.0);
  cq.z = 1.0;
  EscapeResult fr = solve_escape(m, cq);
  CHECK(fr.route == SolverRoute::FredholmNumeric);

  SolveOptions opts;
  opts.mc_paths = 300000;
  cq.method = Method::Mc;
  EscapeResult mc = solve_escape(m, cq, opts);
  REQUIRE(mc.mc.has_value());
  CHECK(std::abs(fr.probability - mc.probability) <= 4.0 * mc.mc->std_error);

  // an aged Erlang clock fires sooner: escape is more likely than fresh
  EscapeResult fresh = solve_escape(m, q(1.0, 2.0));
  CHECK(fr.probability != doctest::Approx(fresh.probability).epsilon(1e-3));
}

TEST_CASE("query validation") {
  auto m = build_model(1.0, ArrivalSpec::exponential(1.0),
                       JumpSpec::exponential_negative(1.0));
  CHECK_THROWS_AS(solve_escape(m, q(2.5, 2.0)), RangeError);
  CHECK_THROWS_AS(solve_escape(m, q(-0.5, 2.0)), RangeError);
  EscapeQuery bad = q(1.0, 2.0);
  bad.z = -1.0;
  CHECK_THROWS_AS(solve_escape(m, bad), RangeError);
}
