#include <doctest.h>

#include <cstdlib>
#include <string>

#include "escape/config.hpp"
#include "escape/errors.hpp"

using namespace escape;

namespace {

const char* kMinimal = R"({
  "model": {
    "drift": 1.0,
    "arrivals": {"type": "exponential", "rate": 1.0},
    "jumps": {"type": "exponential_negative", "rate": 2.0}
  },
  "query": {"b": 2.0, "x": 1.0}
})";

}  // namespace

TEST_CASE("minimal config gets the documented defaults") {
  RunConfig cfg = parse_config(kMinimal);
  CHECK(cfg.numerics.grid == 2000);
  CHECK(cfg.numerics.tol == 1e-10);
  CHECK(cfg.numerics.mc_paths == 1000000);
  CHECK(cfg.compare_tol == 5e-4);
  CHECK(cfg.query.x == 1.0);
  CHECK(cfg.query.b == 2.0);
  CHECK(cfg.query.a == 0.0);
  CHECK(cfg.model.c == 1.0);
  CHECK(cfg.model.rho().value() == doctest::Approx(1.0));
}

TEST_CASE("unknown keys are rejected by name") {
  std::string bad = kMinimal;
  bad.replace(bad.find("drift"), 5, "driftt");
  try {
    parse_config(bad);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("driftt") != std::string::npos);
  }
}

TEST_CASE("range validation") {
  std::string rev = kMinimal;
  rev.replace(rev.find("\"b\": 2.0"), 8, "\"b\": 0.5");
  CHECK_THROWS_AS(parse_config(rev), RangeError);

  std::string out = kMinimal;
  out.replace(out.find("\"x\": 1.0"), 8, "\"x\": 3.0");
  CHECK_THROWS_AS(parse_config(out), RangeError);

  CHECK_THROWS_AS(parse_config("{\"query\": {\"b\": 1}}"), SchemaError);
  CHECK_THROWS_AS(parse_config("not json"), SchemaError);
}

TEST_CASE("every model family parses") {
  RunConfig cfg = parse_config(R"({
    "model": {
      "drift": 1.0,
      "arrivals": {"type": "rational", "Q": [2.0, 3.0, 1.0], "R": [2.0, 1.4]},
      "jumps": {"type": "double_exponential", "p": 0.3,
                "rate_pos": 2.0, "rate_neg": 1.0}
    },
    "query": {"a": 1.0, "b": 3.0, "x_grid": [1.5, 2.0, 2.5], "z": 0.5},
    "numerics": {"grid": 500, "tol": 1e-8, "nodes": 32},
    "mc": {"paths": 5000, "seed": 9},
    "method": "fredholm",
    "tolerance": 1e-3,
    "output": "out.csv"
  })");
  CHECK(cfg.x_grid.size() == 3);
  CHECK(cfg.query.z.value() == 0.5);
  CHECK(cfg.numerics.grid == 500);
  CHECK(cfg.numerics.mc_paths == 5000);
  CHECK(cfg.numerics.mc_seed == 9);
  CHECK(cfg.query.method == Method::Fredholm);
  CHECK(cfg.compare_tol == 1e-3);
  CHECK(cfg.output_path == "out.csv");

  RunConfig atoms = parse_config(R"({
    "model": {
      "drift": 0.0,
      "arrivals": {"type": "erlang", "shape": 2, "rate": 1.0},
      "jumps": {"type": "atoms",
                "atoms": [[-3.0, 0.6], {"location": 0.3, "mass": 0.4}]}
    },
    "query": {"b": 2.0, "x": 1.0}
  })");
  CHECK(atoms.model.jumps.atoms.size() == 2);
  CHECK(atoms.model.jumps.atoms[1].location == 0.3);

  RunConfig fixed = parse_config(R"({
    "model": {
      "drift": 1.0,
      "arrivals": {"type": "hypoexponential", "rates": [1.0, 2.0]},
      "jumps": {"type": "fixed", "value": -0.3}
    },
    "query": {"b": 2.0, "x": 1.0}
  })");
  CHECK(fixed.model.jumps.atoms.size() == 1);
  CHECK(fixed.model.jumps.atoms[0].mass == 1.0);
}

TEST_CASE("grid values must stay inside the interval") {
  CHECK_THROWS_AS(parse_config(R"({
    "model": {
      "drift": 1.0,
      "arrivals": {"type": "exponential", "rate": 1.0},
      "jumps": {"type": "laplace", "rate": 1.0}
    },
    "query": {"b": 2.0, "x_grid": [0.5, 2.5]}
  })"),
                  RangeError);
}

TEST_CASE("csv doubles round-trip exactly") {
  for (double v : {1.0 / 3.0, 0.87528902335940018, 1e-300, 2.0, 0.0,
                   5.8575446941988574e-05}) {
    std::string s = csv_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}
