#include "escape/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "escape/errors.hpp"

namespace escape {

namespace {

using nlohmann::json;

void check_keys(const json& o, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = o.begin(); it != o.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok)
      throw SchemaError(where + ": unknown key \"" + it.key() + "\"");
  }
}

double num(const json& o, const std::string& where, const char* key) {
  if (!o.contains(key))
    throw SchemaError(where + ": missing key \"" + key + "\"");
  if (!o[key].is_number())
    throw SchemaError(where + "." + key + ": expected a number");
  return o[key].get<double>();
}

double num_or(const json& o, const char* key, double fallback) {
  return o.contains(key) ? o[key].get<double>() : fallback;
}

std::vector<double> num_list(const json& o, const std::string& where,
                             const char* key) {
  if (!o.contains(key) || !o[key].is_array())
    throw SchemaError(where + ": missing array \"" + key + "\"");
  std::vector<double> v;
  for (const auto& e : o[key]) {
    if (!e.is_number())
      throw SchemaError(where + "." + key + ": expected numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

std::string str(const json& o, const std::string& where, const char* key) {
  if (!o.contains(key) || !o[key].is_string())
    throw SchemaError(where + ": missing string \"" + key + "\"");
  return o[key].get<std::string>();
}

ArrivalSpec parse_arrivals(const json& o) {
  const std::string where = "model.arrivals";
  std::string type = str(o, where, "type");
  if (type == "exponential") {
    check_keys(o, where, {"type", "rate"});
    return ArrivalSpec::exponential(num(o, where, "rate"));
  }
  if (type == "erlang") {
    check_keys(o, where, {"type", "shape", "rate"});
    return ArrivalSpec::erlang(static_cast<int>(num(o, where, "shape")),
                               num(o, where, "rate"));
  }
  if (type == "hypoexponential") {
    check_keys(o, where, {"type", "rates"});
    return ArrivalSpec::hypoexponential(num_list(o, where, "rates"));
  }
  if (type == "rational") {
    check_keys(o, where, {"type", "Q", "R"});
    return ArrivalSpec::rational(RationalTransform::make(
        num_list(o, where, "Q"), num_list(o, where, "R")));
  }
  throw SchemaError(where + ".type: unknown arrival family \"" + type + "\"");
}

std::vector<JumpSpec::Atom> parse_atoms(const json& o, const std::string& where) {
  std::vector<JumpSpec::Atom> atoms;
  for (const auto& e : o["atoms"]) {
    if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
      atoms.push_back({e[0].get<double>(), e[1].get<double>()});
    } else if (e.is_object()) {
      check_keys(e, where + ".atoms[]", {"location", "mass"});
      atoms.push_back({num(e, where, "location"), num(e, where, "mass")});
    } else {
      throw SchemaError(where + ".atoms: expected [location, mass] pairs");
    }
  }
  return atoms;
}

JumpSpec parse_jumps(const json& o) {
  const std::string where = "model.jumps";
  std::string type = str(o, where, "type");
  if (type == "atoms") {
    check_keys(o, where, {"type", "atoms"});
    return JumpSpec::atoms_only(parse_atoms(o, where));
  }
  if (type == "fixed") {
    check_keys(o, where, {"type", "value"});
    return JumpSpec::atoms_only({{num(o, where, "value"), 1.0}});
  }
  if (type == "exponential_negative") {
    check_keys(o, where, {"type", "rate", "atoms"});
    std::vector<JumpSpec::Atom> atoms;
    if (o.contains("atoms")) atoms = parse_atoms(o, where);
    return JumpSpec::exponential_negative(num(o, where, "rate"),
                                          std::move(atoms));
  }
  if (type == "double_exponential") {
    check_keys(o, where,
               {"type", "p", "rate_pos", "rate_neg", "shift_pos", "shift_neg"});
    return JumpSpec::double_exponential(
        num(o, where, "p"), num(o, where, "rate_pos"),
        num(o, where, "rate_neg"),
        static_cast<int>(num_or(o, "shift_pos", 0.0)),
        static_cast<int>(num_or(o, "shift_neg", 0.0)));
  }
  if (type == "laplace") {
    check_keys(o, where, {"type", "rate"});
    return JumpSpec::laplace(num(o, where, "rate"));
  }
  if (type == "gamma_half_negative") {
    check_keys(o, where, {"type", "rate"});
    return JumpSpec::gamma_half_negative(num(o, where, "rate"));
  }
  if (type == "rational_cf") {
    check_keys(o, where, {"type", "Q", "R"});
    return JumpSpec::rational_cf(RationalTransform::make(
        num_list(o, where, "Q"), num_list(o, where, "R")));
  }
  throw SchemaError(where + ".type: unknown severity family \"" + type + "\"");
}

Method parse_method(const std::string& s) {
  if (s == "auto") return Method::Auto;
  if (s == "analytic") return Method::Analytic;
  if (s == "fredholm") return Method::Fredholm;
  if (s == "mc") return Method::Mc;
  throw SchemaError("method: expected auto|analytic|fredholm|mc, got \"" + s +
                    "\"");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("config root must be an object");
  check_keys(doc, "config",
             {"model", "query", "numerics", "mc", "output", "method",
              "tolerance"});
  if (!doc.contains("model") || !doc.contains("query"))
    throw SchemaError("config: blocks \"model\" and \"query\" are required");

  RunConfig cfg;

  const json& mo = doc["model"];
  check_keys(mo, "model", {"drift", "arrivals", "jumps"});
  if (!mo.contains("arrivals") || !mo.contains("jumps"))
    throw SchemaError("model: \"arrivals\" and \"jumps\" are required");
  cfg.model = build_model(num(mo, "model", "drift"),
                          parse_arrivals(mo["arrivals"]),
                          parse_jumps(mo["jumps"]));

  const json& qo = doc["query"];
  check_keys(qo, "query", {"a", "b", "x", "x_grid", "z"});
  cfg.query.a = num_or(qo, "a", 0.0);
  cfg.query.b = num(qo, "query", "b");
  if (cfg.query.a >= cfg.query.b)
    throw RangeError("query: need a < b");
  if (qo.contains("x")) {
    cfg.query.x = num(qo, "query", "x");
    if (!(cfg.query.a < cfg.query.x && cfg.query.x < cfg.query.b))
      throw RangeError("query: need a < x < b");
  } else if (!qo.contains("x_grid")) {
    throw SchemaError("query: one of \"x\" or \"x_grid\" is required");
  }
  if (qo.contains("x_grid")) {
    cfg.x_grid = num_list(qo, "query", "x_grid");
    for (double x : cfg.x_grid)
      if (x < cfg.query.a || x > cfg.query.b)
        throw RangeError("query.x_grid: values must lie in [a, b]");
    if (!qo.contains("x") && !cfg.x_grid.empty())
      cfg.query.x = cfg.x_grid.front();
  }
  if (qo.contains("z")) {
    double z = num(qo, "query", "z");
    if (z < 0.0) throw RangeError("query.z: must be >= 0");
    cfg.query.z = z;
  }

  if (doc.contains("numerics")) {
    const json& no = doc["numerics"];
    check_keys(no, "numerics", {"grid", "tol", "nodes"});
    cfg.numerics.grid = static_cast<int>(num_or(no, "grid", 2000.0));
    cfg.numerics.tol = num_or(no, "tol", 1e-10);
    cfg.numerics.nodes = static_cast<int>(num_or(no, "nodes", 48.0));
    if (cfg.numerics.grid < 10) throw RangeError("numerics.grid: too small");
    if (cfg.numerics.tol <= 0.0) throw RangeError("numerics.tol: must be > 0");
  }
  if (doc.contains("mc")) {
    const json& mc = doc["mc"];
    check_keys(mc, "mc", {"paths", "seed"});
    cfg.numerics.mc_paths = static_cast<long>(num_or(mc, "paths", 1e6));
    cfg.numerics.mc_seed = static_cast<uint64_t>(num_or(mc, "seed", 1.0));
  }
  if (doc.contains("method"))
    cfg.query.method = parse_method(str(doc, "config", "method"));
  if (doc.contains("tolerance")) {
    cfg.compare_tol = num(doc, "config", "tolerance");
    if (cfg.compare_tol <= 0.0) throw RangeError("tolerance: must be > 0");
  }
  if (doc.contains("output")) cfg.output_path = str(doc, "config", "output");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace escape
