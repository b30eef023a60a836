#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "escape/config.hpp"
#include "escape/errors.hpp"
#include "escape/solver.hpp"

using namespace escape;

namespace {

// exit codes: 0 ok, 1 config, 2 routing, 3 numerics, 4 mc censoring,
// 5 compare tolerance exceeded
constexpr int kOk = 0, kConfigErr = 1, kRoutingErr = 2, kNumericsErr = 3,
              kCensoringErr = 4, kCompareErr = 5;

struct Options {
  std::string config_path;
  std::optional<double> x, b;
  std::optional<std::string> method;
  std::optional<long> paths;
  std::optional<uint64_t> seed;
  std::optional<std::string> out;
};

Method method_from(const std::string& s) {
  if (s == "auto") return Method::Auto;
  if (s == "analytic") return Method::Analytic;
  if (s == "fredholm") return Method::Fredholm;
  if (s == "mc") return Method::Mc;
  throw SchemaError("--method: expected auto|analytic|fredholm|mc");
}

RunConfig make_config(const Options& o) {
  RunConfig cfg = load_config(o.config_path);
  if (o.b) cfg.query.b = *o.b;
  if (o.x) {
    cfg.query.x = *o.x;
    cfg.x_grid.clear();
  }
  if (o.method) cfg.query.method = method_from(*o.method);
  if (o.paths) cfg.numerics.mc_paths = *o.paths;
  if (o.seed) cfg.numerics.mc_seed = *o.seed;
  if (o.out) cfg.output_path = *o.out;
  if (!(cfg.query.a < cfg.query.b)) throw RangeError("need a < b");
  return cfg;
}

std::vector<double> sweep_grid(const RunConfig& cfg, int fallback_nodes = 11) {
  if (!cfg.x_grid.empty()) return cfg.x_grid;
  std::vector<double> g;
  for (int i = 0; i < fallback_nodes; ++i)
    g.push_back(cfg.query.a +
                (cfg.query.b - cfg.query.a) * i / (fallback_nodes - 1));
  return g;
}

// boundary grid points are answered by their interior limits
double clamp_interior(const RunConfig& cfg, double x) {
  double eps = 1e-9 * (cfg.query.b - cfg.query.a);
  return std::clamp(x, cfg.query.a + eps, cfg.query.b - eps);
}

void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.output_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(cfg.output_path);
    if (!out) throw SchemaError("cannot open output file: " + cfg.output_path);
    out << text;
  }
}

int check_censoring(const EscapeResult& r) {
  if (r.mc && !r.mc->valid) {
    std::cerr << "error: Monte Carlo censored fraction exceeds 1e-6\n";
    return kCensoringErr;
  }
  return kOk;
}

int cmd_solve(const Options& o) {
  RunConfig cfg = make_config(o);
  EscapeResult r = solve_escape(cfg.model, cfg.query, cfg.numerics);
  if (int rc = check_censoring(r)) return rc;
  std::cout << "probability=" << csv_double(r.probability)
            << " route=" << route_name(r.route)
            << " error_bound=" << csv_double(r.error_bound) << "\n";
  if (!r.note.empty()) std::cerr << "note: " << r.note << "\n";
  if (!cfg.output_path.empty()) {
    std::ostringstream csv;
    csv << "x,probability,route,error_bound\n"
        << csv_double(cfg.query.x) << "," << csv_double(r.probability) << ","
        << route_name(r.route) << "," << csv_double(r.error_bound) << "\n";
    emit(cfg, csv.str());
  }
  return kOk;
}

int cmd_sweep(const Options& o) {
  RunConfig cfg = make_config(o);
  std::ostringstream csv;
  csv << "x,probability,route,error_bound\n";
  for (double x : sweep_grid(cfg)) {
    EscapeQuery q = cfg.query;
    q.x = clamp_interior(cfg, x);
    EscapeResult r = solve_escape(cfg.model, q, cfg.numerics);
    if (int rc = check_censoring(r)) return rc;
    csv << csv_double(x) << "," << csv_double(r.probability) << ","
        << route_name(r.route) << "," << csv_double(r.error_bound) << "\n";
  }
  emit(cfg, csv.str());
  return kOk;
}

int cmd_simulate(const Options& o) {
  RunConfig cfg = make_config(o);
  double a = cfg.query.a, b = cfg.query.b, x = cfg.query.x;
  McEstimate e =
      cfg.query.z && *cfg.query.z > 0.0
          ? estimate_conditional_ep(cfg.model, x - a, b - a, *cfg.query.z,
                                    cfg.numerics.mc_paths, cfg.numerics.mc_seed)
          : estimate_ep(cfg.model, x, a, b, cfg.numerics.mc_paths,
                        cfg.numerics.mc_seed);
  std::ostringstream csv;
  csv << "value,std_error,ci_low,ci_high,n_paths,seed,censored\n"
      << csv_double(e.value) << "," << csv_double(e.std_error) << ","
      << csv_double(e.ci_low) << "," << csv_double(e.ci_high) << ","
      << e.n_paths << "," << e.seed << "," << e.censored << "\n";
  emit(cfg, csv.str());
  if (!e.valid) {
    std::cerr << "error: Monte Carlo censored fraction exceeds 1e-6\n";
    return kCensoringErr;
  }
  return kOk;
}

int cmd_compare(const Options& o) {
  RunConfig cfg = make_config(o);
  std::ostringstream csv;
  csv << "x,analytic,fredholm,mc,mc_stderr,max_pairwise_diff\n";
  bool exceeded = false;
  for (double x : sweep_grid(cfg)) {
    EscapeQuery q = cfg.query;
    q.x = clamp_interior(cfg, x);

    q.method = Method::Auto;
    EscapeResult an = solve_escape(cfg.model, q, cfg.numerics);
    q.method = Method::Fredholm;
    EscapeResult fr = solve_escape(cfg.model, q, cfg.numerics);
    q.method = Method::Mc;
    EscapeResult mc = solve_escape(cfg.model, q, cfg.numerics);
    if (int rc = check_censoring(mc)) return rc;

    double d1 = std::abs(an.probability - fr.probability);
    double d2 = std::abs(an.probability - mc.probability);
    double d3 = std::abs(fr.probability - mc.probability);
    double dmax = std::max({d1, d2, d3});
    if (dmax > cfg.compare_tol) exceeded = true;
    csv << csv_double(x) << "," << csv_double(an.probability) << ","
        << csv_double(fr.probability) << "," << csv_double(mc.probability)
        << "," << csv_double(mc.error_bound) << "," << csv_double(dmax)
        << "\n";
  }
  emit(cfg, csv.str());
  if (exceeded) {
    std::cerr << "error: pairwise difference exceeds tolerance "
              << csv_double(cfg.compare_tol) << "\n";
    return kCompareErr;
  }
  return kOk;
}

int classify(const Error& e) {
  if (dynamic_cast<const SchemaError*>(&e) ||
      dynamic_cast<const RangeError*>(&e) ||
      dynamic_cast<const NonPositiveRate*>(&e) ||
      dynamic_cast<const MassNotOne*>(&e) ||
      dynamic_cast<const UnstableRationalTransform*>(&e))
    return kConfigErr;
  if (dynamic_cast<const RoutingMismatch*>(&e) ||
      dynamic_cast<const UnsupportedSeverity*>(&e))
    return kRoutingErr;
  return kNumericsErr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-barrier escape probabilities for drift-jump processes"};
  app.require_subcommand(1);

  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON run configuration")
        ->required();
    sub->add_option("--x", o.x, "override query.x");
    sub->add_option("--b", o.b, "override query.b");
    sub->add_option("--method", o.method, "auto|analytic|fredholm|mc");
    sub->add_option("--paths", o.paths, "Monte Carlo path count");
    sub->add_option("--seed", o.seed, "Monte Carlo seed");
    sub->add_option("--out", o.out, "write CSV here instead of stdout");
    return sub;
  };
  CLI::App* solve = add_common(app.add_subcommand("solve", "single query"));
  CLI::App* sweep = add_common(app.add_subcommand("sweep", "x-grid sweep"));
  CLI::App* simulate =
      add_common(app.add_subcommand("simulate", "Monte Carlo estimate"));
  CLI::App* compare =
      add_common(app.add_subcommand("compare", "triangulate all methods"));

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(o);
    if (sweep->parsed()) return cmd_sweep(o);
    if (simulate->parsed()) return cmd_simulate(o);
    if (compare->parsed()) return cmd_compare(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericsErr;
  }
  return kOk;
}
