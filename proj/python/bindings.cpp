#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "escape/analytic.hpp"
#include "escape/errors.hpp"
#include "escape/fredholm.hpp"
#include "escape/mc.hpp"
#include "escape/model.hpp"
#include "escape/solver.hpp"

namespace py = pybind11;
using namespace escape;

namespace {

Method method_from(const std::string& s) {
  if (s == "auto") return Method::Auto;
  if (s == "analytic") return Method::Analytic;
  if (s == "fredholm") return Method::Fredholm;
  if (s == "mc") return Method::Mc;
  throw py::value_error("method must be auto|analytic|fredholm|mc");
}

EscapeQuery make_query(double x, double b, double a, std::optional<double> z,
                       const std::string& method) {
  EscapeQuery q;
  q.x = x;
  q.a = a;
  q.b = b;
  q.z = z;
  q.method = method_from(method);
  return q;
}

}  // namespace

PYBIND11_MODULE(_escape_ep, m) {
  m.doc() = "two-barrier escape probabilities for drift-jump processes";

  py::register_exception<Error>(m, "EscapeError");

  py::class_<ArrivalSpec>(m, "ArrivalSpec")
      .def_static("exponential", &ArrivalSpec::exponential, py::arg("rate"))
      .def_static("erlang", &ArrivalSpec::erlang, py::arg("shape"),
                  py::arg("rate"))
      .def_static("hypoexponential", &ArrivalSpec::hypoexponential,
                  py::arg("rates"))
      .def_static(
          "rational",
          [](std::vector<double> Q, std::vector<double> R) {
            return ArrivalSpec::rational(
                RationalTransform::make(std::move(Q), std::move(R)));
          },
          py::arg("Q"), py::arg("R"))
      .def("mean", &ArrivalSpec::mean)
      .def("pdf", &ArrivalSpec::pdf)
      .def("cdf", &ArrivalSpec::cdf);

  py::class_<JumpSpec>(m, "JumpSpec")
      .def_static(
          "atoms",
          [](std::vector<std::pair<double, double>> atoms) {
            std::vector<JumpSpec::Atom> a;
            for (auto& [loc, mass] : atoms) a.push_back({loc, mass});
            return JumpSpec::atoms_only(std::move(a));
          },
          py::arg("atoms"))
      .def_static(
          "exponential_negative",
          [](double gamma, std::vector<std::pair<double, double>> atoms) {
            std::vector<JumpSpec::Atom> a;
            for (auto& [loc, mass] : atoms) a.push_back({loc, mass});
            return JumpSpec::exponential_negative(gamma, std::move(a));
          },
          py::arg("rate"),
          py::arg("atoms") = std::vector<std::pair<double, double>>{})
      .def_static("double_exponential", &JumpSpec::double_exponential,
                  py::arg("p"), py::arg("rate_pos"), py::arg("rate_neg"),
                  py::arg("shift_pos") = 0, py::arg("shift_neg") = 0)
      .def_static("laplace", &JumpSpec::laplace, py::arg("rate"))
      .def_static("gamma_half_negative", &JumpSpec::gamma_half_negative,
                  py::arg("rate"))
      .def_static(
          "rational_cf",
          [](std::vector<double> Q, std::vector<double> R) {
            return JumpSpec::rational_cf(
                RationalTransform::make(std::move(Q), std::move(R)));
          },
          py::arg("Q"), py::arg("R"))
      .def("mean", &JumpSpec::mean, py::arg("b") = 0.0)
      .def("cdf", &JumpSpec::cdf_at, py::arg("y"), py::arg("b") = 0.0);

  py::class_<ProcessModel>(m, "ProcessModel")
      .def_readonly("c", &ProcessModel::c)
      .def_property_readonly("rho", &ProcessModel::rho);

  m.def("build_model", &build_model, py::arg("c"), py::arg("arrivals"),
        py::arg("jumps"));
  m.def("reflect", &reflect);
  m.def(
      "route",
      [](const ProcessModel& mo, double x, double b, double a,
         const std::string& method) {
        return route_name(route(mo, make_query(x, b, a, std::nullopt, method)));
      },
      py::arg("model"), py::arg("x"), py::arg("b"), py::arg("a") = 0.0,
      py::arg("method") = "auto");

  py::class_<EscapeResult>(m, "EscapeResult")
      .def_readonly("probability", &EscapeResult::probability)
      .def_readonly("error_bound", &EscapeResult::error_bound)
      .def_property_readonly(
          "route", [](const EscapeResult& r) { return route_name(r.route); })
      .def_readonly("downgraded", &EscapeResult::downgraded)
      .def_readonly("note", &EscapeResult::note)
      .def_readonly("mc", &EscapeResult::mc)
      .def("__repr__", [](const EscapeResult& r) {
        return "EscapeResult(probability=" + std::to_string(r.probability) +
               ", route=" + route_name(r.route) + ")";
      });

  py::class_<McEstimate>(m, "McEstimate")
      .def_readonly("value", &McEstimate::value)
      .def_readonly("stderr", &McEstimate::std_error)
      .def_property_readonly(
          "ci95",
          [](const McEstimate& e) {
            return std::make_pair(e.ci_low, e.ci_high);
          })
      .def_readonly("n_paths", &McEstimate::n_paths)
      .def_readonly("seed", &McEstimate::seed)
      .def_readonly("censored", &McEstimate::censored)
      .def_readonly("valid", &McEstimate::valid);

  m.def(
      "solve",
      [](const ProcessModel& mo, double x, double b, double a,
         std::optional<double> z, const std::string& method, int grid,
         double tol, long mc_paths, uint64_t mc_seed) {
        SolveOptions opts;
        opts.grid = grid;
        opts.tol = tol;
        opts.mc_paths = mc_paths;
        opts.mc_seed = mc_seed;
        return solve_escape(mo, make_query(x, b, a, z, method), opts);
      },
      py::arg("model"), py::arg("x"), py::arg("b"), py::arg("a") = 0.0,
      py::arg("z") = std::nullopt, py::arg("method") = "auto",
      py::arg("grid") = 2000, py::arg("tol") = 1e-10,
      py::arg("mc_paths") = 1000000, py::arg("mc_seed") = 1);

  py::class_<GridSolution>(m, "GridSolution")
      .def_readonly("nodes", &GridSolution::nodes)
      .def_readonly("values", &GridSolution::values)
      .def_readonly("error_bound", &GridSolution::error_bound)
      .def_readonly("iterations", &GridSolution::iterations)
      .def("__call__", &GridSolution::eval);
  m.def("solve_fredholm", &solve_fredholm, py::arg("model"), py::arg("b"),
        py::arg("grid") = 2000, py::arg("tol") = 1e-10);
  m.def("conditional_ep", &conditional_ep, py::arg("model"),
        py::arg("solution"), py::arg("x"), py::arg("z"));

  m.def("ep_poisson_one_sided",
        [](const ProcessModel& mo, double x, double b) {
          return ep_poisson_one_sided(mo, x, b);
        });
  m.def("survival_poisson", &survival_poisson, py::arg("model"), py::arg("x"));

  m.def("estimate_ep", &estimate_ep, py::arg("model"), py::arg("x"),
        py::arg("a"), py::arg("b"), py::arg("n_paths") = 1000000,
        py::arg("seed") = 1);
  m.def("estimate_conditional_ep", &estimate_conditional_ep, py::arg("model"),
        py::arg("x"), py::arg("b"), py::arg("z"), py::arg("n_paths") = 1000000,
        py::arg("seed") = 1);
  m.def("estimate_survival", &estimate_survival, py::arg("model"),
        py::arg("x"), py::arg("horizon") = 0.0, py::arg("n_paths") = 1000000,
        py::arg("seed") = 1);
}
