#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "escape/exppoly.hpp"
#include "escape/ratfun.hpp"

namespace escape {

/// Interarrival-time law of the renewal process.
struct ArrivalSpec {
  enum class Kind { Exponential, Erlang, Hypoexponential, RationalLT, Generic };

  Kind kind = Kind::Exponential;
  double rate = 1.0;               // Exponential / Erlang
  int shape = 1;                   // Erlang
  std::vector<double> rates;       // Hypoexponential
  std::optional<RationalTransform> transform;  // set for all rational kinds
  std::function<double(double)> generic_pdf;
  std::function<double(double)> generic_cdf;

  static ArrivalSpec exponential(double lambda);
  static ArrivalSpec erlang(int n, double lambda);
  static ArrivalSpec hypoexponential(std::vector<double> rates);
  static ArrivalSpec rational(RationalTransform rt);
  static ArrivalSpec generic(std::function<double(double)> pdf,
                             std::function<double(double)> cdf);

  bool has_rational_lt() const { return transform.has_value(); }
  /// Order n of the rational LT (1 for Exponential).
  int order() const;

  double pdf(double t) const;
  double cdf(double t) const;
  double sf(double t) const { return 1.0 - cdf(t); }
  double mean() const;

 private:
  // density/cdf of rational kinds as exp-polynomials, built on construction
  ExpPoly density_ep_, cdf_ep_;
  void finalize();
};

/// Jump-size (severity) law: finite atom list plus an optional density
/// from one of the named families.  The density carries mass
/// 1 - sum(atom masses).
struct JumpSpec {
  enum class Kind {
    None,  // atoms only
    ExponentialNegative,
    DoubleExponential,
    Laplace,
    GammaHalfNegative,
    RationalCF,
    Generic,
  };
  struct Atom {
    double location;
    double mass;
  };

  Kind kind = Kind::None;
  std::vector<Atom> atoms;
  double gamma = 1.0;  // ExponentialNegative / Laplace / GammaHalfNegative
  // DoubleExponential: p*gp*exp(-gp*(y-ep*b)) above ep*b,
  //                    q*gm*exp(+gm*(y-em*b)) below em*b
  double p = 0.5, gamma_pos = 1.0, gamma_neg = 1.0;
  int eps_pos = 0, eps_neg = 0;
  std::optional<RationalTransform> cf;  // E e^{sJ} = R(s)/Q(s)
  std::function<double(double)> generic_pdf;
  std::function<double(double)> generic_cdf;
  double density_weight = 0.0;  // mass carried by the continuous part

  static JumpSpec atoms_only(std::vector<Atom> atoms);
  static JumpSpec exponential_negative(double gamma,
                                       std::vector<Atom> atoms = {});
  static JumpSpec double_exponential(double p, double gamma_pos,
                                     double gamma_neg, int eps_pos = 0,
                                     int eps_neg = 0);
  static JumpSpec laplace(double gamma);
  static JumpSpec gamma_half_negative(double gamma);
  static JumpSpec rational_cf(RationalTransform cf);
  static JumpSpec generic(std::function<double(double)> pdf,
                          std::function<double(double)> cdf,
                          std::vector<Atom> atoms = {});

  /// Continuous-part density (atom mass excluded), already scaled by
  /// density_weight.  side=-1/+1 selects the one-sided limit at a
  /// discontinuity.  b enters only through DoubleExponential shifts.
  double density(double y, double b, int side = 0) const;
  /// P(J <= y), atoms included.
  double cdf_at(double y, double b) const;
  /// P(J >= y), atoms included.
  double tail_geq(double y, double b) const;
  double mean(double b) const;
  bool has_mean() const;
  /// true when all mass lies strictly below 0
  bool one_sided_negative(double b) const;
  bool has_density() const { return density_weight > 0.0; }

  // RationalCF only: density split into the two half-lines,
  // h(y) = cf_pos(y) for y>0 and h(y) = cf_neg(-y) for y<0.
  ExpPoly cf_pos, cf_neg;
};

struct ProcessModel {
  double c = 0.0;
  ArrivalSpec arrivals;
  JumpSpec jumps;

  /// lambda/c for Exponential arrivals with c != 0
  std::optional<double> rho() const;
};

/// Validates all component invariants (positive rates, unit mass,
/// stable arrival transform).
ProcessModel build_model(double c, ArrivalSpec arrivals, JumpSpec jumps);

/// Masses of the four-way split of H relative to (x, b):
/// q2 = P(J <= -b), q1 = P(-b < J < 0), p1 = P(0 <= J < b-x), p2 = P(J >= b-x).
struct JumpSplit {
  double q2 = 0, q1 = 0, p1 = 0, p2 = 0;
};

JumpSplit decompose_jumps(const ProcessModel& model, double x, double b);

enum class Method { Auto, Fredholm, Analytic, Mc };

struct EscapeQuery {
  double x = 0;
  double a = 0;
  double b = 1;
  std::optional<double> z;  // backward recurrence time
  Method method = Method::Auto;
};

enum class SolverRoute {
  TrivialDouble,
  PoissonOneSided,
  RationalArrivalsOneSided,
  TwoSidedUpper,
  TwoSidedLower,
  PoissonRationalCF,
  ZeroDrift,
  FredholmNumeric,
  MonteCarloOnly,
};

std::string route_name(SolverRoute r);

/// Picks the most specific analytic route for the (already validated)
/// query; never fails.  c<0 models are judged through their reflection.
SolverRoute route(const ProcessModel& model, const EscapeQuery& query);

enum class NetProfit { Holds, Fails, Boundary };

NetProfit net_profit(const ProcessModel& model);

/// Reflected model (-c, -J): upper-escape of the original from x equals
/// 1 - upper-escape of the reflection from b-x.
ProcessModel reflect(const ProcessModel& model);

}  // namespace escape
