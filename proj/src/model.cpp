#include "escape/model.hpp"

#include <algorithm>
#include <cmath>

#include "escape/errors.hpp"

namespace escape {

namespace {

void check_rate(double r, const char* what) {
  if (!(r > 0.0)) throw NonPositiveRate(std::string(what) + " must be positive");
}

// integral_0^inf of the tail, by doubling horizon + Simpson
double numeric_mean_from_sf(const std::function<double(double)>& sf) {
  double T = 1.0;
  while (sf(T) > 1e-10 && T < 1e7) T *= 2.0;
  const int n = 4096;
  double h = T / n, acc = sf(0.0) + sf(T);
  for (int i = 1; i < n; ++i) acc += sf(i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// total integral of an exp-polynomial with decaying rates over [0,inf)
double total_mass(const ExpPoly& f) {
  double fac[32];
  fac[0] = 1.0;
  for (int i = 1; i < 32; ++i) fac[i] = fac[i - 1] * i;
  Complex m = 0.0;
  for (const auto& t : f.terms()) m += t.coef * fac[t.power] / std::pow(-t.rate, t.power + 1);
  return m.real();
}

}  // namespace

// ---------- ArrivalSpec ----------

void ArrivalSpec::finalize() {
  if (kind == Kind::Generic) return;
  if (!transform) {
    Poly Q{1.0}, R{1.0};
    switch (kind) {
      case Kind::Exponential:
        Q = {rate, 1.0};
        R = {rate};
        break;
      case Kind::Erlang: {
        double rn = 1.0;
        for (int i = 0; i < shape; ++i) {
          Q = poly::mul(Q, Poly{rate, 1.0});
          rn *= rate;
        }
        R = {rn};
        break;
      }
      case Kind::Hypoexponential: {
        double rn = 1.0;
        for (double l : rates) {
          Q = poly::mul(Q, Poly{l, 1.0});
          rn *= l;
        }
        R = {rn};
        break;
      }
      default:
        break;
    }
    transform = RationalTransform::make(std::move(Q), std::move(R));
  }
  density_ep_ = invert_rational(transform->R, transform->Q);
  cdf_ep_ = density_ep_.antiderivative_from_0();
}

ArrivalSpec ArrivalSpec::exponential(double lambda) {
  check_rate(lambda, "arrival rate");
  ArrivalSpec a;
  a.kind = Kind::Exponential;
  a.rate = lambda;
  a.finalize();
  return a;
}

ArrivalSpec ArrivalSpec::erlang(int n, double lambda) {
  check_rate(lambda, "arrival rate");
  if (n < 1) throw NonPositiveRate("Erlang shape must be >= 1");
  ArrivalSpec a;
  a.kind = n == 1 ? Kind::Exponential : Kind::Erlang;
  a.rate = lambda;
  a.shape = n;
  a.finalize();
  return a;
}

ArrivalSpec ArrivalSpec::hypoexponential(std::vector<double> rs) {
  if (rs.empty()) throw NonPositiveRate("hypoexponential needs at least one rate");
  for (double r : rs) check_rate(r, "arrival rate");
  std::sort(rs.begin(), rs.end());
  if (rs.size() == 1) return exponential(rs[0]);
  ArrivalSpec a;
  a.kind = Kind::Hypoexponential;
  a.rates = std::move(rs);
  a.finalize();
  return a;
}

ArrivalSpec ArrivalSpec::rational(RationalTransform rt) {
  for (const auto& r : poly_roots(rt.Q).roots)
    if (r.value.real() >= -1e-12)
      throw UnstableRationalTransform(
          "arrival transform has a denominator root with nonnegative real part");
  ArrivalSpec a;
  a.kind = Kind::RationalLT;
  a.transform = std::move(rt);
  a.finalize();
  return a;
}

ArrivalSpec ArrivalSpec::generic(std::function<double(double)> pdf,
                                 std::function<double(double)> cdf) {
  ArrivalSpec a;
  a.kind = Kind::Generic;
  a.generic_pdf = std::move(pdf);
  a.generic_cdf = std::move(cdf);
  // unit mass within 1e-6
  double T = 1.0;
  while (1.0 - a.generic_cdf(T) > 1e-9 && T < 1e8) T *= 2.0;
  if (std::abs(1.0 - a.generic_cdf(T)) > 1e-6)
    throw MassNotOne("generic arrival density does not integrate to 1");
  return a;
}

int ArrivalSpec::order() const {
  return transform ? transform->order() : 0;
}

double ArrivalSpec::pdf(double t) const {
  if (t < 0.0) return 0.0;
  if (kind == Kind::Generic) return generic_pdf(t);
  return std::max(0.0, density_ep_.eval(t));
}

double ArrivalSpec::cdf(double t) const {
  if (t <= 0.0) return 0.0;
  if (kind == Kind::Generic) return generic_cdf(t);
  return std::clamp(cdf_ep_.eval(t), 0.0, 1.0);
}

double ArrivalSpec::mean() const {
  switch (kind) {
    case Kind::Exponential:
      return 1.0 / rate;
    case Kind::Erlang:
      return shape / rate;
    case Kind::Hypoexponential: {
      double m = 0.0;
      for (double l : rates) m += 1.0 / l;
      return m;
    }
    case Kind::RationalLT: {
      const Poly &Q = transform->Q, &R = transform->R;
      double q0 = poly::eval(Q, 0.0), r0 = poly::eval(R, 0.0);
      double q1 = poly::eval(poly::derivative(Q), 0.0);
      double r1 = poly::eval(poly::derivative(R), 0.0);
      // E tau = -(R/Q)'(0) for the e^{-st} transform convention
      return (r0 * q1 - r1 * q0) / (q0 * q0);
    }
    case Kind::Generic:
      return numeric_mean_from_sf([this](double t) { return sf(t); });
  }
  return 0.0;
}

// ---------- JumpSpec ----------

namespace {
double atom_mass(const std::vector<JumpSpec::Atom>& atoms) {
  double m = 0.0;
  for (const auto& a : atoms) {
    if (a.mass < -1e-12 || a.mass > 1.0 + 1e-12)
      throw MassNotOne("atom mass outside [0,1]");
    m += a.mass;
  }
  return m;
}
}  // namespace

JumpSpec JumpSpec::atoms_only(std::vector<Atom> atoms) {
  JumpSpec j;
  j.kind = Kind::None;
  j.atoms = std::move(atoms);
  double m = atom_mass(j.atoms);
  if (std::abs(m - 1.0) > 1e-6) throw MassNotOne("atom masses must sum to 1");
  j.density_weight = 0.0;
  return j;
}

JumpSpec JumpSpec::exponential_negative(double gamma, std::vector<Atom> atoms) {
  check_rate(gamma, "jump rate");
  JumpSpec j;
  j.kind = Kind::ExponentialNegative;
  j.gamma = gamma;
  j.atoms = std::move(atoms);
  j.density_weight = 1.0 - atom_mass(j.atoms);
  if (j.density_weight < -1e-12) throw MassNotOne("atom masses exceed 1");
  return j;
}

JumpSpec JumpSpec::double_exponential(double p, double gamma_pos,
                                      double gamma_neg, int eps_pos,
                                      int eps_neg) {
  check_rate(gamma_pos, "jump rate");
  check_rate(gamma_neg, "jump rate");
  if (p < 0.0 || p > 1.0) throw MassNotOne("double-exponential weight p outside [0,1]");
  if (std::abs(eps_pos) > 1 || std::abs(eps_neg) > 1)
    throw MassNotOne("double-exponential shifts must be in {-1,0,1}");
  JumpSpec j;
  j.kind = Kind::DoubleExponential;
  j.p = p;
  j.gamma_pos = gamma_pos;
  j.gamma_neg = gamma_neg;
  j.eps_pos = eps_pos;
  j.eps_neg = eps_neg;
  j.density_weight = 1.0;
  return j;
}

JumpSpec JumpSpec::laplace(double gamma) {
  check_rate(gamma, "jump rate");
  JumpSpec j;
  j.kind = Kind::Laplace;
  j.gamma = gamma;
  j.density_weight = 1.0;
  return j;
}

JumpSpec JumpSpec::gamma_half_negative(double gamma) {
  check_rate(gamma, "jump rate");
  JumpSpec j;
  j.kind = Kind::GammaHalfNegative;
  j.gamma = gamma;
  j.density_weight = 1.0;
  return j;
}

JumpSpec JumpSpec::rational_cf(RationalTransform cf) {
  JumpSpec j;
  j.kind = Kind::RationalCF;
  j.density_weight = 1.0;
  // split E e^{sJ} = R/Q into the two half-line densities by pole sign
  CPoly num(cf.R.begin(), cf.R.end()), den(cf.Q.begin(), cf.Q.end());
  std::vector<ExpPoly::Term> pos, neg;
  double fac[32];
  fac[0] = 1.0;
  for (int i = 1; i < 32; ++i) fac[i] = fac[i - 1] * i;
  for (const PoleExpansion& pe : partial_fractions(num, den)) {
    const int mu = static_cast<int>(pe.coeffs.size());
    for (int jj = 0; jj < mu; ++jj) {
      int m = mu - jj;  // A/(s-a)^m
      Complex A = pe.coeffs[jj];
      if (pe.pole.real() > 1e-12) {
        // h_+(y) = A(-1)^m y^{m-1} e^{-a y}/(m-1)!
        pos.push_back({A * std::pow(-1.0, m) / fac[m - 1], -pe.pole, m - 1});
      } else if (pe.pole.real() < -1e-12) {
        // h(-u) = A u^{m-1} e^{a u}/(m-1)!  (u = -y > 0)
        neg.push_back({A / fac[m - 1], pe.pole, m - 1});
      } else {
        throw UnstableRationalTransform(
            "severity characteristic function has a pole on the imaginary axis");
      }
    }
  }
  j.cf_pos = ExpPoly(std::move(pos));
  j.cf_neg = ExpPoly(std::move(neg));
  double mass = total_mass(j.cf_pos) + total_mass(j.cf_neg);
  if (std::abs(mass - 1.0) > 1e-6)
    throw MassNotOne("severity characteristic function does not have unit mass");
  j.cf = std::move(cf);
  return j;
}

JumpSpec JumpSpec::generic(std::function<double(double)> pdf,
                           std::function<double(double)> cdf,
                           std::vector<Atom> atoms) {
  JumpSpec j;
  j.kind = Kind::Generic;
  j.generic_pdf = std::move(pdf);
  j.generic_cdf = std::move(cdf);
  j.atoms = std::move(atoms);
  j.density_weight = 1.0 - atom_mass(j.atoms);
  if (j.density_weight < -1e-12) throw MassNotOne("atom masses exceed 1");
  double lo = -1.0, hi = 1.0;
  while (j.generic_cdf(lo) > 1e-9 && lo > -1e8) lo *= 2.0;
  while (1.0 - j.generic_cdf(hi) > 1e-9 && hi < 1e8) hi *= 2.0;
  if (std::abs(1.0 - j.generic_cdf(hi) + j.generic_cdf(lo)) > 1e-6)
    throw MassNotOne("generic severity density does not integrate to 1");
  return j;
}

double JumpSpec::density(double y, double b, int side) const {
  const double w = density_weight;
  if (w <= 0.0) return 0.0;
  switch (kind) {
    case Kind::None:
      return 0.0;
    case Kind::ExponentialNegative:
      if (y < 0.0 || (y == 0.0 && side <= 0)) return w * gamma * std::exp(gamma * y);
      return 0.0;
    case Kind::DoubleExponential: {
      double d = 0.0, u;
      u = y - eps_pos * b;
      if (u > 0.0 || (u == 0.0 && side >= 0))
        d += w * p * gamma_pos * std::exp(-gamma_pos * u);
      u = y - eps_neg * b;
      if (u < 0.0 || (u == 0.0 && side <= 0))
        d += w * (1.0 - p) * gamma_neg * std::exp(gamma_neg * u);
      return d;
    }
    case Kind::Laplace:
      return w * 0.5 * gamma * std::exp(-gamma * std::abs(y));
    case Kind::GammaHalfNegative:
      if (y < 0.0)
        return w * std::sqrt(gamma / (3.14159265358979323846 * -y)) *
               std::exp(gamma * y);
      return 0.0;
    case Kind::RationalCF:
      if (y > 0.0 || (y == 0.0 && side > 0)) return w * cf_pos.eval(y);
      if (y < 0.0 || (y == 0.0 && side < 0)) return w * cf_neg.eval(-y);
      return w * 0.5 * (cf_pos.eval(0.0) + cf_neg.eval(0.0));
    case Kind::Generic:
      return w * generic_pdf(y);
  }
  return 0.0;
}

namespace {
// continuous-part cdf scaled so it runs from 0 to density_weight
double cont_cdf(const JumpSpec& j, double y, double b) {
  using K = JumpSpec::Kind;
  const double w = j.density_weight;
  if (w <= 0.0) return 0.0;
  switch (j.kind) {
    case K::None:
      return 0.0;
    case K::ExponentialNegative:
      return y >= 0.0 ? w : w * std::exp(j.gamma * y);
    case K::DoubleExponential: {
      double acc = 0.0, u;
      u = y - j.eps_neg * b;
      acc += w * (1.0 - j.p) * (u >= 0.0 ? 1.0 : std::exp(j.gamma_neg * u));
      u = y - j.eps_pos * b;
      if (u > 0.0) acc += w * j.p * (1.0 - std::exp(-j.gamma_pos * u));
      return acc;
    }
    case K::Laplace:
      return y < 0.0 ? w * 0.5 * std::exp(j.gamma * y)
                     : w * (1.0 - 0.5 * std::exp(-j.gamma * y));
    case K::GammaHalfNegative:
      return y >= 0.0 ? w : w * std::erfc(std::sqrt(-j.gamma * y));
    case K::RationalCF: {
      double mneg = total_mass(j.cf_neg);
      if (y >= 0.0) return w * (mneg + j.cf_pos.antiderivative_from_0().eval(y));
      return w * (mneg - j.cf_neg.antiderivative_from_0().eval(-y));
    }
    case K::Generic:
      return w * j.generic_cdf(y);
  }
  return 0.0;
}
}  // namespace

double JumpSpec::cdf_at(double y, double b) const {
  double m = cont_cdf(*this, y, b);
  for (const Atom& a : atoms)
    if (a.location <= y) m += a.mass;
  return m;
}

double JumpSpec::tail_geq(double y, double b) const {
  double m = density_weight - cont_cdf(*this, y, b);
  for (const Atom& a : atoms)
    if (a.location >= y) m += a.mass;
  return std::max(0.0, m);
}

double JumpSpec::mean(double b) const {
  double m = 0.0;
  for (const Atom& a : atoms) m += a.mass * a.location;
  const double w = density_weight;
  switch (kind) {
    case Kind::None:
      break;
    case Kind::ExponentialNegative:
      m += -w / gamma;
      break;
    case Kind::DoubleExponential:
      m += w * (p * (eps_pos * b + 1.0 / gamma_pos) +
                (1.0 - p) * (eps_neg * b - 1.0 / gamma_neg));
      break;
    case Kind::Laplace:
      break;
    case Kind::GammaHalfNegative:
      m += -w * 0.5 / gamma;
      break;
    case Kind::RationalCF: {
      const Poly &Q = cf->Q, &R = cf->R;
      double q0 = poly::eval(Q, 0.0), r0 = poly::eval(R, 0.0);
      double q1 = poly::eval(poly::derivative(Q), 0.0);
      double r1 = poly::eval(poly::derivative(R), 0.0);
      // E J = (R/Q)'(0) for the e^{sJ} convention
      m += w * (r1 * q0 - r0 * q1) / (q0 * q0);
      break;
    }
    case Kind::Generic: {
      double pos = numeric_mean_from_sf(
          [&](double t) { return tail_geq(t, b) ; });
      double neg = numeric_mean_from_sf(
          [&](double t) { return cdf_at(-t, b); });
      return pos - neg;  // atoms already folded into tail/cdf
    }
  }
  return m;
}

bool JumpSpec::has_mean() const { return true; }

bool JumpSpec::one_sided_negative(double b) const {
  for (const Atom& a : atoms)
    if (a.location >= 0.0 && a.mass > 0.0) return false;
  if (density_weight <= 0.0) return true;
  switch (kind) {
    case Kind::None:
      return true;
    case Kind::ExponentialNegative:
    case Kind::GammaHalfNegative:
      return true;
    case Kind::DoubleExponential:
      return p == 0.0 && eps_neg <= 0;
    case Kind::Laplace:
      return false;
    case Kind::RationalCF:
      return cf_pos.empty();
    case Kind::Generic:
      return cont_cdf(*this, 0.0, b) >= density_weight - 1e-12;
  }
  return false;
}

// ---------- ProcessModel ----------

std::optional<double> ProcessModel::rho() const {
  if (arrivals.kind == ArrivalSpec::Kind::Exponential && c != 0.0)
    return arrivals.rate / c;
  return std::nullopt;
}

ProcessModel build_model(double c, ArrivalSpec arrivals, JumpSpec jumps) {
  if (!std::isfinite(c)) throw NonFinite("drift must be finite");
  double mass = jumps.density_weight;
  for (const auto& a : jumps.atoms) mass += a.mass;
  if (std::abs(mass - 1.0) > 1e-6)
    throw MassNotOne("severity atoms plus density must carry unit mass");
  return ProcessModel{c, std::move(arrivals), std::move(jumps)};
}

JumpSplit decompose_jumps(const ProcessModel& model, double x, double b) {
  const JumpSpec& j = model.jumps;
  JumpSplit s;
  s.q2 = j.cdf_at(-b, b);
  s.p2 = j.tail_geq(b - x, b);
  s.p1 = std::max(0.0, j.tail_geq(0.0, b) - s.p2);
  s.q1 = std::max(0.0, 1.0 - s.q2 - s.p1 - s.p2);
  return s;
}

NetProfit net_profit(const ProcessModel& model) {
  double drift = model.c * model.arrivals.mean() + model.jumps.mean(0.0);
  if (std::abs(drift) < 1e-12) return NetProfit::Boundary;
  return drift > 0.0 ? NetProfit::Holds : NetProfit::Fails;
}

ProcessModel reflect(const ProcessModel& model) {
  const JumpSpec& j = model.jumps;
  JumpSpec r;
  std::vector<JumpSpec::Atom> atoms;
  for (const auto& a : j.atoms) atoms.push_back({-a.location, a.mass});
  switch (j.kind) {
    case JumpSpec::Kind::None:
      r = JumpSpec::atoms_only(std::move(atoms));
      break;
    case JumpSpec::Kind::Laplace:
      r = JumpSpec::laplace(j.gamma);
      break;
    case JumpSpec::Kind::ExponentialNegative:
      r = JumpSpec::double_exponential(1.0, j.gamma, 1.0);
      r.density_weight = j.density_weight;
      r.atoms = std::move(atoms);
      break;
    case JumpSpec::Kind::DoubleExponential:
      r = JumpSpec::double_exponential(1.0 - j.p, j.gamma_neg, j.gamma_pos,
                                       -j.eps_neg, -j.eps_pos);
      break;
    case JumpSpec::Kind::RationalCF:
      r = JumpSpec::rational_cf(RationalTransform::make(
          poly::compose_linear(j.cf->Q, -1.0), poly::compose_linear(j.cf->R, -1.0)));
      break;
    default: {
      // flip through generic evaluators (b-independent families only)
      JumpSpec orig = j;
      r = JumpSpec::generic(
          [orig](double y) { return orig.density(-y, 0.0) /
                                    std::max(orig.density_weight, 1e-300); },
          [orig](double y) { return 1.0 - cont_cdf(orig, -y, 0.0) /
                                    std::max(orig.density_weight, 1e-300); },
          std::move(atoms));
      break;
    }
  }
  return ProcessModel{-model.c, model.arrivals, std::move(r)};
}

// ---------- routing ----------

std::string route_name(SolverRoute r) {
  switch (r) {
    case SolverRoute::TrivialDouble: return "TrivialDouble";
    case SolverRoute::PoissonOneSided: return "PoissonOneSided";
    case SolverRoute::RationalArrivalsOneSided: return "RationalArrivalsOneSided";
    case SolverRoute::TwoSidedUpper: return "TwoSidedUpper";
    case SolverRoute::TwoSidedLower: return "TwoSidedLower";
    case SolverRoute::PoissonRationalCF: return "PoissonRationalCF";
    case SolverRoute::ZeroDrift: return "ZeroDrift";
    case SolverRoute::FredholmNumeric: return "FredholmNumeric";
    case SolverRoute::MonteCarloOnly: return "MonteCarloOnly";
  }
  return "?";
}

namespace {

bool severity_exp_representable(const JumpSpec& j) {
  using K = JumpSpec::Kind;
  return j.kind == K::ExponentialNegative || j.kind == K::Laplace ||
         j.kind == K::DoubleExponential || j.kind == K::RationalCF ||
         j.kind == K::None;
}

bool hypoexp_class(const ArrivalSpec& a) {
  using K = ArrivalSpec::Kind;
  return a.kind == K::Exponential || a.kind == K::Erlang ||
         a.kind == K::Hypoexponential;
}

double contraction_L(const ProcessModel& m, double b) {
  double time_part =
      m.c > 0.0 ? m.arrivals.cdf(b / m.c) : 1.0;
  double jump_part =
      std::max(0.0, 1.0 - m.jumps.tail_geq(b, b) - m.jumps.cdf_at(-b, b));
  return time_part * jump_part;
}

SolverRoute route_normalized(const ProcessModel& m, double x, double b,
                             Method method) {
  JumpSplit sp = decompose_jumps(m, x, b);
  const double eps = 1e-14;
  auto fredholm_or_mc = [&]() {
    return contraction_L(m, b) < 1.0 - 1e-12 ? SolverRoute::FredholmNumeric
                                             : SolverRoute::MonteCarloOnly;
  };
  if (method == Method::Mc) return SolverRoute::MonteCarloOnly;
  if (method == Method::Fredholm) return fredholm_or_mc();

  if (sp.p1 <= eps && sp.q1 <= eps) return SolverRoute::TrivialDouble;
  if (m.c == 0.0) return SolverRoute::ZeroDrift;

  const bool poisson = m.arrivals.kind == ArrivalSpec::Kind::Exponential;
  if (m.jumps.one_sided_negative(b)) {
    using K = JumpSpec::Kind;
    bool supported = severity_exp_representable(m.jumps) ||
                     m.jumps.kind == K::GammaHalfNegative;
    if (poisson && supported) return SolverRoute::PoissonOneSided;
    if (m.arrivals.has_rational_lt() && severity_exp_representable(m.jumps) &&
        m.jumps.atoms.empty())
      return SolverRoute::RationalArrivalsOneSided;
    return fredholm_or_mc();
  }
  if (sp.q1 <= eps && m.arrivals.has_rational_lt())
    return SolverRoute::TwoSidedLower;
  // the upper determinant route needs every positive jump to escape from
  // anywhere in (0,b), so the split is judged at x=0
  JumpSplit g0 = decompose_jumps(m, 0.0, b);
  if (g0.p1 <= eps && g0.p2 > 0.0 && hypoexp_class(m.arrivals) &&
      severity_exp_representable(m.jumps))
    return SolverRoute::TwoSidedUpper;
  if (poisson && severity_exp_representable(m.jumps) && m.jumps.atoms.empty() &&
      m.jumps.kind != JumpSpec::Kind::None &&
      m.jumps.kind != JumpSpec::Kind::DoubleExponential)
    return SolverRoute::PoissonRationalCF;
  if (poisson && m.jumps.kind == JumpSpec::Kind::DoubleExponential &&
      m.jumps.eps_pos == 0 && m.jumps.eps_neg == 0)
    return SolverRoute::PoissonRationalCF;
  return fredholm_or_mc();
}

}  // namespace

SolverRoute route(const ProcessModel& model, const EscapeQuery& query) {
  double b = query.b - query.a;
  double x = query.x - query.a;
  if (model.c < 0.0) {
    ProcessModel r = reflect(model);
    return route_normalized(r, b - x, b, query.method);
  }
  return route_normalized(model, x, b, query.method);
}

}  // namespace escape
