#include "escape/analytic.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "escape/errors.hpp"

namespace escape {

namespace {

double clamp01(double v, AnalyticDiag* diag) {
  if (diag)
    diag->pre_clamp_excursion =
        std::max(diag->pre_clamp_excursion, std::max(-v, v - 1.0));
  return std::clamp(v, 0.0, 1.0);
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// total integral over (0,inf) of an exp-polynomial with decaying rates
double ep_mass(const ExpPoly& f) {
  Complex m = 0.0;
  for (const auto& t : f.terms())
    m += t.coef * factorial(t.power) / std::pow(-t.rate, t.power + 1);
  return m.real();
}

Poly to_real(const CPoly& p) {
  Poly r(p.size());
  for (size_t i = 0; i < p.size(); ++i) r[i] = p[i].real();
  return r;
}

// multiply a polynomial by s
Poly times_s(const Poly& p) {
  Poly r(p.size() + 1, 0.0);
  for (size_t i = 0; i < p.size(); ++i) r[i + 1] = p[i];
  return r;
}

// One sign-definite piece of the severity: Laplace transform R/Q of the
// unconditional density of |J| restricted to that sign (mass < 1 when the
// other side carries the rest), plus the density itself.
struct PartLT {
  Poly Q{1.0};
  Poly R{};
  ExpPoly density;
  double mass = 0.0;
};

PartLT negative_part(const JumpSpec& j) {
  using K = JumpSpec::Kind;
  PartLT r;
  const double w = j.density_weight;
  switch (j.kind) {
    case K::None:
      break;
    case K::ExponentialNegative:
      r.Q = {j.gamma, 1.0};
      r.R = {w * j.gamma};
      r.density = ExpPoly::monomial(w * j.gamma, -j.gamma, 0);
      r.mass = w;
      break;
    case K::Laplace:
      r.Q = {j.gamma, 1.0};
      r.R = {0.5 * w * j.gamma};
      r.density = ExpPoly::monomial(0.5 * w * j.gamma, -j.gamma, 0);
      r.mass = 0.5 * w;
      break;
    case K::DoubleExponential: {
      double q = w * (1.0 - j.p);
      if (q <= 0.0) break;
      if (j.eps_neg != 0)
        throw UnsupportedSeverity(
            "shifted exponential branch has no rational transform");
      r.Q = {j.gamma_neg, 1.0};
      r.R = {q * j.gamma_neg};
      r.density = ExpPoly::monomial(q * j.gamma_neg, -j.gamma_neg, 0);
      r.mass = q;
      break;
    }
    case K::RationalCF: {
      r.density = j.cf_neg;
      r.mass = ep_mass(j.cf_neg);
      if (!j.cf_neg.empty()) {
        auto [num, den] = j.cf_neg.rational_lt();
        r.R = to_real(num);
        r.Q = to_real(den);
      }
      break;
    }
    default:
      throw UnsupportedSeverity("severity has no rational transform");
  }
  return r;
}

PartLT positive_part(const JumpSpec& j) {
  using K = JumpSpec::Kind;
  PartLT r;
  const double w = j.density_weight;
  switch (j.kind) {
    case K::None:
    case K::ExponentialNegative:
    case K::GammaHalfNegative:
      break;
    case K::Laplace:
      r.Q = {j.gamma, 1.0};
      r.R = {0.5 * w * j.gamma};
      r.density = ExpPoly::monomial(0.5 * w * j.gamma, -j.gamma, 0);
      r.mass = 0.5 * w;
      break;
    case K::DoubleExponential: {
      double p = w * j.p;
      if (p <= 0.0) break;
      if (j.eps_pos != 0)
        throw UnsupportedSeverity(
            "shifted exponential branch has no rational transform");
      r.Q = {j.gamma_pos, 1.0};
      r.R = {p * j.gamma_pos};
      r.density = ExpPoly::monomial(p * j.gamma_pos, -j.gamma_pos, 0);
      r.mass = p;
      break;
    }
    case K::RationalCF: {
      r.density = j.cf_pos;
      r.mass = ep_mass(j.cf_pos);
      if (!j.cf_pos.empty()) {
        auto [num, den] = j.cf_pos.rational_lt();
        r.R = to_real(num);
        r.Q = to_real(den);
      }
      break;
    }
    default:
      throw UnsupportedSeverity("severity has no rational transform");
  }
  return r;
}

// pi-hat denominator for Exponential arrivals: rho*(R_h - Q_h) + s*Q_h
ExpPoly poisson_pi_rational(double rho, const PartLT& h) {
  Poly den = poly::add(poly::scale(poly::sub(h.R, h.Q), rho), times_s(h.Q));
  return invert_rational(h.Q, den);
}

// e^{s x} erfc(sqrt(x*xi)) with xi = s + g, kept finite for large arguments
// via e^{s x} erfc(t) = e^{-g x} * e^{t^2} erfc(t), t = sqrt(x*xi)
double exp_erfc(double s, double xi, double g, double x) {
  double t = std::sqrt(x * xi);
  if (t < 6.0) return std::exp(s * x) * std::erfc(t);
  double t2 = t * t;
  double tail =
      (1.0 - 0.5 / t2 + 0.75 / (t2 * t2)) / (t * std::sqrt(M_PI));
  return std::exp(-g * x) * tail;
}

// survival transform for Gamma(1/2,gamma) negative jumps; equals
// (1 - rho*m) * pi(x) with m = 1/(2 gamma)
double gamma_half_S(double rho, double g, double x) {
  if (x <= 0.0) return 1.0 - 0.5 * rho / g;
  double disc = std::sqrt(g * (g + 4.0 * rho));
  double sp = 0.5 * (2.0 * rho - g + disc), sm = 0.5 * (2.0 * rho - g - disc);
  double xp = sp + g, xm = sm + g, d = sm - sp;
  // the coefficient of the bare e^{sp x} vanishes identically
  // (xp*(sp-rho)^2 = g*rho^2), leaving only decaying exponentials and
  // scaled complementary error functions
  double Am = -sp * xm * (sm - rho) / (2.0 * g * rho * d);
  double Bm = std::sqrt(xm) * sp / (2.0 * std::sqrt(g) * d);
  double Bp = -std::sqrt(xp) * sm / (2.0 * std::sqrt(g) * d);
  double S = 0.5 * (1.0 + std::erf(std::sqrt(g * x)));
  S += (Am + Bm) * std::exp(sm * x);
  S -= Bp * exp_erfc(sp, xp, g, x);
  S -= Bm * exp_erfc(sm, xm, g, x);
  return S;
}

// alternating series for a single fixed negative jump of size y1:
// pi(x) = e^{rho x} * sum_k (-rho e^{-y1 rho})^k (x - k y1)^k / k!
double constant_pi_tilde(double rho, double y1, double x) {
  int k1 = static_cast<int>(std::floor(x / y1));
  double base = -rho * std::exp(-y1 * rho), acc = 0.0;
  for (int k = 0; k <= k1; ++k)
    acc += std::pow(base, k) * std::pow(x - k * y1, k) / factorial(k);
  return acc;
}

bool is_constant_negative_jump(const JumpSpec& j) {
  return j.kind == JumpSpec::Kind::None && j.atoms.size() == 1 &&
         j.atoms[0].location < 0.0;
}

double det_with_rcond(const Eigen::MatrixXd& M, double* rcond = nullptr) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  if (rcond) {
    double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
    for (int i = 0; i < M.rows(); ++i) {
      double d = std::abs(lu.matrixLU()(i, i));
      mn = std::min(mn, d);
      mx = std::max(mx, d);
    }
    *rcond = mx > 0.0 ? mn / mx : 0.0;
  }
  return lu.determinant();
}

void require_positive_drift(const ProcessModel& m, const char* who) {
  if (!(m.c > 0.0))
    throw RoutingMismatch(std::string(who) + " requires c > 0; reflect first");
}

// rho*(hhat(s) - 1) + s evaluated on the Talbot contour
std::function<ComplexL(ComplexL)> poisson_transform(const ProcessModel& m) {
  using K = JumpSpec::Kind;
  const JumpSpec& j = m.jumps;
  long double rho = static_cast<long double>(m.arrivals.rate) / m.c;
  std::function<ComplexL(ComplexL)> hhat;
  switch (j.kind) {
    case K::ExponentialNegative: {
      long double g = j.gamma;
      hhat = [g](ComplexL s) { return g / (g + s); };
      break;
    }
    case K::GammaHalfNegative: {
      long double g = j.gamma;
      hhat = [g](ComplexL s) { return std::sqrt(g / (g + s)); };
      break;
    }
    case K::DoubleExponential: {
      if (j.p > 0.0 || j.eps_neg != 0)
        throw UnsupportedSeverity("severity is not one-sided negative");
      long double g = j.gamma_neg;
      hhat = [g](ComplexL s) { return g / (g + s); };
      break;
    }
    case K::RationalCF: {
      if (!j.cf_pos.empty())
        throw UnsupportedSeverity("severity is not one-sided negative");
      Poly R = j.cf->R, Q = j.cf->Q;
      hhat = [R, Q](ComplexL s) {
        // E e^{sJ} = R(s)/Q(s) with J < 0, so hhat_{-J}(s) = R(s)/Q(s)
        ComplexL num = 0.0, den = 0.0;
        for (auto it = R.rbegin(); it != R.rend(); ++it)
          num = num * s + static_cast<long double>(*it);
        for (auto it = Q.rbegin(); it != Q.rend(); ++it)
          den = den * s + static_cast<long double>(*it);
        return num / den;
      };
      break;
    }
    case K::None: {
      if (!is_constant_negative_jump(j))
        throw UnsupportedSeverity("atoms do not form a single fixed jump");
      long double y1 = -j.atoms[0].location;
      hhat = [y1](ComplexL s) { return std::exp(-y1 * s); };
      break;
    }
    default:
      throw UnsupportedSeverity("severity transform is not evaluable");
  }
  return [rho, hhat](ComplexL s) {
    return 1.0L / (s + rho * (hhat(s) - 1.0L));
  };
}

}  // namespace

double ep_trivial(const ProcessModel& m, double x, double b) {
  if (m.c < 0.0) throw RoutingMismatch("trivial form requires c >= 0");
  JumpSplit s = decompose_jumps(m, x, b);
  if (s.p1 + s.q1 > 1e-12)
    throw RoutingMismatch("severity has mass strictly inside (0,b)");
  if (m.c == 0.0) return s.p2;
  double tb = (b - x) / m.c;
  return m.arrivals.sf(tb) + s.p2 * m.arrivals.cdf(tb);
}

double poisson_pi(const ProcessModel& m, double x) {
  if (m.arrivals.kind != ArrivalSpec::Kind::Exponential)
    throw RoutingMismatch("pi is defined for Exponential arrivals");
  require_positive_drift(m, "pi");
  if (!m.jumps.one_sided_negative(0.0))
    throw RoutingMismatch("pi requires one-sided negative severities");
  const double rho = m.arrivals.rate / m.c;
  const JumpSpec& j = m.jumps;
  if (j.kind == JumpSpec::Kind::GammaHalfNegative)
    return gamma_half_S(rho, j.gamma, x) / (1.0 - 0.5 * rho / j.gamma);
  if (is_constant_negative_jump(j)) {
    double y1 = -j.atoms[0].location;
    return std::exp(rho * x) * constant_pi_tilde(rho, y1, x);
  }
  if (!j.atoms.empty())
    throw UnsupportedSeverity("severity mixes atoms with a density");
  PartLT h = negative_part(j);
  if (h.mass < 1.0 - 1e-9)
    throw RoutingMismatch("severity mass is not fully negative");
  return poisson_pi_rational(rho, h).eval(x);
}

double poisson_pi_talbot(const ProcessModel& m, double x, int nodes) {
  if (m.arrivals.kind != ArrivalSpec::Kind::Exponential)
    throw RoutingMismatch("pi is defined for Exponential arrivals");
  require_positive_drift(m, "pi");
  if (x <= 0.0) return 1.0;
  return bromwich_invert(poisson_transform(m), x, nodes);
}

double ep_poisson_one_sided(const ProcessModel& m, double x, double b,
                            AnalyticDiag* diag) {
  if (m.arrivals.kind != ArrivalSpec::Kind::Exponential)
    throw RoutingMismatch("route requires Exponential arrivals");
  require_positive_drift(m, "one-sided Poisson route");
  if (!m.jumps.one_sided_negative(b))
    throw RoutingMismatch("route requires one-sided negative severities");
  const double rho = m.arrivals.rate / m.c;
  const JumpSpec& j = m.jumps;
  if (j.kind == JumpSpec::Kind::ExponentialNegative && j.atoms.empty()) {
    double g = j.gamma;
    if (std::abs(rho - g) < 1e-9)
      return clamp01((1.0 + g * x) / (1.0 + g * b), diag);
    double num = 1.0 - rho / g * std::exp((rho - g) * x);
    double den = 1.0 - rho / g * std::exp((rho - g) * b);
    return clamp01(num / den, diag);
  }
  if (j.kind == JumpSpec::Kind::GammaHalfNegative)
    return clamp01(gamma_half_S(rho, j.gamma, x) / gamma_half_S(rho, j.gamma, b),
                   diag);
  if (is_constant_negative_jump(j)) {
    double y1 = -j.atoms[0].location;
    double ratio = std::exp(rho * (x - b)) * constant_pi_tilde(rho, y1, x) /
                   constant_pi_tilde(rho, y1, b);
    return clamp01(ratio, diag);
  }
  if (!j.atoms.empty())
    throw UnsupportedSeverity("severity mixes atoms with a density");
  PartLT h = negative_part(j);
  if (h.mass < 1.0 - 1e-9)
    throw RoutingMismatch("severity mass is not fully negative");
  ExpPoly pi = poisson_pi_rational(rho, h);
  double pb = pi.eval(b);
  if (diag) {
    diag->solution = pi.scaled(1.0 / pb);
    diag->has_solution = true;
  }
  return clamp01(pi.eval(x) / pb, diag);
}

double survival_poisson(const ProcessModel& m, double x) {
  if (m.arrivals.kind != ArrivalSpec::Kind::Exponential)
    throw RoutingMismatch("survival form requires Exponential arrivals");
  require_positive_drift(m, "survival form");
  if (!m.jumps.one_sided_negative(0.0))
    throw RoutingMismatch("survival form requires negative severities");
  const double rho = m.arrivals.rate / m.c;
  double mean_drop = -m.jumps.mean(0.0);
  if (rho * mean_drop >= 1.0) return 0.0;
  if (m.jumps.kind == JumpSpec::Kind::GammaHalfNegative)
    return std::clamp(gamma_half_S(rho, m.jumps.gamma, x), 0.0, 1.0);
  return std::clamp((1.0 - rho * mean_drop) * poisson_pi(m, x), 0.0, 1.0);
}

double ep_rational_arrivals(const ProcessModel& m, double x, double b,
                            AnalyticDiag* diag) {
  require_positive_drift(m, "rational-arrivals route");
  if (!m.arrivals.has_rational_lt())
    throw RoutingMismatch("arrivals need a rational Laplace transform");
  if (!m.jumps.atoms.empty())
    throw UnsupportedSeverity("severity atoms are not representable here");
  if (!m.jumps.one_sided_negative(b))
    throw RoutingMismatch("route requires one-sided negative severities");
  PartLT h = negative_part(m.jumps);
  if (h.mass < 1.0 - 1e-9)
    throw RoutingMismatch("severity mass is not fully negative");

  const RationalTransform& ft = *m.arrivals.transform;
  const int n = poly::degree(ft.Q);
  Poly Qc = poly::compose_linear(ft.Q, -m.c);
  Poly Rc = poly::compose_linear(ft.R, -m.c);
  Poly D = poly::sub(poly::mul(Qc, h.Q), poly::mul(Rc, h.R));
  ExpPoly pi = invert_rational(h.Q, D);

  std::vector<ExpPoly> dpi(2 * n - 1);
  dpi[0] = pi;
  for (size_t i = 1; i < dpi.size(); ++i) dpi[i] = dpi[i - 1].derivative();

  // xi[k] holds xi_{k-1}; xi_{-1} = -1, xi_j = (-1/c)^{j+1} f^{(j)}(0)
  std::vector<double> f0 = initial_data(ft);
  std::vector<double> xi(n);
  xi[0] = -1.0;
  for (int k = 1; k < n; ++k) xi[k] = std::pow(-1.0 / m.c, k) * f0[k - 1];

  // m_i = pi^{(i)} convolved with the severity density; derivatives at b
  std::vector<std::vector<double>> mder(n);
  for (int i = 0; i < n; ++i) {
    ExpPoly cur = dpi[i].convolve(h.density);
    mder[i].resize(n > 1 ? n - 1 : 0);
    for (int d = 0; d < n - 1; ++d) {
      mder[i][d] = cur.eval(b);
      cur = cur.derivative();
    }
  }

  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i) A(0, i) = dpi[i].eval(b);
  for (int j = 1; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      double acc = dpi[i + j].eval(b);
      for (int k = 0; k < j; ++k) acc -= xi[k + 1] * mder[i][j - k - 1];
      A(j, i) = acc;
    }

  auto theta = [&](double xx) {
    Eigen::MatrixXd T(n + 1, n + 1);
    T(0, 0) = 0.0;
    for (int i = 0; i < n; ++i) T(0, i + 1) = dpi[i].eval(xx);
    for (int j = 0; j < n; ++j) {
      T(j + 1, 0) = xi[j];
      for (int i = 0; i < n; ++i) T(j + 1, i + 1) = A(j, i);
    }
    return T;
  };

  double rcond = 0.0;
  double det_b = det_with_rcond(theta(b), &rcond);
  if (diag) diag->theta_rcond = rcond;
  if (rcond < 1e-12)
    throw SingularThetaAtB("terminal determinant is numerically singular");
  double det_x = det_with_rcond(theta(x));

  if (diag) {
    Eigen::VectorXd rhs(n);
    for (int j = 0; j < n; ++j) rhs[j] = -xi[j];
    Eigen::VectorXd alpha = Eigen::PartialPivLU<Eigen::MatrixXd>(A).solve(rhs);
    ExpPoly N;
    for (int i = 0; i < n; ++i) N = N + dpi[i].scaled(alpha[i]);
    diag->solution = N;
    diag->has_solution = true;
    diag->bc_residual = (A * alpha - rhs).norm();
  }
  return clamp01(det_x / det_b, diag);
}

double ep_two_sided_upper(const ProcessModel& m, double x, double b,
                          AnalyticDiag* diag) {
  require_positive_drift(m, "upper two-sided route");
  const RationalTransform& ft =
      m.arrivals.has_rational_lt()
          ? *m.arrivals.transform
          : throw RoutingMismatch("arrivals need a rational Laplace transform");
  if (poly::degree(ft.R) != 0)
    throw RoutingMismatch("route requires hypoexponential-class arrivals");
  // the split at x=0 is the binding one: once the path drifts below x a
  // positive jump from [b-x, b) can land inside the interval again
  JumpSplit sp = decompose_jumps(m, 0.0, b);
  if (sp.p1 > 1e-10)
    throw RoutingMismatch("positive severity mass must lie at or above b");
  for (const auto& a : m.jumps.atoms)
    if (a.location < 0.0)
      throw UnsupportedSeverity("negative atoms are not representable here");
  const double p = sp.p2;
  PartLT hn = negative_part(m.jumps);
  if (std::abs(hn.mass - (1.0 - p)) > 1e-9)
    throw RoutingMismatch("negative severity part is not a plain density");

  const int n = poly::degree(ft.Q);
  const double Q0 = poly::eval(ft.Q, 0.0);
  Poly Qc = poly::compose_linear(ft.Q, -m.c);
  Poly D = poly::sub(poly::mul(Qc, hn.Q), poly::scale(hn.R, Q0));
  ExpPoly pi = invert_rational(hn.Q, D);
  ExpPoly pim1 = pi.antiderivative_from_0();

  std::vector<ExpPoly> dpi(2 * n - 1);
  dpi[0] = pi;
  for (size_t i = 1; i < dpi.size(); ++i) dpi[i] = dpi[i - 1].derivative();

  auto amat = [&](double xx) {
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i) A(0, i) = dpi[i].eval(xx);
    for (int j = 1; j < n; ++j)
      for (int i = 0; i < n; ++i) A(j, i) = dpi[i + j].eval(b);
    return A;
  };
  auto bmat = [&](double xx) {
    Eigen::MatrixXd B(n + 1, n + 1);
    B(0, 0) = pim1.eval(xx);
    B(1, 0) = pim1.eval(b);
    for (int i = 0; i < n; ++i) {
      B(0, i + 1) = dpi[i].eval(xx);
      B(1, i + 1) = dpi[i].eval(b);
    }
    for (int r = 2; r <= n; ++r) {
      B(r, 0) = dpi[r - 2].eval(b);
      for (int i = 0; i < n; ++i) B(r, i + 1) = dpi[r - 2 + i + 1].eval(b);
    }
    return B;
  };

  double rcond = 0.0;
  double det_ab = det_with_rcond(amat(b), &rcond);
  if (diag) diag->theta_rcond = rcond;
  if (rcond < 1e-12)
    throw SingularThetaAtB("terminal determinant is numerically singular");
  double val =
      (det_with_rcond(amat(x)) + p * Q0 * det_with_rcond(bmat(x))) / det_ab;

  if (diag) {
    // alpha from the terminal system; stores the assembled solution
    Eigen::MatrixXd W(n, n);
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j) W(k, j) = dpi[k + j].eval(b);
    Eigen::VectorXd rhs(n);
    for (int k = 0; k < n; ++k)
      rhs[k] = (k == 0 ? 1.0 : 0.0) -
               p * Q0 * (k == 0 ? pim1.eval(b) : dpi[k - 1].eval(b));
    Eigen::VectorXd alpha = Eigen::PartialPivLU<Eigen::MatrixXd>(W).solve(rhs);
    ExpPoly N = pim1.scaled(p * Q0);
    for (int j = 0; j < n; ++j) N = N + dpi[j].scaled(alpha[j]);
    diag->solution = N;
    diag->has_solution = true;
    diag->bc_residual = (W * alpha - rhs).norm();
  }
  return clamp01(val, diag);
}

namespace {

// exact finite series for a fixed positive jump of size y1 under
// Exponential arrivals with all negative mass at or below -b
double fixed_jump_series(double rho, double p, double y1, double bx) {
  int k1 = static_cast<int>(std::floor(bx / y1));
  double q = 1.0 - p, acc = 0.0, pk = 1.0;
  for (int k = 0; k <= k1; ++k) {
    double xi = bx - k * y1;
    double t = std::exp(-rho * xi), inner = t;
    for (int j = 1; j <= k; ++j) {
      t *= rho * xi / j;
      inner += t;
    }
    acc += pk * (1.0 - inner);
    pk *= p;
  }
  return 1.0 - q * acc;
}

}  // namespace

double ep_two_sided_lower(const ProcessModel& m, double x, double b,
                          AnalyticDiag* diag) {
  require_positive_drift(m, "lower two-sided route");
  if (!m.arrivals.has_rational_lt())
    throw RoutingMismatch("arrivals need a rational Laplace transform");
  JumpSplit sp = decompose_jumps(m, x, b);
  if (sp.q1 > 1e-10)
    throw RoutingMismatch("negative severity mass must lie at or below -b");
  if (m.arrivals.cdf(b / m.c) * sp.p1 >= 1.0)
    throw ConditionViolated("interior positive mass defeats the contraction");

  std::vector<JumpSpec::Atom> pos_atoms;
  for (const auto& a : m.jumps.atoms)
    if (a.location > 0.0 && a.mass > 0.0) pos_atoms.push_back(a);
  PartLT hp = positive_part(m.jumps);

  if (!pos_atoms.empty()) {
    if (pos_atoms.size() == 1 && hp.mass <= 1e-12 &&
        m.arrivals.kind == ArrivalSpec::Kind::Exponential) {
      double rho = m.arrivals.rate / m.c;
      return clamp01(
          fixed_jump_series(rho, pos_atoms[0].mass, pos_atoms[0].location,
                            b - x),
          diag);
    }
    throw UnsupportedSeverity("positive atoms need a single fixed jump");
  }

  const double q = 1.0 - hp.mass;
  const RationalTransform& ft = *m.arrivals.transform;
  Poly Qfc = poly::compose_linear(ft.Q, m.c);
  Poly Rfc = poly::compose_linear(ft.R, m.c);
  Poly den = poly::sub(poly::mul(Qfc, hp.Q), poly::mul(hp.R, Rfc));
  Poly num = poly::sub(den, poly::scale(poly::mul(Rfc, hp.Q), q));
  ExpPoly pi = invert_rational(poly::divide_by_s(num, 1e-7), den);
  return clamp01(pi.eval(b - x), diag);
}

namespace {

// two-sided severity with rational characteristic function:
// half-line densities, full transform E e^{sJ} = R(s)/Q(s)
struct CfData {
  ExpPoly pos, neg;  // h(y) = pos(y) for y>0, h(y) = neg(-y) for y<0
  Poly Q, R;
};

CfData rational_cf_data(const JumpSpec& j) {
  using K = JumpSpec::Kind;
  if (!j.atoms.empty())
    throw UnsupportedSeverity("severity atoms are not representable here");
  CfData d;
  switch (j.kind) {
    case K::ExponentialNegative:
      d.neg = ExpPoly::monomial(j.gamma, -j.gamma, 0);
      d.Q = {j.gamma, 1.0};
      d.R = {j.gamma};
      break;
    case K::Laplace:
      d.pos = d.neg = ExpPoly::monomial(0.5 * j.gamma, -j.gamma, 0);
      d.Q = {j.gamma * j.gamma, 0.0, -1.0};
      d.R = {j.gamma * j.gamma};
      break;
    case K::DoubleExponential: {
      if (j.eps_pos != 0 || j.eps_neg != 0)
        throw UnsupportedSeverity(
            "shifted exponential branches have no rational transform");
      double p = j.p, q = 1.0 - j.p;
      d.pos = ExpPoly::monomial(p * j.gamma_pos, -j.gamma_pos, 0);
      d.neg = ExpPoly::monomial(q * j.gamma_neg, -j.gamma_neg, 0);
      d.Q = {j.gamma_pos * j.gamma_neg, j.gamma_pos - j.gamma_neg, -1.0};
      d.R = {j.gamma_pos * j.gamma_neg, p * j.gamma_pos - q * j.gamma_neg};
      break;
    }
    case K::RationalCF:
      d.pos = j.cf_pos;
      d.neg = j.cf_neg;
      d.Q = j.cf->Q;
      d.R = j.cf->R;
      break;
    default:
      throw UnsupportedSeverity("severity characteristic function is not rational");
  }
  return d;
}

Poly lundberg_poly(const CfData& d, double inv_rho) {
  Poly P = poly::sub(d.Q, d.R);
  if (inv_rho != 0.0) P = poly::sub(P, poly::scale(times_s(d.Q), inv_rho));
  return poly::trim(P, 0.0);
}

// integral_0^b g(u) e^{-s u} du
Complex partial_lt(const ExpPoly& g, Complex s, double b) {
  ExpPoly prod = g * ExpPoly::monomial(1.0, -s, 0);
  return prod.antiderivative_from_0().eval_complex(b);
}

// solve the constant-coefficient boundary problem on the Lundberg roots;
// inv_rho = 0 encodes zero drift (no terminal condition N(b)=1)
ExpPoly solve_rational_cf(const CfData& d, double inv_rho, double b,
                          double* bc_residual) {
  const int n = poly::degree(d.Q);
  RootSet roots = poly_roots(lundberg_poly(d, inv_rho));
  if (!roots.all_simple())
    throw MultipleRootsDetected("Lundberg equation has a repeated root");
  const int nr = roots.total_multiplicity();
  const int expected = n + (inv_rho != 0.0 ? 1 : 0);
  if (nr != expected)
    throw DegenerateLeadingCoefficient("Lundberg polynomial lost its degree");

  // jump data at the origin and positive-side derivatives
  std::vector<double> hp0(n), I(n);
  {
    ExpPoly dp = d.pos, dn = d.neg;
    for (int l = 0; l < n; ++l) {
      hp0[l] = dp.eval(0.0);
      I[l] = hp0[l] - (l % 2 ? -1.0 : 1.0) * dn.eval(0.0);
      dp = dp.derivative();
      dn = dn.derivative();
    }
  }
  const double pos_mass = ep_mass(d.pos);

  std::vector<Complex> s(nr), E(nr);
  for (int k = 0; k < nr; ++k) {
    s[k] = roots.roots[k].value;
    E[k] = std::exp(s[k] * b);
  }
  // mu[j][k] = integral_0^b d_z^j h_-(z-b) e^{s_k z} dz
  std::vector<std::vector<Complex>> mu(n, std::vector<Complex>(nr));
  {
    ExpPoly dn = d.neg;
    for (int j = 0; j < n; ++j) {
      double sign = (j % 2 ? -1.0 : 1.0);
      for (int k = 0; k < nr; ++k)
        mu[j][k] = sign * E[k] * partial_lt(dn, s[k], b);
      dn = dn.derivative();
    }
  }

  Eigen::MatrixXcd M(nr, nr);
  Eigen::VectorXcd rhs(nr);
  int r = 0;
  if (inv_rho != 0.0) {
    for (int k = 0; k < nr; ++k) M(r, k) = E[k];
    rhs[r] = 1.0;
    ++r;
  }
  for (int k = 0; k < nr; ++k) M(r, k) = E[k] * (1.0 - s[k] * inv_rho) - mu[0][k];
  rhs[r] = pos_mass;
  ++r;
  for (int j = 1; j < n; ++j, ++r) {
    double sign = (j % 2 ? 1.0 : -1.0);  // (-1)^{j-1}
    for (int k = 0; k < nr; ++k) {
      Complex sj = std::pow(s[k], j);
      Complex coef = sj - sj * s[k] * inv_rho;
      for (int l = 0; l < j; ++l)
        coef += (l % 2 ? -1.0 : 1.0) * I[l] * std::pow(s[k], j - l - 1);
      M(r, k) = E[k] * coef + sign * mu[j][k];
    }
    rhs[r] = sign * hp0[j - 1];
  }

  Eigen::VectorXcd beta = M.partialPivLu().solve(rhs);
  if (bc_residual)
    *bc_residual = (M * beta - rhs).norm() / std::max(1.0, rhs.norm());

  std::vector<ExpPoly::Term> terms;
  for (int k = 0; k < nr; ++k) terms.push_back({beta[k], s[k], 0});
  return ExpPoly(std::move(terms));
}

}  // namespace

RootSet lundberg_roots(const ProcessModel& m) {
  CfData d = rational_cf_data(m.jumps);
  double inv_rho = 0.0;
  if (m.c != 0.0) {
    if (m.arrivals.kind != ArrivalSpec::Kind::Exponential)
      throw RoutingMismatch("Lundberg form requires Exponential arrivals");
    inv_rho = m.c / m.arrivals.rate;
  }
  return poly_roots(lundberg_poly(d, inv_rho));
}

double ep_poisson_rational_cf(const ProcessModel& m, double x, double b,
                              AnalyticDiag* diag) {
  require_positive_drift(m, "rational-CF route");
  if (m.arrivals.kind != ArrivalSpec::Kind::Exponential)
    throw RoutingMismatch("route requires Exponential arrivals");
  CfData d = rational_cf_data(m.jumps);
  double resid = 0.0;
  ExpPoly N = solve_rational_cf(d, m.c / m.arrivals.rate, b, &resid);
  if (diag) {
    diag->solution = N;
    diag->has_solution = true;
    diag->bc_residual = resid;
  }
  return clamp01(N.eval(x), diag);
}

double ep_zero_drift(const ProcessModel& m, double x, double b,
                     AnalyticDiag* diag) {
  if (m.c != 0.0) throw RoutingMismatch("zero-drift route requires c = 0");
  JumpSplit local = decompose_jumps(m, x, b);
  const double eps = 1e-12;
  if (local.p1 <= eps && local.q1 <= eps) return clamp01(local.p2, diag);
  // route on the split seen from the lower barrier: the process moves, so
  // one-sidedness must hold along the whole excursion, not just at x
  JumpSplit sp = decompose_jumps(m, 0.0, b);
  const JumpSpec& j = m.jumps;

  if (sp.q1 <= eps) {
    std::vector<JumpSpec::Atom> pos_atoms;
    for (const auto& a : j.atoms)
      if (a.location > 0.0 && a.mass > 0.0) pos_atoms.push_back(a);
    PartLT hp = positive_part(j);
    if (pos_atoms.size() == 1 && hp.mass <= 1e-12) {
      // escape needs the first floor((b-x)/y1)+1 jumps all positive
      int k1 = static_cast<int>(std::floor((b - x) / pos_atoms[0].location));
      return clamp01(std::pow(pos_atoms[0].mass, k1 + 1), diag);
    }
    if (!pos_atoms.empty())
      throw UnsupportedSeverity("positive atoms need a single fixed jump");
    // atoms at or below -b never re-enter (0,b); only the continuous
    // positive part drives the ladder process
    Poly den = times_s(poly::sub(hp.Q, hp.R));
    ExpPoly T = invert_rational(poly::scale(hp.Q, 1.0 - hp.mass), den);
    return clamp01(1.0 - T.eval(b - x), diag);
  }

  if (sp.p1 <= eps) {
    for (const auto& a : j.atoms)
      if (a.location < 0.0 && a.mass > 0.0 && a.location > -b)
        throw UnsupportedSeverity("interior negative atoms are not representable");
    PartLT hn = negative_part(j);
    Poly den = times_s(poly::sub(hn.Q, hn.R));
    ExpPoly T = invert_rational(poly::scale(hn.Q, 1.0 - hn.mass), den);
    return clamp01(T.eval(x), diag);
  }

  const bool symmetric = j.kind == JumpSpec::Kind::Laplace;
  if (symmetric || (j.kind == JumpSpec::Kind::DoubleExponential &&
                    j.eps_pos == 0 && j.eps_neg == 0)) {
    double p = symmetric ? 0.5 : j.p;
    double gp = symmetric ? j.gamma : j.gamma_pos;
    double gm = symmetric ? j.gamma : j.gamma_neg;
    double q = 1.0 - p, v = q * gp - p * gm;
    if (std::abs(v) < 1e-10)
      return clamp01(gp * (gm * x + 1.0) / (gp + gm + b * gp * gm), diag);
    double val = p * (gm - q * (gp + gm) * std::exp(v * x)) /
                 (p * gm - q * gp * std::exp(v * b));
    return clamp01(val, diag);
  }
  if (j.kind == JumpSpec::Kind::RationalCF) {
    CfData d = rational_cf_data(j);
    double resid = 0.0;
    ExpPoly N = solve_rational_cf(d, 0.0, b, &resid);
    if (diag) {
      diag->solution = N;
      diag->has_solution = true;
      diag->bc_residual = resid;
    }
    return clamp01(N.eval(x), diag);
  }
  throw UnsupportedSeverity("zero-drift severity outside the solvable families");
}

}  // namespace escape
