#include "escape/exppoly.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "escape/errors.hpp"

namespace escape {

namespace {

double fact(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

bool rates_equal(Complex a, Complex b) {
  return std::abs(a - b) <= 1e-10 * (1.0 + std::abs(a) + std::abs(b));
}

CPoly cmul(const CPoly& a, const CPoly& b) {
  if (a.empty() || b.empty()) return {};
  CPoly r(a.size() + b.size() - 1, Complex(0.0));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

CPoly cadd(const CPoly& a, const CPoly& b) {
  CPoly r(std::max(a.size(), b.size()), Complex(0.0));
  for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) r[i] += b[i];
  return r;
}

CPoly cpow_linear(Complex root, int k) {
  // (p - root)^k
  CPoly r{Complex(1.0)};
  CPoly lin{-root, Complex(1.0)};
  for (int i = 0; i < k; ++i) r = cmul(r, lin);
  return r;
}

// Taylor coefficients of p around s0, orders 0..m.
CPoly taylor_at(CPoly p, Complex s0, int m) {
  CPoly out;
  out.reserve(m + 1);
  for (int j = 0; j <= m && !p.empty(); ++j) {
    // synthetic division by (s - s0): remainder is the next coefficient
    Complex carry = p.back();
    CPoly q(p.size() > 1 ? p.size() - 1 : 0);
    for (int i = static_cast<int>(p.size()) - 2; i >= 0; --i) {
      q[i] = carry;
      carry = p[i] + carry * s0;
    }
    out.push_back(carry);
    p = std::move(q);
  }
  out.resize(m + 1, Complex(0.0));
  return out;
}

struct CRoot {
  Complex value;
  int multiplicity;
};

std::vector<CRoot> croots(const CPoly& coeffs) {
  int n = static_cast<int>(coeffs.size()) - 1;
  while (n >= 0 && std::abs(coeffs[n]) == 0.0) --n;
  if (n < 1) return {};
  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -coeffs[i] / coeffs[n];
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);

  CPoly p(coeffs.begin(), coeffs.begin() + n + 1);
  CPoly dp(n);
  for (int i = 1; i <= n; ++i) dp[i - 1] = p[i] * static_cast<double>(i);

  std::vector<Complex> raw;
  for (int i = 0; i < n; ++i) {
    Complex z = es.eigenvalues()[i];
    Complex d = poly::eval(dp, z);
    if (std::abs(d) > 1e-14) {
      Complex z2 = z - poly::eval(p, z) / d;
      if (std::abs(poly::eval(p, z2)) <= std::abs(poly::eval(p, z))) z = z2;
    }
    raw.push_back(z);
  }
  double maxabs = 0.0;
  for (Complex z : raw) maxabs = std::max(maxabs, std::abs(z));
  const double tol = 1e-8 * (1.0 + maxabs);

  std::vector<CRoot> out;
  std::vector<bool> used(raw.size(), false);
  for (size_t i = 0; i < raw.size(); ++i) {
    if (used[i]) continue;
    Complex sum = raw[i];
    int count = 1;
    used[i] = true;
    for (size_t j = i + 1; j < raw.size(); ++j)
      if (!used[j] && std::abs(raw[j] - raw[i]) < tol) {
        sum += raw[j];
        ++count;
        used[j] = true;
      }
    out.push_back({sum / static_cast<double>(count), count});
  }
  return out;
}

}  // namespace

ExpPoly ExpPoly::constant(double c) {
  return monomial(Complex(c), Complex(0.0), 0);
}

ExpPoly ExpPoly::monomial(Complex coef, Complex rate, int power) {
  ExpPoly e;
  if (coef != Complex(0.0)) e.terms_.push_back({coef, rate, power});
  return e;
}

double ExpPoly::eval(double x) const { return eval_complex(x).real(); }

Complex ExpPoly::eval_complex(double x) const {
  Complex v = 0.0;
  for (const Term& t : terms_) {
    double u = x - t.shift;
    if (u < 0.0) continue;
    v += t.coef * std::pow(u, t.power) * std::exp(t.rate * u);
  }
  return v;
}

namespace {
void require_unshifted(const std::vector<ExpPoly::Term>& terms, const char* op) {
  for (const auto& t : terms)
    if (t.shift != 0.0)
      throw Error(std::string("step-shifted terms do not support ") + op);
}
}  // namespace

ExpPoly ExpPoly::derivative() const {
  require_unshifted(terms_, "derivative");
  std::vector<Term> out;
  for (const Term& t : terms_) {
    if (t.power > 0)
      out.push_back({t.coef * static_cast<double>(t.power), t.rate, t.power - 1});
    if (t.rate != Complex(0.0)) out.push_back({t.coef * t.rate, t.rate, t.power});
  }
  return ExpPoly(std::move(out));
}

ExpPoly ExpPoly::derivative(int order) const {
  ExpPoly e = *this;
  for (int i = 0; i < order; ++i) e = e.derivative();
  return e;
}

ExpPoly ExpPoly::antiderivative_from_0() const {
  require_unshifted(terms_, "antiderivative");
  std::vector<Term> out;
  for (const Term& t : terms_) {
    if (t.rate == Complex(0.0)) {
      out.push_back({t.coef / static_cast<double>(t.power + 1), t.rate, t.power + 1});
      continue;
    }
    // I_k = x^k e^{sx}/s - (k/s) I_{k-1},  I_0 = (e^{sx} - 1)/s
    // accumulate: coefficient of x^j e^{sx} plus a constant term
    Complex s = t.rate;
    Complex c = t.coef / s;
    for (int j = t.power; j >= 0; --j) {
      out.push_back({c, s, j});
      if (j > 0) c *= -static_cast<double>(j) / s;
    }
    out.push_back({-c, Complex(0.0), 0});  // value at x = 0 subtracted off
  }
  return ExpPoly(std::move(out));
}

ExpPoly ExpPoly::scaled(Complex k) const {
  std::vector<Term> out = terms_;
  for (Term& t : out) t.coef *= k;
  return ExpPoly(std::move(out));
}

ExpPoly ExpPoly::shifted(double shift) const {
  require_unshifted(terms_, "argument shift");
  std::vector<Term> out;
  for (const Term& t : terms_) {
    Complex base = t.coef * std::exp(t.rate * shift);
    for (int j = 0; j <= t.power; ++j)
      out.push_back(
          {base * binom(t.power, j) * std::pow(shift, t.power - j), t.rate, j});
  }
  return ExpPoly(std::move(out));
}

ExpPoly ExpPoly::operator+(const ExpPoly& o) const {
  std::vector<Term> out = terms_;
  out.insert(out.end(), o.terms_.begin(), o.terms_.end());
  return ExpPoly(std::move(out));
}

ExpPoly ExpPoly::operator-(const ExpPoly& o) const {
  return *this + o.scaled(Complex(-1.0));
}

ExpPoly ExpPoly::operator*(const ExpPoly& o) const {
  require_unshifted(terms_, "product");
  require_unshifted(o.terms_, "product");
  std::vector<Term> out;
  for (const Term& a : terms_)
    for (const Term& b : o.terms_)
      out.push_back({a.coef * b.coef, a.rate + b.rate, a.power + b.power});
  return ExpPoly(std::move(out));
}

ExpPoly ExpPoly::convolve(const ExpPoly& o) const {
  require_unshifted(terms_, "convolution");
  require_unshifted(o.terms_, "convolution");
  std::vector<Term> out;
  for (const Term& ta : terms_) {
    for (const Term& tb : o.terms_) {
      const Complex a = ta.rate, b = tb.rate;
      const int m = ta.power + 1, n = tb.power + 1;
      const Complex C = ta.coef * tb.coef * fact(ta.power) * fact(tb.power);
      if (rates_equal(a, b)) {
        // single pole of order m+n
        out.push_back({C / fact(m + n - 1), a, m + n - 1});
        continue;
      }
      // partial fractions of 1/((p-a)^m (p-b)^n)
      for (int r = 1; r <= m; ++r) {
        Complex A = std::pow(-1.0, m - r) * binom(m + n - r - 1, n - 1) *
                    std::pow(a - b, static_cast<double>(r - m - n));
        out.push_back({C * A / fact(r - 1), a, r - 1});
      }
      for (int r = 1; r <= n; ++r) {
        Complex B = std::pow(-1.0, n - r) * binom(m + n - r - 1, m - 1) *
                    std::pow(b - a, static_cast<double>(r - m - n));
        out.push_back({C * B / fact(r - 1), b, r - 1});
      }
    }
  }
  return ExpPoly(std::move(out));
}

std::pair<CPoly, CPoly> ExpPoly::rational_lt() const {
  require_unshifted(terms_, "rational transform");
  // group terms by (clustered) rate
  struct Group {
    Complex rate;
    std::vector<Term> terms;
    int maxpow = 0;
  };
  std::vector<Group> groups;
  for (const Term& t : terms_) {
    bool found = false;
    for (Group& g : groups)
      if (rates_equal(g.rate, t.rate)) {
        g.terms.push_back(t);
        g.maxpow = std::max(g.maxpow, t.power);
        found = true;
        break;
      }
    if (!found) groups.push_back({t.rate, {t}, t.power});
  }
  // per group: sum c k!/(p-s)^{k+1} = P(p)/(p-s)^{K+1}
  CPoly den{Complex(1.0)};
  std::vector<CPoly> group_num(groups.size());
  for (size_t i = 0; i < groups.size(); ++i) {
    const Group& g = groups[i];
    CPoly P{Complex(0.0)};
    for (const Term& t : g.terms)
      P = cadd(P, cmul(CPoly{t.coef * fact(t.power)},
                       cpow_linear(g.rate, g.maxpow - t.power)));
    group_num[i] = P;
    den = cmul(den, cpow_linear(g.rate, g.maxpow + 1));
  }
  CPoly num{Complex(0.0)};
  for (size_t i = 0; i < groups.size(); ++i) {
    CPoly other{Complex(1.0)};
    for (size_t j = 0; j < groups.size(); ++j)
      if (j != i) other = cmul(other, cpow_linear(groups[j].rate, groups[j].maxpow + 1));
    num = cadd(num, cmul(group_num[i], other));
  }
  return {num, den};
}

void ExpPoly::simplify(double tol) {
  std::vector<Term> merged;
  for (const Term& t : terms_) {
    bool found = false;
    for (Term& m : merged)
      if (m.power == t.power && m.shift == t.shift && rates_equal(m.rate, t.rate)) {
        m.coef += t.coef;
        found = true;
        break;
      }
    if (!found) merged.push_back(t);
  }
  double maxc = 0.0;
  for (const Term& m : merged) maxc = std::max(maxc, std::abs(m.coef));
  std::erase_if(merged, [&](const Term& m) {
    return std::abs(m.coef) <= tol * maxc || m.coef == Complex(0.0);
  });
  terms_ = std::move(merged);
}

std::vector<PoleExpansion> partial_fractions(const CPoly& num_in,
                                             const CPoly& den_in) {
  CPoly num = num_in, den = den_in;
  while (!den.empty() && std::abs(den.back()) == 0.0) den.pop_back();
  while (!num.empty() && std::abs(num.back()) == 0.0) num.pop_back();
  if (den.size() < 2)
    throw DegenerateLeadingCoefficient("denominator must have degree >= 1");
  if (num.size() >= den.size())
    throw UnstableRationalTransform(
        "partial fractions need numerator degree below denominator degree");
  Complex lead = den.back();
  for (Complex& c : den) c /= lead;
  for (Complex& c : num) c /= lead;

  std::vector<PoleExpansion> out;
  for (const CRoot& root : croots(den)) {
    const int mu = root.multiplicity;
    CPoly dtay = taylor_at(den, root.value, mu + mu);
    CPoly ntay = taylor_at(num, root.value, mu - 1);
    // reduced denominator den/(s-s0)^mu has Taylor coeffs dtay[mu + j]
    CPoly g(mu);
    for (int j = 0; j < mu; ++j) {
      Complex acc = ntay[j];
      for (int i = 1; i <= j; ++i) acc -= dtay[mu + i] * g[j - i];
      g[j] = acc / dtay[mu];
    }
    out.push_back({root.value, std::vector<Complex>(g.begin(), g.end())});
  }
  return out;
}

ExpPoly invert_rational(const CPoly& num, const CPoly& den) {
  std::vector<ExpPoly::Term> out;
  for (const PoleExpansion& pe : partial_fractions(num, den)) {
    const int mu = static_cast<int>(pe.coeffs.size());
    // sum_j g_j/(s-s0)^{mu-j}  ->  g_j x^{mu-j-1} e^{s0 x}/(mu-j-1)!
    for (int j = 0; j < mu; ++j)
      out.push_back({pe.coeffs[j] / fact(mu - j - 1), pe.pole, mu - j - 1});
  }
  return ExpPoly(std::move(out));
}

ExpPoly invert_rational(const Poly& num, const Poly& den) {
  CPoly cn(num.begin(), num.end()), cd(den.begin(), den.end());
  return invert_rational(cn, cd);
}

double bromwich_invert(const std::function<ComplexL(ComplexL)>& F, double t,
                       int nodes) {
  if (!(t > 0.0)) throw NonFinite("transform inversion requires t > 0");
  // fixed Talbot contour s(theta) = r*theta*(cot theta + i); everything
  // in extended precision because e^{st} reaches e^{2*nodes/5}
  const int M = nodes;
  const long double tl = t;
  const long double r = 2.0L * M / (5.0L * tl);
  auto checked = [&](ComplexL s) {
    ComplexL v = F(s);
    if (!std::isfinite(static_cast<double>(v.real())) ||
        !std::isfinite(static_cast<double>(v.imag())))
      throw NonFinite("transform evaluator overflowed on the contour");
    return v;
  };
  long double sum = 0.5L * (checked(ComplexL(r, 0.0L)) * std::exp(r * tl)).real();
  const long double pi = 3.141592653589793238462643383279503L;
  for (int k = 1; k < M; ++k) {
    long double theta = k * pi / M;
    long double cot = std::cos(theta) / std::sin(theta);
    ComplexL s(r * theta * cot, r * theta);
    long double sigma = theta + (theta * cot - 1.0L) * cot;
    sum += (std::exp(s * tl) * checked(s) * ComplexL(1.0L, sigma)).real();
  }
  return static_cast<double>(sum * r / M);
}

}  // namespace escape
