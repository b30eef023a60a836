#include "escape/ratfun.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "escape/errors.hpp"

namespace escape {
namespace poly {

int degree(const Poly& p) {
  for (int i = static_cast<int>(p.size()) - 1; i >= 0; --i)
    if (p[i] != 0.0) return i;
  return -1;
}

Poly trim(Poly p, double tol) {
  while (!p.empty() && std::abs(p.back()) <= tol) p.pop_back();
  return p;
}

Poly add(const Poly& a, const Poly& b) {
  Poly r(std::max(a.size(), b.size()), 0.0);
  for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) r[i] += b[i];
  return r;
}

Poly sub(const Poly& a, const Poly& b) {
  Poly r(std::max(a.size(), b.size()), 0.0);
  for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) r[i] -= b[i];
  return r;
}

Poly mul(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {};
  Poly r(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

Poly scale(const Poly& a, double k) {
  Poly r = a;
  for (double& c : r) c *= k;
  return r;
}

Poly derivative(const Poly& a) {
  if (a.size() <= 1) return {};
  Poly r(a.size() - 1);
  for (size_t i = 1; i < a.size(); ++i) r[i - 1] = a[i] * static_cast<double>(i);
  return r;
}

Poly compose_linear(const Poly& a, double k) {
  Poly r = a;
  double pw = 1.0;
  for (size_t i = 0; i < r.size(); ++i) {
    r[i] *= pw;
    pw *= k;
  }
  return r;
}

Complex eval(const Poly& p, Complex s) {
  Complex v = 0.0;
  for (int i = static_cast<int>(p.size()) - 1; i >= 0; --i) v = v * s + p[i];
  return v;
}

double eval(const Poly& p, double s) {
  double v = 0.0;
  for (int i = static_cast<int>(p.size()) - 1; i >= 0; --i) v = v * s + p[i];
  return v;
}

Complex eval(const CPoly& p, Complex s) {
  Complex v = 0.0;
  for (int i = static_cast<int>(p.size()) - 1; i >= 0; --i) v = v * s + p[i];
  return v;
}

CPoly deflate(const CPoly& p, Complex root) {
  if (p.size() <= 1) return {};
  CPoly q(p.size() - 1);
  Complex carry = p.back();
  for (int i = static_cast<int>(p.size()) - 2; i >= 0; --i) {
    q[i] = carry;
    carry = p[i] + carry * root;
  }
  return q;
}

Poly divide_by_s(const Poly& p, double tol) {
  if (p.empty()) return {};
  double scale = 0.0;
  for (double c : p) scale = std::max(scale, std::abs(c));
  if (std::abs(p[0]) > tol * (1.0 + scale))
    throw NonFinite("polynomial does not vanish at s=0; cannot divide by s");
  return Poly(p.begin() + 1, p.end());
}

}  // namespace poly

int RootSet::total_multiplicity() const {
  int n = 0;
  for (const auto& r : roots) n += r.multiplicity;
  return n;
}

bool RootSet::all_simple() const {
  return std::all_of(roots.begin(), roots.end(),
                     [](const Root& r) { return r.multiplicity == 1; });
}

double RootSet::max_abs() const {
  double m = 0.0;
  for (const auto& r : roots) m = std::max(m, std::abs(r.value));
  return m;
}

RootSet poly_roots(const Poly& coeffs_in) {
  Poly coeffs = coeffs_in;
  // strip an exactly-zero leading coefficient only if truly negligible
  double scale = 0.0;
  for (double c : coeffs) scale = std::max(scale, std::abs(c));
  if (scale == 0.0 || coeffs.empty())
    throw DegenerateLeadingCoefficient("zero polynomial has no well-defined roots");
  if (std::abs(coeffs.back()) < 1e-14 * scale)
    throw DegenerateLeadingCoefficient(
        "leading coefficient is negligible relative to the others");
  int n = static_cast<int>(coeffs.size()) - 1;
  if (n == 0) return {};

  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -coeffs[i] / coeffs[n];
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, /*computeEigenvectors=*/false);

  Poly dp = poly::derivative(coeffs);
  std::vector<Complex> raw;
  raw.reserve(n);
  for (int i = 0; i < n; ++i) {
    Complex z = es.eigenvalues()[i];
    // one Newton polish step (skipped near critical points)
    Complex d = poly::eval(dp, z);
    if (std::abs(d) > 1e-14) {
      Complex z2 = z - poly::eval(coeffs, z) / d;
      if (std::abs(poly::eval(coeffs, z2)) <= std::abs(poly::eval(coeffs, z))) z = z2;
    }
    raw.push_back(z);
  }

  double maxabs = 0.0;
  for (Complex z : raw) maxabs = std::max(maxabs, std::abs(z));
  const double tol = 1e-8 * (1.0 + maxabs);

  RootSet rs;
  std::vector<bool> used(raw.size(), false);
  for (size_t i = 0; i < raw.size(); ++i) {
    if (used[i]) continue;
    Complex sum = raw[i];
    int count = 1;
    used[i] = true;
    for (size_t j = i + 1; j < raw.size(); ++j) {
      if (!used[j] && std::abs(raw[j] - raw[i]) < tol) {
        sum += raw[j];
        ++count;
        used[j] = true;
      }
    }
    Complex center = sum / static_cast<double>(count);
    if (std::abs(center.imag()) < tol) center = Complex(center.real(), 0.0);
    rs.roots.push_back({center, count});
  }
  std::sort(rs.roots.begin(), rs.roots.end(), [](const auto& a, const auto& b) {
    if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
    return a.value.imag() < b.value.imag();
  });
  return rs;
}

RationalTransform RationalTransform::make(Poly Q, Poly R, bool density) {
  auto rel_trim = [](Poly p) {
    double scale = 0.0;
    for (double c : p) scale = std::max(scale, std::abs(c));
    return poly::trim(std::move(p), 1e-13 * scale);
  };
  Q = rel_trim(std::move(Q));
  R = rel_trim(std::move(R));
  int n = poly::degree(Q);
  if (n < 1) throw DegenerateLeadingCoefficient("denominator must have degree >= 1");
  if (poly::degree(R) >= n)
    throw UnstableRationalTransform("numerator degree must be below denominator degree");
  if (R.empty()) throw UnstableRationalTransform("numerator is identically zero");

  RootSet qr = poly_roots(Q);
  RootSet rr = poly_roots(R);
  for (const auto& q : qr.roots)
    for (const auto& r : rr.roots)
      if (std::abs(q.value - r.value) < 1e-9 * (1.0 + std::abs(q.value)))
        throw UnstableRationalTransform("numerator and denominator share a root");

  if (density) {
    double q0 = poly::eval(Q, 0.0), r0 = poly::eval(R, 0.0);
    if (std::abs(q0 - r0) > 1e-9 * (1.0 + std::abs(q0)))
      throw MassNotOne("transform does not equal 1 at s=0");
  }
  return RationalTransform{std::move(Q), std::move(R)};
}

Complex RationalTransform::eval(Complex s) const {
  return poly::eval(R, s) / poly::eval(Q, s);
}

std::vector<double> initial_data(const RationalTransform& rt) {
  int n = rt.order();
  Poly a = rt.Q;
  a.resize(n + 1, 0.0);
  Poly b = rt.R;
  b.resize(n, 0.0);
  // sum_{k=0}^{n-j-1} a_{j+k+1} f0_k = b_j, solved from j = n-1 downward
  std::vector<double> f0(n, 0.0);
  for (int j = n - 1; j >= 0; --j) {
    // the unknown with k = n-j-1 carries coefficient a_n
    double known = 0.0;
    for (int k = 0; k < n - j - 1; ++k) known += a[j + k + 1] * f0[k];
    f0[n - j - 1] = (b[j] - known) / a[n];
  }
  return f0;
}

}  // namespace escape
