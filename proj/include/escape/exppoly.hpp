#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "escape/ratfun.hpp"

namespace escape {

/// Finite sum of terms  coef * x^power * exp(rate*x).  Closed under
/// differentiation, integration from 0, products and convolution, which
/// is exactly what the determinant-based escape formulas need.
///
/// Terms with complex rates always appear in conjugate pairs when the
/// object represents a real function; eval() returns the real part.
class ExpPoly {
 public:
  /// coef * (x-shift)^power * exp(rate*(x-shift)) * 1_{x >= shift}.
  /// shift != 0 terms arise only from the constant-jump series; they
  /// support evaluation and linear combinations but not calculus ops.
  struct Term {
    Complex coef;
    Complex rate;
    int power = 0;  // >= 0
    double shift = 0.0;
  };

  ExpPoly() = default;
  explicit ExpPoly(std::vector<Term> t) : terms_(std::move(t)) { simplify(); }

  static ExpPoly constant(double c);
  /// c * x^k * e^{s x}
  static ExpPoly monomial(Complex coef, Complex rate, int power);

  const std::vector<Term>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  double eval(double x) const;
  Complex eval_complex(double x) const;

  ExpPoly derivative() const;
  ExpPoly derivative(int order) const;
  /// x -> integral_0^x of this
  ExpPoly antiderivative_from_0() const;
  ExpPoly scaled(Complex k) const;
  /// x -> f(x + shift)
  ExpPoly shifted(double shift) const;

  ExpPoly operator+(const ExpPoly& o) const;
  ExpPoly operator-(const ExpPoly& o) const;
  ExpPoly operator*(const ExpPoly& o) const;

  /// (f * g)(x) = integral_0^x f(x-y) g(y) dy
  ExpPoly convolve(const ExpPoly& o) const;

  /// Laplace transform as numerator/denominator polynomials in p.
  std::pair<CPoly, CPoly> rational_lt() const;

  /// Merge like terms, drop zero coefficients.
  void simplify(double tol = 0.0);

 private:
  std::vector<Term> terms_;
};

/// One pole of a partial-fraction expansion:
/// sum_j coeffs[j] / (s - pole)^{mu-j}, mu = coeffs.size().
struct PoleExpansion {
  Complex pole;
  std::vector<Complex> coeffs;
};

/// Partial fractions of num(s)/den(s), deg num < deg den.
std::vector<PoleExpansion> partial_fractions(const CPoly& num, const CPoly& den);

/// Inverse Laplace transform of num(s)/den(s) with deg num < deg den,
/// via the residue expansion at the (possibly multiple) poles of den.
ExpPoly invert_rational(const CPoly& num, const CPoly& den);
ExpPoly invert_rational(const Poly& num, const Poly& den);

/// Fixed-Talbot numerical inversion of a Laplace transform at t > 0.
/// The contour amplifies rounding by e^{2*nodes/5}, so the evaluator
/// works in extended precision.
using ComplexL = std::complex<long double>;
double bromwich_invert(const std::function<ComplexL(ComplexL)>& F, double t,
                       int nodes = 48);

}  // namespace escape
