#pragma once

#include <complex>
#include <vector>

namespace escape {

using Complex = std::complex<double>;

/// Real polynomial, coefficients in ascending order: p[0] + p[1]*s + ...
using Poly = std::vector<double>;
using CPoly = std::vector<Complex>;

namespace poly {

int degree(const Poly& p);
Poly trim(Poly p, double tol = 0.0);
Poly add(const Poly& a, const Poly& b);
Poly sub(const Poly& a, const Poly& b);
Poly mul(const Poly& a, const Poly& b);
Poly scale(const Poly& a, double k);
Poly derivative(const Poly& a);
/// p(k*s): coefficient j multiplied by k^j.  Used for Q(-c s).
Poly compose_linear(const Poly& a, double k);
Complex eval(const Poly& p, Complex s);
double eval(const Poly& p, double s);
Complex eval(const CPoly& p, Complex s);
/// Divide by (s - root); remainder discarded (caller checks it is small).
CPoly deflate(const CPoly& p, Complex root);
/// Exact division of p by s (requires |p[0]| negligible).
Poly divide_by_s(const Poly& p, double tol = 1e-9);

}  // namespace poly

struct RootSet {
  struct Root {
    Complex value;
    int multiplicity = 1;
  };
  std::vector<Root> roots;

  int total_multiplicity() const;
  bool all_simple() const;
  double max_abs() const;
};

/// All complex roots via the companion-matrix eigenproblem, one Newton
/// polish step, then clustering of near-coincident roots into multiple
/// roots (tolerance 1e-8 * (1 + max|root|)).
RootSet poly_roots(const Poly& coeffs);

/// Rational Laplace transform / characteristic function R(s)/Q(s).
struct RationalTransform {
  Poly Q;  // denominator, degree n, leading coefficient != 0
  Poly R;  // numerator, degree < n

  /// Validates deg R < deg Q and co-primality (no shared root to 1e-9).
  /// When `density` is set additionally requires Q(0)=R(0) (unit mass).
  static RationalTransform make(Poly Q, Poly R, bool density = true);

  Complex eval(Complex s) const;
  int order() const { return poly::degree(Q); }
};

/// Initial data f(0+), f'(0+), ..., f^{(n-1)}(0+) of a density with
/// rational LT, from the triangular linear system
///   sum_{k=0}^{n-j-1} a_{j+k+1} f0_k = b_j,   j = 0..n-1.
std::vector<double> initial_data(const RationalTransform& rt);

}  // namespace escape
