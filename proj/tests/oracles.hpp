#pragma once
// Independent reference computations used by the tests.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

namespace oracle {

inline double dw_potential(double x) { return (x * x - 1.0) * (x * x - 1.0); }

template <class F>
double integrate(F f, double a, double b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  return GK::integrate(f, a, b, 15, 1e-14);
}

// Reversible 1D committor between A = (., xa] and B = [xb, .).
inline double dw_committor(double x, double beta, double xa, double xb) {
  auto f = [beta](double s) { return std::exp(beta * dw_potential(s)); };
  if (x <= xa) return 0.0;
  if (x >= xb) return 1.0;
  return integrate(f, xa, x) / integrate(f, xa, xb);
}

inline double dw_partition(double beta, double lo, double hi) {
  return integrate([beta](double s) { return std::exp(-beta * dw_potential(s)); }, lo, hi);
}

}  // namespace oracle
