#include "cirseq/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace cirseq {

double integrate(const std::function<double(double)>& f, double lo, double hi, double rel_tol) {
  if (!(hi > lo)) return 0.0;
  double error = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 12, rel_tol,
                                                                        &error);
}

double integrate_split(const std::function<double(double)>& f, double lo, double hi,
                       std::vector<double> breakpoints, double rel_tol) {
  std::sort(breakpoints.begin(), breakpoints.end());
  double total = 0.0;
  double left = lo;
  for (double point : breakpoints) {
    if (point <= left || point >= hi) continue;
    total += integrate(f, left, point, rel_tol);
    left = point;
  }
  return total + integrate(f, left, hi, rel_tol);
}

double gamma_upper_cutoff(double shape, double rate, double tail) {
  return boost::math::gamma_q_inv(shape, tail) / rate;
}

}  // namespace cirseq
