#pragma once

#include <functional>
#include <initializer_list>
#include <vector>

namespace cirseq {

/// Adaptive Gauss-Kronrod (61-point) integral of f over [lo, hi].
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 double rel_tol = 1e-12);

/// Integrates piecewise across sorted breakpoints so that kinks of the
/// integrand sit on panel edges. Breakpoints outside (lo, hi) are ignored.
double integrate_split(const std::function<double(double)>& f, double lo, double hi,
                       std::vector<double> breakpoints, double rel_tol = 1e-12);

/// Point z beyond which Gamma(shape, rate) carries less than `tail` mass.
double gamma_upper_cutoff(double shape, double rate, double tail = 1e-16);

}  // namespace cirseq
