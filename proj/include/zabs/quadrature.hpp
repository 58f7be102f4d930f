#pragma once

// Globally adaptive Gauss-Kronrod (G7,K15) quadrature on finite intervals,
// plus a semi-infinite front end that maps (0,inf) onto (0,1) through
// t = u/(1-u). The mapped form handles the heavy right tails of the
// lifetime densities integrated here.

#include <functional>

namespace zabs {

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  int subdivisions = 0;
  bool converged = false;
};

// Integrate f over [a,b]; stops when the error estimate drops below
// max(abs_tol, rel_tol*|I|) or the subdivision budget is exhausted.
QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, double rel_tol = 1e-10,
                           double abs_tol = 0.0, int max_subdivisions = 2000);

// Integrate f over (0,inf) via the t = u/(1-u) substitution.
QuadratureResult integrate_half_line(const std::function<double(double)>& f,
                                     double rel_tol = 1e-10,
                                     double abs_tol = 0.0,
                                     int max_subdivisions = 2000);

}  // namespace zabs
