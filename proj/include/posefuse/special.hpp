#pragma once

#include <functional>

namespace posefuse {

/// Exponentially scaled modified Bessel functions of the first kind,
/// exp(-|x|) I0(x) and exp(-|x|) I1(x). Stable for arbitrarily large x,
/// which the matrix-Fisher machinery needs (arguments of 2s with s in the
/// hundreds). Chebyshev expansions after Cephes.
double bessel_i0e(double x);
double bessel_i1e(double x);

/// Adaptive Gauss-Kronrod (G7, K15) quadrature of f over [a, b].
/// Subdivides until the local error estimate satisfies both tolerances
/// (rel_tol is measured against the running whole-interval estimate).
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double abs_tol = 1e-12,
                          double rel_tol = 1e-12);

}  // namespace posefuse
