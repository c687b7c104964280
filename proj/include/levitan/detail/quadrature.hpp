#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace levitan::detail {

// Adaptive 15-point Gauss-Kronrod on [a, b]. Boost scales the value and the L1 norm
// by the half length but not the error estimate, so the interval is mapped onto
// [-1, 1] beforehand; the tolerance test then compares like with like.
template <class F>
auto gk15(F f, double a, double b, unsigned depth, double tol, double* err = nullptr, double* l1 = nullptr) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    auto g = [&](double s) { return half * f(mid + half * s); };
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(g, -1.0, 1.0, depth, tol, err, l1);
}

} // namespace levitan::detail
