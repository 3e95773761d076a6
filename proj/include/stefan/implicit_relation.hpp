#pragma once

// Implicit relation of the exponential-diffusivity family:
//   ln|2g − ν| − ν/(2g − ν) − (b²/4)·ν² = c
// solved for g at fixed ν ≥ 0. With s = ln|2g − ν| and σ = sign(2g − ν)
// the left side becomes s − σ·ν·e^{−s}, strictly increasing in s on each
// branch, so a bracketed Newton iteration is safe.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "stefan/errors.hpp"

namespace stefan {

enum class ImplicitBranch {
    upper,  ///< 2g − ν > 0 (g > ν/2, V increasing in ν)
    lower,  ///< 2g − ν < −ν (g < 0, V decreasing in ν)
};

template <class Real>
Real implicit_relation_lhs(Real g, Real nu, Real b) {
    using std::abs;
    using std::log;
    const Real h = 2 * g - nu;
    return log(abs(h)) - nu / h - b * b / 4 * nu * nu;
}

/// ln|h| for the root, h = 2g − ν. Kept separate so callers can stay in log
/// space where g itself would overflow.
template <class Real>
Real solve_implicit_log_h(Real c3, Real b, Real nu, ImplicitBranch branch) {
    using std::abs;
    using std::exp;
    using std::log;
    if (!(nu >= 0) || !std::isfinite(static_cast<double>(nu)))
        throw DomainError("implicit relation needs a finite parameter nu >= 0");
    const Real target = c3 + b * b / 4 * nu * nu;
    const Real sigma = branch == ImplicitBranch::upper ? Real(1) : Real(-1);
    if (nu == 0) return target;

    auto psi = [&](Real s) { return s - sigma * nu * exp(-s) - target; };
    Real lo, hi;
    if (branch == ImplicitBranch::upper) {
        // At lo the exponential term alone exceeds |target| + ν; at hi it is below 1.
        lo = std::max(target, log(nu) - log(1 + abs(target) + nu));
        hi = std::max(target + 1, log(nu)) + 1;
    } else {
        lo = log(nu);
        if (!(psi(lo) < 0)) {
            std::ostringstream os;
            os.precision(17);
            os << "NoRoot: lower branch of the implicit relation needs c + (b^2/4)nu^2 > ln(nu) + 1; "
               << "scanned g in (-inf, 0) at nu = " << static_cast<double>(nu)
               << ", target = " << static_cast<double>(target);
            throw NoRoot(os.str());
        }
        hi = target;
    }
    // Newton safeguarded by bisection whenever the step leaves the bracket or
    // fails to halve the previous one.
    Real s = hi;
    Real dx_old = hi - lo;
    Real dx = dx_old;
    const Real tol = 4 * std::numeric_limits<Real>::epsilon();
    for (int it = 0; it < 300; ++it) {
        const Real value = psi(s);
        if (value == 0) return s;
        if (value < 0)
            lo = s;
        else
            hi = s;
        const Real slope = 1 + sigma * nu * exp(-s);
        const Real newton = s - value / slope;
        if (!(newton > lo && newton < hi) || abs(2 * value) > abs(dx_old * slope)) {
            dx_old = dx;
            dx = (hi - lo) / 2;
            s = lo + dx;
        } else {
            dx_old = dx;
            dx = newton - s;
            s = newton;
        }
        if (abs(dx) <= tol * (1 + abs(s)) || hi - lo <= tol * (1 + abs(s))) return s;
    }
    return s;
}

/// Root g of the implicit relation on the requested branch.
template <class Real>
Real solve_implicit_g(Real c3, Real b, Real nu, ImplicitBranch branch) {
    using std::exp;
    const Real s = solve_implicit_log_h(c3, b, nu, branch);
    const Real h = (branch == ImplicitBranch::upper ? Real(1) : Real(-1)) * exp(s);
    return (h + nu) / 2;
}

}  // namespace stefan
