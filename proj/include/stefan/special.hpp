#pragma once

#include <cmath>
#include <numbers>

namespace stefan {

template <class Real>
inline constexpr Real sqrt_pi_v = Real(1.772453850905516027298167483341145182797549456122387128213807789852911284591025748L);

/// erf(hi) - erf(lo), evaluated through erfc when both arguments sit in the
/// same tail so the difference keeps its relative accuracy.
template <class Real>
Real erf_diff(Real hi, Real lo) {
    using std::erf;
    using std::erfc;
    if (hi > Real(0.5) && lo > Real(0.5)) return erfc(lo) - erfc(hi);
    if (hi < Real(-0.5) && lo < Real(-0.5)) return erfc(-hi) - erfc(-lo);
    return erf(hi) - erf(lo);
}

/// erf(x) - 1 without cancellation.
template <class Real>
Real erf_minus_one(Real x) {
    using std::erfc;
    return -erfc(x);
}

}  // namespace stefan
