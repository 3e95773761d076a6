#pragma once

// Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals plus a
// panel-doubling driver for [a, ∞) with integrands that decay fast.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "stefan/errors.hpp"

namespace stefan {

template <class Real>
struct QuadratureResult {
    Real value = 0;
    Real error = 0;
    std::size_t evaluations = 0;
    /// Bound on the neglected tail for semi-infinite integrals.
    Real truncation_bound = 0;
    Real truncated_at = 0;
};

template <class Real>
struct QuadratureOptions {
    Real abs_tol = Real(1e-12);
    Real rel_tol = Real(1e-10);
    std::size_t max_intervals = 2000;
};

namespace detail {

template <class Real>
struct KronrodRule {
    static constexpr std::array<long double, 8> xgk = {
        0.991455371120812639206854697526329L, 0.949107912342758524526189684047851L,
        0.864864423359769072789712788640926L, 0.741531185599394439863864773280788L,
        0.586087235467691130294144845693013L, 0.405845151377397166906606412076961L,
        0.207784955007898467600689403773245L, 0.000000000000000000000000000000000L};
    static constexpr std::array<long double, 8> wgk = {
        0.022935322010529224963732008058970L, 0.063092092629978553290700663189204L,
        0.104790010322250183839876322541518L, 0.140653259715525918745189590510238L,
        0.169004726639267902826583426598550L, 0.190350578064785409913256402421014L,
        0.204432940075298892414161999234649L, 0.209482141084727828012999174891714L};
    static constexpr std::array<long double, 4> wg = {
        0.129484966168869693270611432679082L, 0.279705391489276667901467771423780L,
        0.381830050505118944950369775488975L, 0.417959183673469387755102040816327L};
};

template <class Real>
struct Segment {
    Real lo, hi, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class Real, class F>
Segment<Real> kronrod15(F& f, Real lo, Real hi) {
    using R = KronrodRule<Real>;
    const Real center = (lo + hi) / 2;
    const Real half = (hi - lo) / 2;
    const Real fc = f(center);
    Real kronrod = fc * Real(R::wgk[7]);
    Real gauss = fc * Real(R::wg[3]);
    for (int j = 0; j < 7; ++j) {
        const Real dx = half * Real(R::xgk[j]);
        const Real sum = f(center - dx) + f(center + dx);
        kronrod += Real(R::wgk[j]) * sum;
        if (j % 2 == 1) gauss += Real(R::wg[j / 2]) * sum;
    }
    kronrod *= half;
    gauss *= half;
    using std::abs;
    return {lo, hi, kronrod, abs(kronrod - gauss)};
}

}  // namespace detail

/// Globally adaptive G7/K15 on [lo, hi]: bisects the segment with the largest
/// error estimate until error <= max(abs_tol, rel_tol·|value|).
template <class Real, class F>
QuadratureResult<Real> integrate(F&& f, Real lo, Real hi, const QuadratureOptions<Real>& opts = {}) {
    QuadratureResult<Real> out;
    if (lo == hi) return out;
    std::size_t evals = 0;
    auto counted = [&](Real x) {
        ++evals;
        return f(x);
    };
    std::priority_queue<detail::Segment<Real>> heap;
    auto first = detail::kronrod15<Real>(counted, lo, hi);
    Real total = first.value;
    Real err = first.error;
    heap.push(first);
    using std::abs;
    while (err > std::max(opts.abs_tol, opts.rel_tol * abs(total))) {
        if (heap.size() >= opts.max_intervals)
            throw QuadratureError("adaptive quadrature did not reach tolerance (error estimate " +
                                  std::to_string(static_cast<double>(err)) + ")");
        auto worst = heap.top();
        heap.pop();
        const Real mid = (worst.lo + worst.hi) / 2;
        auto left = detail::kronrod15<Real>(counted, worst.lo, mid);
        auto right = detail::kronrod15<Real>(counted, mid, worst.hi);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of the running updates.
    total = 0;
    err = 0;
    while (!heap.empty()) {
        total += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    out.value = total;
    out.error = err;
    out.evaluations = evals;
    return out;
}

/// ∫_lo^∞ f over panels of doubling width starting at `first_width`. Stops
/// once |f| at the panel end is below `tail_ratio`·|accumulated| and the last
/// panel contributed below the same fraction.
template <class Real, class F>
QuadratureResult<Real> integrate_to_infinity(F&& f, Real lo, Real first_width,
                                             const QuadratureOptions<Real>& opts = {},
                                             Real tail_ratio = Real(1e-14), int max_panels = 200) {
    using std::abs;
    QuadratureResult<Real> out;
    Real a = lo;
    Real width = first_width;
    for (int panel = 0; panel < max_panels; ++panel) {
        const Real b = a + width;
        auto piece = integrate<Real>(f, a, b, opts);
        out.value += piece.value;
        out.error += piece.error;
        out.evaluations += piece.evaluations;
        const Real fb = f(b);
        ++out.evaluations;
        const Real scale = abs(out.value);
        if (abs(fb) <= tail_ratio * scale && abs(piece.value) <= tail_ratio * scale * 1e4) {
            out.truncated_at = b;
            out.truncation_bound = abs(fb) * width;
            return out;
        }
        if (scale == 0 && fb == 0 && piece.value == 0) {
            out.truncated_at = b;
            return out;
        }
        a = b;
        width *= 2;
    }
    throw QuadratureError("semi-infinite integral did not decay within the panel budget");
}

}  // namespace stefan
