#pragma once

// Globally adaptive Gauss-Kronrod (15-point) integration over a finite interval.
// The caller seeds interior breakpoints bracketing the integrand mass (panels
// whose nodes all miss the mass report no error and are never refined); the
// worst panel by error estimate is split until the summed estimate meets the
// relative tolerance. Fully deterministic for identical inputs.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "rooney/errors.hpp"

namespace rooney::quadrature {

struct Result {
    double value;
    double abs_error;
};

namespace detail {

// 15-point Kronrod nodes on [0,1] side of [-1,1] with the embedded 7-point
// Gauss rule at even indices. The error estimate |K - G| is scaled to the
// panel width, unlike some library wrappers that report it in the normalized
// coordinate and so overweight narrow panels.
constexpr std::array<double, 8> kAbscissa = {
    0.00000000000000000e+00, 2.07784955007898468e-01, 4.05845151377397167e-01,
    5.86087235467691130e-01, 7.41531185599394440e-01, 8.64864423359769073e-01,
    9.49107912342758525e-01, 9.91455371120812639e-01,
};
constexpr std::array<double, 8> kKronrodWeight = {
    2.09482141084727828e-01, 2.04432940075298892e-01, 1.90350578064785410e-01,
    1.69004726639267903e-01, 1.40653259715525919e-01, 1.04790010322250184e-01,
    6.30920926299785533e-02, 2.29353220105292250e-02,
};
constexpr std::array<double, 4> kGaussWeight = {
    4.17959183673469388e-01, 3.81830050505118945e-01,
    2.79705391489276668e-01, 1.29484966168869693e-01,
};

struct Panel {
    double a, b;
    double integral;
    double error;
};

struct WorstFirst {
    bool operator()(const Panel& x, const Panel& y) const {
        if (x.error != y.error) return x.error > y.error;
        return x.a < y.a;  // deterministic tie-break
    }
};

template <class F>
Panel evaluate(const F& f, double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    const double f0 = f(mid);
    double kron = kKronrodWeight[0] * f0;
    double gauss = kGaussWeight[0] * f0;
    for (int i = 1; i < 8; ++i) {
        const double fp = f(mid + half * kAbscissa[std::size_t(i)]);
        const double fm = f(mid - half * kAbscissa[std::size_t(i)]);
        kron += kKronrodWeight[std::size_t(i)] * (fp + fm);
        if ((i & 1) == 0) gauss += kGaussWeight[std::size_t(i / 2)] * (fp + fm);
    }
    kron *= half;
    gauss *= half;
    const double err =
        std::max(std::abs(kron - gauss),
                 std::abs(kron) * 2.0 * std::numeric_limits<double>::epsilon());
    return {a, b, kron, err};
}

}  // namespace detail

// Integrates f over [front(breakpoints), back(breakpoints)]. breakpoints must be
// sorted; interior entries seed the initial panels.
template <class F>
Result integrate(const F& f, const std::vector<double>& breakpoints, double rel_tol = 1e-9,
                 int max_panels = 4000) {
    if (breakpoints.size() < 2 || breakpoints.front() >= breakpoints.back()) return {0.0, 0.0};

    std::multiset<detail::Panel, detail::WorstFirst> panels;
    double total = 0.0, total_err = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        auto p = detail::evaluate(f, breakpoints[i], breakpoints[i + 1]);
        total += p.integral;
        total_err += p.error;
        panels.insert(p);
    }

    const double tiny = 1e-300;
    while (total_err > std::max(rel_tol * std::abs(total), tiny)) {
        if (int(panels.size()) >= max_panels)
            throw QuadratureError("quadrature: panel budget exhausted", total, total_err);
        auto worst = *panels.begin();
        panels.erase(panels.begin());
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // interval at floating-point resolution; accept its estimate as final
            if (worst.error >= total_err) break;
            panels.insert({worst.a, worst.b, worst.integral, 0.0});
            total_err -= worst.error;
            continue;
        }
        auto left = detail::evaluate(f, worst.a, mid);
        auto right = detail::evaluate(f, mid, worst.b);
        total += left.integral + right.integral - worst.integral;
        total_err += left.error + right.error - worst.error;
        panels.insert(left);
        panels.insert(right);
    }

    // re-sum in interval order so the result does not depend on split history
    std::vector<detail::Panel> ordered(panels.begin(), panels.end());
    std::sort(ordered.begin(), ordered.end(),
              [](const detail::Panel& x, const detail::Panel& y) { return x.a < y.a; });
    double value = 0.0, err = 0.0;
    for (const auto& p : ordered) {
        value += p.integral;
        err += p.error;
    }
    return {value, err};
}

}  // namespace rooney::quadrature
