#pragma once

// Exact finite-n evaluation of the conditional-expectation integrals behind the
// asymptotic decision functions. Everything is computed by adaptive quadrature
// after substituting u = y^{-(1+delta)}, which maps [1, inf) onto (0, 1] and
// turns the order-statistic densities into beta-like kernels. When the leading
// u-power has exponent below 1 the variable is raised to a power that removes
// the endpoint singularity entirely, so tolerances hold even for k = 1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rooney/decision.hpp"
#include "rooney/errors.hpp"
#include "rooney/powerlaw.hpp"
#include "rooney/quadrature.hpp"

namespace rooney::oracle {

// Quadrature value plus the integrator's error bound.
struct ConditionalMoment {
    double value;
    double estimated_abs_error;
};

namespace detail {

constexpr double kRelTol = 1e-9;

inline std::int64_t x_pool(std::int64_t n, double alpha) {
    return rooney::minority_pool_size(alpha, n);
}

inline void check_args(std::int64_t n, int k, double alpha, double beta, double delta) {
    if (n < 1 || k < 1 || k > n) throw std::invalid_argument("oracle: need 1 <= k <= n");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("oracle: alpha must lie in (0,1]");
    if (!(beta >= 1.0)) throw std::domain_error("oracle: beta must be >= 1 (inf allowed)");
    if (!(delta > 0.0 && std::isfinite(delta))) throw std::invalid_argument("oracle: delta must be > 0");
}

// Breakpoints clustered around `scale`, where the beta-like kernel carries its
// mass, clipped to (lo, hi).
inline std::vector<double> mass_breakpoints(double lo, double hi, double scale) {
    std::vector<double> pts{lo};
    for (int i = -4; i <= 6; ++i) {
        const double p = scale * std::pow(2.0, double(i));
        if (p > lo && p < hi) pts.push_back(p);
    }
    pts.push_back(hi);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

// Integrates u^a * rest(u) du over [lo, hi]. For a < 1 substitutes u = w^q with
// q = 1/(1+a), absorbing the u^a factor into the measure.
template <class Rest>
quadrature::Result power_weighted_integral(const Rest& rest, double a, double lo, double hi,
                                           double scale) {
    if (!(hi > lo)) return {0.0, 0.0};
    auto pts = mass_breakpoints(lo, hi, scale);
    if (a < 1.0) {
        const double q = 1.0 / (1.0 + a);
        for (auto& p : pts) p = std::pow(p, 1.0 / q);
        auto f = [&](double w) { return q * rest(std::pow(w, q)); };
        return quadrature::integrate(f, pts, kRelTol);
    }
    auto f = [&](double u) { return std::pow(u, a) * rest(u); };
    return quadrature::integrate(f, pts, kRelTol);
}

}  // namespace detail

// E[Y_(n-k+1:n) * 1{X_(xn:xn) < beta Y_(n-k+1:n)}] where xn = round(alpha n).
inline ConditionalMoment exact_expect_y_indicator(std::int64_t n, int k, double alpha, double beta,
                                                  double delta) {
    detail::check_args(n, k, alpha, beta, delta);
    const std::int64_t mx = detail::x_pool(n, alpha);
    const double e = 1.0 + delta;
    const double s = 1.0 / e;
    const double lpref = std::log(double(k)) + powerlaw::detail::log_choose(n, k);
    const powerlaw::TailExponent d{delta};
    const powerlaw::OrderStatSpec top_x{mx, mx};

    auto rest = [&](double u) {
        const double y = std::exp(-s * std::log(u));
        const double cdf = powerlaw::os_cdf(top_x, d, beta * y);
        return std::exp(lpref + double(n - k) * std::log1p(-u)) * cdf;
    };
    auto r = detail::power_weighted_integral(rest, double(k) - 1.0 - s, 0.0, 1.0,
                                             double(k) / double(n));
    return {r.value, r.abs_error};
}

// E[X_(xn:xn) * 1{X_(xn:xn) < beta Y_(n-k+1:n)}], computed as the unconditional
// expected maximum minus the integral over the excluded region x >= beta.
inline ConditionalMoment exact_expect_x_indicator(std::int64_t n, int k, double alpha, double beta,
                                                  double delta) {
    detail::check_args(n, k, alpha, beta, delta);
    const std::int64_t mx = detail::x_pool(n, alpha);
    const double e = 1.0 + delta;
    const double s = 1.0 / e;
    const powerlaw::TailExponent d{delta};
    const double full = powerlaw::expected_max(mx, d);
    const double ub = std::isinf(beta) ? 0.0 : std::pow(beta, -e);
    if (ub <= 0.0) return {full, 0.0};
    const powerlaw::OrderStatSpec kth_y{n - k + 1, n};

    auto rest = [&](double u) {
        const double z = std::exp(-s * std::log(u)) / beta;  // x / beta
        const double cdf = z > 1.0 ? powerlaw::os_cdf(kth_y, d, z) : 0.0;
        return std::exp(std::log(double(mx)) + double(mx - 1) * std::log1p(-u)) * cdf;
    };
    auto tail = detail::power_weighted_integral(rest, -s, 0.0, ub,
                                                std::min(ub, 1.0 / double(mx)));
    return {full - tail.value, tail.abs_error};
}

// Pr[X_(xn:xn) < beta Y_(n-k+1:n)], the probability the rule changes the outcome.
inline ConditionalMoment exact_prob_binds(std::int64_t n, int k, double alpha, double beta,
                                          double delta) {
    detail::check_args(n, k, alpha, beta, delta);
    const std::int64_t mx = detail::x_pool(n, alpha);
    const double s = 1.0 / (1.0 + delta);
    const double lpref = std::log(double(k)) + powerlaw::detail::log_choose(n, k);
    const powerlaw::TailExponent d{delta};
    const powerlaw::OrderStatSpec top_x{mx, mx};

    auto rest = [&](double u) {
        const double y = std::exp(-s * std::log(u));
        const double cdf = powerlaw::os_cdf(top_x, d, beta * y);
        return std::exp(lpref + double(n - k) * std::log1p(-u)) * cdf;
    };
    auto r = detail::power_weighted_integral(rest, double(k) - 1.0, 0.0, 1.0,
                                             double(k) / double(n));
    return {std::clamp(r.value, 0.0, 1.0), r.abs_error};
}

// Exact finite-n counterpart of phi_k: the ratio of the two indicator-weighted
// expectations above. The rule helps at this n exactly when the ratio exceeds 1.
inline double exact_rk(std::int64_t n, int k, double alpha, double beta, double delta) {
    const auto x = exact_expect_x_indicator(n, k, alpha, beta, delta);
    const auto y = exact_expect_y_indicator(n, k, alpha, beta, delta);
    if (!(std::abs(y.value) > 1e-300))
        throw NumericError("exact_rk: denominator vanishes");
    return x.value / y.value;
}

}  // namespace rooney::oracle
