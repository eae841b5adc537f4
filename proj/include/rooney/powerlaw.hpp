#pragma once

// Order-statistic machinery for the Pareto family Pr{Z >= t} = t^{-(1+delta)}
// with support [1, inf). Everything here is exact (up to floating point): the
// asymptotic forms used elsewhere are validated against these routines.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "rooney/errors.hpp"

namespace rooney::powerlaw {

// Tail parameter delta > 0; the distribution's polynomial order is 1 + delta.
struct TailExponent {
    double delta;

    explicit TailExponent(double d) : delta(d) {
        if (!(std::isfinite(d) && d > 0.0))
            throw std::invalid_argument("TailExponent: delta must be finite and > 0");
    }

    // Exponent 1 + delta appearing in the survival function.
    double order() const noexcept { return 1.0 + delta; }
};

// Rank p (1-based, ascending) out of m i.i.d. draws.
struct OrderStatSpec {
    std::int64_t rank;
    std::int64_t samples;

    OrderStatSpec(std::int64_t p, std::int64_t m) : rank(p), samples(m) {
        if (m < 1 || p < 1 || p > m)
            throw std::invalid_argument("OrderStatSpec: need 1 <= rank <= samples");
    }
};

namespace detail {

inline double log_gamma(double x) { return boost::math::lgamma(x); }

inline double log_choose(std::int64_t n, std::int64_t r) {
    return log_gamma(double(n) + 1.0) - log_gamma(double(r) + 1.0) -
           log_gamma(double(n - r) + 1.0);
}

inline bool nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

}  // namespace detail

// Inverse-cdf sampler: maps a uniform variate u in (0,1) to (1-u)^{-1/(1+delta)}.
inline double sample(TailExponent delta, double u) {
    if (!(u > 0.0 && u < 1.0))
        throw std::domain_error("powerlaw::sample: u must lie in (0,1)");
    return std::pow(1.0 - u, -1.0 / delta.order());
}

// Density of the rank-th of samples draws at x >= 1.
inline double os_pdf(OrderStatSpec spec, TailExponent delta, double x) {
    if (!(x >= 1.0)) throw std::domain_error("powerlaw::os_pdf: x must be >= 1");
    const double e = delta.order();
    const std::int64_t p = spec.rank, m = spec.samples;
    if (x == 1.0) return p == 1 ? e * double(m) : 0.0;
    // log q = -(1+delta) log x; assembled in log space so m up to 1e6 is safe
    const double lq = -e * std::log(x);
    const double q = std::exp(lq);
    const double lg = std::log(e) + std::log(double(m - p + 1)) + detail::log_choose(m, p - 1) +
                      double(p - 1) * std::log1p(-q) + double(m - p + 1) * lq - std::log(x);
    return std::exp(lg);
}

// Pr[Z_(rank:samples) <= x]. The binomial tail sum equals a regularized
// incomplete beta, which stays accurate where the literal sum cancels.
inline double os_cdf(OrderStatSpec spec, TailExponent delta, double x) {
    if (!(x >= 1.0)) throw std::domain_error("powerlaw::os_cdf: x must be >= 1");
    const double cdf_one = -std::expm1(-delta.order() * std::log(x));
    return boost::math::ibeta(double(spec.rank), double(spec.samples - spec.rank + 1), cdf_one);
}

// E[Z_(m:m)] = Gamma(m+1) Gamma(1 - 1/(1+delta)) / Gamma(m + delta/(1+delta)), exact.
inline double expected_max(std::int64_t m, TailExponent delta) {
    if (m < 1) throw std::domain_error("powerlaw::expected_max: m must be >= 1");
    const double s = 1.0 / delta.order();
    return std::exp(detail::log_gamma(double(m) + 1.0) + detail::log_gamma(1.0 - s) -
                    detail::log_gamma(double(m) + 1.0 - s));
}

// E[Z_(rank:samples)] via the exact downward recurrence
// E[Z_(m-k:m)] = (1 - 1/(k(1+delta))) E[Z_(m-k+1:m)] starting from expected_max.
inline double expected_os(OrderStatSpec spec, TailExponent delta) {
    double v = expected_max(spec.samples, delta);
    const double e = delta.order();
    for (std::int64_t k = 1; k <= spec.samples - spec.rank; ++k)
        v *= 1.0 - 1.0 / (double(k) * e);
    return v;
}

// Generalized binomial coefficient C(a, j) = Gamma(a+1) / (Gamma(j+1) Gamma(a-j+1))
// for real a and integer j >= 0, via log-Gamma with sign tracking.
inline double gen_binomial(double a, std::int64_t j) {
    if (j < 0) throw std::domain_error("powerlaw::gen_binomial: j must be >= 0");
    if (detail::nonpositive_integer(a + 1.0) || detail::nonpositive_integer(a - double(j) + 1.0))
        throw std::domain_error("powerlaw::gen_binomial: Gamma pole in arguments");
    int sign_num = 1, sign_den = 1;
    const double lg = boost::math::lgamma(a + 1.0, &sign_num) -
                      detail::log_gamma(double(j) + 1.0) -
                      boost::math::lgamma(a - double(j) + 1.0, &sign_den);
    return double(sign_num * sign_den) * std::exp(lg);
}

}  // namespace rooney::powerlaw
