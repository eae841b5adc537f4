#pragma once

// Closed-form decision functions for the Rooney Rule under multiplicative bias.
// phi_k compares against 1: the rule raises expected utility (for large pools)
// exactly when phi_k > 1. Everything is a pure function of (alpha, beta, delta, k);
// beta = +inf is a first-class value describing the regime where every majority
// candidate outranks every minority candidate.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rooney/errors.hpp"
#include "rooney/powerlaw.hpp"

namespace rooney {

inline bool is_infinite_bias(double beta) { return std::isinf(beta) && beta > 0.0; }

// Number of minority candidates for pool ratio alpha and majority pool n:
// round(alpha n), floored at one candidate. Shared by every module so the
// rounding convention cannot drift.
inline std::int64_t minority_pool_size(double alpha, std::int64_t n) {
    return std::max<std::int64_t>(1, std::llround(alpha * double(n)));
}

// Full parameterization of one selection instance: alpha*n minority candidates,
// n majority candidates, bias multiplier beta, tail parameter delta, k finalists.
struct ModelParams {
    double alpha;
    double beta;
    powerlaw::TailExponent delta;
    int k;
    std::int64_t n;

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 1.0))
            throw std::invalid_argument("ModelParams: alpha must lie in (0,1]");
        if (!(beta > 1.0))
            throw std::invalid_argument("ModelParams: beta must exceed 1 (inf allowed)");
        if (k < 2) throw std::invalid_argument("ModelParams: k must be >= 2");
        if (n < 1) throw std::invalid_argument("ModelParams: n must be >= 1");
    }

    // c = alpha beta^{-(1+delta)}: the effective post-bias weight of the minority
    // pool. c = 0 in the infinite-bias regime; 0 <= c < alpha always.
    double bias_weight() const {
        return is_infinite_bias(beta) ? 0.0 : alpha * std::pow(beta, -delta.order());
    }
};

namespace detail {

inline void check_decision_params(double alpha, double beta, double delta) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("alpha must lie in (0,1]");
    if (!(beta > 1.0)) throw std::domain_error("beta must exceed 1 (inf allowed)");
    if (!(delta > 0.0 && std::isfinite(delta)))
        throw std::invalid_argument("delta must be finite and > 0");
}

inline double bias_weight(double alpha, double beta, double delta) {
    return is_infinite_bias(beta) ? 0.0 : alpha * std::pow(beta, -(1.0 + delta));
}

// lim_{beta->inf} phi_k = alpha^{1/(1+delta)} Gamma(k) Gamma(delta/(1+delta)) / Gamma(k - 1/(1+delta)).
inline double phi_k_infinite_bias(double alpha, double delta, int k) {
    const double s = 1.0 / (1.0 + delta);
    return std::pow(alpha, s) *
           std::exp(powerlaw::detail::log_gamma(double(k)) + powerlaw::detail::log_gamma(1.0 - s) -
                    powerlaw::detail::log_gamma(double(k) - s));
}

// Tail-series form: phi_k = alpha^s c^r Gamma(k) Gamma(r) / (Gamma(k-s)(1+c)) *
// sum_{j>=0} C(j+k-s, j+k) (1+c)^{-j}.  All terms positive, ratio below 1/(1+c),
// so there is no cancellation for any k.
inline double phi_k_tail_series(double alpha, double c, double delta, int k) {
    const double s = 1.0 / (1.0 + delta);
    const double r = 1.0 - s;
    const double pref =
        std::pow(alpha, s) * std::pow(c, r) *
        std::exp(powerlaw::detail::log_gamma(double(k)) + powerlaw::detail::log_gamma(r) -
                 powerlaw::detail::log_gamma(double(k) - s)) /
        (1.0 + c);
    // first term C(k-s, k); successive ratio (j+k+1-s) / ((j+k+1)(1+c))
    double term = std::exp(powerlaw::detail::log_gamma(double(k) + 1.0 - s) -
                           powerlaw::detail::log_gamma(double(k) + 1.0) -
                           powerlaw::detail::log_gamma(1.0 - s));
    double sum = 0.0;
    const double decay = 1.0 / (1.0 + c);
    for (std::int64_t j = 0;; ++j) {
        sum += term;
        if (term / c <= 1e-14 * sum) break;  // geometric tail bound: remainder <= term/c
        if (j >= 1000000)
            throw NumericError("phi_k: tail series exceeded 1e6 terms without converging");
        term *= (double(j + k) + 1.0 - s) / (double(j + k) + 1.0) * decay;
    }
    return pref * sum;
}

// Finite-bracket form, rearranged so c^r (1+c^{-1})^r = (1+c)^r never overflows:
// phi_k = alpha^s (1+c)^{k-1} / C(k-1-s, k-1) * [(1+c)^r - c^r sum_{j<k} C(j-s,j)(1+c)^{-j}].
// Used when c is so small that the tail series would need too many terms; in that
// regime the subtraction is benign because (1+c)^r ~ 1 dominates c^r * sum.
inline double phi_k_bracket(double alpha, double c, double delta, int k) {
    const double s = 1.0 / (1.0 + delta);
    const double r = 1.0 - s;
    double head = 0.0;
    double coeff = 1.0;  // C(j-s, j), iterated via ratio (j+1-s)/(j+1)
    double discount = 1.0;
    for (int j = 0; j < k; ++j) {
        head += coeff * discount;
        coeff *= (double(j) + 1.0 - s) / (double(j) + 1.0);
        discount /= 1.0 + c;
    }
    const double inv_binom = std::exp(powerlaw::detail::log_gamma(double(k)) +
                                      powerlaw::detail::log_gamma(1.0 - s) -
                                      powerlaw::detail::log_gamma(double(k) - s));
    const double core = std::pow(1.0 + c, r) - std::pow(c, r) * head;
    return std::pow(alpha, s) * std::pow(1.0 + c, double(k - 1)) * inv_binom * core;
}

}  // namespace detail

// Decision function for k = 2 (closed form). Positive expected change iff > 1.
inline double phi2(double alpha, double beta, double delta) {
    detail::check_decision_params(alpha, beta, delta);
    const double c = detail::bias_weight(alpha, beta, delta);
    const double r = delta / (1.0 + delta);
    const double s = 1.0 / (1.0 + delta);
    if (c == 0.0) return std::pow(alpha, s) * (1.0 + delta) / delta;
    const double bracket = 1.0 - std::pow(1.0 + 1.0 / c, -r) * (1.0 + r / (1.0 + c));
    return std::pow(alpha, s) * bracket / (r * std::pow(1.0 + c, -1.0 - r));
}

// Decision function for general k >= 2. Evaluated through the all-positive tail
// series; for very small c (where that series converges too slowly) through the
// stable finite-bracket arrangement. Both routes agree to ~1e-11 where they overlap.
inline double phi_k(double alpha, double beta, double delta, int k) {
    detail::check_decision_params(alpha, beta, delta);
    if (k < 2) throw std::invalid_argument("phi_k: k must be >= 2");
    const double c = detail::bias_weight(alpha, beta, delta);
    if (c == 0.0) return detail::phi_k_infinite_bias(alpha, delta, k);
    const double projected_terms = (33.0 + std::log1p(1.0 / c)) / std::log1p(c);
    if (projected_terms <= 2e5) return detail::phi_k_tail_series(alpha, c, delta, k);
    return detail::phi_k_bracket(alpha, c, delta, k);
}

inline double phi_k(const ModelParams& p) {
    p.validate();
    return phi_k(p.alpha, p.beta, p.delta.delta, p.k);
}

// Infinite-bias criterion: positive expected change iff alpha > (delta/(1+delta))^{1+delta}.
inline bool infinite_bias_positive(double alpha, double delta) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("alpha must lie in (0,1]");
    if (!(delta > 0.0 && std::isfinite(delta)))
        throw std::invalid_argument("delta must be finite and > 0");
    return alpha > std::pow(delta / (1.0 + delta), 1.0 + delta);
}

// Result of the threshold search: the bias level beta* above which the rule helps,
// or NoThreshold when no finite bias level makes it help, or MultiCrossing when a
// non-monotone sweep (possible only for k > 2, where monotonicity is unproven)
// prevents a well-defined threshold.
struct BetaThreshold {
    enum class Kind { Finite, NoThreshold, MultiCrossing };
    Kind kind = Kind::NoThreshold;
    double value = std::numeric_limits<double>::quiet_NaN();

    static BetaThreshold finite(double b) { return {Kind::Finite, b}; }
    static BetaThreshold no_threshold() { return {Kind::NoThreshold, {}}; }
    static BetaThreshold multi_crossing() { return {Kind::MultiCrossing, {}}; }

    friend bool operator==(const BetaThreshold& a, const BetaThreshold& b) {
        if (a.kind != b.kind) return false;
        return a.kind != Kind::Finite || a.value == b.value;
    }
};

namespace detail {

// Locates beta with phi(beta) = 1 for a function expected to increase in beta.
// Grows a geometric bracket, optionally verifying that the sampled sweep is
// increasing, then bisects to |phi - 1| <= 1e-9.
template <class F>
BetaThreshold find_unit_crossing(F&& phi, bool verify_monotone) {
    constexpr double kPhiTol = 1e-9;
    constexpr int kMaxBisect = 200;

    double lo = 1.0 + 1e-9;
    double f_lo = phi(lo);
    if (f_lo > 1.0) return BetaThreshold::finite(1.0);  // crossing at or below the model floor

    std::vector<double> sweep{f_lo};
    double hi = 2.0;
    double f_hi = phi(hi);
    sweep.push_back(f_hi);
    while (f_hi <= 1.0) {
        if (hi > 1e30) return BetaThreshold::no_threshold();  // indistinguishable from the boundary in double
        lo = hi;
        f_lo = f_hi;
        hi *= 4.0;
        f_hi = phi(hi);
        sweep.push_back(f_hi);
    }

    if (verify_monotone) {
        for (std::size_t i = 1; i < sweep.size(); ++i)
            if (!(sweep[i] > sweep[i - 1])) return BetaThreshold::multi_crossing();
        // refine inside the bracket as well
        double prev = f_lo;
        for (int i = 1; i <= 16; ++i) {
            const double b = lo * std::pow(hi / lo, double(i) / 17.0);
            const double f = phi(b);
            if (!(f > prev)) return BetaThreshold::multi_crossing();
            prev = f;
        }
    }

    for (int it = 0; it < kMaxBisect; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = phi(mid);
        if (std::abs(f - 1.0) <= kPhiTol) return BetaThreshold::finite(mid);
        (f < 1.0 ? lo : hi) = mid;
        if (hi - lo <= 1e-15 * mid) return BetaThreshold::finite(0.5 * (lo + hi));
    }
    return BetaThreshold::finite(0.5 * (lo + hi));
}

}  // namespace detail

// Smallest bias level beta* with phi_k(alpha, beta*, delta) = 1, when one exists.
inline BetaThreshold beta_star(double alpha, double delta, int k) {
    if (k < 2) throw std::invalid_argument("beta_star: k must be >= 2");
    detail::check_decision_params(alpha, 2.0, delta);  // validate alpha/delta only
    const double limit = detail::phi_k_infinite_bias(alpha, delta, k);
    if (!(limit > 1.0)) return BetaThreshold::no_threshold();
    if (k == 2) {
        // closed form; monotone in beta, no sweep verification needed
        return detail::find_unit_crossing([&](double b) { return phi2(alpha, b, delta); }, false);
    }
    return detail::find_unit_crossing([&](double b) { return phi_k(alpha, b, delta, k); }, true);
}

// Asymptotic probability that the rule changes the outcome (no minority candidate
// in the biased top k): (1+c)^{-k}.
inline double prob_rule_binds(double alpha, double beta, double delta, int k) {
    detail::check_decision_params(alpha, beta, delta);
    if (k < 1) throw std::invalid_argument("prob_rule_binds: k must be >= 1");
    return std::pow(1.0 + detail::bias_weight(alpha, beta, delta), -double(k));
}

inline double prob_rule_binds(const ModelParams& p) {
    p.validate();
    return prob_rule_binds(p.alpha, p.beta, p.delta.delta, p.k);
}

// Asymptotic probability that the forced swap raises utility, conditioned on the
// rule changing the outcome: 1 - ((1+c)/(1+alpha))^k.
inline double prob_positive_given_change(double alpha, double beta, double delta, int k) {
    detail::check_decision_params(alpha, beta, delta);
    if (k < 1) throw std::invalid_argument("prob_positive_given_change: k must be >= 1");
    const double c = detail::bias_weight(alpha, beta, delta);
    return 1.0 - std::pow((1.0 + c) / (1.0 + alpha), double(k));
}

inline double prob_positive_given_change(const ModelParams& p) {
    p.validate();
    return prob_positive_given_change(p.alpha, p.beta, p.delta.delta, p.k);
}

}  // namespace rooney
