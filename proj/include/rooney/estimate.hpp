#pragma once

// Maximum-likelihood estimation of the bias multiplier from multi-year hiring
// histories. With known delta, the selection probabilities depend on the data
// only through c_i = alpha_i beta^{-(1+delta)}, so the log-likelihood is
//
//   sum_{i: selected_x} log(c_i) - sum_i log(1 + c_i)
//
// and its stationary point solves sum_i 1/(1 + alpha_i^{-1} beta^{1+delta}) = N,
// whose left side is strictly decreasing in beta: the maximizer is unique.

#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "rooney/errors.hpp"
#include "rooney/powerlaw.hpp"

namespace rooney::estimate {

struct HiringRecord {
    std::string year;       // label only
    double alpha;           // pool ratio for that year, > 0
    std::int64_t pool_size; // informational; does not enter the likelihood
    bool selected_x;
};

struct HiringHistory {
    std::vector<HiringRecord> records;
    powerlaw::TailExponent delta;

    void validate() const {
        if (records.empty()) throw std::invalid_argument("HiringHistory: no records");
        for (const auto& r : records)
            if (!(r.alpha > 0.0 && std::isfinite(r.alpha)))
                throw std::invalid_argument("HiringHistory: alpha must be finite and > 0");
    }

    std::int64_t selected_count() const {
        std::int64_t n = 0;
        for (const auto& r : records) n += r.selected_x;
        return n;
    }
};

namespace detail {

inline double softplus(double x) {  // log(1 + e^x), overflow-safe
    return x > 35.0 ? x + std::exp(-x) : std::log1p(std::exp(x));
}

// compensated accumulator; histories can run to 1e5 records and the
// stationarity residual has to resolve well below one part in 1e8
struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double x) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

}  // namespace detail

inline double log_likelihood(const HiringHistory& h, double beta) {
    h.validate();
    if (!(beta > 0.0 && std::isfinite(beta)))
        throw std::domain_error("log_likelihood: beta must be finite and > 0");
    const double e = h.delta.order();
    const double lb = -e * std::log(beta);
    detail::KahanSum ll;
    for (const auto& r : h.records) {
        const double lc = std::log(r.alpha) + lb;
        if (r.selected_x) ll.add(lc);
        ll.add(-detail::softplus(lc));
    }
    return ll.sum;
}

// Expected number of minority selections at bias level beta; strictly decreasing
// in beta. The MLE solves selection_pressure(beta) = observed count.
inline double selection_pressure(const HiringHistory& h, double beta) {
    const double e = h.delta.order();
    const double be = std::pow(beta, e);
    detail::KahanSum sum;
    for (const auto& r : h.records) sum.add(1.0 / (1.0 + be / r.alpha));
    return sum.sum;
}

struct MleResult {
    // NoSelections: no minority candidate was ever selected, likelihood increases
    // toward beta = +inf. AllSelections: the mirror case, toward beta = 0.
    enum class Kind { Unique, NoSelections, AllSelections };
    Kind kind = Kind::Unique;
    double beta_hat = std::numeric_limits<double>::quiet_NaN();
    bool favors_x = false;  // beta_hat < 1: data indicate bias toward the minority group
    double plugback_residual = 0.0;
};

inline MleResult mle_beta(const HiringHistory& h) {
    h.validate();
    const auto m = std::int64_t(h.records.size());
    const std::int64_t selected = h.selected_count();
    if (selected == 0) return {MleResult::Kind::NoSelections, {}, false, 0.0};
    if (selected == m) return {MleResult::Kind::AllSelections, {}, true, 0.0};

    // initial guess: the constant-alpha closed form at the geometric-mean alpha
    double log_abar = 0.0;
    for (const auto& r : h.records) log_abar += std::log(r.alpha);
    const double abar = std::exp(log_abar / double(m));
    const double e = h.delta.order();
    const double target = double(selected);
    double guess = std::pow((double(m) / double(selected) - 1.0) * abar, 1.0 / e);

    double lo = guess, hi = guess;
    for (int i = 0; i < 2000 && selection_pressure(h, lo) <= target; ++i) lo *= 0.5;
    for (int i = 0; i < 2000 && selection_pressure(h, hi) >= target; ++i) hi *= 2.0;

    // bisect essentially to machine precision so the plug-back residual stays
    // small even for histories with ~1e5 records
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (selection_pressure(h, mid) > target ? lo : hi) = mid;
    }
    const double beta_hat = 0.5 * (lo + hi);

    MleResult res;
    res.kind = MleResult::Kind::Unique;
    res.beta_hat = beta_hat;
    // flag only when distinguishable from exact balance at solver resolution
    res.favors_x = beta_hat < 1.0 - 1e-12;
    res.plugback_residual = selection_pressure(h, beta_hat) - target;
    return res;
}

// History file format: UTF-8 CSV with the exact header `year,alpha,n,selected`,
// then one record per line: label, pool ratio, pool size, X or Y.
inline HiringHistory parse_history_csv(std::istream& in, double delta) {
    HiringHistory h{{}, powerlaw::TailExponent{delta}};
    std::string line;
    std::int64_t lineno = 0;

    auto strip = [](std::string s) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
        std::size_t i = 0;
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        return s.substr(i);
    };

    if (!std::getline(in, line)) throw ParseError(1, "empty file; expected header year,alpha,n,selected");
    ++lineno;
    if (strip(line) != "year,alpha,n,selected")
        throw ParseError(1, "bad header; expected year,alpha,n,selected");

    while (std::getline(in, line)) {
        ++lineno;
        if (strip(line).empty()) continue;
        std::stringstream ss(line);
        std::string year, alpha_s, n_s, sel_s;
        if (!std::getline(ss, year, ',') || !std::getline(ss, alpha_s, ',') ||
            !std::getline(ss, n_s, ',') || !std::getline(ss, sel_s))
            throw ParseError(lineno, "expected 4 comma-separated fields");
        HiringRecord rec;
        rec.year = strip(year);
        try {
            std::size_t pos = 0;
            rec.alpha = std::stod(strip(alpha_s), &pos);
            if (pos != strip(alpha_s).size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ParseError(lineno, "bad alpha value '" + strip(alpha_s) + "'");
        }
        if (!(rec.alpha > 0.0)) throw ParseError(lineno, "alpha must be > 0");
        try {
            std::size_t pos = 0;
            rec.pool_size = std::stoll(strip(n_s), &pos);
            if (pos != strip(n_s).size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ParseError(lineno, "bad pool size '" + strip(n_s) + "'");
        }
        const std::string sel = strip(sel_s);
        if (sel == "X")
            rec.selected_x = true;
        else if (sel == "Y")
            rec.selected_x = false;
        else
            throw ParseError(lineno, "selected must be X or Y, got '" + sel + "'");
        h.records.push_back(std::move(rec));
    }
    if (h.records.empty()) throw ParseError(lineno + 1, "no records after header");
    return h;
}

}  // namespace rooney::estimate
