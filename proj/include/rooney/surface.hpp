#pragma once

// Decision-surface extraction: the level set phi_k(alpha, beta, delta) = 1 over
// an (alpha, delta) grid, each cell holding the threshold bias beta* (or the
// marker that no finite bias level makes the rule help).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rooney/decision.hpp"
#include "rooney/errors.hpp"
#include "rooney/parallel.hpp"

namespace rooney::surface {

struct SurfaceGrid {
    std::vector<double> alpha_axis;
    std::vector<double> delta_axis;
    int k = 2;
    std::vector<BetaThreshold> cells;  // row-major: alpha outer, delta inner

    const BetaThreshold& cell(std::size_t ia, std::size_t id) const {
        return cells[ia * delta_axis.size() + id];
    }

    friend bool operator==(const SurfaceGrid&, const SurfaceGrid&) = default;
};

namespace detail {

inline void check_axis(const std::vector<double>& axis, double lo, double hi, const char* name) {
    if (axis.empty()) throw std::invalid_argument(std::string(name) + " axis is empty");
    for (std::size_t i = 0; i < axis.size(); ++i) {
        if (!(axis[i] > lo && axis[i] <= hi))
            throw std::invalid_argument(std::string(name) + " axis value out of range");
        if (i > 0 && !(axis[i] > axis[i - 1]))
            throw std::invalid_argument(std::string(name) + " axis must be strictly increasing");
    }
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline std::vector<double> linear_spaced(double lo, double hi, int n) {
    if (n < 1 || (n == 1 ? !(hi >= lo) : !(hi > lo)))
        throw std::invalid_argument("linear_spaced: bad range");
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    for (int i = 0; i < n; ++i) v[std::size_t(i)] = lo + (hi - lo) * double(i) / double(n - 1);
    v.back() = hi;
    return v;
}

inline std::vector<double> log_spaced(double lo, double hi, int n) {
    if (!(lo > 0.0)) throw std::invalid_argument("log_spaced: lo must be > 0");
    auto v = linear_spaced(std::log(lo), std::log(hi), n);
    for (auto& x : v) x = std::exp(x);
    v.front() = lo;
    v.back() = hi;
    return v;
}

// Axis defaults chosen to cover the interesting region: alpha down to 1% on a
// log scale, delta from near-zero through the regime where no threshold exists.
inline std::vector<double> default_alpha_axis() { return log_spaced(0.01, 1.0, 40); }
inline std::vector<double> default_delta_axis() { return linear_spaced(0.05, 4.0, 40); }

inline SurfaceGrid sweep(std::vector<double> alpha_axis, std::vector<double> delta_axis, int k,
                         int threads = 1) {
    detail::check_axis(alpha_axis, 0.0, 1.0, "alpha");
    detail::check_axis(delta_axis, 0.0, std::numeric_limits<double>::infinity(), "delta");
    if (k < 2) throw std::invalid_argument("sweep: k must be >= 2");

    SurfaceGrid grid;
    grid.alpha_axis = std::move(alpha_axis);
    grid.delta_axis = std::move(delta_axis);
    grid.k = k;
    grid.cells.resize(grid.alpha_axis.size() * grid.delta_axis.size());

    const std::int64_t total = std::int64_t(grid.cells.size());
    par::run_chunked(total, par::resolve_threads(threads),
                     [&](int, std::int64_t begin, std::int64_t end) {
                         const std::size_t nd = grid.delta_axis.size();
                         for (std::int64_t i = begin; i < end; ++i) {
                             const auto ia = std::size_t(i) / nd, id = std::size_t(i) % nd;
                             grid.cells[std::size_t(i)] =
                                 beta_star(grid.alpha_axis[ia], grid.delta_axis[id], k);
                         }
                     });
    return grid;
}

// CSV: header `alpha,delta,k,beta_star`, one row per cell in row-major order.
// Sentinels: `inf` marks no-threshold cells, `nan` marks multi-crossing cells.
inline std::string to_csv(const SurfaceGrid& g) {
    std::string out = "alpha,delta,k,beta_star\n";
    for (std::size_t ia = 0; ia < g.alpha_axis.size(); ++ia)
        for (std::size_t id = 0; id < g.delta_axis.size(); ++id) {
            const auto& c = g.cell(ia, id);
            out += detail::format_double(g.alpha_axis[ia]) + ',' +
                   detail::format_double(g.delta_axis[id]) + ',' + std::to_string(g.k) + ',';
            switch (c.kind) {
                case BetaThreshold::Kind::Finite: out += detail::format_double(c.value); break;
                case BetaThreshold::Kind::NoThreshold: out += "inf"; break;
                case BetaThreshold::Kind::MultiCrossing: out += "nan"; break;
            }
            out += '\n';
        }
    return out;
}

inline SurfaceGrid parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(1, "empty surface file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "alpha,delta,k,beta_star")
        throw ParseError(1, "bad header; expected alpha,delta,k,beta_star");

    SurfaceGrid g;
    g.k = 0;
    std::int64_t lineno = 1;
    std::vector<double> alphas, deltas;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string a_s, d_s, k_s, b_s;
        if (!std::getline(ss, a_s, ',') || !std::getline(ss, d_s, ',') ||
            !std::getline(ss, k_s, ',') || !std::getline(ss, b_s))
            throw ParseError(lineno, "expected 4 fields");
        const double a = std::stod(a_s), d = std::stod(d_s);
        const int k = std::stoi(k_s);
        if (g.k == 0) g.k = k;
        if (k != g.k) throw ParseError(lineno, "inconsistent k");
        if (alphas.empty() || a != alphas.back()) {
            if (!alphas.empty() && !deltas.empty() && g.delta_axis.empty()) g.delta_axis = deltas;
            alphas.push_back(a);
            deltas.clear();
        }
        deltas.push_back(d);
        if (b_s == "inf")
            g.cells.push_back(BetaThreshold::no_threshold());
        else if (b_s == "nan")
            g.cells.push_back(BetaThreshold::multi_crossing());
        else
            g.cells.push_back(BetaThreshold::finite(std::stod(b_s)));
    }
    if (g.delta_axis.empty()) g.delta_axis = deltas;
    g.alpha_axis = alphas;
    if (g.cells.size() != g.alpha_axis.size() * g.delta_axis.size())
        throw ParseError(lineno, "grid is not rectangular");
    return g;
}

inline nlohmann::json to_json(const SurfaceGrid& g) {
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t ia = 0; ia < g.alpha_axis.size(); ++ia)
        for (std::size_t id = 0; id < g.delta_axis.size(); ++id) {
            const auto& c = g.cell(ia, id);
            nlohmann::json jc{{"alpha", g.alpha_axis[ia]}, {"delta", g.delta_axis[id]}};
            switch (c.kind) {
                case BetaThreshold::Kind::Finite:
                    jc["kind"] = "finite";
                    jc["beta_star"] = c.value;
                    break;
                case BetaThreshold::Kind::NoThreshold: jc["kind"] = "no_threshold"; break;
                case BetaThreshold::Kind::MultiCrossing: jc["kind"] = "multi_crossing"; break;
            }
            cells.push_back(std::move(jc));
        }
    return nlohmann::json{{"alpha_axis", g.alpha_axis},
                          {"delta_axis", g.delta_axis},
                          {"k", g.k},
                          {"cells", std::move(cells)}};
}

inline SurfaceGrid parse_json(const nlohmann::json& j) {
    SurfaceGrid g;
    g.alpha_axis = j.at("alpha_axis").get<std::vector<double>>();
    g.delta_axis = j.at("delta_axis").get<std::vector<double>>();
    g.k = j.at("k").get<int>();
    for (const auto& jc : j.at("cells")) {
        const std::string kind = jc.at("kind").get<std::string>();
        if (kind == "finite")
            g.cells.push_back(BetaThreshold::finite(jc.at("beta_star").get<double>()));
        else if (kind == "no_threshold")
            g.cells.push_back(BetaThreshold::no_threshold());
        else if (kind == "multi_crossing")
            g.cells.push_back(BetaThreshold::multi_crossing());
        else
            throw std::invalid_argument("surface json: unknown cell kind '" + kind + "'");
    }
    if (g.cells.size() != g.alpha_axis.size() * g.delta_axis.size())
        throw std::invalid_argument("surface json: grid is not rectangular");
    return g;
}

// gnuplot-style whitespace table: `alpha delta beta_star` with a blank line
// between alpha blocks (splot-ready). Non-finite cells print inf/nan.
inline std::string to_gnuplot(const SurfaceGrid& g) {
    std::string out = "# alpha delta beta_star\n";
    for (std::size_t ia = 0; ia < g.alpha_axis.size(); ++ia) {
        for (std::size_t id = 0; id < g.delta_axis.size(); ++id) {
            const auto& c = g.cell(ia, id);
            out += detail::format_double(g.alpha_axis[ia]) + ' ' +
                   detail::format_double(g.delta_axis[id]) + ' ';
            switch (c.kind) {
                case BetaThreshold::Kind::Finite: out += detail::format_double(c.value); break;
                case BetaThreshold::Kind::NoThreshold: out += "inf"; break;
                case BetaThreshold::Kind::MultiCrossing: out += "nan"; break;
            }
            out += '\n';
        }
        if (ia + 1 < g.alpha_axis.size()) out += '\n';
    }
    return out;
}

}  // namespace rooney::surface
