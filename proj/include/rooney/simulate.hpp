#pragma once

// Seeded Monte Carlo of the full selection process: biased ranking, the rule's
// intervention, utility accounting, plus the discrete conditional-expectation
// demo and the bounded-distribution experiment.
//
// Randomness contract: every trial derives its generator from (master seed,
// trial index), so per-trial results are independent of thread count and
// scheduling. Aggregates are combined in fixed chunk order, making a run
// byte-reproducible for a given thread count; across thread counts only the
// floating-point reduction order differs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rooney/decision.hpp"
#include "rooney/errors.hpp"
#include "rooney/parallel.hpp"
#include "rooney/powerlaw.hpp"
#include "rooney/rng.hpp"

namespace rooney::simulate {

struct Candidate {
    double potential;
    bool from_x;
    friend bool operator==(const Candidate&, const Candidate&) = default;
};

// One Monte Carlo draw's finalists and utilities, with and without the rule.
// Finalist lists are ordered by the committee's biased ranking, best first.
struct TrialOutcome {
    std::vector<Candidate> finalists_unconstrained;
    std::vector<Candidate> finalists_ruled;
    double utility_unconstrained = 0.0;
    double utility_ruled = 0.0;
    bool rule_bound = false;
    friend bool operator==(const TrialOutcome&, const TrialOutcome&) = default;
};

enum class EstimatorKind { Mean, MedianOfMeans };

// Median-of-means handles the infinite-variance regime (delta <= 1, where plain
// means of maxima converge too slowly to be useful).
inline EstimatorKind default_estimator_kind(double delta) {
    return delta <= 1.0 ? EstimatorKind::MedianOfMeans : EstimatorKind::Mean;
}

struct EstimatorReport {
    double point_estimate = 0.0;
    double std_error = 0.0;
    std::int64_t trials = 0;
    EstimatorKind kind = EstimatorKind::Mean;
    std::int64_t conditioning_trials = 0;  // trials where the conditioning event held
};

// Reduced view of one trial: the top minority potential, the k-th largest
// majority potential, and whether the single-slot rule binds. Shares the draw
// sequence with run_trial, so both views of a trial agree.
struct TrialStatistics {
    double x_top;
    double y_kth;
    bool rule_bound;
};

namespace detail {

// block count for median-of-means: ceil(ln(1/0.01)) * 8
constexpr int kBlocks = 40;

// Keeps the k largest values seen, ascending, in a small buffer.
inline void push_topk(std::vector<double>& top, std::size_t k, double v) {
    if (top.size() < k) {
        top.insert(std::upper_bound(top.begin(), top.end(), v), v);
    } else if (v > top.front()) {
        std::size_t i = 1;
        while (i < k && top[i] < v) {
            top[i - 1] = top[i];
            ++i;
        }
        top[i - 1] = v;
    }
}

inline TrialStatistics trial_stats(const ModelParams& p, std::int64_t mx, std::mt19937_64& g,
                                   std::vector<double>& topk_buf) {
    const powerlaw::TailExponent d = p.delta;
    topk_buf.clear();
    for (std::int64_t i = 0; i < p.n; ++i)
        push_topk(topk_buf, std::size_t(p.k), powerlaw::sample(d, rng::uniform_open(g)));
    double x_top = 0.0;
    for (std::int64_t i = 0; i < mx; ++i)
        x_top = std::max(x_top, powerlaw::sample(d, rng::uniform_open(g)));
    const double y_kth = topk_buf.front();
    const double x_score = is_infinite_bias(p.beta) ? 0.0 : x_top / p.beta;
    // ties resolve in favor of majority candidates, so the rule binds unless the
    // top minority candidate strictly outranks the k-th majority candidate
    return {x_top, y_kth, !(x_score > y_kth)};
}

inline void check_trial_shape(const ModelParams& p, int ell, std::int64_t mx) {
    p.validate();
    if (ell < 1 || ell > p.k)
        throw std::invalid_argument("run_trial: need 1 <= ell <= k");
    if (p.k > p.n) throw std::invalid_argument("run_trial: k exceeds majority pool size");
    if (mx < ell)
        throw std::invalid_argument("run_trial: minority pool smaller than reserved slots");
}

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Lightweight per-trial statistics; same draws as run_trial for the same
// (master_seed, trial_index).
inline TrialStatistics trial_statistics(const ModelParams& p, std::uint64_t master_seed,
                                        std::int64_t trial_index) {
    const std::int64_t mx = minority_pool_size(p.alpha, p.n);
    detail::check_trial_shape(p, 1, mx);
    auto g = rng::trial_rng(master_seed, std::uint64_t(trial_index));
    std::vector<double> buf;
    buf.reserve(std::size_t(p.k));
    return detail::trial_stats(p, mx, g, buf);
}

// One full trial: draws both pools, ranks by biased score, applies the rule with
// ell reserved slots (ell = 1 is the baseline rule; larger ell is exposed but the
// closed forms in decision.hpp only cover ell = 1).
inline TrialOutcome run_trial(const ModelParams& p, int ell, std::uint64_t master_seed,
                              std::int64_t trial_index) {
    const std::int64_t mx = minority_pool_size(p.alpha, p.n);
    detail::check_trial_shape(p, ell, mx);

    auto g = rng::trial_rng(master_seed, std::uint64_t(trial_index));
    const powerlaw::TailExponent d = p.delta;
    std::vector<double> ys(std::size_t(p.n), 0.0);
    std::vector<double> xs(std::size_t(mx), 0.0);
    for (auto& y : ys) y = powerlaw::sample(d, rng::uniform_open(g));
    for (auto& x : xs) x = powerlaw::sample(d, rng::uniform_open(g));

    const std::size_t ky = std::size_t(p.k);
    const std::size_t kx = std::size_t(std::min<std::int64_t>(p.k, mx));
    std::partial_sort(ys.begin(), ys.begin() + ky, ys.end(), std::greater<>());
    std::partial_sort(xs.begin(), xs.begin() + kx, xs.end(), std::greater<>());

    const bool inf_bias = is_infinite_bias(p.beta);
    auto x_score = [&](double x) { return inf_bias ? 0.0 : x / p.beta; };

    // merge the two descending group heads by biased score; ties go to Y
    TrialOutcome out;
    out.finalists_unconstrained.reserve(ky);
    std::size_t iy = 0, ix = 0;
    while (out.finalists_unconstrained.size() < ky) {
        if (ix < kx && iy < ky && x_score(xs[ix]) > ys[iy])
            out.finalists_unconstrained.push_back({xs[ix++], true});
        else
            out.finalists_unconstrained.push_back({ys[iy++], false});
    }

    int x_in_top = 0;
    for (const auto& c : out.finalists_unconstrained) x_in_top += c.from_x;
    out.rule_bound = x_in_top < ell;

    out.finalists_ruled = out.finalists_unconstrained;
    if (out.rule_bound) {
        int need = ell - x_in_top;
        // drop the lowest-ranked majority finalists, then append the best
        // excluded minority candidates (they rank below everything kept)
        for (auto it = out.finalists_ruled.rbegin();
             need > 0 && it != out.finalists_ruled.rend();) {
            if (!it->from_x) {
                out.finalists_ruled.erase(std::next(it).base());
                --need;
                it = out.finalists_ruled.rbegin();
            } else {
                ++it;
            }
        }
        for (std::size_t j = std::size_t(x_in_top); out.finalists_ruled.size() < ky; ++j)
            out.finalists_ruled.push_back({xs[j], true});
    }

    for (const auto& c : out.finalists_unconstrained) out.utility_unconstrained += c.potential;
    for (const auto& c : out.finalists_ruled) out.utility_ruled += c.potential;
    return out;
}

// Monte Carlo estimate of the ratio E[X_top * 1{bind}] / E[Y_kth * 1{bind}],
// the finite-n quantity the decision functions approximate.
inline EstimatorReport estimate_rk(const ModelParams& p, std::int64_t trials, EstimatorKind kind,
                                   std::uint64_t master_seed, int threads = 1) {
    const std::int64_t mx = minority_pool_size(p.alpha, p.n);
    detail::check_trial_shape(p, 1, mx);
    if (trials < 1000) throw std::invalid_argument("estimate_rk: need at least 1000 trials");

    const int nt = par::resolve_threads(threads);
    struct Chunk {
        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        std::int64_t nb = 0;
        std::vector<double> bx = std::vector<double>(detail::kBlocks, 0.0);
        std::vector<double> by = std::vector<double>(detail::kBlocks, 0.0);
    };
    std::vector<Chunk> chunks(std::size_t(std::min<std::int64_t>(nt, trials)));

    par::run_chunked(trials, nt, [&](int ci, std::int64_t begin, std::int64_t end) {
        auto& c = chunks[std::size_t(ci)];
        std::vector<double> buf;
        buf.reserve(std::size_t(p.k));
        for (std::int64_t t = begin; t < end; ++t) {
            auto g = rng::trial_rng(master_seed, std::uint64_t(t));
            const auto st = detail::trial_stats(p, mx, g, buf);
            if (!st.rule_bound) continue;
            ++c.nb;
            c.sx += st.x_top;
            c.sy += st.y_kth;
            c.sxx += st.x_top * st.x_top;
            c.syy += st.y_kth * st.y_kth;
            c.sxy += st.x_top * st.y_kth;
            c.bx[std::size_t(t % detail::kBlocks)] += st.x_top;
            c.by[std::size_t(t % detail::kBlocks)] += st.y_kth;
        }
    });

    Chunk all;
    for (const auto& c : chunks) {
        all.sx += c.sx;
        all.sy += c.sy;
        all.sxx += c.sxx;
        all.syy += c.syy;
        all.sxy += c.sxy;
        all.nb += c.nb;
        for (int b = 0; b < detail::kBlocks; ++b) {
            all.bx[std::size_t(b)] += c.bx[std::size_t(b)];
            all.by[std::size_t(b)] += c.by[std::size_t(b)];
        }
    }
    if (all.nb == 0) throw InsufficientConditioningEvents(trials);

    EstimatorReport rep;
    rep.trials = trials;
    rep.kind = kind;
    rep.conditioning_trials = all.nb;

    if (kind == EstimatorKind::Mean) {
        const double T = double(trials);
        const double ma = all.sx / T, mb = all.sy / T;
        const double va = all.sxx / T - ma * ma;
        const double vb = all.syy / T - mb * mb;
        const double cab = all.sxy / T - ma * mb;
        rep.point_estimate = all.sx / all.sy;
        const double var =
            (va / (mb * mb) + ma * ma * vb / (mb * mb * mb * mb) - 2.0 * ma * cab / (mb * mb * mb)) /
            T;
        rep.std_error = std::sqrt(std::max(0.0, var));
    } else {
        std::vector<double> ratios;
        ratios.reserve(detail::kBlocks);
        for (int b = 0; b < detail::kBlocks; ++b)
            if (all.by[std::size_t(b)] > 0.0)
                ratios.push_back(all.bx[std::size_t(b)] / all.by[std::size_t(b)]);
        if (ratios.empty()) throw InsufficientConditioningEvents(trials);
        const double med = detail::median_of(ratios);
        std::vector<double> dev;
        dev.reserve(ratios.size());
        for (double r : ratios) dev.push_back(std::abs(r - med));
        rep.point_estimate = med;
        // block-spread proxy: scaled median absolute deviation over blocks
        rep.std_error = 1.4826 * detail::median_of(dev) / std::sqrt(double(ratios.size()));
    }
    return rep;
}

// Empirical frequency that the forced swap raises utility, among trials where
// the rule binds. Binomial standard error.
inline EstimatorReport estimate_prob_positive(const ModelParams& p, std::int64_t trials,
                                              std::uint64_t master_seed, int threads = 1) {
    const std::int64_t mx = minority_pool_size(p.alpha, p.n);
    detail::check_trial_shape(p, 1, mx);
    if (trials < 1000)
        throw std::invalid_argument("estimate_prob_positive: need at least 1000 trials");

    const int nt = par::resolve_threads(threads);
    struct Chunk {
        std::int64_t nb = 0, npos = 0;
    };
    std::vector<Chunk> chunks(std::size_t(std::min<std::int64_t>(nt, trials)));

    par::run_chunked(trials, nt, [&](int ci, std::int64_t begin, std::int64_t end) {
        auto& c = chunks[std::size_t(ci)];
        std::vector<double> buf;
        buf.reserve(std::size_t(p.k));
        for (std::int64_t t = begin; t < end; ++t) {
            auto g = rng::trial_rng(master_seed, std::uint64_t(t));
            const auto st = detail::trial_stats(p, mx, g, buf);
            if (!st.rule_bound) continue;
            ++c.nb;
            c.npos += st.x_top > st.y_kth;
        }
    });

    std::int64_t nb = 0, npos = 0;
    for (const auto& c : chunks) {
        nb += c.nb;
        npos += c.npos;
    }
    if (nb == 0) throw InsufficientConditioningEvents(trials);

    EstimatorReport rep;
    rep.trials = trials;
    rep.kind = EstimatorKind::Mean;
    rep.conditioning_trials = nb;
    rep.point_estimate = double(npos) / double(nb);
    rep.std_error = std::sqrt(rep.point_estimate * (1.0 - rep.point_estimate) / double(nb));
    return rep;
}

// Exact E[X | X > beta*Y] for X, Y i.i.d. on a finite support, by enumeration of
// the product distribution. The comparison is strict, matching the convention
// that ties favor the majority candidate.
inline double cond_exp_filtered_discrete(std::span<const double> support,
                                         std::span<const double> weights, double beta) {
    if (support.empty() || support.size() != weights.size())
        throw std::invalid_argument("cond_exp_filtered_discrete: support/weights size mismatch");
    if (!std::isfinite(beta))
        throw std::invalid_argument("cond_exp_filtered_discrete: beta must be finite");
    double wsum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("cond_exp_filtered_discrete: negative weight");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-9)
        throw std::invalid_argument("cond_exp_filtered_discrete: weights must sum to 1");

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i)
        for (std::size_t j = 0; j < support.size(); ++j)
            if (support[i] > beta * support[j]) {
                const double w = weights[i] * weights[j];
                num += w * support[i];
                den += w;
            }
    if (den == 0.0) throw EmptyConditioningEvent();
    return num / den;
}

// Candidate values on [0,1] with an arbitrary bias map capped strictly below the
// distribution's supremum.
struct BoundedModel {
    std::function<double(double)> cdf;       // monotone map [0,1] -> [0,1]
    std::function<double(double)> quantile;  // inverse cdf; the sampler
    std::function<double(double)> bias;      // perceived value of a minority candidate
    double bias_cap;                         // sup bias < 1
};

inline BoundedModel uniform_bounded_model(double bias_scale) {
    if (!(bias_scale >= 0.0 && bias_scale < 1.0))
        throw std::invalid_argument("uniform_bounded_model: bias scale must lie in [0,1)");
    return {
        [](double x) { return std::clamp(x, 0.0, 1.0); },
        [](double u) { return u; },
        [bias_scale](double x) { return bias_scale * x; },
        bias_scale,
    };
}

// Monte Carlo estimate of E[X_(n:n) - Y_(n-1:n) | bias(X_(n:n)) < Y_(n-1:n)] for
// equal pools of size n drawn from the bounded model.
inline EstimatorReport bounded_experiment(const BoundedModel& model, std::int64_t n,
                                          std::int64_t trials, std::uint64_t master_seed,
                                          int threads = 1) {
    if (n < 2) throw std::invalid_argument("bounded_experiment: need n >= 2");
    if (trials < 1000) throw std::invalid_argument("bounded_experiment: need at least 1000 trials");
    if (!(model.bias_cap < 1.0))
        throw std::invalid_argument("bounded_experiment: bias cap must be < 1");
    if (!model.quantile || !model.bias)
        throw std::invalid_argument("bounded_experiment: model is missing callables");

    const int nt = par::resolve_threads(threads);
    struct Chunk {
        double sd = 0, sd2 = 0;
        std::int64_t ng = 0;
    };
    std::vector<Chunk> chunks(std::size_t(std::min<std::int64_t>(nt, trials)));

    par::run_chunked(trials, nt, [&](int ci, std::int64_t begin, std::int64_t end) {
        auto& c = chunks[std::size_t(ci)];
        for (std::int64_t t = begin; t < end; ++t) {
            auto g = rng::trial_rng(master_seed, std::uint64_t(t));
            double y1 = -1.0, y2 = -1.0;  // largest, second largest
            for (std::int64_t i = 0; i < n; ++i) {
                const double y = model.quantile(rng::uniform_open(g));
                if (y > y1) {
                    y2 = y1;
                    y1 = y;
                } else if (y > y2) {
                    y2 = y;
                }
            }
            double xmax = -1.0;
            for (std::int64_t i = 0; i < n; ++i)
                xmax = std::max(xmax, model.quantile(rng::uniform_open(g)));
            if (!(model.bias(xmax) < y2)) continue;
            const double diff = xmax - y2;
            ++c.ng;
            c.sd += diff;
            c.sd2 += diff * diff;
        }
    });

    double sd = 0, sd2 = 0;
    std::int64_t ng = 0;
    for (const auto& c : chunks) {
        sd += c.sd;
        sd2 += c.sd2;
        ng += c.ng;
    }
    if (ng == 0) throw InsufficientConditioningEvents(trials);

    EstimatorReport rep;
    rep.trials = trials;
    rep.kind = EstimatorKind::Mean;
    rep.conditioning_trials = ng;
    rep.point_estimate = sd / double(ng);
    const double var = sd2 / double(ng) - rep.point_estimate * rep.point_estimate;
    rep.std_error = std::sqrt(std::max(0.0, var) / double(ng));
    return rep;
}

}  // namespace rooney::simulate
