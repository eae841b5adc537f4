#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "rooney/decision.hpp"
#include "rooney/oracle.hpp"
#include "rooney/rng.hpp"
#include "rooney/simulate.hpp"

using Catch::Approx;
using rooney::ModelParams;
using rooney::powerlaw::TailExponent;
namespace sim = rooney::simulate;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ModelParams make_params(double alpha, double beta, double delta, int k, std::int64_t n) {
    return ModelParams{alpha, beta, TailExponent{delta}, k, n};
}

// reference implementation: full sort of the union, stable tie-breaking toward
// majority candidates, literal swap rule
sim::TrialOutcome brute_force_trial(const ModelParams& p, int ell, std::uint64_t seed,
                                    std::int64_t index) {
    const std::int64_t mx = rooney::minority_pool_size(p.alpha, p.n);
    auto g = rooney::rng::trial_rng(seed, std::uint64_t(index));
    std::vector<double> ys, xs;
    for (std::int64_t i = 0; i < p.n; ++i)
        ys.push_back(rooney::powerlaw::sample(p.delta, rooney::rng::uniform_open(g)));
    for (std::int64_t i = 0; i < mx; ++i)
        xs.push_back(rooney::powerlaw::sample(p.delta, rooney::rng::uniform_open(g)));

    struct Entry {
        double score;
        sim::Candidate cand;
    };
    std::vector<Entry> all;
    for (double y : ys) all.push_back({y, {y, false}});
    for (double x : xs)
        all.push_back({rooney::is_infinite_bias(p.beta) ? 0.0 : x / p.beta, {x, true}});
    std::stable_sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.cand.from_x != b.cand.from_x) return !a.cand.from_x;  // ties favor majority
        // within a group (possible under infinite bias, where every minority
        // score is 0) rank by potential, the finite-bias limit order
        return a.cand.potential > b.cand.potential;
    });

    sim::TrialOutcome out;
    for (int i = 0; i < p.k; ++i) out.finalists_unconstrained.push_back(all[i].cand);
    int x_in = 0;
    for (const auto& c : out.finalists_unconstrained) x_in += c.from_x;
    out.rule_bound = x_in < ell;
    out.finalists_ruled = out.finalists_unconstrained;
    if (out.rule_bound) {
        std::vector<double> excluded_x;
        for (std::size_t i = std::size_t(p.k); i < all.size(); ++i)
            if (all[i].cand.from_x) excluded_x.push_back(all[i].cand.potential);
        int need = ell - x_in;
        for (int j = 0; need > 0; --need, ++j) {
            for (auto it = out.finalists_ruled.rbegin(); it != out.finalists_ruled.rend(); ++it)
                if (!it->from_x) {
                    out.finalists_ruled.erase(std::next(it).base());
                    break;
                }
            out.finalists_ruled.push_back({excluded_x[std::size_t(j)], true});
        }
    }
    for (const auto& c : out.finalists_unconstrained) out.utility_unconstrained += c.potential;
    for (const auto& c : out.finalists_ruled) out.utility_ruled += c.potential;
    return out;
}

}  // namespace

TEST_CASE("run_trial is deterministic in (seed, index)", "[simulate]") {
    const auto p = make_params(0.5, 2.0, 1.0, 3, 40);
    const auto a = sim::run_trial(p, 1, 123, 7);
    const auto b = sim::run_trial(p, 1, 123, 7);
    CHECK(a == b);
    CHECK(sim::run_trial(p, 1, 123, 8) != a);
    CHECK(sim::run_trial(p, 1, 124, 7) != a);
}

TEST_CASE("run_trial matches a full-sort reference implementation", "[simulate]") {
    std::mt19937_64 g(2024);
    for (int rep = 0; rep < 200; ++rep) {
        const double alpha = 0.1 + 0.9 * double(g() % 1000) / 1000.0;
        const double beta = (rep % 5 == 0) ? kInf : 1.0 + 4.0 * double(g() % 1000) / 1000.0;
        const double delta = 0.4 + 2.0 * double(g() % 1000) / 1000.0;
        const std::int64_t n = 5 + std::int64_t(g() % 40);
        const int k = 2 + int(g() % 3);
        if (k > n) continue;
        const std::int64_t mx = rooney::minority_pool_size(alpha, n);
        const int ell = 1 + int(g() % std::uint64_t(std::min<std::int64_t>(k, mx)));
        const auto p = make_params(alpha, beta, delta, k, n);

        const auto got = sim::run_trial(p, ell, 555, rep);
        const auto want = brute_force_trial(p, ell, 555, rep);
        REQUIRE(got == want);

        // structural invariants
        CHECK(got.finalists_unconstrained.size() == std::size_t(k));
        CHECK(got.finalists_ruled.size() == std::size_t(k));
        CHECK(got.rule_bound == (got.finalists_ruled != got.finalists_unconstrained));
        int x_ruled = 0;
        for (const auto& c : got.finalists_ruled) x_ruled += c.from_x;
        CHECK(x_ruled >= ell);
        double u = 0.0, v = 0.0;
        for (const auto& c : got.finalists_unconstrained) u += c.potential;
        for (const auto& c : got.finalists_ruled) v += c.potential;
        CHECK(got.utility_unconstrained == Approx(u));
        CHECK(got.utility_ruled == Approx(v));
        if (!got.rule_bound) CHECK(got.utility_ruled == got.utility_unconstrained);
    }
}

TEST_CASE("bound trials swap exactly one finalist under the single-slot rule", "[simulate]") {
    const auto p = make_params(0.4, 3.0, 1.0, 3, 30);
    int bound_seen = 0;
    for (int t = 0; t < 300; ++t) {
        const auto out = sim::run_trial(p, 1, 42, t);
        if (!out.rule_bound) continue;
        ++bound_seen;
        // all unconstrained finalists are majority; ruled keeps the top k-1 and
        // appends the best minority candidate
        for (const auto& c : out.finalists_unconstrained) CHECK_FALSE(c.from_x);
        for (int i = 0; i + 1 < p.k; ++i)
            CHECK(out.finalists_ruled[std::size_t(i)] ==
                  out.finalists_unconstrained[std::size_t(i)]);
        CHECK(out.finalists_ruled.back().from_x);
    }
    CHECK(bound_seen > 0);
}

TEST_CASE("infinite bias picks top majority candidates plus the top minority one",
          "[simulate]") {
    const auto p = make_params(0.5, kInf, 1.0, 2, 10);
    for (int t = 0; t < 50; ++t) {
        const auto out = sim::run_trial(p, 1, 7, t);
        CHECK(out.rule_bound);  // no minority candidate can rank in the top k
        CHECK_FALSE(out.finalists_unconstrained[0].from_x);
        CHECK_FALSE(out.finalists_unconstrained[1].from_x);
        CHECK(out.finalists_unconstrained[0].potential >=
              out.finalists_unconstrained[1].potential);
        CHECK_FALSE(out.finalists_ruled[0].from_x);
        CHECK(out.finalists_ruled[0].potential == out.finalists_unconstrained[0].potential);
        CHECK(out.finalists_ruled[1].from_x);
    }
}

TEST_CASE("near-unit bias binds exactly when the true top k has no minority candidate",
          "[simulate]") {
    const auto p = make_params(1.0, 1.0 + 1e-12, 1.0, 3, 20);
    int with_x = 0;
    for (int t = 0; t < 200; ++t) {
        const auto out = sim::run_trial(p, 1, 99, t);
        bool x_in_top = false;
        for (const auto& c : out.finalists_unconstrained) x_in_top |= c.from_x;
        CHECK(out.rule_bound == !x_in_top);
        with_x += x_in_top;
    }
    CHECK(with_x > 0);
}

TEST_CASE("trial_statistics agrees with the full trial", "[simulate]") {
    std::mt19937_64 g(5);
    for (int rep = 0; rep < 100; ++rep) {
        const double alpha = 0.2 + 0.8 * double(g() % 1000) / 1000.0;
        const double beta = (rep % 4 == 0) ? kInf : 1.5 + 3.0 * double(g() % 1000) / 1000.0;
        const auto p = make_params(alpha, beta, 1.0, 2 + int(g() % 3), 10 + std::int64_t(g() % 30));
        const auto full = sim::run_trial(p, 1, 321, rep);
        const auto st = sim::trial_statistics(p, 321, rep);
        CHECK(st.rule_bound == full.rule_bound);
        if (full.rule_bound) {
            CHECK(st.x_top == full.finalists_ruled.back().potential);
            CHECK(st.y_kth == full.finalists_unconstrained.back().potential);
        }
    }
}

TEST_CASE("run_trial rejects malformed pool shapes", "[simulate]") {
    CHECK_THROWS_AS(sim::run_trial(make_params(0.5, 2.0, 1.0, 3, 2), 1, 0, 0),
                    std::invalid_argument);  // k > n
    CHECK_THROWS_AS(sim::run_trial(make_params(0.01, 2.0, 1.0, 3, 100), 2, 0, 0),
                    std::invalid_argument);  // minority pool of 1 < ell
    CHECK_THROWS_AS(sim::run_trial(make_params(0.5, 2.0, 1.0, 3, 100), 0, 0, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(sim::run_trial(make_params(0.5, 2.0, 1.0, 3, 100), 4, 0, 0),
                    std::invalid_argument);
}

TEST_CASE("estimate_rk tracks the exact finite-n ratio", "[simulate]") {
    const auto p = make_params(0.5, 2.0, 2.0, 2, 200);
    const auto rep = sim::estimate_rk(p, 200000, sim::EstimatorKind::MedianOfMeans, 2026);
    const double exact = rooney::oracle::exact_rk(200, 2, 0.5, 2.0, 2.0);
    CHECK(std::abs(rep.point_estimate / exact - 1.0) < 0.02);
    CHECK(rep.conditioning_trials > 0);
    CHECK(rep.std_error > 0.0);
    CHECK(rep.kind == sim::EstimatorKind::MedianOfMeans);
}

TEST_CASE("estimate_rk under infinite bias approaches the closed-form ratio", "[simulate]") {
    const auto p = make_params(1.0, kInf, 2.0, 2, 1000);
    const auto rep = sim::estimate_rk(p, 40000, sim::EstimatorKind::Mean, 11);
    CHECK(rep.conditioning_trials == rep.trials);  // the rule always binds
    CHECK(std::abs(rep.point_estimate / 1.5 - 1.0) < 0.02);
}

TEST_CASE("estimate_rk stays below one without bias", "[simulate]") {
    const auto p = make_params(0.5, 1.0 + 1e-12, 1.0, 2, 100);
    const auto rep = sim::estimate_rk(p, 100000, sim::EstimatorKind::MedianOfMeans, 8);
    CHECK(rep.point_estimate < 1.0);
}

TEST_CASE("estimate_prob_positive matches its closed form", "[simulate]") {
    // infinite bias at alpha = 2^{1/k} - 1 sits exactly on the coin-flip boundary
    const double a = std::sqrt(2.0) - 1.0;
    const auto p = make_params(a, kInf, 1.0, 2, 500);
    const auto rep = sim::estimate_prob_positive(p, 200000, 2027);
    CHECK(std::abs(rep.point_estimate - 0.5) < 3.0 * rep.std_error + 2e-3);

    const auto q = make_params(0.5, 2.0, 1.0, 2, 500);
    const auto rep2 = sim::estimate_prob_positive(q, 200000, 2028);
    const double closed = rooney::prob_positive_given_change(0.5, 2.0, 1.0, 2);
    CHECK(std::abs(rep2.point_estimate - closed) < 3.0 * rep2.std_error + 2e-3);
}

TEST_CASE("empirical bind rate matches the finite-n oracle", "[simulate]") {
    const auto p = make_params(0.5, 2.0, 1.0, 2, 500);
    const auto rep = sim::estimate_rk(p, 200000, sim::EstimatorKind::MedianOfMeans, 33);
    const double bind = double(rep.conditioning_trials) / double(rep.trials);
    const double exact = rooney::oracle::exact_prob_binds(500, 2, 0.5, 2.0, 1.0).value;
    const double se = std::sqrt(exact * (1.0 - exact) / double(rep.trials));
    CHECK(std::abs(bind - exact) < 3.0 * se);
}

TEST_CASE("estimator sign agrees with the decision function away from the boundary",
          "[simulate]") {
    for (double alpha : {0.3, 1.0})
        for (double beta : {2.0, 30.0}) {
            const double phi = rooney::phi_k(alpha, beta, 2.0, 2);
            if (std::abs(phi - 1.0) <= 0.1) continue;
            const auto p = make_params(alpha, beta, 2.0, 2, 500);
            const auto rep = sim::estimate_rk(p, 100000, sim::EstimatorKind::Mean, 616);
            CHECK((rep.point_estimate > 1.0) == (phi > 1.0));
        }
}

TEST_CASE("conditioning failures surface as typed errors", "[simulate]") {
    const auto p = make_params(1.0, 1.0 + 1e-12, 1.0, 20, 40);
    CHECK_THROWS_AS(sim::estimate_rk(p, 1000, sim::EstimatorKind::Mean, 9),
                    rooney::InsufficientConditioningEvents);
    CHECK_THROWS_AS(sim::estimate_rk(make_params(0.5, 2.0, 1.0, 2, 100), 999,
                                     sim::EstimatorKind::Mean, 9),
                    std::invalid_argument);
}

TEST_CASE("thread count does not change per-trial results and barely moves aggregates",
          "[simulate]") {
    const auto p = make_params(0.5, 2.0, 2.0, 2, 100);
    CHECK(sim::run_trial(p, 1, 5, 17) == sim::run_trial(p, 1, 5, 17));
    const auto one = sim::estimate_rk(p, 20000, sim::EstimatorKind::Mean, 5, 1);
    const auto three = sim::estimate_rk(p, 20000, sim::EstimatorKind::Mean, 5, 3);
    CHECK(one.conditioning_trials == three.conditioning_trials);
    CHECK(one.point_estimate == Approx(three.point_estimate).epsilon(1e-9));
    const auto again = sim::estimate_rk(p, 20000, sim::EstimatorKind::Mean, 5, 3);
    CHECK(three.point_estimate == again.point_estimate);  // same thread count: bit-identical
}

TEST_CASE("discrete filtered expectation reproduces the dip", "[simulate]") {
    const std::vector<double> support{1.0, 5.0, 9.0, 13.0};
    const std::vector<double> w(4, 0.25);
    CHECK(sim::cond_exp_filtered_discrete(support, w, 2.0) == 10.0);
    CHECK(sim::cond_exp_filtered_discrete(support, w, 3.0) == 9.0);
    CHECK(sim::cond_exp_filtered_discrete(support, w, 1.0) == Approx(62.0 / 6.0));

    const std::vector<double> atom{5.0};
    const std::vector<double> aw{1.0};
    CHECK(sim::cond_exp_filtered_discrete(atom, aw, 0.5) == 5.0);

    CHECK_THROWS_AS(sim::cond_exp_filtered_discrete(support, w, 100.0),
                    rooney::EmptyConditioningEvent);
    const std::vector<double> bad_w{0.5, 0.2, 0.1, 0.1};
    CHECK_THROWS_AS(sim::cond_exp_filtered_discrete(support, bad_w, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(sim::cond_exp_filtered_discrete({}, {}, 2.0), std::invalid_argument);
}

TEST_CASE("bounded experiment: zero bias gives the uniform order-statistic gap", "[simulate]") {
    const auto model = sim::uniform_bounded_model(0.0);
    const auto rep = sim::bounded_experiment(model, 10, 200000, 404);
    CHECK(rep.conditioning_trials == rep.trials);  // with b = 0 the event is certain
    CHECK(std::abs(rep.point_estimate - 1.0 / 11.0) < 4.0 * rep.std_error);
}

TEST_CASE("bounded experiment: strong multiplicative bias still yields a positive gap",
          "[simulate]") {
    const auto model = sim::uniform_bounded_model(0.9);
    const auto rep = sim::bounded_experiment(model, 200, 100000, 505);
    CHECK(rep.point_estimate - 1.96 * rep.std_error > 0.0);
    CHECK(rep.conditioning_trials > 0);
}

TEST_CASE("bounded experiment validates its model and shape", "[simulate]") {
    CHECK_THROWS_AS(sim::uniform_bounded_model(1.0), std::invalid_argument);
    CHECK_THROWS_AS(sim::uniform_bounded_model(-0.1), std::invalid_argument);
    const auto model = sim::uniform_bounded_model(0.5);
    CHECK_THROWS_AS(sim::bounded_experiment(model, 1, 2000, 1), std::invalid_argument);
    CHECK_THROWS_AS(sim::bounded_experiment(model, 10, 10, 1), std::invalid_argument);
}

TEST_CASE("default estimator kind switches at the infinite-variance boundary", "[simulate]") {
    CHECK(sim::default_estimator_kind(0.5) == sim::EstimatorKind::MedianOfMeans);
    CHECK(sim::default_estimator_kind(1.0) == sim::EstimatorKind::MedianOfMeans);
    CHECK(sim::default_estimator_kind(2.0) == sim::EstimatorKind::Mean);
}
