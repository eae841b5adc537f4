#pragma once

// Command-line front end. Every subcommand builds a Report (resolved config +
// results + optional table) and renders it as text, json, or csv; stochastic
// commands are fully determined by --seed.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rooney/decision.hpp"
#include "rooney/errors.hpp"
#include "rooney/estimate.hpp"
#include "rooney/oracle.hpp"
#include "rooney/simulate.hpp"
#include "rooney/surface.hpp"

namespace rooney::cli {

using nlohmann::json;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;
    bool empty() const { return columns.empty(); }
};

struct Report {
    std::string command;
    json config = json::object();
    json results = json::object();
    Table table;
};

namespace detail {

inline std::string scalar_to_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

inline std::string render_text(const Report& r) {
    std::string out = "rooney-lab " + r.command + "\n";
    out += "config:";
    for (auto it = r.config.begin(); it != r.config.end(); ++it)
        out += " " + it.key() + "=" + scalar_to_string(it.value());
    out += "\n";
    for (auto it = r.results.begin(); it != r.results.end(); ++it)
        out += "  " + it.key() + " = " + scalar_to_string(it.value()) + "\n";
    if (!r.table.empty()) {
        out += r.table.name + ":\n";
        std::string header = "  ";
        for (std::size_t i = 0; i < r.table.columns.size(); ++i)
            header += (i ? "  " : "") + r.table.columns[i];
        out += header + "\n";
        for (const auto& row : r.table.rows) {
            out += "  ";
            for (std::size_t i = 0; i < row.size(); ++i)
                out += (i ? "  " : "") + scalar_to_string(row[i]);
            out += "\n";
        }
    }
    return out;
}

inline std::string render_json(const Report& r) {
    json j{{"command", r.command}, {"config", r.config}, {"results", r.results}};
    if (!r.table.empty()) {
        json rows = json::array();
        for (const auto& row : r.table.rows) {
            json obj = json::object();
            for (std::size_t i = 0; i < row.size(); ++i) obj[r.table.columns[i]] = row[i];
            rows.push_back(std::move(obj));
        }
        j["rows"] = std::move(rows);
    }
    return j.dump(2) + "\n";
}

inline std::string render_csv(const Report& r) {
    std::string out = "# rooney-lab " + r.command + "\n";
    for (auto it = r.config.begin(); it != r.config.end(); ++it)
        out += "# " + it.key() + "=" + scalar_to_string(it.value()) + "\n";
    if (!r.table.empty()) {
        std::string header;
        for (std::size_t i = 0; i < r.table.columns.size(); ++i)
            header += (i ? "," : "") + r.table.columns[i];
        out += header + "\n";
        for (const auto& row : r.table.rows) {
            std::string line;
            for (std::size_t i = 0; i < row.size(); ++i)
                line += (i ? "," : "") + scalar_to_string(row[i]);
            out += line + "\n";
        }
    } else {
        out += "key,value\n";
        for (auto it = r.results.begin(); it != r.results.end(); ++it)
            out += it.key() + "," + scalar_to_string(it.value()) + "\n";
    }
    return out;
}

inline std::string render(const Report& r, const std::string& format) {
    if (format == "json") return render_json(r);
    if (format == "csv") return render_csv(r);
    return render_text(r);
}

// temp file + rename, so readers never observe a partial file
inline void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed for '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
    }
}

inline int resolve_threads(const std::optional<int>& cli_value) {
    if (cli_value) return par::resolve_threads(*cli_value);
    if (const char* env = std::getenv("ROONEY_LAB_THREADS")) {
        try {
            return par::resolve_threads(std::stoi(env));
        } catch (const std::exception&) {
            throw std::invalid_argument("ROONEY_LAB_THREADS is not an integer");
        }
    }
    return par::resolve_threads(0);
}

inline const char* verdict_for(double phi) {
    if (phi > 1.0) return "positive expected change";
    if (phi < 1.0) return "negative expected change";
    return "boundary (phi = 1)";
}

inline json beta_json(double beta) {
    return is_infinite_bias(beta) ? json("inf") : json(beta);
}

}  // namespace detail

inline Report cmd_phi(double alpha, double beta, double delta, int k, const std::string& format) {
    Report r;
    r.command = "phi";
    r.config = {{"alpha", alpha}, {"beta", detail::beta_json(beta)}, {"delta", delta},
                {"k", k},         {"format", format}};
    const double pk = phi_k(alpha, beta, delta, k);
    double decider = pk;
    if (k == 2) {
        const double p2 = phi2(alpha, beta, delta);
        r.results["phi2"] = p2;
        decider = p2;
    }
    r.results["phi_k"] = pk;
    r.results["bias_weight"] = rooney::detail::bias_weight(alpha, beta, delta);
    r.results["verdict"] = detail::verdict_for(decider);
    return r;
}

inline Report cmd_threshold(double alpha, double delta, int k, const std::string& format) {
    Report r;
    r.command = "threshold";
    r.config = {{"alpha", alpha}, {"delta", delta}, {"k", k}, {"format", format}};
    const auto th = beta_star(alpha, delta, k);
    const double inf = std::numeric_limits<double>::infinity();
    r.results["phi_limit"] = phi_k(alpha, inf, delta, k);
    switch (th.kind) {
        case BetaThreshold::Kind::Finite:
            r.results["kind"] = "finite";
            r.results["beta_star"] = th.value;
            break;
        case BetaThreshold::Kind::NoThreshold: r.results["kind"] = "no_threshold"; break;
        case BetaThreshold::Kind::MultiCrossing: r.results["kind"] = "multi_crossing"; break;
    }
    return r;
}

inline Report cmd_simulate(const ModelParams& params, std::int64_t trials, std::uint64_t seed,
                           const std::string& estimator, int threads, const std::string& format) {
    Report r;
    r.command = "simulate";
    auto kind = estimator == "mean"             ? simulate::EstimatorKind::Mean
                : estimator == "median-of-means" ? simulate::EstimatorKind::MedianOfMeans
                                                  : simulate::default_estimator_kind(params.delta.delta);
    r.config = {{"alpha", params.alpha},
                {"beta", detail::beta_json(params.beta)},
                {"delta", params.delta.delta},
                {"k", params.k},
                {"n", params.n},
                {"trials", trials},
                {"seed", seed},
                {"estimator", kind == simulate::EstimatorKind::Mean ? "mean" : "median-of-means"},
                {"threads", threads},
                {"format", format}};

    const auto rk = simulate::estimate_rk(params, trials, kind, seed, threads);
    const auto pos = simulate::estimate_prob_positive(params, trials, seed, threads);
    const double bind_rate = double(rk.conditioning_trials) / double(trials);
    const double bind_se = std::sqrt(bind_rate * (1.0 - bind_rate) / double(trials));

    r.table.name = "estimates";
    r.table.columns = {"quantity", "estimate", "std_error", "closed_form"};
    r.table.rows = {
        {"r_k", rk.point_estimate, rk.std_error, phi_k(params)},
        {"prob_positive_given_change", pos.point_estimate, pos.std_error,
         prob_positive_given_change(params)},
        {"bind_rate", bind_rate, bind_se, prob_rule_binds(params)},
    };
    r.results["conditioning_trials"] = rk.conditioning_trials;
    return r;
}

inline Report cmd_mle(const std::string& history_path, double delta, const std::string& format) {
    Report r;
    r.command = "mle";
    r.config = {{"history", history_path}, {"delta", delta}, {"format", format}};
    std::ifstream in(history_path);
    if (!in) throw std::runtime_error("cannot open history file '" + history_path + "'");
    const auto history = estimate::parse_history_csv(in, delta);
    const auto res = estimate::mle_beta(history);
    r.results["records"] = history.records.size();
    r.results["selected_x"] = history.selected_count();
    switch (res.kind) {
        case estimate::MleResult::Kind::Unique:
            r.results["kind"] = "unique";
            r.results["beta_hat"] = res.beta_hat;
            r.results["plugback_residual"] = res.plugback_residual;
            r.results["favors_x"] = res.favors_x;
            break;
        case estimate::MleResult::Kind::NoSelections:
            r.results["kind"] = "degenerate_no_selections";
            r.results["note_degenerate"] = "likelihood increases toward beta = +inf";
            break;
        case estimate::MleResult::Kind::AllSelections:
            r.results["kind"] = "degenerate_all_selections";
            r.results["note_degenerate"] = "likelihood increases toward beta = 0";
            break;
    }
    r.results["note"] =
        "selection probabilities use the large-pool limit; finite pools add a relative "
        "error on the order of (ln n)^2 / n";
    return r;
}

inline Report cmd_demo_nonmono(const std::string& format) {
    Report r;
    r.command = "demo-nonmono";
    r.config = {{"format", format}};
    const std::vector<double> support{1.0, 5.0, 9.0, 13.0};
    const std::vector<double> weights(4, 0.25);
    r.table.name = "filtered conditional expectation E[X | X > beta Y]";
    r.table.columns = {"beta", "value"};
    for (double beta : {1.0, 2.0, 3.0, 4.0})
        r.table.rows.push_back(
            {beta, simulate::cond_exp_filtered_discrete(support, weights, beta)});
    r.results["support"] = support;
    r.results["note"] = "value dips when beta rises from 2 to 3: a stricter filter can "
                        "lower the conditional expectation";
    return r;
}

inline Report cmd_bounded(const std::string& dist, double bias_scale, std::int64_t n,
                          std::int64_t trials, std::uint64_t seed, int threads,
                          const std::string& format) {
    Report r;
    r.command = "bounded";
    r.config = {{"dist", dist},   {"bias_scale", bias_scale}, {"n", n},
                {"trials", trials}, {"seed", seed},           {"threads", threads},
                {"format", format}};
    if (dist != "uniform") throw std::invalid_argument("bounded: unknown dist '" + dist + "'");
    const auto model = simulate::uniform_bounded_model(bias_scale);
    const auto rep = simulate::bounded_experiment(model, n, trials, seed, threads);
    r.results["estimate"] = rep.point_estimate;
    r.results["std_error"] = rep.std_error;
    r.results["ci95_low"] = rep.point_estimate - 1.96 * rep.std_error;
    r.results["ci95_high"] = rep.point_estimate + 1.96 * rep.std_error;
    r.results["conditioning_trials"] = rep.conditioning_trials;
    r.results["trials"] = rep.trials;
    return r;
}

inline Report cmd_surface(const std::vector<double>& alpha_axis,
                          const std::vector<double>& delta_axis, int k, const std::string& out,
                          const std::string& file_format, const std::string& gnuplot_out,
                          int threads, const std::string& format) {
    Report r;
    r.command = "surface";
    r.config = {{"alpha_points", alpha_axis.size()},
                {"delta_points", delta_axis.size()},
                {"k", k},
                {"out", out},
                {"file_format", file_format},
                {"threads", threads},
                {"format", format}};
    if (!gnuplot_out.empty()) r.config["gnuplot"] = gnuplot_out;

    const auto grid = surface::sweep(alpha_axis, delta_axis, k, threads);
    if (file_format == "json")
        detail::atomic_write(out, surface::to_json(grid).dump(2) + "\n");
    else
        detail::atomic_write(out, surface::to_csv(grid));
    if (!gnuplot_out.empty()) detail::atomic_write(gnuplot_out, surface::to_gnuplot(grid));

    std::size_t finite = 0, none = 0, multi = 0;
    for (const auto& c : grid.cells) {
        finite += c.kind == BetaThreshold::Kind::Finite;
        none += c.kind == BetaThreshold::Kind::NoThreshold;
        multi += c.kind == BetaThreshold::Kind::MultiCrossing;
    }
    r.results["cells"] = grid.cells.size();
    r.results["finite_cells"] = finite;
    r.results["no_threshold_cells"] = none;
    r.results["multi_crossing_cells"] = multi;
    r.results["written"] = out;
    return r;
}

inline int run(int argc, const char* const* argv) {
    CLI::App app{"Rooney Rule decision functions, finite-n oracles, and simulation"};
    app.require_subcommand(1);

    std::string format = "text";
    const std::vector<std::string> formats{"text", "json", "csv"};

    // shared option state
    double alpha = 0.5, beta = 2.0, delta = 1.0, bias_scale = 0.9;
    int k = 2;
    std::int64_t n = 500, trials = 100000;
    std::uint64_t seed = 12345;
    std::optional<int> threads_opt;
    std::string history_path, out_path, gnuplot_path, estimator = "auto", dist = "uniform";
    std::string file_format = "csv";
    double amin = 0.01, amax = 1.0, dmin = 0.05, dmax = 4.0;
    int acount = 40, dcount = 40;

    auto add_format = [&](CLI::App* cmd) {
        cmd->add_option("--format", format, "output format")
            ->check(CLI::IsMember(formats))
            ->capture_default_str();
    };
    auto add_threads = [&](CLI::App* cmd) {
        cmd->add_option("--threads", threads_opt,
                        "worker threads (0 = auto; env ROONEY_LAB_THREADS as fallback)");
    };

    auto* c_phi = app.add_subcommand("phi", "evaluate the decision functions phi_k / phi2");
    c_phi->add_option("--alpha", alpha, "pool ratio in (0,1]")->required();
    c_phi->add_option("--beta", beta, "bias multiplier > 1, or inf")->required();
    c_phi->add_option("--delta", delta, "tail parameter > 0")->required();
    c_phi->add_option("--k", k, "finalist count >= 2")->capture_default_str();
    add_format(c_phi);

    auto* c_thr = app.add_subcommand("threshold", "bias threshold beta* with phi_k(beta*) = 1");
    c_thr->add_option("--alpha", alpha)->required();
    c_thr->add_option("--delta", delta)->required();
    c_thr->add_option("--k", k)->capture_default_str();
    add_format(c_thr);

    auto* c_sim = app.add_subcommand("simulate", "Monte Carlo of the selection process");
    c_sim->add_option("--alpha", alpha)->required();
    c_sim->add_option("--beta", beta)->required();
    c_sim->add_option("--delta", delta)->required();
    c_sim->add_option("--k", k)->capture_default_str();
    c_sim->add_option("--n", n, "majority pool size")->capture_default_str();
    c_sim->add_option("--trials", trials)->capture_default_str();
    c_sim->add_option("--seed", seed)->capture_default_str();
    c_sim->add_option("--estimator", estimator, "auto | mean | median-of-means")
        ->check(CLI::IsMember({"auto", "mean", "median-of-means"}))
        ->capture_default_str();
    add_threads(c_sim);
    add_format(c_sim);

    auto* c_mle = app.add_subcommand("mle", "maximum-likelihood bias estimate from a history CSV");
    c_mle->add_option("--history", history_path, "CSV file: year,alpha,n,selected")->required();
    c_mle->add_option("--delta", delta, "tail parameter (assumed known)")->required();
    add_format(c_mle);

    auto* c_sur = app.add_subcommand("surface", "sweep the phi = 1 decision surface to files");
    c_sur->add_option("--alpha-min", amin)->capture_default_str();
    c_sur->add_option("--alpha-max", amax)->capture_default_str();
    c_sur->add_option("--alpha-count", acount)->capture_default_str();
    c_sur->add_option("--delta-min", dmin)->capture_default_str();
    c_sur->add_option("--delta-max", dmax)->capture_default_str();
    c_sur->add_option("--delta-count", dcount)->capture_default_str();
    c_sur->add_option("--k", k)->capture_default_str();
    c_sur->add_option("--out", out_path, "grid file to write")->required();
    c_sur->add_option("--file-format", file_format, "grid file format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    c_sur->add_option("--gnuplot", gnuplot_path, "also write a gnuplot whitespace table");
    add_threads(c_sur);
    add_format(c_sur);

    auto* c_demo = app.add_subcommand("demo-nonmono",
                                      "discrete example where a stricter filter lowers E[X | X > beta Y]");
    add_format(c_demo);

    auto* c_bnd = app.add_subcommand("bounded", "bounded-distribution experiment");
    c_bnd->add_option("--dist", dist, "distribution on [0,1]")
        ->check(CLI::IsMember({"uniform"}))
        ->capture_default_str();
    c_bnd->add_option("--bias-scale", bias_scale, "bias map b(x) = scale * x; requires scale < 1")
        ->capture_default_str();
    c_bnd->add_option("--n", n, "pool size per group")->capture_default_str();
    c_bnd->add_option("--trials", trials)->capture_default_str();
    c_bnd->add_option("--seed", seed)->capture_default_str();
    add_threads(c_bnd);
    add_format(c_bnd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        Report report;
        if (*c_phi) {
            report = cmd_phi(alpha, beta, delta, k, format);
        } else if (*c_thr) {
            report = cmd_threshold(alpha, delta, k, format);
        } else if (*c_sim) {
            const int threads = detail::resolve_threads(threads_opt);
            ModelParams params{alpha, beta, powerlaw::TailExponent{delta}, k, n};
            params.validate();
            report = cmd_simulate(params, trials, seed, estimator, threads, format);
        } else if (*c_mle) {
            report = cmd_mle(history_path, delta, format);
        } else if (*c_sur) {
            const int threads = detail::resolve_threads(threads_opt);
            report = cmd_surface(surface::log_spaced(amin, amax, acount),
                                 surface::linear_spaced(dmin, dmax, dcount), k, out_path,
                                 file_format, gnuplot_path, threads, format);
        } else if (*c_demo) {
            report = cmd_demo_nonmono(format);
        } else if (*c_bnd) {
            const int threads = detail::resolve_threads(threads_opt);
            report = cmd_bounded(dist, bias_scale, n, trials, seed, threads, format);
        }
        std::cout << detail::render(report, format);
        return 0;
    } catch (const InsufficientConditioningEvents& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace rooney::cli
