#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "impulse/json_io.hpp"
#include "impulse/symmetric_solver.hpp"

namespace impulse::cli {

// exit codes shared by all subcommands
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitSolverFailure = 2;
inline constexpr int kExitCertificationFailed = 3;
inline constexpr int kExitNonFinite = 4;

namespace detail {

inline void emit_error(const std::string& message, int code,
                       const std::vector<std::string>& issues = {}) {
    nlohmann::json j{{"error", message}, {"code", code}};
    if (!issues.empty()) j["issues"] = issues;
    std::cerr << j.dump() << "\n";
}

inline void write_output(const nlohmann::json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw SpecError("cannot write file: " + out_path);
    out << j.dump(2) << "\n";
}

inline std::string fmt12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace detail

struct SolveArgs {
    std::string spec_path;
    std::string method = "numeric";  // closed | numeric
    std::string out_path;
    double tol = 1e-9;
    bool allow_inverted_costs = false;
};

inline int cmd_solve(const SolveArgs& a) {
    GameSpec spec;
    try {
        spec = load_game_spec(a.spec_path, {a.allow_inverted_costs});
    } catch (const SpecError& e) {
        detail::emit_error(e.what(), kExitValidation, e.issues());
        return kExitValidation;
    }

    EquilibriumParams p;
    try {
        if (a.method == "closed") {
            if (!spec.symmetric_linear()) {
                detail::emit_error("--method=closed requires a symmetric-linear spec "
                                   "(f1 = x - s1, f2 = s2 - x)",
                                   kExitValidation);
                return kExitValidation;
            }
            p = closed_form_equilibrium(spec).params;
        } else if (a.method == "numeric") {
            SolveOptions opts;
            opts.tol = a.tol;
            p = solve_system(spec, opts);
        } else {
            detail::emit_error("unknown --method: " + a.method, kExitValidation);
            return kExitValidation;
        }
    } catch (const SolverError& e) {
        detail::emit_error(e.what(), kExitSolverFailure);
        return kExitSolverFailure;
    } catch (const std::exception& e) {
        detail::emit_error(e.what(), kExitSolverFailure);
        return kExitSolverFailure;
    }

    try {
        detail::write_output(to_json(p), a.out_path);
    } catch (const std::exception& e) {
        detail::emit_error(e.what(), kExitValidation);
        return kExitValidation;
    }
    return kExitOk;
}

struct VerifyArgs {
    std::string spec_path;
    std::string params_path;
    int grid = 4001;
    double tol = 1e-6;
    std::string out_path;
    bool allow_inverted_costs = false;
};

inline int cmd_verify(const VerifyArgs& a) {
    GameSpec spec;
    EquilibriumParams p;
    try {
        spec = load_game_spec(a.spec_path, {a.allow_inverted_costs});
        p = load_params(a.params_path);
    } catch (const SpecError& e) {
        detail::emit_error(e.what(), kExitValidation, e.issues());
        return kExitValidation;
    } catch (const std::exception& e) {
        detail::emit_error(e.what(), kExitValidation);
        return kExitValidation;
    }

    VerificationReport rep;
    try {
        GridOptions opts;
        opts.points = a.grid;
        opts.tol = a.tol;
        rep = verify_candidate(p, spec, opts);
    } catch (const std::exception& e) {
        detail::emit_error(e.what(), kExitValidation);
        return kExitValidation;
    }
    try {
        detail::write_output(to_json(rep), a.out_path);
    } catch (const std::exception& e) {
        detail::emit_error(e.what(), kExitValidation);
        return kExitValidation;
    }
    if (!rep.passed) {
        detail::emit_error("certification failed (report written)", kExitCertificationFailed);
        return kExitCertificationFailed;
    }
    return kExitOk;
}

struct SimulateArgs {
    std::string spec_path;
    std::string params_path;
    double x0 = 0.0;
    long paths = 10000;
    double dt = 0.01;
    std::uint64_t seed = 20240915;
    double horizon = 0.0;  // 0: choose by the eps rule
    double eps = 1e-3;
    bool force = false;
    bool bridge = false;
    std::string out_path;
    std::string trace_path;
    bool allow_inverted_costs = false;
};

inline int cmd_simulate(const SimulateArgs& a) {
    GameSpec spec;
    EquilibriumParams p;
    try {
        spec = load_game_spec(a.spec_path, {a.allow_inverted_costs});
        p = load_params(a.params_path);
        require_order_condition(p);
    } catch (const SpecError& e) {
        detail::emit_error(e.what(), kExitValidation, e.issues());
        return kExitValidation;
    } catch (const std::exception& e) {
        detail::emit_error(e.what(), kExitValidation);
        return kExitValidation;
    }

    if (!a.force) {
        const VerificationReport rep = verify_candidate(p, spec);
        if (!rep.passed) {
            detail::emit_error("params failed certification; rerun with --force to simulate anyway",
                               kExitCertificationFailed);
            return kExitCertificationFailed;
        }
    }

    const ThresholdStrategy s1 = strategy_for(p, 1);
    const ThresholdStrategy s2 = strategy_for(p, 2);
    SimConfig cfg;
    cfg.x0 = a.x0;
    cfg.dt = a.dt;
    cfg.n_paths = a.paths;
    cfg.seed = a.seed;
    cfg.bridge_correction = a.bridge;
    cfg.horizon = a.horizon > 0.0 ? a.horizon : horizon_for_epsilon(spec, s1, s2, a.eps);

    SimulationEstimate est;
    try {
        est = simulate_paths(spec, s1, s2, cfg);
    } catch (const SimulationError& e) {
        detail::emit_error(e.what(), kExitNonFinite);
        return kExitNonFinite;
    } catch (const std::exception& e) {
        detail::emit_error(e.what(), kExitValidation);
        return kExitValidation;
    }

    const double v1 = make_value(spec, p, 1)(a.x0);
    const double v2 = make_value(spec, p, 2)(a.x0);
    std::cerr << "j1_hat = " << detail::fmt12(est.j1_mean) << "  V1(x0) = " << detail::fmt12(v1)
              << "  |diff| = " << detail::fmt12(std::abs(est.j1_mean - v1))
              << "  (3*se = " << detail::fmt12(3.0 * est.j1_se) << ")\n";
    std::cerr << "j2_hat = " << detail::fmt12(est.j2_mean) << "  V2(x0) = " << detail::fmt12(v2)
              << "  |diff| = " << detail::fmt12(std::abs(est.j2_mean - v2))
              << "  (3*se = " << detail::fmt12(3.0 * est.j2_se) << ")\n";

    nlohmann::json out = to_json(est);
    out["horizon"] = cfg.horizon;
    out["dt"] = cfg.dt;
    out["x0"] = cfg.x0;
    out["v1_at_x0"] = v1;
    out["v2_at_x0"] = v2;
    try {
        detail::write_output(out, a.out_path);
        if (!a.trace_path.empty()) {
            std::ofstream tr(a.trace_path);
            if (!tr) throw SpecError("cannot write file: " + a.trace_path);
            write_trace_csv(tr, simulate_path_record(spec, s1, s2, cfg, 0));
        }
    } catch (const std::exception& e) {
        detail::emit_error(e.what(), kExitValidation);
        return kExitValidation;
    }
    return kExitOk;
}

struct SweepArgs {
    std::string spec_path;
    std::string param = "c";
    double from = 0.0;
    double to = 0.0;
    int points = 50;
    std::string out_path;
    int values = 0;       // number of value-function sample columns per player
    double x_from = 0.0;  // sample range for --values; derived when equal
    double x_to = 0.0;
    bool allow_inverted_costs = false;
};

inline int cmd_sweep(const SweepArgs& a) {
    GameSpec spec;
    try {
        spec = load_game_spec(a.spec_path, {a.allow_inverted_costs});
    } catch (const SpecError& e) {
        detail::emit_error(e.what(), kExitValidation, e.issues());
        return kExitValidation;
    }
    if (a.param != "c") {
        detail::emit_error("unsupported sweep parameter: " + a.param, kExitValidation);
        return kExitValidation;
    }
    if (!(a.from > spec.costs.c_tilde) || !(a.to >= a.from) || a.points < 1) {
        detail::emit_error("sweep range must satisfy c_tilde < from <= to with points >= 1",
                           kExitValidation);
        return kExitValidation;
    }

    std::vector<double> grid(a.points);
    for (int i = 0; i < a.points; ++i)
        grid[i] = a.points == 1
                      ? a.from
                      : a.from + (a.to - a.from) * static_cast<double>(i) / (a.points - 1);

    std::vector<EquilibriumParams> rows(grid.size());
    try {
        if (spec.symmetric_linear()) {
            std::vector<GameSpec> variants(grid.size(), spec);
            for (std::size_t i = 0; i < grid.size(); ++i) variants[i].costs.c = grid[i];
            parallel_for(grid.size(),
                         [&](std::size_t i) { rows[i] = closed_form_equilibrium(variants[i]).params; });
        } else {
            // warm-started continuation along the grid
            std::optional<EquilibriumParams> prev;
            for (std::size_t i = 0; i < grid.size(); ++i) {
                GameSpec variant = spec;
                variant.costs.c = grid[i];
                SolveOptions opts;
                opts.guess = prev;
                rows[i] = solve_system(variant, opts);
                prev = rows[i];
            }
        }
    } catch (const std::exception& e) {
        detail::emit_error(e.what(), kExitSolverFailure);
        return kExitSolverFailure;
    }

    // value-function sample points (optional columns)
    std::vector<double> xs;
    if (a.values > 0) {
        double lo = a.x_from, hi = a.x_to;
        if (!(hi > lo)) {
            const EquilibriumParams& widest = rows.back();
            const double w = widest.xbar2 - widest.xbar1;
            lo = widest.xbar1 - 0.5 * w;
            hi = widest.xbar2 + 0.5 * w;
        }
        xs.resize(a.values);
        for (int i = 0; i < a.values; ++i)
            xs[i] = a.values == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (a.values - 1);
    }

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!a.out_path.empty()) {
        file.open(a.out_path);
        if (!file) {
            detail::emit_error("cannot write file: " + a.out_path, kExitValidation);
            return kExitValidation;
        }
        os = &file;
    }

    *os << "c,xbar1,xbar2,xstar1,xstar2";
    char head[64];
    for (int pl = 1; pl <= 2 && !xs.empty(); ++pl)
        for (double x : xs) {
            std::snprintf(head, sizeof(head), ",V%d@%.6g", pl, x);
            *os << head;
        }
    *os << "\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const EquilibriumParams& p = rows[i];
        *os << detail::fmt12(grid[i]) << ',' << detail::fmt12(p.xbar1) << ','
            << detail::fmt12(p.xbar2) << ',' << detail::fmt12(p.xstar1) << ','
            << detail::fmt12(p.xstar2);
        if (!xs.empty()) {
            GameSpec variant = spec;
            variant.costs.c = grid[i];
            const PiecewiseValue v1 = make_value(variant, p, 1);
            const PiecewiseValue v2 = make_value(variant, p, 2);
            for (double x : xs) *os << ',' << detail::fmt12(v1(x));
            for (double x : xs) *os << ',' << detail::fmt12(v2(x));
        }
        *os << "\n";
    }
    return kExitOk;
}

/// Argument parsing and dispatch for the impulse-game binary.
inline int run(std::vector<std::string> args) {
    CLI::App app{"Nash equilibria of two-player impulse games on the real line"};
    app.require_subcommand(1);

    SolveArgs solve_args;
    CLI::App* solve = app.add_subcommand("solve", "compute an equilibrium from a spec file");
    solve->add_option("spec", solve_args.spec_path, "game spec JSON")->required();
    solve->add_option("--method", solve_args.method, "closed | numeric")
        ->check(CLI::IsMember({"closed", "numeric"}))
        ->capture_default_str();
    solve->add_option("--out", solve_args.out_path, "output JSON path (default stdout)");
    solve->add_option("--tol", solve_args.tol, "residual tolerance")->capture_default_str();
    solve->add_flag("--allow-inverted-costs", solve_args.allow_inverted_costs,
                    "accept c < c_tilde parameter sets");

    VerifyArgs verify_args;
    CLI::App* verify = app.add_subcommand("verify", "certify an equilibrium candidate");
    verify->add_option("spec", verify_args.spec_path, "game spec JSON")->required();
    verify->add_option("params", verify_args.params_path, "equilibrium params JSON")->required();
    verify->add_option("--grid", verify_args.grid, "certification grid points")
        ->capture_default_str();
    verify->add_option("--tol", verify_args.tol, "payoff-scaled tolerance")->capture_default_str();
    verify->add_option("--out", verify_args.out_path, "report JSON path (default stdout)");
    verify->add_flag("--allow-inverted-costs", verify_args.allow_inverted_costs,
                     "accept c < c_tilde parameter sets");

    SimulateArgs sim_args;
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo check of the payoffs");
    simulate->add_option("spec", sim_args.spec_path, "game spec JSON")->required();
    simulate->add_option("params", sim_args.params_path, "equilibrium params JSON")->required();
    simulate->add_option("--x0", sim_args.x0, "initial state")->capture_default_str();
    simulate->add_option("--paths", sim_args.paths, "number of paths")->capture_default_str();
    simulate->add_option("--dt", sim_args.dt, "time step")->capture_default_str();
    simulate->add_option("--seed", sim_args.seed, "RNG seed")->capture_default_str();
    simulate->add_option("--horizon", sim_args.horizon,
                         "truncation time (default: chosen so the tail is below --eps)");
    simulate->add_option("--eps", sim_args.eps, "tail bound for the automatic horizon")
        ->capture_default_str();
    simulate->add_flag("--force", sim_args.force, "skip the certification gate");
    simulate->add_flag("--bridge", sim_args.bridge, "Brownian-bridge crossing correction");
    simulate->add_option("--out", sim_args.out_path, "estimate JSON path (default stdout)");
    simulate->add_option("--trace", sim_args.trace_path, "write path-0 event trace CSV");
    simulate->add_flag("--allow-inverted-costs", sim_args.allow_inverted_costs,
                       "accept c < c_tilde parameter sets");

    SweepArgs sweep_args;
    CLI::App* sweep = app.add_subcommand("sweep", "equilibrium parameters along a cost grid");
    sweep->add_option("spec", sweep_args.spec_path, "game spec JSON")->required();
    sweep->add_option("--param", sweep_args.param, "swept parameter (only c)")
        ->capture_default_str();
    sweep->add_option("--from", sweep_args.from, "grid start (must exceed c_tilde)")->required();
    sweep->add_option("--to", sweep_args.to, "grid end")->required();
    sweep->add_option("--points", sweep_args.points, "grid size")->capture_default_str();
    sweep->add_option("--out", sweep_args.out_path, "CSV path (default stdout)");
    sweep->add_option("--values", sweep_args.values, "number of value-function columns");
    sweep->add_option("--x-from", sweep_args.x_from, "value sample range start");
    sweep->add_option("--x-to", sweep_args.x_to, "value sample range end");
    sweep->add_flag("--allow-inverted-costs", sweep_args.allow_inverted_costs,
                    "accept c < c_tilde parameter sets");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (solve->parsed()) return cmd_solve(solve_args);
    if (verify->parsed()) return cmd_verify(verify_args);
    if (simulate->parsed()) return cmd_simulate(sim_args);
    if (sweep->parsed()) return cmd_sweep(sweep_args);
    return kExitValidation;
}

inline int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args));
}

}  // namespace impulse::cli
