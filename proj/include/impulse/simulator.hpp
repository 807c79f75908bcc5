#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "impulse/game_model.hpp"
#include "impulse/threading.hpp"

namespace impulse {

struct SimConfig {
    double x0 = 0.0;
    double dt = 0.01;
    double horizon = 0.0;  // truncation time T; must be > dt
    long n_paths = 10000;
    std::uint64_t seed = 20240915;
    bool bridge_correction = false;  // Brownian-bridge intra-step crossing check
};

struct SimulationEstimate {
    double j1_mean = 0.0, j2_mean = 0.0;
    double j1_se = 0.0, j2_se = 0.0;  // NaN when n_paths < 2
    double interventions_p1 = 0.0, interventions_p2 = 0.0;  // mean counts per path
    double truncation_bound = 0.0;  // analytic bound on the discarded tail
    double max_abs_state = 0.0;     // sup over paths and steps of |X|
};

class SimulationError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path_index) {
    return splitmix64(splitmix64(seed) ^ (path_index + 0x632be59bd9b4e019ULL));
}

inline double log_cosh(double z) {
    z = std::abs(z);
    return z + std::log1p(std::exp(-2.0 * z)) - std::log(2.0);
}

inline void check_strategies(const ThresholdStrategy& s1, const ThresholdStrategy& s2) {
    if (s1.player != 1 || s2.player != 2)
        throw std::invalid_argument("simulate: pass player 1's strategy first, player 2's second");
    if (!(s1.threshold < s2.threshold))
        throw std::invalid_argument("simulate: thresholds must satisfy s1.threshold < s2.threshold");
    const bool targets_inside = s1.target > s1.threshold && s1.target < s2.threshold &&
                                s2.target > s1.threshold && s2.target < s2.threshold;
    if (!targets_inside)
        throw std::invalid_argument("simulate: targets must lie strictly between the thresholds");
}

inline void check_config(const SimConfig& cfg) {
    if (!(cfg.dt > 0.0) || !(cfg.dt < cfg.horizon))
        throw std::invalid_argument("simulate: need 0 < dt < horizon");
    if (cfg.n_paths < 1) throw std::invalid_argument("simulate: n_paths must be >= 1");
}

struct PathResult {
    double j1 = 0.0, j2 = 0.0;
    long n1 = 0, n2 = 0;
    double max_abs = 0.0;
    double max_step = 0.0;
    bool finite = true;
};

}  // namespace detail

struct PathEvent {
    double t = 0.0;
    int player = 0;
    double x_before = 0.0;
    double impulse = 0.0;
    double x_after = 0.0;
    double discounted_cost = 0.0;  // discounted cost to the intervening player
};

struct PathRecord {
    ThresholdStrategy s1, s2;
    std::vector<PathEvent> events;
    double max_step_increment = 0.0;
    double post_first_min_x = 0.0, post_first_max_x = 0.0;
    double max_abs_x = 0.0;
    double final_x = 0.0;
    bool any_intervention = false;
};

namespace detail {

inline long step_count(const SimConfig& cfg) {
    return static_cast<long>(std::ceil(cfg.horizon / cfg.dt));
}

// One discretized path. Gaussian increments are exact; barriers are checked at
// step ends (and optionally by a bridge-crossing draw), player 1 first. The
// standard-normal source is a template so calibration runs can couple two
// discretizations through one Brownian refinement.
template <typename ZSource, typename Rng>
inline PathResult run_path_core(const GameSpec& spec, const ThresholdStrategy& s1,
                                const ThresholdStrategy& s2, const SimConfig& cfg,
                                ZSource&& next_z, Rng& rng, PathRecord* record) {
    const double sig_sqdt = spec.sigma * std::sqrt(cfg.dt);
    const long n_steps = step_count(cfg);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    PathResult res;
    double x = cfg.x0;
    double t = 0.0;
    bool seen_intervention = false;
    double post_min = 0.0, post_max = 0.0;

    auto intervene = [&](int player) {
        const ThresholdStrategy& s = player == 1 ? s1 : s2;
        const double delta = s.target - x;
        const double disc = std::exp(-spec.rho * t);
        const double cost = spec.costs.c + spec.costs.lambda * std::abs(delta);
        const double gain = spec.costs.c_tilde + spec.costs.lambda_tilde * std::abs(delta);
        if (player == 1) {
            res.j1 -= disc * cost;
            res.j2 += disc * gain;
            ++res.n1;
        } else {
            res.j2 -= disc * cost;
            res.j1 += disc * gain;
            ++res.n2;
        }
        if (record)
            record->events.push_back({t, player, x, delta, s.target, disc * cost});
        x = s.target;
        if (!seen_intervention) {
            seen_intervention = true;
            post_min = post_max = x;
        }
    };

    auto check_barriers = [&](double x_begin, bool allow_bridge) {
        // draw count per step is state-independent, so common-random-number
        // pairing across strategy variants stays aligned
        double u1 = 0.0, u2 = 0.0;
        const bool bridging = cfg.bridge_correction && allow_bridge;
        if (bridging) { u1 = unif(rng); u2 = unif(rng); }
        if (x <= s1.threshold) { intervene(1); return; }
        if (x >= s2.threshold) { intervene(2); return; }
        if (bridging) {
            const double var = spec.sigma * spec.sigma * cfg.dt;
            if (x_begin > s1.threshold) {
                const double p_cross =
                    std::exp(-2.0 * (x_begin - s1.threshold) * (x - s1.threshold) / var);
                if (u1 < p_cross) { intervene(1); return; }
            }
            if (x_begin < s2.threshold) {
                const double p_cross =
                    std::exp(-2.0 * (s2.threshold - x_begin) * (s2.threshold - x) / var);
                if (u2 < p_cross) intervene(2);
            }
        }
    };

    res.max_abs = std::abs(x);
    check_barriers(x, false);  // state may start inside an intervention region
    res.max_abs = std::max(res.max_abs, std::abs(x));

    for (long k = 0; k < n_steps; ++k) {
        const double disc = std::exp(-spec.rho * t);
        res.j1 += disc * spec.f1(x) * cfg.dt;
        res.j2 += disc * spec.f2(x) * cfg.dt;

        const double inc = sig_sqdt * next_z();
        const double x_begin = x;
        x += inc;
        t += cfg.dt;
        res.max_step = std::max(res.max_step, std::abs(inc));
        if (seen_intervention) {
            post_min = std::min(post_min, x);
            post_max = std::max(post_max, x);
        }
        res.max_abs = std::max(res.max_abs, std::abs(x));

        check_barriers(x_begin, true);
        if (seen_intervention) {
            post_min = std::min(post_min, x);
            post_max = std::max(post_max, x);
        }
        if (!std::isfinite(res.j1) || !std::isfinite(res.j2) || !std::isfinite(x)) {
            res.finite = false;
            return res;
        }
    }

    if (record) {
        record->max_step_increment = res.max_step;
        record->any_intervention = seen_intervention;
        record->post_first_min_x = post_min;
        record->post_first_max_x = post_max;
        record->max_abs_x = res.max_abs;
        record->final_x = x;
    }
    return res;
}

template <typename Rng>
inline PathResult run_path(const GameSpec& spec, const ThresholdStrategy& s1,
                           const ThresholdStrategy& s2, const SimConfig& cfg, Rng& rng,
                           PathRecord* record) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    return run_path_core(spec, s1, s2, cfg, [&] { return gauss(rng); }, rng, record);
}

}  // namespace detail

/// Bound C such that the discounted payoff contribution after time T is at
/// most e^{-rho T} * C / rho: running payoff sup plus a geometric-series bound
/// on the discounted intervention costs restarting from the targets.
inline double tail_constant(const GameSpec& spec, const ThresholdStrategy& s1,
                            const ThresholdStrategy& s2) {
    detail::check_strategies(s1, s2);
    const double width = s2.threshold - s1.threshold;
    const double lo = s1.threshold - 2.0 * width, hi = s2.threshold + 2.0 * width;
    const double max_f = std::max(spec.f1.max_abs_on(lo, hi), spec.f2.max_abs_on(lo, hi));

    const double theta = spec.theta();
    const double mid = 0.5 * (s1.threshold + s2.threshold);
    const double half = 0.5 * width;
    const double jump = std::max(s1.target - s1.threshold, s2.threshold - s2.target);
    // E_x[e^{-rho mu}] = cosh(theta (x - mid)) / cosh(theta half) for the exit
    // time mu of (threshold1, threshold2); evaluated in log space
    double q = 0.0;
    for (double start : {s1.target, s2.target})
        q = std::max(q, std::exp(detail::log_cosh(theta * (start - mid)) -
                                 detail::log_cosh(theta * half)));
    q = std::min(q, 1.0 - 1e-12);
    const double per_intervention = spec.costs.c + spec.costs.lambda * jump;
    return max_f + spec.rho * per_intervention * q / (1.0 - q);
}

/// T such that the discarded tail is below eps payoff units.
inline double horizon_for_epsilon(const GameSpec& spec, const ThresholdStrategy& s1,
                                  const ThresholdStrategy& s2, double eps = 1e-3) {
    if (!(eps > 0.0)) throw std::invalid_argument("horizon_for_epsilon: eps must be positive");
    const double c_tail = tail_constant(spec, s1, s2);
    const double ratio = c_tail / (spec.rho * eps);
    return ratio > 1.0 ? std::log(ratio) / spec.rho : 1.0;
}

/// Per-path discounted payoffs of one player; paths are seeded per index, so
/// two calls with the same cfg share Brownian increments path by path.
inline std::vector<double> simulate_payoffs(const GameSpec& spec, const ThresholdStrategy& s1,
                                            const ThresholdStrategy& s2, const SimConfig& cfg,
                                            int player) {
    detail::check_strategies(s1, s2);
    detail::check_config(cfg);
    if (player != 1 && player != 2) throw std::invalid_argument("player must be 1 or 2");
    std::vector<double> out(static_cast<std::size_t>(cfg.n_paths));
    std::vector<char> ok(static_cast<std::size_t>(cfg.n_paths), 1);
    parallel_for(out.size(), [&](std::size_t i) {
        std::mt19937_64 rng(detail::path_seed(cfg.seed, i));
        const detail::PathResult r = detail::run_path(spec, s1, s2, cfg, rng, nullptr);
        ok[i] = r.finite ? 1 : 0;
        out[i] = player == 1 ? r.j1 : r.j2;
    });
    for (std::size_t i = 0; i < ok.size(); ++i)
        if (!ok[i])
            throw SimulationError("simulate: non-finite payoff accumulation on path " +
                                  std::to_string(i));
    return out;
}

/// Monte Carlo estimate of both players' payoffs under threshold strategies.
inline SimulationEstimate simulate_paths(const GameSpec& spec, const ThresholdStrategy& s1,
                                         const ThresholdStrategy& s2, const SimConfig& cfg) {
    detail::check_strategies(s1, s2);
    detail::check_config(cfg);
    const std::size_t n = static_cast<std::size_t>(cfg.n_paths);
    std::vector<detail::PathResult> results(n);
    parallel_for(n, [&](std::size_t i) {
        std::mt19937_64 rng(detail::path_seed(cfg.seed, i));
        results[i] = detail::run_path(spec, s1, s2, cfg, rng, nullptr);
    });

    SimulationEstimate est;
    // fixed-order reduction keeps the estimate bit-identical across schedules
    for (std::size_t i = 0; i < n; ++i) {
        const detail::PathResult& r = results[i];
        if (!r.finite)
            throw SimulationError("simulate: non-finite payoff accumulation on path " +
                                  std::to_string(i));
        est.j1_mean += r.j1;
        est.j2_mean += r.j2;
        est.interventions_p1 += static_cast<double>(r.n1);
        est.interventions_p2 += static_cast<double>(r.n2);
        est.max_abs_state = std::max(est.max_abs_state, r.max_abs);
    }
    const double dn = static_cast<double>(n);
    est.j1_mean /= dn;
    est.j2_mean /= dn;
    est.interventions_p1 /= dn;
    est.interventions_p2 /= dn;

    if (n >= 2) {
        double v1 = 0.0, v2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            v1 += (results[i].j1 - est.j1_mean) * (results[i].j1 - est.j1_mean);
            v2 += (results[i].j2 - est.j2_mean) * (results[i].j2 - est.j2_mean);
        }
        est.j1_se = std::sqrt(v1 / (dn * (dn - 1.0)));
        est.j2_se = std::sqrt(v2 / (dn * (dn - 1.0)));
    } else {
        est.j1_se = est.j2_se = std::numeric_limits<double>::quiet_NaN();
    }

    est.truncation_bound =
        std::exp(-spec.rho * cfg.horizon) * tail_constant(spec, s1, s2) / spec.rho;
    return est;
}

struct DeviationGap {
    ThresholdStrategy deviation;
    double j_base = 0.0;   // deviating player's payoff under the candidate pair
    double j_dev = 0.0;    // same player's payoff after the unilateral deviation
    double gap = 0.0;      // j_dev - j_base
    double gap_se = 0.0;   // paired standard error under common random numbers
};

/// Estimates the payoff change from unilateral deviations of one player,
/// pairing paths through common random numbers.
inline std::vector<DeviationGap> nash_deviation_test(const GameSpec& spec,
                                                     const ThresholdStrategy& eq1,
                                                     const ThresholdStrategy& eq2,
                                                     const std::vector<ThresholdStrategy>& deviations,
                                                     const SimConfig& cfg) {
    detail::check_strategies(eq1, eq2);
    if (deviations.empty()) return {};
    const int who = deviations.front().player;
    for (const ThresholdStrategy& d : deviations) {
        if (d.player != who)
            throw std::invalid_argument("nash_deviation_test: deviations must perturb one player");
        const ThresholdStrategy& a = who == 1 ? d : eq1;
        const ThresholdStrategy& b = who == 1 ? eq2 : d;
        detail::check_strategies(a, b);  // rejects targets outside the joint interval
    }

    const std::vector<double> base = simulate_payoffs(spec, eq1, eq2, cfg, who);
    double base_mean = 0.0;
    for (double v : base) base_mean += v;
    base_mean /= static_cast<double>(base.size());

    std::vector<DeviationGap> out;
    out.reserve(deviations.size());
    for (const ThresholdStrategy& d : deviations) {
        const ThresholdStrategy& a = who == 1 ? d : eq1;
        const ThresholdStrategy& b = who == 1 ? eq2 : d;
        const std::vector<double> dev = simulate_payoffs(spec, a, b, cfg, who);

        DeviationGap g;
        g.deviation = d;
        g.j_base = base_mean;
        double mean = 0.0;
        for (std::size_t i = 0; i < dev.size(); ++i) mean += dev[i] - base[i];
        mean /= static_cast<double>(dev.size());
        g.gap = mean;
        g.j_dev = base_mean + mean;
        if (dev.size() >= 2) {
            double var = 0.0;
            for (std::size_t i = 0; i < dev.size(); ++i) {
                const double diff = dev[i] - base[i] - mean;
                var += diff * diff;
            }
            g.gap_se = std::sqrt(var / (static_cast<double>(dev.size()) *
                                        (static_cast<double>(dev.size()) - 1.0)));
        } else {
            g.gap_se = std::numeric_limits<double>::quiet_NaN();
        }
        out.push_back(g);
    }
    return out;
}

/// Full event record of one path (for diagnostics and trace export).
inline PathRecord simulate_path_record(const GameSpec& spec, const ThresholdStrategy& s1,
                                       const ThresholdStrategy& s2, const SimConfig& cfg,
                                       std::uint64_t path_index = 0) {
    detail::check_strategies(s1, s2);
    detail::check_config(cfg);
    PathRecord rec;
    rec.s1 = s1;
    rec.s2 = s2;
    std::mt19937_64 rng(detail::path_seed(cfg.seed, path_index));
    const detail::PathResult r = detail::run_path(spec, s1, s2, cfg, rng, &rec);
    if (!r.finite) throw SimulationError("simulate: non-finite accumulation in recorded path");
    return rec;
}

struct PathDiagnostics {
    bool landings_exact = true;   // every jump ends bit-exactly on the target
    bool impulse_signs_ok = true; // player 1 jumps up, player 2 jumps down
    bool contained = true;        // post-first-intervention range within thresholds +- overshoot
    double overshoot = 0.0;       // observed exceedance beyond the thresholds
    double overshoot_allowance = 0.0;  // max single-step increment of the path
    long n_interventions = 0;
};

inline PathDiagnostics path_diagnostics(const PathRecord& rec) {
    PathDiagnostics d;
    d.n_interventions = static_cast<long>(rec.events.size());
    d.overshoot_allowance = rec.max_step_increment;
    for (const PathEvent& e : rec.events) {
        const ThresholdStrategy& s = e.player == 1 ? rec.s1 : rec.s2;
        if (e.x_after != s.target) d.landings_exact = false;
        if (e.player == 1 && !(e.impulse > 0.0)) d.impulse_signs_ok = false;
        if (e.player == 2 && !(e.impulse < 0.0)) d.impulse_signs_ok = false;
    }
    if (rec.any_intervention) {
        d.overshoot = std::max({0.0, rec.s1.threshold - rec.post_first_min_x,
                                rec.post_first_max_x - rec.s2.threshold});
        d.contained = d.overshoot <= d.overshoot_allowance;
    }
    return d;
}

/// Event trace, one row per intervention: t,x,player,impulse,discounted_cost.
inline void write_trace_csv(std::ostream& os, const PathRecord& rec) {
    os << "t,x,player,impulse,discounted_cost\n";
    char line[160];
    for (const PathEvent& e : rec.events) {
        std::snprintf(line, sizeof(line), "%.12g,%.12g,%d,%.12g,%.12g\n", e.t, e.x_before,
                      e.player, e.impulse, e.discounted_cost);
        os << line;
    }
}

/// Richardson-style calibration of the first-passage bias constant kappa in
/// the allowance 3*se + kappa*sqrt(dt). Runs dt and dt/2 on the same Brownian
/// paths (the coarse increments are pairwise sums of the fine ones), so the
/// estimated drift is not drowned by independent sampling noise; the paired
/// comparison noise still inflates the constant by 3 standard errors.
inline double richardson_kappa(const GameSpec& spec, const ThresholdStrategy& s1,
                               const ThresholdStrategy& s2, const SimConfig& cfg) {
    detail::check_strategies(s1, s2);
    detail::check_config(cfg);
    SimConfig coarse = cfg;
    coarse.bridge_correction = false;
    coarse.horizon = detail::step_count(cfg) * cfg.dt;  // align the two grids
    SimConfig fine = coarse;
    fine.dt = 0.5 * coarse.dt;

    const std::size_t n = static_cast<std::size_t>(cfg.n_paths);
    const std::size_t n_fine = static_cast<std::size_t>(detail::step_count(fine));
    const std::size_t n_coarse = static_cast<std::size_t>(detail::step_count(coarse));
    const std::size_t draws = std::max(n_fine, 2 * n_coarse) + 2;

    std::vector<double> d1(n), d2(n);
    parallel_for(n, [&](std::size_t i) {
        std::mt19937_64 rng(detail::path_seed(cfg.seed, i));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<double> z(draws);
        for (double& v : z) v = gauss(rng);

        std::mt19937_64 unused(0);
        std::size_t fine_idx = 0;
        const detail::PathResult rf = detail::run_path_core(
            spec, s1, s2, fine, [&] { return z[fine_idx++]; }, unused, nullptr);
        std::size_t coarse_idx = 0;
        const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        const detail::PathResult rc = detail::run_path_core(
            spec, s1, s2, coarse,
            [&] {
                const double a = z[coarse_idx], b = z[coarse_idx + 1];
                coarse_idx += 2;
                return (a + b) * inv_sqrt2;
            },
            unused, nullptr);
        d1[i] = rc.j1 - rf.j1;
        d2[i] = rc.j2 - rf.j2;
    });

    const double denom = std::sqrt(coarse.dt) * (1.0 - 1.0 / std::sqrt(2.0));
    double kappa = 0.0;
    for (const std::vector<double>* d : {&d1, &d2}) {
        double mean = 0.0;
        for (double v : *d) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : *d) var += (v - mean) * (v - mean);
        const double se =
            n >= 2 ? std::sqrt(var / (static_cast<double>(n) * (static_cast<double>(n) - 1.0)))
                   : 0.0;
        kappa = std::max(kappa, (std::abs(mean) + 3.0 * se) / denom);
    }
    return kappa;
}

}  // namespace impulse
