#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "impulse/game_model.hpp"
#include "impulse/symmetric_solver.hpp"
#include "impulse/threading.hpp"

namespace impulse {

/// Residuals of the eight smooth-pasting conditions, in order:
/// phi1'(x*1)-lambda, phi1'(xbar1)-lambda, C0-paste of V1 at xbar1 and xbar2,
/// phi2'(x*2)+lambda, phi2'(xbar2)+lambda, C0-paste of V2 at xbar1 and xbar2.
struct PastingResidual {
    std::array<double, 8> r{};
    double max_abs() const {
        double m = 0.0;
        for (double v : r) m = std::max(m, std::abs(v));
        return m;
    }
};

namespace detail {

inline PastingResidual pasting_residual_unchecked(const EquilibriumParams& p,
                                                  const GameSpec& spec) {
    const Costs& k = spec.costs;
    const PhiBasis b1 = make_phi_basis_for(spec, p, 1);
    const PhiBasis b2 = make_phi_basis_for(spec, p, 2);
    PastingResidual out;
    out.r[0] = eval_phi(b1, p.xstar1, 1) - k.lambda;
    out.r[1] = eval_phi(b1, p.xbar1, 1) - k.lambda;
    out.r[2] = eval_phi(b1, p.xbar1) - eval_phi(b1, p.xstar1) + k.c +
               k.lambda * (p.xstar1 - p.xbar1);
    out.r[3] = eval_phi(b1, p.xbar2) - eval_phi(b1, p.xstar2) - k.c_tilde -
               k.lambda_tilde * (p.xbar2 - p.xstar2);
    out.r[4] = eval_phi(b2, p.xstar2, 1) + k.lambda;
    out.r[5] = eval_phi(b2, p.xbar2, 1) + k.lambda;
    out.r[6] = eval_phi(b2, p.xbar1) - eval_phi(b2, p.xstar1) - k.c_tilde -
               k.lambda_tilde * (p.xstar1 - p.xbar1);
    out.r[7] = eval_phi(b2, p.xbar2) - eval_phi(b2, p.xstar2) + k.c +
               k.lambda * (p.xbar2 - p.xstar2);
    return out;
}

// Square solve by Gaussian elimination with partial pivoting.
template <std::size_t N>
inline bool solve_linear(std::array<std::array<double, N>, N> a, std::array<double, N>& b) {
    for (std::size_t col = 0; col < N; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < N; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (!(std::abs(a[piv][col]) > 0.0) || !std::isfinite(a[piv][col])) return false;
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (std::size_t r = col + 1; r < N; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t cc = col; cc < N; ++cc) a[r][cc] -= f * a[col][cc];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t row = N; row-- > 0;) {
        double acc = b[row];
        for (std::size_t cc = row + 1; cc < N; ++cc) acc -= a[row][cc] * b[cc];
        b[row] = acc / a[row][row];
    }
    for (double v : b)
        if (!std::isfinite(v)) return false;
    return true;
}

inline double radical_inverse(unsigned base, unsigned long long n) {
    double inv = 1.0 / base, f = inv, x = 0.0;
    while (n) {
        x += (n % base) * f;
        n /= base;
        f *= inv;
    }
    return x;
}

}  // namespace detail

/// Evaluates the eight pasting residuals at p; order condition must hold.
inline PastingResidual system_residual(const EquilibriumParams& p, const GameSpec& spec) {
    require_order_condition(p);
    return detail::pasting_residual_unchecked(p, spec);
}

struct SolveOptions {
    double tol = 1e-9;       // infinity-norm target for the residual vector
    int max_iterations = 150;
    int max_starts = 64;
    std::optional<EquilibriumParams> guess;
};

class SolverError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Geometry is parameterized so every Newton iterate keeps the order condition:
// xbar1 = m - e^{g1}, xbar2 = m + e^{g2}, xstar_i = xbar1 + (xbar2-xbar1)*sigmoid(t_i),
// with the anchor m frozen per start. Unknowns: (A11, A12, A21, A22, g1, g2, t1, t2).
struct GeometryMap {
    double m = 0.0;

    static double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }
    static double logit(double s) {
        s = std::clamp(s, 1e-12, 1.0 - 1e-12);
        return std::log(s / (1.0 - s));
    }

    EquilibriumParams to_params(const std::array<double, 8>& u) const {
        EquilibriumParams p;
        p.a11 = u[0]; p.a12 = u[1]; p.a21 = u[2]; p.a22 = u[3];
        p.xbar1 = m - std::exp(u[4]);
        p.xbar2 = m + std::exp(u[5]);
        const double w = p.xbar2 - p.xbar1;
        p.xstar1 = p.xbar1 + w * sigmoid(u[6]);
        p.xstar2 = p.xbar1 + w * sigmoid(u[7]);
        return p;
    }

    std::array<double, 8> from_params(const EquilibriumParams& p) const {
        const double w = p.xbar2 - p.xbar1;
        return {p.a11, p.a12, p.a21, p.a22,
                std::log(std::max(m - p.xbar1, 1e-300)),
                std::log(std::max(p.xbar2 - m, 1e-300)),
                logit((p.xstar1 - p.xbar1) / w),
                logit((p.xstar2 - p.xbar1) / w)};
    }
};

// Exponential coefficients solving the two C1 conditions of one player at
// fixed thresholds; phi is linear in them, so this is a 2x2 solve.
inline std::pair<double, double> coefficients_from_c1(const GameSpec& spec, int player,
                                                      double x_star, double x_bar) {
    const double theta = spec.theta();
    const Polynomial& f = player == 1 ? spec.f1 : spec.f2;
    const Polynomial dp = particular_solution(f, spec.rho, spec.sigma).derivative();
    const double slope = player == 1 ? spec.costs.lambda : -spec.costs.lambda;
    std::array<std::array<double, 2>, 2> a{{
        {theta * std::exp(theta * x_star), -theta * std::exp(-theta * x_star)},
        {theta * std::exp(theta * x_bar), -theta * std::exp(-theta * x_bar)},
    }};
    std::array<double, 2> b{slope - dp(x_star), slope - dp(x_bar)};
    if (!solve_linear(a, b)) return {0.0, 0.0};
    return {b[0], b[1]};
}

template <std::size_t N>
struct NewtonOutcomeN {
    bool converged = false;
    std::array<double, N> u{};
    double residual = std::numeric_limits<double>::infinity();
};

// Damped Newton with central-difference Jacobian and Armijo backtracking on
// the squared norm. The residual functor returns nullopt outside the feasible
// region (broken ordering, non-finite values).
template <std::size_t N, typename ResidFn>
inline NewtonOutcomeN<N> damped_newton_n(ResidFn&& eval, std::array<double, N> u, double tol,
                                         int max_iterations) {
    auto norm_inf = [](const std::array<double, N>& r) {
        double m = 0.0;
        for (double v : r) m = std::max(m, std::abs(v));
        return m;
    };
    auto norm_sq = [](const std::array<double, N>& r) {
        double s = 0.0;
        for (double v : r) s += v * v;
        return s;
    };

    std::optional<std::array<double, N>> r0 = eval(u);
    if (!r0) return {};
    NewtonOutcomeN<N> out;
    for (int it = 0; it < max_iterations; ++it) {
        const double norm = norm_inf(*r0);
        if (norm <= tol) {
            out.converged = true;
            out.u = u;
            out.residual = norm;
            return out;
        }

        std::array<std::array<double, N>, N> jac{};
        bool jac_ok = true;
        for (std::size_t col = 0; col < N && jac_ok; ++col) {
            const double h = 1e-6 * std::max(1.0, std::abs(u[col]));
            auto up = u, um = u;
            up[col] += h;
            um[col] -= h;
            const auto rp = eval(up), rm = eval(um);
            if (!rp || !rm) { jac_ok = false; break; }
            for (std::size_t row = 0; row < N; ++row)
                jac[row][col] = ((*rp)[row] - (*rm)[row]) / (2.0 * h);
        }
        if (!jac_ok) break;

        std::array<double, N> step;
        for (std::size_t row = 0; row < N; ++row) step[row] = -(*r0)[row];
        if (!solve_linear(jac, step)) break;

        const double f0 = norm_sq(*r0);
        double t = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 30; ++bt, t *= 0.5) {
            auto cand = u;
            for (std::size_t i = 0; i < N; ++i) cand[i] += t * step[i];
            const auto rc = eval(cand);
            if (!rc) continue;
            if (norm_sq(*rc) < (1.0 - 1e-4 * t) * f0) {
                u = cand;
                r0 = rc;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;  // stalled
    }
    out.u = u;
    out.residual = norm_inf(*r0);
    out.converged = out.residual <= tol;
    return out;
}

// Symmetric linear surrogate for the first start: anchor the payoffs at their
// largest real roots, match slope magnitudes at the midpoint, rescale the
// costs by that slope and lift the closed form back.
inline EquilibriumParams auto_initial_guess(const GameSpec& spec) {
    if (spec.symmetric_linear() && spec.s1() < spec.s2())
        return closed_form_equilibrium(spec).params;

    const double r1 = largest_real_root(spec.f1);
    const double r2 = largest_real_root(spec.f2);
    const double mid = 0.5 * (r1 + r2);
    double a1 = std::abs(spec.f1.derivative_at(mid));
    double a2 = std::abs(spec.f2.derivative_at(mid));
    double a = std::sqrt(std::max(a1, 1e-8) * std::max(a2, 1e-8));
    a = std::max(a, 2.0 * spec.costs.lambda * spec.rho);  // keep surrogate ExCond

    GameSpec sur;
    sur.sigma = spec.sigma;
    sur.rho = spec.rho;
    const double lo = std::min(r1, r2), hi = std::max(r1, r2);
    const double s1 = lo < hi ? lo : mid - 0.5;
    const double s2 = lo < hi ? hi : mid + 0.5;
    sur.f1 = Polynomial({-s1, 1.0});
    sur.f2 = Polynomial({s2, -1.0});
    sur.costs.c = std::max(spec.costs.c, spec.costs.c_tilde) / a;
    sur.costs.c_tilde = std::min(spec.costs.c, spec.costs.c_tilde) / a;
    sur.costs.lambda = spec.costs.lambda / a;
    sur.costs.lambda_tilde = spec.costs.lambda_tilde / a;
    if (sur.costs.c == sur.costs.c_tilde && sur.costs.lambda == sur.costs.lambda_tilde)
        sur.costs.c = sur.costs.c_tilde + 0.1 * (1.0 + sur.costs.c_tilde);
    if (!(sur.costs.c > 0.0)) sur.costs.c = 0.5 / a;

    EquilibriumParams p = closed_form_equilibrium(sur).params;
    p.a11 *= a;
    p.a12 *= a;
    p.a21 *= a;
    p.a22 *= a;
    return p;
}

inline bool second_order_ok(const GameSpec& spec, const EquilibriumParams& p, double slack) {
    const PhiBasis b1 = make_phi_basis_for(spec, p, 1);
    const PhiBasis b2 = make_phi_basis_for(spec, p, 2);
    return eval_phi(b1, p.xstar1, 2) <= slack && eval_phi(b2, p.xstar2, 2) <= slack;
}

// Reflection center a with f1(x) = f2(2a - x), if one exists. For mirror
// payoffs the full 8x8 Jacobian is exactly rank-deficient along the
// antisymmetric direction at the (symmetric) root, so those games go through
// the reduced 4-equation solve instead.
inline std::optional<double> mirror_center(const GameSpec& spec) {
    const auto& f1 = spec.f1.coeffs();
    const auto& f2 = spec.f2.coeffs();
    const int n = spec.f1.degree();
    if (n != spec.f2.degree() || n < 1) return std::nullopt;

    const double sign_n = (n % 2 == 0) ? 1.0 : -1.0;
    const double scale = std::max({1.0, std::abs(f1[n]), std::abs(f2[n])});
    if (std::abs(sign_n * f2[n] - f1[n]) > 1e-9 * scale) return std::nullopt;

    // coefficient of x^{n-1} in f2(2a - x) is (-1)^{n-1} (f2_{n-1} + 2 a n f2_n)
    const double f1n1 = n >= 1 ? f1[n - 1] : 0.0;
    const double f2n1 = n >= 1 ? f2[n - 1] : 0.0;
    const double a = (-sign_n * f1n1 - f2n1) / (2.0 * n * f2[n]);

    // verify all coefficients of f2(2a - x) against f1
    std::vector<double> mirrored(n + 1, 0.0);
    for (int j = 0; j <= n; ++j) {
        // f2_j (2a - x)^j expanded by the binomial theorem
        double binom = 1.0;
        for (int k = 0; k <= j; ++k) {
            mirrored[k] += f2[j] * binom * std::pow(2.0 * a, j - k) * ((k % 2 == 0) ? 1.0 : -1.0);
            binom = binom * (j - k) / (k + 1.0);
        }
    }
    double worst = 0.0, cs = 1.0;
    for (int k = 0; k <= n; ++k) {
        cs = std::max({cs, std::abs(f1[k]), std::abs(mirrored[k])});
        worst = std::max(worst, std::abs(mirrored[k] - f1[k]));
    }
    if (worst > 1e-9 * cs) return std::nullopt;
    return a;
}

// Reduced geometry for mirror-symmetric games: only player 2's half is free,
// with xbar2 = a + e^{h} and xstar2 = a + (xbar2 - a) tanh-like placement so
// the inherited order condition xbar1 < xstar2 < xbar2 always holds.
struct SymmetricGeometry {
    double a = 0.0;  // reflection center

    EquilibriumParams to_params(const std::array<double, 4>& w, double theta) const {
        EquilibriumParams p;
        p.a21 = w[0];
        p.a22 = w[1];
        const double half = std::exp(w[2]);
        p.xbar2 = a + half;
        p.xbar1 = a - half;
        const double frac = 2.0 * GeometryMap::sigmoid(w[3]) - 1.0;  // in (-1, 1)
        p.xstar2 = a + half * frac;
        p.xstar1 = a - half * frac;
        p.a11 = p.a22 * std::exp(-2.0 * theta * a);
        p.a12 = p.a21 * std::exp(2.0 * theta * a);
        return p;
    }

    std::array<double, 4> from_params(const EquilibriumParams& p) const {
        const double half = std::max(p.xbar2 - a, 1e-300);
        const double frac = std::clamp((p.xstar2 - a) / half, -1.0 + 1e-12, 1.0 - 1e-12);
        return {p.a21, p.a22, std::log(half), GeometryMap::logit(0.5 * (frac + 1.0))};
    }
};

inline NewtonOutcomeN<4> solve_symmetric_from(const GameSpec& spec,
                                              const SymmetricGeometry& geom,
                                              const std::array<double, 4>& w0,
                                              const SolveOptions& opts) {
    const double theta = spec.theta();
    auto eval = [&](const std::array<double, 4>& w) -> std::optional<std::array<double, 4>> {
        const EquilibriumParams p = geom.to_params(w, theta);
        if (!order_condition_holds(p)) return std::nullopt;
        const PhiBasis b2 = make_phi_basis(spec.f2, spec.rho, spec.sigma, p.a21, p.a22);
        const Costs& k = spec.costs;
        const std::array<double, 4> r{
            eval_phi(b2, p.xstar2, 1) + k.lambda,
            eval_phi(b2, p.xbar2, 1) + k.lambda,
            eval_phi(b2, p.xbar1) - eval_phi(b2, p.xstar1) - k.c_tilde -
                k.lambda_tilde * (p.xstar1 - p.xbar1),
            eval_phi(b2, p.xbar2) - eval_phi(b2, p.xstar2) + k.c +
                k.lambda * (p.xbar2 - p.xstar2),
        };
        for (double v : r)
            if (!std::isfinite(v)) return std::nullopt;
        return r;
    };
    return damped_newton_n<4>(eval, w0, opts.tol, opts.max_iterations);
}

inline EquilibriumParams solve_system_symmetric(const GameSpec& spec, double center,
                                                const SolveOptions& opts,
                                                double& best_residual) {
    SymmetricGeometry geom;
    geom.a = center;
    const double theta = spec.theta();
    const double second_order_slack = 1e-7 * std::max(1.0, spec.costs.lambda);

    EquilibriumParams first;
    bool have_first = false;
    if (opts.guess && order_condition_holds(*opts.guess) && opts.guess->xbar2 > center) {
        first = *opts.guess;
        have_first = true;
    } else {
        try {
            first = auto_initial_guess(spec);
            have_first = order_condition_holds(first) && first.xbar2 > center;
        } catch (const std::exception&) {
            have_first = false;
        }
    }

    const double D = std::max(2.0 / theta, 1e-3);
    for (int start = 0; start < std::max(1, opts.max_starts); ++start) {
        std::array<double, 4> w{};
        if (start == 0 && have_first) {
            w = geom.from_params(first);
        } else {
            const auto k = static_cast<unsigned long long>(start);
            const double hw = radical_inverse(2, k + 1);
            const double ht = radical_inverse(3, k + 1);
            w[2] = std::log(0.05 * D) + hw * (std::log(8.0 * D) - std::log(0.05 * D));
            w[3] = -2.5 + 5.0 * ht;
            const EquilibriumParams geo = geom.to_params(w, theta);
            auto [a21, a22] = coefficients_from_c1(spec, 2, geo.xstar2, geo.xbar2);
            w[0] = a21;
            w[1] = a22;
        }

        const NewtonOutcomeN<4> res = solve_symmetric_from(spec, geom, w, opts);
        best_residual = std::min(best_residual, res.residual);
        if (!res.converged) continue;
        const EquilibriumParams p = geom.to_params(res.u, theta);
        const double scale = std::max({1.0, std::abs(p.xbar1), std::abs(p.xbar2)});
        if (!order_condition_holds(p)) continue;
        if (!second_order_ok(spec, p, second_order_slack * scale)) continue;
        if (pasting_residual_unchecked(p, spec).max_abs() > 10.0 * opts.tol) continue;
        return p;
    }
    throw SolverError("solve_system: no admissible root after " +
                      std::to_string(std::max(1, opts.max_starts)) +
                      " starts (best residual " + std::to_string(best_residual) + ")");
}

}  // namespace detail

/// Solves the smooth-pasting system by damped Newton with an order-preserving
/// parameterization and Halton multi-start, filtering roots through the order
/// and second-order conditions. Mirror-symmetric payoffs go through the
/// reduced half system (the full Jacobian is singular at symmetric roots);
/// everything else solves all eight equations.
inline EquilibriumParams solve_system(const GameSpec& spec, const SolveOptions& opts = {}) {
    using namespace detail;

    double best_residual = std::numeric_limits<double>::infinity();
    if (const std::optional<double> center = mirror_center(spec))
        return solve_system_symmetric(spec, *center, opts, best_residual);

    EquilibriumParams first;
    bool have_first = false;
    if (opts.guess) {
        first = *opts.guess;
        have_first = order_condition_holds(first);
    }
    if (!have_first) {
        try {
            first = auto_initial_guess(spec);
            have_first = order_condition_holds(first);
        } catch (const std::exception&) {
            have_first = false;
        }
    }

    double scale = 1.0;
    if (have_first) scale = std::max({1.0, std::abs(first.xbar1), std::abs(first.xbar2)});
    const double second_order_slack = 1e-7 * std::max(1.0, spec.costs.lambda);

    // Start boxes for the Halton fallback.
    const double r1 = largest_real_root(spec.f1);
    const double r2 = largest_real_root(spec.f2);
    const double center = 0.5 * (r1 + r2);
    const double D = std::max({std::abs(r2 - r1), 2.0 / spec.theta(), 1e-3});

    for (int start = 0; start < std::max(1, opts.max_starts); ++start) {
        GeometryMap geom;
        std::array<double, 8> u{};
        if (start == 0 && have_first) {
            geom.m = 0.5 * (first.xbar1 + first.xbar2);
            u = geom.from_params(first);
        } else {
            const auto k = static_cast<unsigned long long>(start);
            const double hm = radical_inverse(2, k + 1);
            const double hw1 = radical_inverse(3, k + 1);
            const double hw2 = radical_inverse(5, k + 1);
            const double ht1 = radical_inverse(7, k + 1);
            const double ht2 = radical_inverse(11, k + 1);
            geom.m = center + (2.0 * hm - 1.0) * D;
            const double g_lo = std::log(0.05 * D), g_hi = std::log(4.0 * D);
            u[4] = g_lo + hw1 * (g_hi - g_lo);
            u[5] = g_lo + hw2 * (g_hi - g_lo);
            u[6] = -2.5 + 5.0 * ht1;
            u[7] = -2.5 + 5.0 * ht2;
            EquilibriumParams geo = geom.to_params(u);
            auto [a11, a12] = coefficients_from_c1(spec, 1, geo.xstar1, geo.xbar1);
            auto [a21, a22] = coefficients_from_c1(spec, 2, geo.xstar2, geo.xbar2);
            u[0] = a11; u[1] = a12; u[2] = a21; u[3] = a22;
        }

        auto eval = [&](const std::array<double, 8>& v) -> std::optional<std::array<double, 8>> {
            const EquilibriumParams p = geom.to_params(v);
            if (!order_condition_holds(p)) return std::nullopt;
            const PastingResidual r = pasting_residual_unchecked(p, spec);
            for (double x : r.r)
                if (!std::isfinite(x)) return std::nullopt;
            return r.r;
        };
        const NewtonOutcomeN<8> res = damped_newton_n<8>(eval, u, opts.tol, opts.max_iterations);
        best_residual = std::min(best_residual, res.residual);
        if (!res.converged) continue;
        const EquilibriumParams p = geom.to_params(res.u);
        if (!order_condition_holds(p)) continue;
        if (!second_order_ok(spec, p, second_order_slack * scale)) continue;
        return p;
    }
    throw SolverError("solve_system: no admissible root after " +
                      std::to_string(std::max(1, opts.max_starts)) +
                      " starts (best residual " + std::to_string(best_residual) + ")");
}

/// (M_i V_i(x), delta_i(x)): best value of intervening right now with a
/// one-signed impulse, and the impulse attaining it (ties break to the
/// smallest |delta|). Search range follows the linear-tail geometry: the
/// objective decays outside [xbar1 - W, xbar2 + W], W = 2(xbar2 - xbar1).
inline std::pair<double, double> intervention_operator(const PiecewiseValue& v, double x,
                                                       const GameSpec& spec, int player) {
    if (player != 1 && player != 2) throw std::invalid_argument("player must be 1 or 2");
    const EquilibriumParams& p = v.params();
    const double W = 2.0 * (p.xbar2 - p.xbar1);
    const double range_lo = p.xbar1 - W, range_hi = p.xbar2 + W;
    const double c = spec.costs.c, lambda = spec.costs.lambda;

    double ylo, yhi;
    if (player == 1) {  // impulses push up
        ylo = x;
        yhi = std::max(x, range_hi);
    } else {  // impulses push down
        ylo = std::min(x, range_lo);
        yhi = x;
    }

    auto objective = [&](double y) { return v(y) - c - lambda * std::abs(y - x); };

    const double at_x = objective(x);
    if (yhi - ylo <= 0.0) return {at_x, 0.0};

    const int n = 1025;
    const double h = (yhi - ylo) / (n - 1);
    double best_val = -std::numeric_limits<double>::infinity();
    int best_idx = 0;
    std::vector<double> vals(n);
    for (int i = 0; i < n; ++i) {
        vals[i] = objective(ylo + i * h);
        if (vals[i] > best_val) { best_val = vals[i]; best_idx = i; }
    }
    const double tie_eps = 1e-11 * std::max(1.0, std::abs(best_val));
    for (int i = 0; i < n; ++i) {
        const double y = ylo + i * h;
        if (vals[i] >= best_val - tie_eps &&
            std::abs(y - x) < std::abs(ylo + best_idx * h - x))
            best_idx = i;
    }

    // golden-section refinement inside the bracketing cells
    double a = ylo + std::max(0, best_idx - 1) * h;
    double b = ylo + std::min(n - 1, best_idx + 1) * h;
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = objective(x1), f2 = objective(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-13 * (1.0 + std::abs(x)); ++it) {
        if (f1 < f2) {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + inv_phi * (b - a); f2 = objective(x2);
        } else {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - inv_phi * (b - a); f1 = objective(x1);
        }
    }
    double y_star = 0.5 * (a + b);
    double m_val = objective(y_star);

    // prefer the null impulse on ties
    if (at_x >= m_val - 1e-10 * std::max(1.0, std::abs(m_val))) return {at_x, 0.0};
    double delta = y_star - x;
    if (std::abs(delta) <= 1e-9 * (1.0 + std::abs(x))) return {m_val, 0.0};
    return {m_val, delta};
}

struct GridOptions {
    int points = 4001;
    double width_factor = 2.0;  // W = width_factor * (xbar2 - xbar1)
    double tol = 1e-6;          // payoff-scaled certification tolerance
};

/// Numeric certificates for the verification-theorem hypotheses on a grid.
struct VerificationReport {
    std::vector<double> grid;
    double scale = 1.0;  // max(1, sup |f_i| on the grid); all checks are scaled by it
    double tol = 1e-6;

    double ode_residual_max = 0.0;      // |A V_i - rho V_i + f_i| inside the continuation region
    double m_inequality_max = 0.0;      // M_i V_i - V_i everywhere (signed, must stay <= 0 up to tol)
    double m_equality_gap_max = 0.0;    // |M_i V_i - V_i| on player i's own intervention region
    double h_equality_max = 0.0;        // |H_i V_i - V_i| on the opponent's intervention region
    double sign_condition_max = 0.0;    // A V_i - rho V_i + f_i on own intervention region (signed)
    double contregion_strict_max = 0.0; // sup of M gap where it must be strictly negative
    double gap_constant_dev_max = 0.0;  // |(V_i - M_i V_i) - c| beyond the own target
    PastingResidual pasting;

    bool ode_ok = false, m_ok = false, h_ok = false, sign_ok = false;
    bool pasting_ok = false, contregion_ok = false;
    bool passed = false;
};

/// Grid certification of a candidate equilibrium.
inline VerificationReport verify_candidate(const EquilibriumParams& p, const GameSpec& spec,
                                           const GridOptions& opts = {}) {
    require_order_condition(p);
    const int n = std::max(opts.points, 16);
    const double W = opts.width_factor * (p.xbar2 - p.xbar1);
    const double lo = p.xbar1 - W, hi = p.xbar2 + W;
    const double h = (hi - lo) / (n - 1);

    VerificationReport rep;
    rep.tol = opts.tol;
    rep.grid.resize(n);
    for (int i = 0; i < n; ++i) rep.grid[i] = lo + i * h;
    rep.scale = std::max({1.0, spec.f1.max_abs_on(lo, hi), spec.f2.max_abs_on(lo, hi)});

    const PiecewiseValue v1 = make_value(spec, p, 1);
    const PiecewiseValue v2 = make_value(spec, p, 2);
    const double half_sigma_sq = 0.5 * spec.sigma * spec.sigma;

    struct PointChecks {
        double ode = 0.0;
        double m_gap = -std::numeric_limits<double>::infinity();
        double m_eq = 0.0;
        double h_eq = 0.0;
        double sign = -std::numeric_limits<double>::infinity();
        double strict = -std::numeric_limits<double>::infinity();
        double gap_const = 0.0;
    };
    std::vector<PointChecks> pts(n);

    parallel_for(n, [&](std::size_t i) {
        const double x = rep.grid[i];
        PointChecks& pc = pts[i];
        for (int player = 1; player <= 2; ++player) {
            const PiecewiseValue& v = player == 1 ? v1 : v2;
            const PiecewiseValue& vopp = player == 1 ? v2 : v1;
            const Polynomial& f = player == 1 ? spec.f1 : spec.f2;
            const double val = v(x);

            const auto [m_val, delta] = intervention_operator(v, x, spec, player);
            const double m_gap = m_val - val;
            pc.m_gap = std::max(pc.m_gap, m_gap);

            const bool own_region = player == 1 ? (x <= p.xbar1) : (x >= p.xbar2);
            const bool opp_region = player == 1 ? (x >= p.xbar2) : (x <= p.xbar1);
            const bool interior = x > p.xbar1 + 0.5 * h && x < p.xbar2 - 0.5 * h;

            if (interior) {
                const double res = half_sigma_sq * v.second_derivative(x) -
                                   spec.rho * val + f(x);
                pc.ode = std::max(pc.ode, std::abs(res));
            }
            if (own_region) {
                pc.m_eq = std::max(pc.m_eq, std::abs(m_gap));
                // V_i is linear here, so the generator term vanishes
                pc.sign = std::max(pc.sign, -spec.rho * val + f(x));
            } else {
                // strict inequality everywhere off the own intervention region,
                // away from the boundary by one grid cell
                const bool near_boundary = player == 1 ? (x <= p.xbar1 + h) : (x >= p.xbar2 - h);
                if (!near_boundary) pc.strict = std::max(pc.strict, m_gap);
            }
            if (opp_region) {
                const auto [mo, delta_opp] =
                    intervention_operator(vopp, x, spec, player == 1 ? 2 : 1);
                (void)mo;
                const double h_val = v(x + delta_opp) + spec.costs.c_tilde +
                                     spec.costs.lambda_tilde * std::abs(delta_opp);
                pc.h_eq = std::max(pc.h_eq, std::abs(h_val - val));
            }
            // beyond the own target the optimal impulse is null and the gap is
            // exactly the fixed cost
            const bool const_region = player == 1 ? (x >= p.xstar1 + h) : (x <= p.xstar2 - h);
            if (const_region)
                pc.gap_const = std::max(pc.gap_const, std::abs((val - m_val) - spec.costs.c));
        }
    });

    rep.m_inequality_max = -std::numeric_limits<double>::infinity();
    rep.sign_condition_max = -std::numeric_limits<double>::infinity();
    rep.contregion_strict_max = -std::numeric_limits<double>::infinity();
    for (const PointChecks& pc : pts) {
        rep.ode_residual_max = std::max(rep.ode_residual_max, pc.ode);
        rep.m_inequality_max = std::max(rep.m_inequality_max, pc.m_gap);
        rep.m_equality_gap_max = std::max(rep.m_equality_gap_max, pc.m_eq);
        rep.h_equality_max = std::max(rep.h_equality_max, pc.h_eq);
        rep.sign_condition_max = std::max(rep.sign_condition_max, pc.sign);
        rep.contregion_strict_max = std::max(rep.contregion_strict_max, pc.strict);
        rep.gap_constant_dev_max = std::max(rep.gap_constant_dev_max, pc.gap_const);
    }
    rep.pasting = detail::pasting_residual_unchecked(p, spec);

    const double tol = rep.tol * rep.scale;
    rep.ode_ok = rep.ode_residual_max <= tol;
    rep.m_ok = rep.m_inequality_max <= tol && rep.m_equality_gap_max <= tol;
    rep.h_ok = rep.h_equality_max <= tol;
    rep.sign_ok = rep.sign_condition_max <= tol;
    rep.pasting_ok = rep.pasting.max_abs() <= tol;
    rep.contregion_ok = rep.contregion_strict_max < 0.0 && rep.gap_constant_dev_max <= tol;
    rep.passed = rep.ode_ok && rep.m_ok && rep.h_ok && rep.sign_ok && rep.pasting_ok &&
                 rep.contregion_ok;
    return rep;
}

}  // namespace impulse
