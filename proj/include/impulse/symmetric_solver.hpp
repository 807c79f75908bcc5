#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "impulse/game_model.hpp"

namespace impulse {

/// F(x) = 2x + theta*c - eta*log((eta+x)/(eta-x)); strictly decreasing on
/// (0, eta) from theta*c to -infinity, so it has a unique root there.
inline double xi_objective(double x, double c, double theta, double eta) {
    return 2.0 * x + theta * c - eta * std::log((eta + x) / (eta - x));
}

inline double xi_objective_deriv(double x, double eta) {
    return 2.0 - 2.0 * eta * eta / (eta * eta - x * x);
}

/// F rewritten in the gap variable g = eta - xi. For large theta*c the root
/// sits exponentially close to eta, where xi as a double quantizes the gap to
/// ulp(eta); the gap itself keeps full relative precision.
inline double xi_objective_from_gap(double g, double c, double theta, double eta) {
    return 2.0 * (eta - g) + theta * c - eta * (std::log(2.0 * eta - g) - std::log(g));
}

/// Root of F as the gap eta - xi, solved on the log-gap axis: bracketed
/// bisection first (F' is unbounded at the eta end, so Newton alone is
/// unsafe), then Newton polish inside the bracket.
inline double solve_xi_gap(double c, double theta, double eta, double tol = 1e-12) {
    if (!(c > 0.0) || !(theta > 0.0) || !(eta > 0.0) || !(tol > 0.0))
        throw std::invalid_argument("solve_xi: c, theta, eta, tol must be positive");

    auto value = [&](double u) { return xi_objective_from_gap(std::exp(u), c, theta, eta); };
    // dF/du with u = log g
    auto deriv = [&](double u) {
        const double g = std::exp(u);
        return -2.0 * g + 2.0 * eta * eta / (2.0 * eta - g);
    };

    double u_hi = std::log(eta * (1.0 - 1e-12));  // xi near 0
    double u_lo = std::log(eta * 1e-12);          // xi near eta; pushed down geometrically
    const double u_floor = std::log(4.0 * std::numeric_limits<double>::min());
    int shrink = 0;
    while (true) {
        const double f = value(u_lo);
        if (std::isfinite(f) && f < 0.0) break;
        if (++shrink > 200 || u_lo < u_floor)
            throw std::runtime_error(
                "solve_xi: root not bracketable in double precision (theta*c too large "
                "relative to eta)");
        u_lo -= std::log(8.0);
    }

    while (u_hi - u_lo > 1e-3) {
        const double mid = 0.5 * (u_lo + u_hi);
        if (value(mid) < 0.0) u_lo = mid; else u_hi = mid;
    }

    double u = 0.5 * (u_lo + u_hi);
    for (int it = 0; it < 100; ++it) {
        const double f = value(u);
        if (std::abs(f) <= tol) break;
        if (f < 0.0) u_lo = std::max(u_lo, u); else u_hi = std::min(u_hi, u);
        double next = u - f / deriv(u);
        if (!(next > u_lo) || !(next < u_hi)) next = 0.5 * (u_lo + u_hi);
        if (next == u) break;
        u = next;
    }
    return std::exp(u);
}

/// Unique root of F in (0, eta).
inline double solve_xi(double c, double theta, double eta, double tol = 1e-12) {
    return eta - solve_xi_gap(c, theta, eta, tol);
}

/// (xi'(c), xi''(c)) by implicit differentiation of F(xi(c)) = 0.
inline std::pair<double, double> xi_derivatives(double xi, double theta, double eta) {
    if (!(xi > 0.0) || !(xi < eta))
        throw std::invalid_argument("xi_derivatives: need 0 < xi < eta");
    const double gap_sq = eta * eta - xi * xi;
    const double d1 = 0.5 * theta * gap_sq / (xi * xi);
    const double d2 = -0.5 * theta * theta * eta * eta * gap_sq / std::pow(xi, 5);
    return {d1, d2};
}

/// Scalars behind the closed form.
struct DerivedCoefficients {
    double s_tilde = 0.0;   // (s1 + s2) / 2
    double theta = 0.0;     // sqrt(2 rho / sigma^2)
    double eta = 0.0;       // (1 - lambda rho) / rho
    double xi = 0.0;        // unique zero of F in (0, eta)
    double gamma_cap = 0.0; // Gamma; zero only in the degenerate equal-cost game
};

struct ClosedForm {
    EquilibriumParams params;
    DerivedCoefficients coeffs;
};

inline DerivedCoefficients derived_coefficients(const GameSpec& spec, double xi_tol = 1e-12) {
    const Costs& k = spec.costs;
    DerivedCoefficients d;
    d.s_tilde = spec.s_tilde();
    d.theta = spec.theta();
    d.eta = spec.eta();
    if (k.c == 0.0) {
        // xi(0+) = 0 and the xi-divided Gamma terms vanish in that limit
        d.xi = 0.0;
        d.gamma_cap = (k.lambda - k.lambda_tilde) / (2.0 * d.eta);
        return d;
    }
    d.xi = solve_xi(k.c, d.theta, d.eta, xi_tol);
    d.gamma_cap = d.theta * (k.c - k.c_tilde) / (4.0 * d.xi) +
                  d.theta * k.c * (k.lambda - k.lambda_tilde) / (4.0 * d.eta * d.xi) +
                  (k.lambda - k.lambda_tilde) / (2.0 * d.eta);
    return d;
}

/// Closed-form Nash equilibrium of the symmetric linear game
/// (f1 = x - s1, f2 = s2 - x, s1 < s2).
inline ClosedForm closed_form_equilibrium(const GameSpec& spec, double xi_tol = 1e-12) {
    if (!spec.symmetric_linear())
        throw std::invalid_argument("closed_form_equilibrium: spec is not symmetric-linear");
    if (!(spec.s1() < spec.s2()))
        throw std::invalid_argument("closed_form_equilibrium: require s1 < s2");

    const DerivedCoefficients d = derived_coefficients(spec, xi_tol);
    if (!(d.gamma_cap > 0.0))
        throw std::runtime_error(
            "closed_form_equilibrium: Gamma = 0 degenerate game (equal costs and gains)");

    const double sqrt_gp1 = std::sqrt(d.gamma_cap + 1.0);
    const double sqrt_g = std::sqrt(d.gamma_cap);
    // at the root, log((eta+xi)/(eta-xi)) = (2 xi + theta c)/eta; this form
    // stays accurate when xi sits within a few ulps of eta
    const double log_ratio = (2.0 * d.xi + d.theta * spec.costs.c) / d.eta;
    const double half_log_ratio = 0.5 * log_ratio;
    const double log_g = std::log(sqrt_gp1 + sqrt_g);
    // sqrt(eta^2 - xi^2) = eta / cosh(log_ratio / 2)
    const double amp = d.eta / (2.0 * d.theta * std::cosh(half_log_ratio));

    EquilibriumParams p;
    p.xbar1 = d.s_tilde - (half_log_ratio + log_g) / d.theta;
    p.xbar2 = d.s_tilde + (half_log_ratio + log_g) / d.theta;
    p.xstar1 = d.s_tilde - (-half_log_ratio + log_g) / d.theta;
    p.xstar2 = d.s_tilde + (-half_log_ratio + log_g) / d.theta;
    const double ep = std::exp(d.theta * d.s_tilde);
    const double em = std::exp(-d.theta * d.s_tilde);
    p.a11 = em * amp * (-sqrt_gp1 - sqrt_g);
    p.a12 = ep * amp * (sqrt_gp1 - sqrt_g);
    p.a21 = em * amp * (sqrt_gp1 - sqrt_g);
    p.a22 = ep * amp * (-sqrt_gp1 - sqrt_g);

    require_order_condition(p);
    return {p, d};
}

/// v(x) ~ level + slope * (x - s_tilde)
struct LinearLimit {
    double level = 0.0;
    double slope = 0.0;
};

/// Limits of the closed form, evaluated symbolically (no extrapolation).
struct AsymptoticLimits {
    double s_tilde = 0.0;

    // c -> 0+ (requires c_tilde = 0 and lambda = lambda_tilde): all four
    // points collapse to s_tilde, value functions become straight lines.
    bool zero_cost_applicable = false;
    double zero_cost_point = 0.0;
    LinearLimit zero_cost_v1, zero_cost_v2;

    // c -> +infinity: thresholds and targets diverge, players never intervene.
    LinearLimit infinite_cost_v1, infinite_cost_v2;

    // c -> c_tilde+ (requires lambda = lambda_tilde): xbar_i and xstar_j meet,
    // the limiting strategies ping-pong and are inadmissible.
    bool gain_cost_applicable = false;
    double gain_cost_xbar1 = 0.0;  // = xstar2 limit
    double gain_cost_xbar2 = 0.0;  // = xstar1 limit
};

inline AsymptoticLimits asymptotic_limits(const GameSpec& spec) {
    if (!spec.symmetric_linear())
        throw std::invalid_argument("asymptotic_limits: spec is not symmetric-linear");
    const Costs& k = spec.costs;
    AsymptoticLimits lim;
    lim.s_tilde = spec.s_tilde();
    const double level = (spec.s2() - lim.s_tilde) / spec.rho;

    lim.zero_cost_applicable = (k.c_tilde == 0.0) && (k.lambda == k.lambda_tilde);
    if (lim.zero_cost_applicable) {
        lim.zero_cost_point = lim.s_tilde;
        lim.zero_cost_v2 = {level, -k.lambda};
        lim.zero_cost_v1 = {level, +k.lambda};  // V1(x) = V2(2 s_tilde - x)
    }

    lim.infinite_cost_v1 = {level, +1.0 / spec.rho};  // (x - s1) / rho
    lim.infinite_cost_v2 = {level, -1.0 / spec.rho};  // (s2 - x) / rho

    lim.gain_cost_applicable = (k.lambda == k.lambda_tilde);
    if (lim.gain_cost_applicable) {
        const double theta = spec.theta();
        const double eta = spec.eta();
        double half_width = 0.0;  // xi(c_tilde) -> 0 as c_tilde -> 0
        if (k.c_tilde > 0.0) {
            const double xi_ct = solve_xi(k.c_tilde, theta, eta);
            half_width = std::log((eta + xi_ct) / (eta - xi_ct)) / (2.0 * theta);
        }
        lim.gain_cost_xbar1 = lim.s_tilde - half_width;
        lim.gain_cost_xbar2 = lim.s_tilde + half_width;
    }
    return lim;
}

}  // namespace impulse
