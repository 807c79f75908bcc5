#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "impulse/ode_basis.hpp"
#include "impulse/polynomial.hpp"

namespace impulse {

struct Costs {
    double c = 0.0;         // fixed cost paid by the intervening player
    double c_tilde = 0.0;   // fixed gain credited to the opponent
    double lambda = 0.0;    // proportional cost
    double lambda_tilde = 0.0;  // proportional gain
};

/// One-dimensional two-player impulse game: dX = sigma dW between interventions,
/// common discount rho, polynomial running payoffs f1 (wants high) and f2 (wants low).
struct GameSpec {
    double sigma = 1.0;
    double rho = 1.0;
    Costs costs;
    Polynomial f1;
    Polynomial f2;

    // f1 = x - s1, f2 = s2 - x; the single payoff shape with a closed-form equilibrium
    bool symmetric_linear() const {
        return f1.degree() == 1 && f2.degree() == 1 &&
               std::abs(f1.coeffs()[1] - 1.0) <= 1e-12 &&
               std::abs(f2.coeffs()[1] + 1.0) <= 1e-12;
    }
    double s1() const { return -f1.coeffs()[0]; }  // meaningful for symmetric-linear specs
    double s2() const { return f2.coeffs()[0]; }
    double s_tilde() const { return 0.5 * (s1() + s2()); }

    double theta() const { return std::sqrt(2.0 * rho / (sigma * sigma)); }
    double eta() const { return (1.0 - costs.lambda * rho) / rho; }
};

struct ValidationOptions {
    // Relaxes c >= c_tilde only; everything else stays enforced. Exists to let
    // inverted-fixed-cost parameter sets through for reproduction purposes.
    bool allow_inverted_fixed_cost = false;
};

class SpecError : public std::runtime_error {
public:
    explicit SpecError(std::string what, std::vector<std::string> issues = {})
        : std::runtime_error(std::move(what)), issues_(std::move(issues)) {}
    const std::vector<std::string>& issues() const { return issues_; }

private:
    std::vector<std::string> issues_;
};

/// One entry per violated constraint; empty means the spec is valid.
inline std::vector<std::string> validation_issues(const GameSpec& s,
                                                  const ValidationOptions& opt = {}) {
    std::vector<std::string> out;
    auto finite = [](double v) { return std::isfinite(v); };

    if (!finite(s.sigma) || !(s.sigma > 0.0)) out.push_back("sigma must be positive");
    if (!finite(s.rho) || !(s.rho > 0.0)) out.push_back("rho must be positive");

    const Costs& k = s.costs;
    if (!finite(k.c) || !finite(k.c_tilde) || !finite(k.lambda) || !finite(k.lambda_tilde))
        out.push_back("costs must be finite");
    if (k.c_tilde < 0.0) out.push_back("c_tilde must be nonnegative");
    if (k.lambda_tilde < 0.0) out.push_back("lambda_tilde must be nonnegative");
    if (!opt.allow_inverted_fixed_cost && k.c < k.c_tilde)
        out.push_back("cost order violated: require c >= c_tilde");
    if (k.c < 0.0) out.push_back("c must be nonnegative");
    if (k.lambda < k.lambda_tilde)
        out.push_back("cost order violated: require lambda >= lambda_tilde");
    if (k.c == k.c_tilde && k.lambda == k.lambda_tilde)
        out.push_back("(c,lambda)=(c_tilde,lambda_tilde) forbidden (degenerate game)");
    if (finite(s.rho) && !(1.0 - k.lambda * s.rho > 0.0))
        out.push_back("ExCond violated: require 1 - lambda*rho > 0");

    if (s.f1.degree() > kMaxPayoffDegree) out.push_back("f1 degree exceeds cap of 5");
    if (s.f2.degree() > kMaxPayoffDegree) out.push_back("f2 degree exceeds cap of 5");
    for (double v : s.f1.coeffs())
        if (!finite(v)) { out.push_back("f1 coefficients must be finite"); break; }
    for (double v : s.f2.coeffs())
        if (!finite(v)) { out.push_back("f2 coefficients must be finite"); break; }
    if (s.f1.degree() < 1 || s.f1.leading() <= 0.0)
        out.push_back("f1 must be nondecreasing at +infinity (positive leading coefficient)");
    if (s.f2.degree() < 1 || s.f2.leading() >= 0.0)
        out.push_back("f2 must be nonincreasing at +infinity (negative leading coefficient)");
    return out;
}

/// Returns the spec unchanged iff every invariant holds, else throws SpecError
/// carrying one message per violated constraint.
inline GameSpec validate_spec(GameSpec s, const ValidationOptions& opt = {}) {
    auto issues = validation_issues(s, opt);
    if (!issues.empty()) {
        std::string what = "invalid game spec:";
        for (const auto& m : issues) what += "\n  - " + m;
        throw SpecError(std::move(what), std::move(issues));
    }
    return s;
}

/// The 8-tuple defining both value functions and both threshold strategies.
struct EquilibriumParams {
    double a11 = 0.0, a12 = 0.0;  // e^{theta x}, e^{-theta x} coefficients of phi1
    double a21 = 0.0, a22 = 0.0;  // same for phi2
    double xbar1 = 0.0, xbar2 = 0.0;    // intervention thresholds
    double xstar1 = 0.0, xstar2 = 0.0;  // post-intervention targets
};

inline bool order_condition_holds(const EquilibriumParams& p) {
    const bool finite = std::isfinite(p.a11) && std::isfinite(p.a12) &&
                        std::isfinite(p.a21) && std::isfinite(p.a22) &&
                        std::isfinite(p.xbar1) && std::isfinite(p.xbar2) &&
                        std::isfinite(p.xstar1) && std::isfinite(p.xstar2);
    return finite && p.xbar1 < p.xstar1 && p.xstar1 < p.xbar2 &&
           p.xbar1 < p.xstar2 && p.xstar2 < p.xbar2;
}

inline void require_order_condition(const EquilibriumParams& p) {
    if (!order_condition_holds(p))
        throw std::invalid_argument(
            "order condition violated: need xbar1 < xstar_i < xbar2 with finite entries");
}

/// Threshold strategy: player 1 intervenes when x <= threshold and jumps to
/// target; player 2 when x >= threshold.
struct ThresholdStrategy {
    int player = 1;
    double threshold = 0.0;
    double target = 0.0;
};

inline ThresholdStrategy strategy_for(const EquilibriumParams& p, int player) {
    require_order_condition(p);
    if (player == 1) return {1, p.xbar1, p.xstar1};
    if (player == 2) return {2, p.xbar2, p.xstar2};
    throw std::invalid_argument("player must be 1 or 2");
}

inline PhiBasis make_phi_basis_for(const GameSpec& spec, const EquilibriumParams& p,
                                   int player) {
    if (player == 1) return make_phi_basis(spec.f1, spec.rho, spec.sigma, p.a11, p.a12);
    if (player == 2) return make_phi_basis(spec.f2, spec.rho, spec.sigma, p.a21, p.a22);
    throw std::invalid_argument("player must be 1 or 2");
}

/// Three-piece candidate value function: linear continuation with the player's
/// own cost slope on her intervention side, phi_i on (xbar1, xbar2), linear
/// with the gain slope on the opponent side.
class PiecewiseValue {
public:
    PiecewiseValue(int player, const EquilibriumParams& params, PhiBasis basis, Costs costs)
        : player_(player), p_(params), basis_(std::move(basis)), costs_(costs) {
        if (player != 1 && player != 2)
            throw std::invalid_argument("player must be 1 or 2");
        require_order_condition(p_);
        phi_star1_ = eval_phi(basis_, p_.xstar1);
        phi_star2_ = eval_phi(basis_, p_.xstar2);
    }

    int player() const { return player_; }
    const EquilibriumParams& params() const { return p_; }
    const PhiBasis& basis() const { return basis_; }
    const Costs& costs() const { return costs_; }

    double operator()(double x) const {
        if (player_ == 1) {
            if (x <= p_.xbar1)
                return phi_star1_ - costs_.c - costs_.lambda * (p_.xstar1 - x);
            if (x >= p_.xbar2)
                return phi_star2_ + costs_.c_tilde + costs_.lambda_tilde * (x - p_.xstar2);
            return eval_phi(basis_, x);
        }
        if (x <= p_.xbar1)
            return phi_star1_ + costs_.c_tilde + costs_.lambda_tilde * (p_.xstar1 - x);
        if (x >= p_.xbar2)
            return phi_star2_ - costs_.c - costs_.lambda * (x - p_.xstar2);
        return eval_phi(basis_, x);
    }

    /// One-sided first derivative; at the kinks the tail piece owns the point,
    /// matching the closed intervention regions.
    double derivative(double x) const { return derivative(x, x <= p_.xbar1); }

    double derivative(double x, bool from_left) const {
        const bool tail_left = from_left ? (x <= p_.xbar1) : (x < p_.xbar1);
        const bool tail_right = from_left ? (x > p_.xbar2) : (x >= p_.xbar2);
        if (player_ == 1) {
            if (tail_left) return costs_.lambda;
            if (tail_right) return costs_.lambda_tilde;
            return eval_phi(basis_, x, 1);
        }
        if (tail_left) return -costs_.lambda_tilde;
        if (tail_right) return -costs_.lambda;
        return eval_phi(basis_, x, 1);
    }

    /// Second derivative by piece membership (0 on the linear tails).
    double second_derivative(double x) const {
        if (x <= p_.xbar1 || x >= p_.xbar2) return 0.0;
        return eval_phi(basis_, x, 2);
    }

private:
    int player_;
    EquilibriumParams p_;
    PhiBasis basis_;
    Costs costs_;
    double phi_star1_ = 0.0, phi_star2_ = 0.0;
};

inline PiecewiseValue make_value(const GameSpec& spec, const EquilibriumParams& p,
                                 int player) {
    return PiecewiseValue(player, p, make_phi_basis_for(spec, p, player), spec.costs);
}

}  // namespace impulse
