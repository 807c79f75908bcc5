#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "impulse/polynomial.hpp"

namespace impulse {

inline constexpr int kMaxPayoffDegree = 5;

/// Continuation-region solution phi(x) = a_plus e^{theta x} + a_minus e^{-theta x} + p(x)
/// of (sigma^2/2) phi'' - rho phi + f = 0, where p is the polynomial particular part.
struct PhiBasis {
    double theta = 0.0;     // sqrt(2 rho / sigma^2)
    double theta_sq = 0.0;  // 2 rho / sigma^2, used for second derivatives
    double a_plus = 0.0;
    double a_minus = 0.0;
    Polynomial particular;
};

/// Unique polynomial p with (sigma^2/2) p'' - rho p + f = 0, solved by
/// undetermined coefficients from the top degree downward (the map is
/// triangular). Residual-checked so silent precision loss cannot pass.
inline Polynomial particular_solution(const Polynomial& f, double rho, double sigma) {
    if (f.degree() > kMaxPayoffDegree)
        throw std::invalid_argument("particular_solution: payoff degree exceeds cap of 5");
    if (!(rho > 0.0) || !(sigma > 0.0))
        throw std::invalid_argument("particular_solution: rho and sigma must be positive");

    const int n = f.degree();
    const long double half_sigma_sq = 0.5L * static_cast<long double>(sigma) * sigma;
    std::vector<long double> p(n + 1, 0.0L);
    for (int j = n; j >= 0; --j) {
        long double rhs = f.coeffs()[j];
        if (j + 2 <= n)
            rhs += half_sigma_sq * static_cast<long double>(j + 2) * (j + 1) * p[j + 2];
        p[j] = rhs / rho;
    }

    // coefficient-wise residual of (sigma^2/2) p'' - rho p + f
    for (int j = 0; j <= n; ++j) {
        long double r = -rho * p[j] + f.coeffs()[j];
        if (j + 2 <= n)
            r += half_sigma_sq * static_cast<long double>(j + 2) * (j + 1) * p[j + 2];
        const long double scale = std::max<long double>(
            1.0L, std::max<long double>(std::abs(f.coeffs()[j]), std::abs(rho * p[j])));
        if (std::abs(r) > 1e-12L * scale)
            throw std::runtime_error("particular_solution: residual check failed at degree " +
                                     std::to_string(j));
    }

    std::vector<double> out(p.begin(), p.end());
    return Polynomial(std::move(out));
}

inline PhiBasis make_phi_basis(const Polynomial& f, double rho, double sigma,
                               double a_plus = 0.0, double a_minus = 0.0) {
    PhiBasis b;
    b.theta_sq = 2.0 * rho / (sigma * sigma);
    b.theta = std::sqrt(b.theta_sq);
    b.a_plus = a_plus;
    b.a_minus = a_minus;
    b.particular = particular_solution(f, rho, sigma);
    return b;
}

/// Value (deriv=0), first (1) or second (2) derivative of the basis at x.
inline double eval_phi(const PhiBasis& b, double x, int deriv = 0) {
    const double ep = std::exp(b.theta * x);
    const double em = std::exp(-b.theta * x);
    switch (deriv) {
        case 0: return b.a_plus * ep + b.a_minus * em + b.particular(x);
        case 1: return b.theta * (b.a_plus * ep - b.a_minus * em) + b.particular.derivative_at(x, 1);
        case 2: return b.theta_sq * (b.a_plus * ep + b.a_minus * em) + b.particular.derivative_at(x, 2);
        default: throw std::invalid_argument("eval_phi: deriv must be 0, 1 or 2");
    }
}

}  // namespace impulse
