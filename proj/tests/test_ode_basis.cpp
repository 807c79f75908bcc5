#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "impulse/ode_basis.hpp"

using namespace impulse;

namespace {

double ode_residual(const PhiBasis& b, const Polynomial& f, double rho, double sigma, double x) {
    return 0.5 * sigma * sigma * eval_phi(b, x, 2) - rho * eval_phi(b, x, 0) + f(x);
}

}  // namespace

TEST_CASE("particular solution of a linear payoff") {
    const double rho = 0.02, sigma = 0.15;
    const Polynomial f({3.0, 1.0});  // x - s1 with s1 = -3
    const Polynomial p = particular_solution(f, rho, sigma);
    REQUIRE(p.degree() == 1);
    CHECK(p.coeffs()[0] == Catch::Approx(3.0 / rho).epsilon(1e-14));
    CHECK(p.coeffs()[1] == Catch::Approx(1.0 / rho).epsilon(1e-14));
}

TEST_CASE("particular solution of a cubic payoff") {
    // f = c1 (x - s1)^3  =>  p = (c1/rho)(x - s1)^3 + (3 c1 sigma^2 / rho^2)(x - s1)
    const double rho = 0.1, sigma = 0.2, c1 = 1.2, s1 = -3.0;
    const Polynomial f({32.4, 32.4, 10.8, 1.2});  // 1.2 (x+3)^3
    const Polynomial p = particular_solution(f, rho, sigma);
    auto expected = [&](double x) {
        return (c1 / rho) * std::pow(x - s1, 3) + (3.0 * c1 * sigma * sigma / (rho * rho)) * (x - s1);
    };
    for (double x : {-4.0, -1.0, 0.0, 0.7, 2.5})
        CHECK(p(x) == Catch::Approx(expected(x)).epsilon(1e-12));
}

TEST_CASE("zero payoff gives the zero particular solution") {
    const Polynomial p = particular_solution(Polynomial({0.0}), 0.5, 1.0);
    CHECK(p.is_zero());
}

TEST_CASE("degree cap is enforced") {
    CHECK_THROWS_AS(particular_solution(Polynomial({0, 0, 0, 0, 0, 0, 1.0}), 0.1, 0.2),
                    std::invalid_argument);
}

TEST_CASE("pure particular solution when both exponential coefficients vanish") {
    const PhiBasis b = make_phi_basis(Polynomial({3.0, 1.0}), 0.02, 0.15);
    for (double x : {-2.0, 0.0, 1.3})
        CHECK(eval_phi(b, x) == Catch::Approx((x + 3.0) / 0.02).epsilon(1e-14));
}

TEST_CASE("defining ODE holds at sampled points") {
    const double rho = 0.02, sigma = 0.15;
    const Polynomial f({3.0, 1.0});
    const PhiBasis b = make_phi_basis(f, rho, sigma, 0.61, -3.43);
    for (double x : {-3.0, -1.0, 0.0, 0.5, 2.9})
        CHECK(std::abs(ode_residual(b, f, rho, sigma, x)) < 1e-10 * std::max(1.0, std::abs(f(x))));
}

TEST_CASE("ODE residual vanishes at 1000 random points") {
    const double rho = 0.1, sigma = 0.2;
    const Polynomial f({27.0, -27.0, 9.0, -1.0});
    const PhiBasis b = make_phi_basis(f, rho, sigma, 24.67, -56.0);
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> dist(-6.0, 6.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = dist(rng);
        const double scaled =
            std::abs(ode_residual(b, f, rho, sigma, x)) / std::max(1.0, std::abs(f(x)));
        REQUIRE(scaled < 1e-8);
    }
}

TEST_CASE("derivatives match central finite differences") {
    const double rho = 0.1, sigma = 0.2;
    const Polynomial f({0.125, 0.75, 1.5, 1.0});
    const PhiBasis b = make_phi_basis(f, rho, sigma, -4.886, 0.739);
    const double h = 1e-5;
    for (double x : {-1.2, -0.3, 0.0, 0.8, 1.4}) {
        const double fd1 = (eval_phi(b, x + h) - eval_phi(b, x - h)) / (2.0 * h);
        const double fd2 = (eval_phi(b, x + h) - 2.0 * eval_phi(b, x) + eval_phi(b, x - h)) / (h * h);
        CHECK(eval_phi(b, x, 1) == Catch::Approx(fd1).epsilon(1e-6));
        CHECK(eval_phi(b, x, 2) == Catch::Approx(fd2).epsilon(1e-5));
    }
}

TEST_CASE("theta squared is stored exactly") {
    const PhiBasis b = make_phi_basis(Polynomial({1.0, 1.0}), 0.07, 0.3);
    CHECK(b.theta_sq == Catch::Approx(2.0 * 0.07 / 0.09).margin(0));
    CHECK(b.theta * b.theta == Catch::Approx(b.theta_sq).epsilon(4e-16));
}
