#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <string>

#include "impulse/game_model.hpp"
#include "impulse/json_io.hpp"
#include "impulse/symmetric_solver.hpp"

using namespace impulse;

namespace {

GameSpec problem1(double c = 100.0) {
    GameSpec s;
    s.sigma = 0.15;
    s.rho = 0.02;
    s.costs = {c, 0.0, 15.0, 15.0};
    s.f1 = Polynomial({3.0, 1.0});
    s.f2 = Polynomial({3.0, -1.0});
    return s;
}

bool mentions(const std::vector<std::string>& issues, const std::string& needle) {
    return std::any_of(issues.begin(), issues.end(), [&](const std::string& m) {
        return m.find(needle) != std::string::npos;
    });
}

}  // namespace

TEST_CASE("validation accepts the linear benchmark game") {
    CHECK(validation_issues(problem1()).empty());
    CHECK_NOTHROW(validate_spec(problem1()));
}

TEST_CASE("validation rejects a discounted-slope violation") {
    GameSpec s = problem1();
    s.costs.lambda = 60.0;  // 1 - lambda rho = -0.2
    const auto issues = validation_issues(s);
    REQUIRE_FALSE(issues.empty());
    CHECK(mentions(issues, "ExCond"));
}

TEST_CASE("validation rejects equal costs and gains") {
    GameSpec s = problem1();
    s.costs = {10.0, 10.0, 0.0, 0.0};
    const auto issues = validation_issues(s);
    CHECK(mentions(issues, "(c,lambda)=(c_tilde,lambda_tilde)"));
}

TEST_CASE("validation names each violated constraint") {
    GameSpec s = problem1();
    s.costs.c = 5.0;  // below c_tilde after the next line
    s.costs.c_tilde = 7.0;
    s.f1 = Polynomial({1.0, -2.0});
    const auto issues = validation_issues(s);
    CHECK(mentions(issues, "c >= c_tilde"));
    CHECK(mentions(issues, "f1"));
    // the inverted-cost override silences exactly the fixed-cost order issue
    const auto relaxed = validation_issues(s, {true});
    CHECK_FALSE(mentions(relaxed, "c >= c_tilde"));
    CHECK(mentions(relaxed, "f1"));
}

TEST_CASE("symmetric-linear detection recovers the payoff anchors") {
    const GameSpec s = problem1();
    CHECK(s.symmetric_linear());
    CHECK(s.s1() == Catch::Approx(-3.0));
    CHECK(s.s2() == Catch::Approx(3.0));
    CHECK(s.s_tilde() == Catch::Approx(0.0));

    GameSpec cubic = s;
    cubic.f1 = Polynomial({32.4, 32.4, 10.8, 1.2});
    cubic.f2 = Polynomial({27.0, -27.0, 9.0, -1.0});
    CHECK_FALSE(cubic.symmetric_linear());
}

TEST_CASE("spec JSON schema is strict") {
    const nlohmann::json good = to_json(problem1());
    const GameSpec parsed = game_spec_from_json(good);
    CHECK(parsed.sigma == Catch::Approx(0.15));
    CHECK(parsed.costs.lambda_tilde == Catch::Approx(15.0));
    CHECK(parsed.f2.coeffs() == std::vector<double>{3.0, -1.0});

    nlohmann::json unknown = good;
    unknown["extra"] = 1;
    CHECK_THROWS_AS(game_spec_from_json(unknown), SpecError);

    nlohmann::json unknown_cost = good;
    unknown_cost["costs"]["kappa"] = 1;
    CHECK_THROWS_AS(game_spec_from_json(unknown_cost), SpecError);

    nlohmann::json missing = good;
    missing.erase("rho");
    CHECK_THROWS_AS(game_spec_from_json(missing), SpecError);

    nlohmann::json bad_type = good;
    bad_type["sigma"] = "wide";
    CHECK_THROWS_AS(game_spec_from_json(bad_type), SpecError);
}

TEST_CASE("order condition gates equilibrium parameters") {
    EquilibriumParams p;
    p.xbar1 = -1.0;
    p.xbar2 = 1.0;
    p.xstar1 = 0.5;
    p.xstar2 = -0.5;
    CHECK(order_condition_holds(p));
    p.xstar1 = 1.5;
    CHECK_FALSE(order_condition_holds(p));
    CHECK_THROWS_AS(require_order_condition(p), std::invalid_argument);
    p.xstar1 = 0.5;
    p.a11 = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(order_condition_holds(p));
}

TEST_CASE("piecewise value matches the direct basis evaluation at the kinks") {
    // closed form for the linear benchmark, c = 100; mpmath oracle values
    const GameSpec s = problem1();
    const EquilibriumParams p = closed_form_equilibrium(s).params;
    const PiecewiseValue v2 = make_value(s, p, 2);
    const PhiBasis b2 = make_phi_basis_for(s, p, 2);

    CHECK(v2(0.0) == Catch::Approx(147.17724551503773).epsilon(1e-12));
    CHECK(v2(p.xbar1) == Catch::Approx(143.1853391799032).epsilon(1e-12));
    CHECK(v2(p.xstar1) == Catch::Approx(77.964375016882182).epsilon(1e-12));
    CHECK(v2(p.xbar2) == Catch::Approx(34.901357749176655).epsilon(1e-12));
    for (double x : {p.xbar1, p.xstar1, p.xstar2, p.xbar2})
        CHECK(v2(x) == Catch::Approx(eval_phi(b2, x)).epsilon(1e-9));
}

TEST_CASE("piecewise value is continuous and C1 at the own threshold") {
    const GameSpec s = problem1();
    const EquilibriumParams p = closed_form_equilibrium(s).params;
    const PiecewiseValue v1 = make_value(s, p, 1);
    const PiecewiseValue v2 = make_value(s, p, 2);

    const double eps = 1e-9;
    for (double xb : {p.xbar1, p.xbar2}) {
        for (const PiecewiseValue* v : {&v1, &v2}) {
            const double scale = std::max(1.0, std::abs((*v)(xb)));
            CHECK(std::abs((*v)(xb + eps) - (*v)(xb - eps)) / scale < 1e-6);
            CHECK(std::abs((*v)(xb + eps) - (*v)(xb)) / scale < 1e-6);
        }
    }
    // C1 pasting at the player's own threshold
    CHECK(v1.derivative(p.xbar1, true) == Catch::Approx(v1.derivative(p.xbar1, false)).margin(1e-7));
    CHECK(v2.derivative(p.xbar2, true) == Catch::Approx(v2.derivative(p.xbar2, false)).margin(1e-7));
}

TEST_CASE("tail slopes are exact by construction") {
    const GameSpec s = problem1();
    const EquilibriumParams p = closed_form_equilibrium(s).params;
    const PiecewiseValue v1 = make_value(s, p, 1);
    const PiecewiseValue v2 = make_value(s, p, 2);
    CHECK(v1.derivative(p.xbar1 - 1.0) == 15.0);
    CHECK(v1.derivative(p.xbar2 + 1.0) == 15.0);  // lambda_tilde = lambda here
    CHECK(v2.derivative(p.xbar1 - 1.0) == -15.0);
    CHECK(v2.derivative(p.xbar2 + 1.0) == -15.0);

    GameSpec asym = s;
    asym.costs.lambda_tilde = 3.0;
    const EquilibriumParams q = closed_form_equilibrium(asym).params;
    const PiecewiseValue w1 = make_value(asym, q, 1);
    CHECK(w1.derivative(q.xbar1 - 2.0) == 15.0);
    CHECK(w1.derivative(q.xbar2 + 2.0) == 3.0);
}

TEST_CASE("value functions mirror each other for symmetric payoffs") {
    const GameSpec s = problem1();
    const EquilibriumParams p = closed_form_equilibrium(s).params;
    const PiecewiseValue v1 = make_value(s, p, 1);
    const PiecewiseValue v2 = make_value(s, p, 2);
    const double s_tilde = s.s_tilde();
    for (double x : {-5.0, -2.0, -0.3, 0.0, 1.1, 2.83, 4.0}) {
        const double scale = std::max(1.0, std::abs(v1(x)));
        CHECK(std::abs(v1(x) - v2(2.0 * s_tilde - x)) / scale < 1e-12);
    }
}

TEST_CASE("strategies derive from the parameter tuple") {
    const GameSpec s = problem1();
    const EquilibriumParams p = closed_form_equilibrium(s).params;
    const ThresholdStrategy s1 = strategy_for(p, 1);
    const ThresholdStrategy s2 = strategy_for(p, 2);
    CHECK(s1.player == 1);
    CHECK(s1.threshold == p.xbar1);
    CHECK(s1.target == p.xstar1);
    CHECK(s2.threshold == p.xbar2);
    CHECK(s2.target == p.xstar2);
    CHECK_THROWS_AS(strategy_for(p, 3), std::invalid_argument);
}
