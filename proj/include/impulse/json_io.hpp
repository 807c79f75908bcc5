#pragma once

#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "impulse/game_model.hpp"
#include "impulse/qvi_solver.hpp"
#include "impulse/simulator.hpp"

namespace impulse {

namespace detail {

inline void require_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    if (!j.is_object()) throw SpecError(where + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw SpecError(where + ": unknown field \"" + it.key() + "\"");
    for (const std::string& k : allowed)
        if (!j.contains(k)) throw SpecError(where + ": missing field \"" + k + "\"");
}

inline double number_at(const nlohmann::json& j, const std::string& key,
                        const std::string& where) {
    if (!j.at(key).is_number())
        throw SpecError(where + ": field \"" + key + "\" must be a number");
    return j.at(key).get<double>();
}

inline Polynomial poly_at(const nlohmann::json& j, const std::string& key) {
    const nlohmann::json& arr = j.at(key);
    if (!arr.is_array() || arr.empty())
        throw SpecError("game spec: field \"" + key + "\" must be a non-empty array of numbers");
    std::vector<double> coeffs;
    coeffs.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number())
            throw SpecError("game spec: field \"" + key + "\" must contain only numbers");
        coeffs.push_back(v.get<double>());
    }
    return Polynomial(std::move(coeffs));
}

}  // namespace detail

/// Strict schema: {"sigma": num, "rho": num, "costs": {"c", "c_tilde",
/// "lambda", "lambda_tilde"}, "f1": [coeffs ascending], "f2": [...]};
/// unknown fields are rejected.
inline GameSpec game_spec_from_json(const nlohmann::json& j) {
    detail::require_keys(j, {"sigma", "rho", "costs", "f1", "f2"}, "game spec");
    detail::require_keys(j.at("costs"), {"c", "c_tilde", "lambda", "lambda_tilde"},
                         "game spec costs");
    GameSpec s;
    s.sigma = detail::number_at(j, "sigma", "game spec");
    s.rho = detail::number_at(j, "rho", "game spec");
    const nlohmann::json& k = j.at("costs");
    s.costs.c = detail::number_at(k, "c", "game spec costs");
    s.costs.c_tilde = detail::number_at(k, "c_tilde", "game spec costs");
    s.costs.lambda = detail::number_at(k, "lambda", "game spec costs");
    s.costs.lambda_tilde = detail::number_at(k, "lambda_tilde", "game spec costs");
    s.f1 = detail::poly_at(j, "f1");
    s.f2 = detail::poly_at(j, "f2");
    return s;
}

inline nlohmann::json to_json(const GameSpec& s) {
    return {
        {"sigma", s.sigma},
        {"rho", s.rho},
        {"costs",
         {{"c", s.costs.c},
          {"c_tilde", s.costs.c_tilde},
          {"lambda", s.costs.lambda},
          {"lambda_tilde", s.costs.lambda_tilde}}},
        {"f1", s.f1.coeffs()},
        {"f2", s.f2.coeffs()},
    };
}

inline EquilibriumParams params_from_json(const nlohmann::json& j) {
    detail::require_keys(
        j, {"a11", "a12", "a21", "a22", "xbar1", "xbar2", "xstar1", "xstar2"},
        "equilibrium params");
    EquilibriumParams p;
    p.a11 = detail::number_at(j, "a11", "equilibrium params");
    p.a12 = detail::number_at(j, "a12", "equilibrium params");
    p.a21 = detail::number_at(j, "a21", "equilibrium params");
    p.a22 = detail::number_at(j, "a22", "equilibrium params");
    p.xbar1 = detail::number_at(j, "xbar1", "equilibrium params");
    p.xbar2 = detail::number_at(j, "xbar2", "equilibrium params");
    p.xstar1 = detail::number_at(j, "xstar1", "equilibrium params");
    p.xstar2 = detail::number_at(j, "xstar2", "equilibrium params");
    return p;
}

inline nlohmann::json to_json(const EquilibriumParams& p) {
    return {
        {"a11", p.a11},     {"a12", p.a12},     {"a21", p.a21},     {"a22", p.a22},
        {"xbar1", p.xbar1}, {"xbar2", p.xbar2}, {"xstar1", p.xstar1}, {"xstar2", p.xstar2},
    };
}

inline nlohmann::json to_json(const VerificationReport& rep) {
    nlohmann::json pasting = nlohmann::json::array();
    for (double v : rep.pasting.r) pasting.push_back(v);
    return {
        {"grid_points", rep.grid.size()},
        {"grid_lo", rep.grid.empty() ? 0.0 : rep.grid.front()},
        {"grid_hi", rep.grid.empty() ? 0.0 : rep.grid.back()},
        {"scale", rep.scale},
        {"tol", rep.tol},
        {"ode_residual_max", rep.ode_residual_max},
        {"m_inequality_max", rep.m_inequality_max},
        {"m_equality_gap_max", rep.m_equality_gap_max},
        {"h_equality_max", rep.h_equality_max},
        {"sign_condition_max", rep.sign_condition_max},
        {"contregion_strict_max", rep.contregion_strict_max},
        {"gap_constant_dev_max", rep.gap_constant_dev_max},
        {"pasting_residual", pasting},
        {"pasting_residual_max", rep.pasting.max_abs()},
        {"checks",
         {{"ode", rep.ode_ok},
          {"m_inequality", rep.m_ok},
          {"h_equality", rep.h_ok},
          {"sign_condition", rep.sign_ok},
          {"pasting", rep.pasting_ok},
          {"contregion", rep.contregion_ok}}},
        {"passed", rep.passed},
    };
}

inline nlohmann::json to_json(const SimulationEstimate& est) {
    auto se = [](double v) -> nlohmann::json {
        if (std::isnan(v)) return "insufficient";  // single-sample variance is undefined
        return v;
    };
    return {
        {"j1_mean", est.j1_mean},
        {"j2_mean", est.j2_mean},
        {"j1_se", se(est.j1_se)},
        {"j2_se", se(est.j2_se)},
        {"interventions_p1", est.interventions_p1},
        {"interventions_p2", est.interventions_p2},
        {"truncation_bound", est.truncation_bound},
        {"max_abs_state", est.max_abs_state},
    };
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("cannot open file: " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

inline GameSpec load_game_spec(const std::string& path, const ValidationOptions& opt = {}) {
    return validate_spec(game_spec_from_json(load_json_file(path)), opt);
}

inline EquilibriumParams load_params(const std::string& path) {
    return params_from_json(load_json_file(path));
}

}  // namespace impulse
