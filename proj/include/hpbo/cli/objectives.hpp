#pragma once

// Built-in benchmark objectives. All take their inputs on [0,1].
//
//   quadratic1d     (x - 0.3)^2
//   branin2d        Branin on [-5,10] x [0,15], min 0.397887...
//   groupweights3d  sum_k c_k (w_k - w*_k)^2 + 0.1 w_fg w_rg + N(0, noise_sd^2)
//                   over the three group weights w_fg, w_rg, w_ccg

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "hpbo/cli/config.hpp"
#include "hpbo/errors.hpp"
#include "hpbo/loop.hpp"
#include "hpbo/space.hpp"

namespace hpbo::cli {

struct GroupWeightsBench {
    std::array<double, 3> targets = {0.86, 0.89, 0.31};
    std::array<double, 3> curvature = {1.0, 2.0, 0.5};
    double noise_sd = 0.01;
    std::uint64_t seed = 0;

    double noise_free(double w_fg, double w_rg, double w_ccg) const {
        const std::array<double, 3> w = {w_fg, w_rg, w_ccg};
        double f = 0.1 * w_fg * w_rg;
        for (int k = 0; k < 3; ++k) f += curvature[k] * (w[k] - targets[k]) * (w[k] - targets[k]);
        return f;
    }

    /// Noise is a pure function of (seed, weights) so re-evaluating an arm repeats it.
    double noise(double w_fg, double w_rg, double w_ccg) const {
        if (noise_sd == 0.0) return 0.0;
        std::vector<std::uint32_t> words = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
        for (double w : {w_fg, w_rg, w_ccg}) {
            std::uint64_t bits;
            std::memcpy(&bits, &w, sizeof bits);
            words.push_back(static_cast<std::uint32_t>(bits));
            words.push_back(static_cast<std::uint32_t>(bits >> 32));
        }
        std::seed_seq seq(words.begin(), words.end());
        std::mt19937_64 rng(seq);
        return noise_sd * std::normal_distribution<double>()(rng);
    }
};

inline constexpr double kBraninMinimum = 0.39788735772973816;

/// Branin with x1 in [-5,10], x2 in [0,15], both mapped from [0,1].
inline double branin_unit(double u1, double u2) {
    const double pi = std::numbers::pi;
    const double x1 = -5.0 + 15.0 * u1;
    const double x2 = 15.0 * u2;
    const double b = 5.1 / (4.0 * pi * pi), c = 5.0 / pi, t = 1.0 / (8.0 * pi);
    const double q = x2 - b * x1 * x1 + c * x1 - 6.0;
    return q * q + 10.0 * (1.0 - t) * std::cos(x1) + 10.0;
}

namespace detail {

inline double arm_number(const Arm& arm, const std::string& name) {
    auto it = arm.values.find(name);
    if (it == arm.values.end()) throw StructuralError("arm is missing parameter '" + name + "'");
    auto v = as_number(it->second);
    if (!v) throw StructuralError("parameter '" + name + "' is not numeric");
    return *v;
}

inline std::array<double, 3> triple(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) schema_error(where, "expected an array of 3 numbers");
    return {number(j[0], where), number(j[1], where), number(j[2], where)};
}

}  // namespace detail

inline GroupWeightsBench group_weights_from_params(const json& params, std::uint64_t default_seed) {
    detail::only_keys(params, "objective.params", {"targets", "curvature", "noise_sd", "seed"});
    GroupWeightsBench b;
    b.seed = default_seed;
    if (params.contains("targets")) b.targets = detail::triple(params["targets"], "objective.params.targets");
    if (params.contains("curvature")) b.curvature = detail::triple(params["curvature"], "objective.params.curvature");
    if (params.contains("noise_sd")) b.noise_sd = detail::number(params["noise_sd"], "objective.params.noise_sd");
    if (params.contains("seed")) b.seed = detail::count(params["seed"], "objective.params.seed");
    for (double t : b.targets)
        if (!(t >= 0.0 && t <= 1.0)) detail::schema_error("objective.params.targets", "targets must lie in [0,1]");
    for (double c : b.curvature)
        if (!(c > 0.0)) detail::schema_error("objective.params.curvature", "curvatures must be positive");
    if (!(b.noise_sd >= 0.0)) detail::schema_error("objective.params.noise_sd", "must be >= 0");
    return b;
}

/// Validated, ready-to-call builtin. Parameter errors surface as ConfigError.
inline Evaluator make_builtin(const std::string& name, const json& params, std::uint64_t default_seed = 0) {
    if (name == "quadratic1d") {
        detail::only_keys(params, "objective.params", {});
        return [](const Arm& arm) {
            const double x = detail::arm_number(arm, "x");
            return Observation{(x - 0.3) * (x - 0.3), std::nullopt};
        };
    }
    if (name == "branin2d") {
        detail::only_keys(params, "objective.params", {});
        return [](const Arm& arm) {
            return Observation{branin_unit(detail::arm_number(arm, "x1"), detail::arm_number(arm, "x2")), std::nullopt};
        };
    }
    if (name == "groupweights3d") {
        const GroupWeightsBench b = group_weights_from_params(params, default_seed);
        return [b](const Arm& arm) {
            const double fg = detail::arm_number(arm, "w_fg");
            const double rg = detail::arm_number(arm, "w_rg");
            const double ccg = detail::arm_number(arm, "w_ccg");
            Observation obs{b.noise_free(fg, rg, ccg) + b.noise(fg, rg, ccg), std::nullopt};
            if (b.noise_sd > 0) obs.sem = b.noise_sd;
            return obs;
        };
    }
    throw UsageError("unknown builtin objective \"" + name + "\"");
}

inline Observation builtin_objective(const std::string& name, const json& params, const Arm& arm) {
    return make_builtin(name, params)(arm);
}

/// The search space `bench <name>` runs with: every input on [0,1].
inline SearchSpace builtin_space(const std::string& name) {
    const auto names = builtin_parameter_names(name);
    if (names.empty()) throw UsageError("unknown builtin objective \"" + name + "\"");
    std::vector<ParameterSpec> params;
    for (const auto& n : names) params.push_back(ParameterSpec::range_float(n, 0.0, 1.0));
    return SearchSpace(std::move(params));
}

}  // namespace hpbo::cli
