#pragma once

// Search spaces, arms, unit-cube encoding and output standardization.
//
// Non-fixed parameters map onto one coordinate of [0,1]^d each:
//   range-float  (x - a) / (b - a), on log(x) when log_scale is set
//   range-int    same affine map; decode rounds to the nearest integer
//   choice       index / (k - 1) over the option ordering
// Fixed parameters take no coordinate and are reinjected by decode().

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "hpbo/errors.hpp"

namespace hpbo {

/// A literal parameter value.
using Value = std::variant<bool, std::int64_t, double, std::string>;

inline std::string to_string(const Value& v) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, bool>) {
                return x ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(x);
            } else if constexpr (std::is_same_v<T, double>) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.17g", x);
                return buf;
            } else {
                return x;
            }
        },
        v);
}

/// Numeric view of a value; nullopt for strings and booleans.
inline std::optional<double> as_number(const Value& v) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    return std::nullopt;
}

enum class ParameterKind { range_float, range_int, choice, fixed };

struct ParameterSpec {
    std::string name;
    ParameterKind kind = ParameterKind::range_float;
    double lower = 0.0;
    double upper = 1.0;
    std::vector<Value> options;
    Value value;
    bool log_scale = false;

    static ParameterSpec range_float(std::string name, double lower, double upper,
                                     bool log_scale = false) {
        ParameterSpec p;
        p.name = std::move(name);
        p.kind = ParameterKind::range_float;
        p.lower = lower;
        p.upper = upper;
        p.log_scale = log_scale;
        return p;
    }

    static ParameterSpec range_int(std::string name, std::int64_t lower, std::int64_t upper) {
        ParameterSpec p;
        p.name = std::move(name);
        p.kind = ParameterKind::range_int;
        p.lower = static_cast<double>(lower);
        p.upper = static_cast<double>(upper);
        return p;
    }

    static ParameterSpec choice(std::string name, std::vector<Value> options) {
        ParameterSpec p;
        p.name = std::move(name);
        p.kind = ParameterKind::choice;
        p.options = std::move(options);
        return p;
    }

    static ParameterSpec fixed(std::string name, Value value) {
        ParameterSpec p;
        p.name = std::move(name);
        p.kind = ParameterKind::fixed;
        p.value = std::move(value);
        return p;
    }

    bool is_tunable() const { return kind != ParameterKind::fixed; }

    bool operator==(const ParameterSpec&) const = default;
};

class SearchSpace {
public:
    SearchSpace() = default;
    explicit SearchSpace(std::vector<ParameterSpec> params) : params_(std::move(params)) {}

    const std::vector<ParameterSpec>& params() const { return params_; }

    /// Number of non-fixed parameters, i.e. the dimension of the unit cube.
    std::size_t dimension() const {
        return static_cast<std::size_t>(std::count_if(
            params_.begin(), params_.end(), [](const auto& p) { return p.is_tunable(); }));
    }

    const ParameterSpec* find(const std::string& name) const {
        for (const auto& p : params_)
            if (p.name == name) return &p;
        return nullptr;
    }

    bool operator==(const SearchSpace&) const = default;

private:
    std::vector<ParameterSpec> params_;
};

struct Arm {
    std::string name;
    std::map<std::string, Value> values;

    bool operator==(const Arm&) const = default;
};

struct Observation {
    double objective = 0.0;
    std::optional<double> sem;

    bool operator==(const Observation&) const = default;
};

struct Violation {
    std::string parameter;  // empty for space-level problems
    std::string message;

    bool operator==(const Violation&) const = default;
};

struct ValidationReport {
    std::vector<Violation> violations;
    std::vector<std::string> warnings;

    bool ok() const { return violations.empty(); }

    std::string describe() const {
        std::ostringstream os;
        for (const auto& v : violations)
            os << (v.parameter.empty() ? std::string("<space>") : v.parameter) << ": " << v.message
               << "\n";
        return os.str();
    }
};

/// Dimension at which the surrogate is expected to struggle; crossing it only warns.
inline constexpr std::size_t kHighDimensionWarning = 20;

inline ValidationReport validate_space(const SearchSpace& space) {
    ValidationReport report;
    auto add = [&](const std::string& name, std::string msg) {
        report.violations.push_back({name, std::move(msg)});
    };

    std::set<std::string> seen;
    for (const auto& p : space.params()) {
        if (p.name.empty()) add(p.name, "name must be nonempty");
        else if (!seen.insert(p.name).second) add(p.name, "duplicate parameter name");

        switch (p.kind) {
        case ParameterKind::range_float:
        case ParameterKind::range_int:
            if (!std::isfinite(p.lower) || !std::isfinite(p.upper)) {
                add(p.name, "bounds must be finite");
                break;
            }
            if (!(p.lower < p.upper)) add(p.name, "lower < upper");
            if (p.kind == ParameterKind::range_int) {
                if (p.lower != std::round(p.lower) || p.upper != std::round(p.upper))
                    add(p.name, "range-int bounds must be integers");
                if (p.log_scale) add(p.name, "log_scale is only supported on range-float");
            } else if (p.log_scale && !(p.lower > 0.0)) {
                add(p.name, "log_scale requires lower > 0");
            }
            break;
        case ParameterKind::choice: {
            if (p.options.size() < 2) add(p.name, "choice needs at least 2 options");
            for (std::size_t i = 0; i < p.options.size(); ++i)
                for (std::size_t j = i + 1; j < p.options.size(); ++j)
                    if (p.options[i] == p.options[j]) add(p.name, "choice options must be distinct");
            break;
        }
        case ParameterKind::fixed:
            break;
        }
    }

    const auto d = space.dimension();
    if (d == 0) add("", "at least one non-fixed parameter is required (d >= 1)");
    if (d >= kHighDimensionWarning)
        report.warnings.push_back("d = " + std::to_string(d) +
                                  " >= 20: Gaussian-process search is not expected to be effective");
    return report;
}

namespace detail {

inline double range_coordinate(const ParameterSpec& p, double x) {
    if (p.log_scale) return (std::log(x) - std::log(p.lower)) / (std::log(p.upper) - std::log(p.lower));
    return (x - p.lower) / (p.upper - p.lower);
}

inline std::size_t option_index(const ParameterSpec& p, const Value& v) {
    for (std::size_t i = 0; i < p.options.size(); ++i)
        if (p.options[i] == v) return i;
    throw StructuralError("parameter '" + p.name + "': value " + to_string(v) +
                          " is not one of the choice options");
}

}  // namespace detail

/// Checks that `arm` carries exactly one in-domain value per parameter.
inline void check_arm(const Arm& arm, const SearchSpace& space) {
    for (const auto& [name, _] : arm.values)
        if (!space.find(name)) throw StructuralError("arm has unknown parameter '" + name + "'");
    for (const auto& p : space.params()) {
        auto it = arm.values.find(p.name);
        if (it == arm.values.end()) throw StructuralError("arm is missing parameter '" + p.name + "'");
        const Value& v = it->second;
        switch (p.kind) {
        case ParameterKind::range_float: {
            auto x = as_number(v);
            if (!x) throw StructuralError("parameter '" + p.name + "' expects a number");
            if (!(*x >= p.lower && *x <= p.upper))
                throw StructuralError("parameter '" + p.name + "' value " + to_string(v) +
                                      " outside its range");
            break;
        }
        case ParameterKind::range_int: {
            const auto* i = std::get_if<std::int64_t>(&v);
            if (!i) throw StructuralError("parameter '" + p.name + "' expects an integer");
            if (*i < p.lower || *i > p.upper)
                throw StructuralError("parameter '" + p.name + "' value " + to_string(v) +
                                      " outside its range");
            break;
        }
        case ParameterKind::choice:
            detail::option_index(p, v);
            break;
        case ParameterKind::fixed:
            if (v != p.value)
                throw StructuralError("parameter '" + p.name + "' must equal its fixed value");
            break;
        }
    }
}

inline Eigen::VectorXd encode(const Arm& arm, const SearchSpace& space) {
    check_arm(arm, space);
    Eigen::VectorXd u(static_cast<Eigen::Index>(space.dimension()));
    Eigen::Index j = 0;
    for (const auto& p : space.params()) {
        const Value& v = arm.values.at(p.name);
        switch (p.kind) {
        case ParameterKind::range_float:
        case ParameterKind::range_int:
            u[j++] = std::clamp(detail::range_coordinate(p, *as_number(v)), 0.0, 1.0);
            break;
        case ParameterKind::choice:
            u[j++] = static_cast<double>(detail::option_index(p, v)) /
                     static_cast<double>(p.options.size() - 1);
            break;
        case ParameterKind::fixed:
            break;
        }
    }
    return u;
}

/// Tolerance on unit-cube coordinates accepted by decode().
inline constexpr double kUnitTolerance = 1e-12;

inline Arm decode(const Eigen::Ref<const Eigen::VectorXd>& u, const SearchSpace& space,
                  std::string name = {}) {
    if (static_cast<std::size_t>(u.size()) != space.dimension())
        throw StructuralError("unit vector has " + std::to_string(u.size()) +
                              " coordinates, space has d = " + std::to_string(space.dimension()));
    Arm arm;
    arm.name = std::move(name);
    Eigen::Index j = 0;
    for (const auto& p : space.params()) {
        if (!p.is_tunable()) {
            arm.values[p.name] = p.value;
            continue;
        }
        const double raw = u[j++];
        if (!(raw >= -kUnitTolerance && raw <= 1.0 + kUnitTolerance))
            throw DomainError("coordinate for '" + p.name + "' is outside [0,1]");
        const double c = std::clamp(raw, 0.0, 1.0);
        switch (p.kind) {
        case ParameterKind::range_float: {
            // Cube endpoints decode to the bounds exactly.
            double x = c == 0.0   ? p.lower
                       : c == 1.0 ? p.upper
                       : p.log_scale
                           ? std::exp(std::log(p.lower) + c * (std::log(p.upper) - std::log(p.lower)))
                           : p.lower + c * (p.upper - p.lower);
            arm.values[p.name] = std::clamp(x, p.lower, p.upper);
            break;
        }
        case ParameterKind::range_int: {
            double x = std::round(p.lower + c * (p.upper - p.lower));
            arm.values[p.name] = static_cast<std::int64_t>(std::clamp(x, p.lower, p.upper));
            break;
        }
        case ParameterKind::choice: {
            auto idx = static_cast<std::size_t>(std::lround(c * static_cast<double>(p.options.size() - 1)));
            arm.values[p.name] = p.options[std::min(idx, p.options.size() - 1)];
            break;
        }
        case ParameterKind::fixed:
            break;
        }
    }
    return arm;
}

/// Affine output normalization: apply(y) = (y - mean) / scale.
struct Standardizer {
    double mean = 0.0;
    double scale = 1.0;

    double apply(double y) const { return (y - mean) / scale; }
    double invert(double z) const { return z * scale + mean; }

    bool operator==(const Standardizer&) const = default;
};

/// Population (divide-by-N) moments; constant data gets scale 1.
inline Standardizer fit_standardizer(std::span<const double> ys) {
    if (ys.empty()) throw UsageError("fit_standardizer: empty input");
    const double n = static_cast<double>(ys.size());
    const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double ss = 0.0;
    for (double y : ys) {
        if (!std::isfinite(y)) throw UsageError("fit_standardizer: non-finite value");
        ss += (y - mean) * (y - mean);
    }
    const double sd = std::sqrt(ss / n);
    return {mean, sd < 1e-12 ? 1.0 : sd};
}

}  // namespace hpbo
