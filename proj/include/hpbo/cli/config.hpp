#pragma once

// Run configuration: a strict JSON schema. Every object rejects unknown keys.
//
// {
//   "space": [
//     {"name": "lr", "type": "range", "bounds": [1e-4, 1e-1], "value_type": "float", "log_scale": true},
//     {"name": "layers", "type": "range", "bounds": [1, 4], "value_type": "int"},
//     {"name": "act", "type": "choice", "values": ["relu", "tanh"]},
//     {"name": "epochs", "type": "fixed", "value": 10}
//   ],
//   "objective": {"builtin": "groupweights3d", "params": {"noise_sd": 0.01}}
//             |  {"command": "python3 train_eval.py", "timeout_s": 600},
//   "minimize": true,        // default true
//   "total_trials": 20,      // default 20
//   "init_arms": 5,          // default 5
//   "seed": 0,               // default 0
//   "threads": 1,            // default 1
//   "out_dir": "runs/demo"   // default "out"
// }

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"  // nlohmann/json, vendored

#include "hpbo/space.hpp"

namespace hpbo::cli {

using nlohmann::json;

struct BuiltinObjectiveSpec {
    std::string name;
    json params = json::object();
};

struct CommandObjectiveSpec {
    std::string command;
    double timeout_s = 600.0;
};

struct RunConfig {
    SearchSpace space;
    std::variant<BuiltinObjectiveSpec, CommandObjectiveSpec> objective;
    bool minimize = true;
    std::size_t total_trials = 20;
    std::size_t init_arms = 5;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string out_dir = "out";
};

class ConfigError : public std::runtime_error {
public:
    enum class Kind { missing_file, malformed, schema };

    ConfigError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

inline const char* to_string(ConfigError::Kind k) {
    switch (k) {
    case ConfigError::Kind::missing_file: return "missing file";
    case ConfigError::Kind::malformed: return "malformed document";
    case ConfigError::Kind::schema: return "schema violation";
    }
    return "?";
}

using hpbo::to_string;

namespace detail {

[[noreturn]] inline void schema_error(const std::string& where, const std::string& msg) {
    throw ConfigError(ConfigError::Kind::schema, where + ": " + msg);
}

inline void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) schema_error(where, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items())
        if (!ok.count(key)) schema_error(where, "unknown key \"" + key + "\"");
}

inline const json& require(const json& obj, const std::string& where, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) schema_error(where, std::string("missing required key \"") + key + "\"");
    return *it;
}

inline Value value_from_json(const json& j, const std::string& where) {
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number_float()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    schema_error(where, "values must be booleans, numbers or strings");
}

inline double number(const json& j, const std::string& where) {
    if (!j.is_number()) schema_error(where, "expected a number");
    return j.get<double>();
}

inline std::uint64_t count(const json& j, const std::string& where) {
    if (!j.is_number_integer() || j.get<std::int64_t>() < 0) schema_error(where, "expected a nonnegative integer");
    return j.get<std::uint64_t>();
}

inline ParameterSpec parameter_from_json(const json& j, std::size_t i) {
    std::string where = "space[" + std::to_string(i) + "]";
    only_keys(j, where, {"name", "type", "bounds", "value_type", "log_scale", "values", "value"});
    const json& name = require(j, where, "name");
    if (!name.is_string()) schema_error(where + ".name", "expected a string");
    where = "space[" + std::to_string(i) + "] (" + name.get<std::string>() + ")";
    const json& type = require(j, where, "type");
    if (!type.is_string()) schema_error(where + ".type", "expected a string");
    const std::string t = type.get<std::string>();

    auto forbid = [&](std::initializer_list<const char*> keys) {
        for (const char* k : keys)
            if (j.contains(k)) schema_error(where, std::string("key \"") + k + "\" does not apply to type " + t);
    };

    ParameterSpec p;
    p.name = name.get<std::string>();
    if (t == "range") {
        forbid({"values", "value"});
        const json& b = require(j, where, "bounds");
        if (!b.is_array() || b.size() != 2) schema_error(where + ".bounds", "expected [lower, upper]");
        const std::string vt = j.value("value_type", std::string("float"));
        if (vt == "float") {
            p.kind = ParameterKind::range_float;
        } else if (vt == "int") {
            p.kind = ParameterKind::range_int;
        } else {
            schema_error(where + ".value_type", "expected \"float\" or \"int\"");
        }
        p.lower = number(b[0], where + ".bounds");
        p.upper = number(b[1], where + ".bounds");
        if (j.contains("log_scale")) {
            if (!j["log_scale"].is_boolean()) schema_error(where + ".log_scale", "expected a boolean");
            p.log_scale = j["log_scale"].get<bool>();
        }
    } else if (t == "choice") {
        forbid({"bounds", "value_type", "log_scale", "value"});
        const json& vals = require(j, where, "values");
        if (!vals.is_array()) schema_error(where + ".values", "expected an array");
        p.kind = ParameterKind::choice;
        for (const auto& v : vals) p.options.push_back(value_from_json(v, where + ".values"));
    } else if (t == "fixed") {
        forbid({"bounds", "value_type", "log_scale", "values"});
        p.kind = ParameterKind::fixed;
        p.value = value_from_json(require(j, where, "value"), where + ".value");
    } else {
        schema_error(where + ".type", "expected \"range\", \"choice\" or \"fixed\", got \"" + t + "\"");
    }
    return p;
}

}  // namespace detail

/// Parameter names each builtin reads from the arm.
inline std::vector<std::string> builtin_parameter_names(const std::string& name) {
    if (name == "quadratic1d") return {"x"};
    if (name == "branin2d") return {"x1", "x2"};
    if (name == "groupweights3d") return {"w_fg", "w_rg", "w_ccg"};
    return {};
}

inline bool is_builtin(const std::string& name) { return !builtin_parameter_names(name).empty(); }

inline RunConfig parse_config_json(const json& doc) {
    using namespace detail;
    only_keys(doc, "config", {"space", "objective", "minimize", "total_trials", "init_arms", "seed", "threads",
                              "out_dir"});
    RunConfig cfg;

    const json& space = require(doc, "config", "space");
    if (!space.is_array()) schema_error("space", "expected an array of parameters");
    std::vector<ParameterSpec> params;
    for (std::size_t i = 0; i < space.size(); ++i) params.push_back(parameter_from_json(space[i], i));
    cfg.space = SearchSpace(std::move(params));

    const json& obj = require(doc, "config", "objective");
    if (!obj.is_object()) schema_error("objective", "expected an object");
    const bool has_builtin = obj.contains("builtin"), has_command = obj.contains("command");
    if (has_builtin && has_command) schema_error("objective", "set exactly one of \"builtin\" or \"command\", not both");
    if (!has_builtin && !has_command) schema_error("objective", "set exactly one of \"builtin\" or \"command\"");
    if (has_builtin) {
        only_keys(obj, "objective", {"builtin", "params"});
        if (!obj["builtin"].is_string()) schema_error("objective.builtin", "expected a string");
        BuiltinObjectiveSpec b{obj["builtin"].get<std::string>(), obj.value("params", json::object())};
        if (!is_builtin(b.name)) schema_error("objective.builtin", "unknown builtin \"" + b.name + "\"");
        if (!b.params.is_object()) schema_error("objective.params", "expected an object");
        for (const auto& pname : builtin_parameter_names(b.name)) {
            const ParameterSpec* p = cfg.space.find(pname);
            if (!p || !(p->kind == ParameterKind::range_float || p->kind == ParameterKind::fixed))
                schema_error("space", "builtin \"" + b.name + "\" needs a numeric parameter \"" + pname + "\"");
        }
        cfg.objective = std::move(b);
    } else {
        only_keys(obj, "objective", {"command", "timeout_s"});
        if (!obj["command"].is_string() || obj["command"].get<std::string>().empty())
            schema_error("objective.command", "expected a nonempty string");
        CommandObjectiveSpec c{obj["command"].get<std::string>()};
        if (obj.contains("timeout_s")) c.timeout_s = number(obj["timeout_s"], "objective.timeout_s");
        if (!(c.timeout_s > 0)) schema_error("objective.timeout_s", "must be positive");
        cfg.objective = std::move(c);
    }

    if (doc.contains("minimize")) {
        if (!doc["minimize"].is_boolean()) schema_error("minimize", "expected a boolean");
        cfg.minimize = doc["minimize"].get<bool>();
    }
    if (doc.contains("total_trials")) cfg.total_trials = count(doc["total_trials"], "total_trials");
    if (doc.contains("init_arms")) cfg.init_arms = count(doc["init_arms"], "init_arms");
    if (doc.contains("seed")) cfg.seed = count(doc["seed"], "seed");
    if (doc.contains("threads")) cfg.threads = count(doc["threads"], "threads");
    if (doc.contains("out_dir")) {
        if (!doc["out_dir"].is_string()) schema_error("out_dir", "expected a string");
        cfg.out_dir = doc["out_dir"].get<std::string>();
    }
    if (cfg.total_trials < 1) schema_error("total_trials", "must be >= 1");
    if (cfg.threads < 1) schema_error("threads", "must be >= 1");
    return cfg;
}

inline RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(ConfigError::Kind::missing_file, "cannot open config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(ConfigError::Kind::malformed, path.string() + ": " + e.what());
    }
    return parse_config_json(doc);
}

}  // namespace hpbo::cli
