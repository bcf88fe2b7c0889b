#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "hpbo/cli/config.hpp"
#include "hpbo/cli/objectives.hpp"
#include "hpbo/cli/subprocess.hpp"
#include "hpbo/cli/trial_log.hpp"
#include "hpbo/loop.hpp"

namespace hpbo::cli {

enum ExitCode : int { kExitOk = 0, kExitNoCompleted = 1, kExitConfig = 2 };

/// Full experiment state as JSON; equal experiments serialize identically.
inline json experiment_to_json(const Experiment& exp) {
    json trials = json::array();
    for (const auto& t : exp.trials()) {
        json jt = {{"index", t.index},
                   {"arm", {{"name", t.arm.name}, {"values", arm_to_json(t.arm)}}},
                   {"status", to_string(t.status)},
                   {"generator", to_string(t.generator)},
                   {"elapsed_ms", t.elapsed_ms},
                   {"metadata", t.metadata}};
        if (t.observation) {
            jt["observation"] = {{"objective", t.observation->objective}};
            if (t.observation->sem) jt["observation"]["sem"] = *t.observation->sem;
        }
        trials.push_back(std::move(jt));
    }
    json params = json::array();
    for (const auto& p : exp.space().params()) {
        json jp = {{"name", p.name}};
        switch (p.kind) {
        case ParameterKind::range_float:
        case ParameterKind::range_int:
            jp["type"] = "range";
            jp["value_type"] = p.kind == ParameterKind::range_int ? "int" : "float";
            jp["bounds"] = {p.lower, p.upper};
            jp["log_scale"] = p.log_scale;
            break;
        case ParameterKind::choice: {
            jp["type"] = "choice";
            json vals = json::array();
            for (const auto& o : p.options) vals.push_back(value_to_json(o));
            jp["values"] = std::move(vals);
            break;
        }
        case ParameterKind::fixed:
            jp["type"] = "fixed";
            jp["value"] = value_to_json(p.value);
            break;
        }
        params.push_back(std::move(jp));
    }
    return {{"space", std::move(params)},
            {"minimize", exp.minimize()},
            {"seed", exp.seed()},
            {"sobol_drawn", exp.sobol_drawn()},
            {"standardizer", {{"mean", exp.standardizer().mean}, {"scale", exp.standardizer().scale}}},
            {"metadata", exp.metadata()},
            {"trials", std::move(trials)}};
}

inline LoopOptions loop_options(const RunConfig& cfg) {
    LoopOptions opt;
    opt.strategy.total_trials = cfg.total_trials;
    opt.strategy.init_arms = std::min(cfg.init_arms, cfg.total_trials);
    opt.threads = cfg.threads;
    opt.record_timing = std::holds_alternative<CommandObjectiveSpec>(cfg.objective);
    return opt;
}

/// Builds the evaluator; builtin parameter problems surface as ConfigError.
inline Evaluator make_evaluator(const RunConfig& cfg) {
    if (const auto* b = std::get_if<BuiltinObjectiveSpec>(&cfg.objective)) return make_builtin(b->name, b->params, cfg.seed);
    const auto c = std::get<CommandObjectiveSpec>(cfg.objective);
    return [c](const Arm& arm) { return subprocess_evaluate(c.command, c.timeout_s, arm); };
}

struct RunOutcome {
    int exit_code = kExitOk;
    json report;          // empty unless exit_code == 0
    std::string message;  // human-readable summary or error
};

/// Runs the configured optimization and writes trials.csv and report.json into
/// cfg.out_dir. Nothing is written when the configuration is rejected.
inline RunOutcome run(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    Evaluator evaluate;
    std::optional<Experiment> exp;
    try {
        evaluate = make_evaluator(cfg);
        exp = new_experiment(cfg.space, cfg.minimize, cfg.seed);
    } catch (const ConfigError& e) {
        return {kExitConfig, {}, std::string("config error: ") + e.what()};
    } catch (const InvalidSpaceError& e) {
        return {kExitConfig, {}, std::string("config error: ") + e.what()};
    }

    const LoopOptions opt = loop_options(cfg);
    run_trials(*exp, evaluate, opt);

    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    write_trial_log(*exp, dir / "trials.csv");

    const std::size_t n_failed = exp->count(TrialStatus::failed);
    if (exp->count(TrialStatus::completed) == 0)
        return {kExitNoCompleted, {}, "no completed trials (" + std::to_string(n_failed) + " failed)"};

    const BestResult best = best_result(*exp, opt);
    const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
    RunOutcome out;
    out.report = {{"best_arm", arm_to_json(best.arm)},
                  {"best_trial_index", best.trial_index},
                  {"observed_objective", best.observed_objective},
                  {"predicted_mean", best.predicted_mean},
                  {"predicted_sd", best.predicted_sd},
                  {"n_trials", exp->trials().size()},
                  {"n_failed", n_failed},
                  {"seed", cfg.seed},
                  {"wall_ms", wall.count()}};
    if (best.model_hyperparams) out.report["final_theta"] = json::parse(best.model_hyperparams->describe());

    std::ofstream rep(dir / "report.json", std::ios::trunc);
    if (!rep) throw TrialLogError("cannot open " + (dir / "report.json").string() + " for writing");
    rep << out.report.dump(2) << "\n";

    std::ostringstream msg;
    msg << "best configuration (trial " << best.trial_index << "):";
    for (const auto& p : cfg.space.params()) msg << " " << p.name << "=" << to_string(best.arm.values.at(p.name));
    msg << "\nobjective " << to_string(Value{best.observed_objective}) << " (predicted "
        << to_string(Value{best.predicted_mean}) << " +/- " << to_string(Value{best.predicted_sd}) << ")";
    out.message = msg.str();
    return out;
}

/// The configuration `bench <name>` runs: the builtin on its default [0,1] space.
inline RunConfig bench_config(const std::string& name) {
    RunConfig cfg;
    cfg.space = builtin_space(name);
    cfg.objective = BuiltinObjectiveSpec{name, json::object()};
    cfg.out_dir = "bench_" + name;
    return cfg;
}

}  // namespace hpbo::cli
