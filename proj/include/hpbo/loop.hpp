#pragma once

// Sequential model-based optimization: Sobol initialization, then GP + expected
// improvement, one arm per trial. Objectives are minimized internally; a
// maximize experiment negates observations before they reach the model.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hpbo/acq.hpp"
#include "hpbo/acqopt.hpp"
#include "hpbo/errors.hpp"
#include "hpbo/gp.hpp"
#include "hpbo/qmc.hpp"
#include "hpbo/space.hpp"

namespace hpbo {

inline constexpr const char* kEngineVersion = "0.1.0";

enum class TrialStatus { candidate, running, completed, failed };
enum class GeneratorTag { sobol, gpei, manual };

inline const char* to_string(TrialStatus s) {
    switch (s) {
    case TrialStatus::candidate: return "CANDIDATE";
    case TrialStatus::running: return "RUNNING";
    case TrialStatus::completed: return "COMPLETED";
    case TrialStatus::failed: return "FAILED";
    }
    return "?";
}

inline const char* to_string(GeneratorTag g) {
    switch (g) {
    case GeneratorTag::sobol: return "SOBOL";
    case GeneratorTag::gpei: return "GPEI";
    case GeneratorTag::manual: return "MANUAL";
    }
    return "?";
}

inline bool is_terminal(TrialStatus s) { return s == TrialStatus::completed || s == TrialStatus::failed; }

struct Trial {
    std::size_t index = 0;
    Arm arm;
    TrialStatus status = TrialStatus::candidate;
    GeneratorTag generator = GeneratorTag::manual;
    std::optional<Observation> observation;
    std::int64_t elapsed_ms = 0;
    std::map<std::string, std::string> metadata;

    bool operator==(const Trial&) const = default;
};

struct GenerationStrategy {
    std::size_t init_arms = 5;
    std::size_t total_trials = 20;
    std::size_t arms_per_trial = 1;
};

struct LoopOptions {
    GenerationStrategy strategy;
    std::size_t fit_restarts = 10;
    KernelFamily kernel = KernelFamily::matern52;
    AcqOptConfig acqopt;
    std::size_t threads = 1;
    /// Store measured evaluator wall time in Trial::elapsed_ms (otherwise 0).
    bool record_timing = false;
};

/// Thrown by evaluators; the loop records kind() on the FAILED trial.
class EvaluatorFault : public std::runtime_error {
public:
    EvaluatorFault(std::string kind, const std::string& what) : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

class Experiment;
Experiment new_experiment(SearchSpace space, bool minimize, std::uint64_t seed);
const Trial& suggest(Experiment& exp, const LoopOptions& opt);
const Trial& attach_trial(Experiment& exp, Arm arm);
void start_trial(Experiment& exp, std::size_t index);
void complete_trial(Experiment& exp, std::size_t index, const Observation& obs);
void fail_trial(Experiment& exp, std::size_t index, const std::string& kind, const std::string& reason);

class Experiment {
public:
    const SearchSpace& space() const { return space_; }
    bool minimize() const { return minimize_; }
    const std::vector<Trial>& trials() const { return trials_; }
    const Trial& trial(std::size_t index) const {
        if (index >= trials_.size()) throw UsageError("unknown trial index " + std::to_string(index));
        return trials_[index];
    }
    const Standardizer& standardizer() const { return standardizer_; }
    std::uint64_t seed() const { return seed_; }
    const std::map<std::string, std::string>& metadata() const { return metadata_; }
    void set_metadata(const std::string& key, std::string value) { metadata_[key] = std::move(value); }
    void record_elapsed(std::size_t index, std::int64_t ms) { mutable_trial(index).elapsed_ms = ms; }

    /// Points drawn so far from this experiment's Sobol stream.
    std::uint64_t sobol_drawn() const { return sobol_drawn_; }

    std::size_t count(TrialStatus s) const {
        return static_cast<std::size_t>(
            std::count_if(trials_.begin(), trials_.end(), [s](const Trial& t) { return t.status == s; }));
    }

    bool operator==(const Experiment&) const = default;

private:
    Experiment() = default;

    friend Experiment new_experiment(SearchSpace, bool, std::uint64_t);
    friend const Trial& suggest(Experiment&, const LoopOptions&);
    friend const Trial& attach_trial(Experiment&, Arm);
    friend void start_trial(Experiment&, std::size_t);
    friend void complete_trial(Experiment&, std::size_t, const Observation&);
    friend void fail_trial(Experiment&, std::size_t, const std::string&, const std::string&);

    Trial& mutable_trial(std::size_t index) {
        if (index >= trials_.size()) throw UsageError("unknown trial index " + std::to_string(index));
        return trials_[index];
    }

    Eigen::VectorXd next_sobol() {
        SobolEngine engine(space_.dimension());
        engine.skip(seed_ + sobol_drawn_++);
        return engine.next_point();
    }

    const Trial& add_trial(Arm arm, GeneratorTag gen) {
        Trial t;
        t.index = trials_.size();
        arm.name = "trial_" + std::to_string(t.index);
        t.arm = std::move(arm);
        t.generator = gen;
        trials_.push_back(std::move(t));
        return trials_.back();
    }

    void require_no_pending() const {
        for (const auto& t : trials_)
            if (!is_terminal(t.status))
                throw UsageError("trial " + std::to_string(t.index) + " is still " + to_string(t.status) +
                                 "; the loop runs one trial at a time");
    }

    SearchSpace space_;
    bool minimize_ = true;
    std::vector<Trial> trials_;
    Standardizer standardizer_;
    std::uint64_t seed_ = 0;
    std::uint64_t sobol_drawn_ = 0;
    std::map<std::string, std::string> metadata_;
};

/// Thrown by new_experiment when the space fails validation.
class InvalidSpaceError : public UsageError {
public:
    explicit InvalidSpaceError(ValidationReport report)
        : UsageError("invalid search space:\n" + report.describe()), report_(std::move(report)) {}
    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

inline Experiment new_experiment(SearchSpace space, bool minimize, std::uint64_t seed) {
    auto report = validate_space(space);
    if (!report.ok()) throw InvalidSpaceError(std::move(report));
    Experiment exp;
    exp.space_ = std::move(space);
    exp.minimize_ = minimize;
    exp.seed_ = seed;
    exp.metadata_["engine_version"] = kEngineVersion;
    exp.metadata_["seed"] = std::to_string(seed);
    for (std::size_t i = 0; i < report.warnings.size(); ++i)
        exp.metadata_["warning.space." + std::to_string(i)] = report.warnings[i];
    return exp;
}

/// A GP fitted to an experiment's completed trials, in internal (minimize,
/// standardized) units.
struct ExperimentModel {
    GpModel model;
    Standardizer standardizer;
    double sign = 1.0;                       // internal = sign * raw
    std::vector<std::size_t> trial_indices;  // row i of the model <-> trial trial_indices[i]

    double raw_mean(double internal_mean) const { return sign * standardizer.invert(internal_mean); }
    double raw_sd(double internal_variance) const { return standardizer.scale * std::sqrt(internal_variance); }
};

inline ExperimentModel fit_experiment_model(const Experiment& exp, const LoopOptions& opt, std::uint64_t fit_seed) {
    const double sign = exp.minimize() ? 1.0 : -1.0;
    std::vector<std::size_t> rows;
    std::vector<double> ys;
    for (const auto& t : exp.trials())
        if (t.status == TrialStatus::completed) {
            rows.push_back(t.index);
            ys.push_back(sign * t.observation->objective);
        }
    if (ys.empty()) throw UsageError("no completed trials");
    const Standardizer standardizer = fit_standardizer(ys);

    const auto n = static_cast<Eigen::Index>(ys.size());
    const auto d = static_cast<Eigen::Index>(exp.space().dimension());
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    FitOptions fo;
    fo.restarts = opt.fit_restarts;
    fo.seed = fit_seed;
    fo.family = opt.kernel;
    fo.threads = opt.threads;
    bool any_sem = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Trial& t = exp.trials()[rows[static_cast<std::size_t>(i)]];
        X.row(i) = encode(t.arm, exp.space()).transpose();
        y[i] = standardizer.apply(ys[static_cast<std::size_t>(i)]);
        if (t.observation->sem) {
            any_sem = true;
            const double s = *t.observation->sem / standardizer.scale;
            fo.fixed_noise.emplace_back(s * s);
        } else {
            fo.fixed_noise.emplace_back(std::nullopt);
        }
    }
    if (!any_sem) fo.fixed_noise.clear();
    return {fit(X, y, fo), standardizer, sign, std::move(rows)};
}

inline const Trial& attach_trial(Experiment& exp, Arm arm) {
    exp.require_no_pending();
    check_arm(arm, exp.space());
    return exp.add_trial(std::move(arm), GeneratorTag::manual);
}

inline const Trial& suggest(Experiment& exp, const LoopOptions& opt) {
    const auto& strategy = opt.strategy;
    if (strategy.arms_per_trial != 1) throw UsageError("only one arm per trial is supported");
    if (strategy.init_arms > strategy.total_trials) throw UsageError("init_arms exceeds total_trials");
    exp.require_no_pending();
    const std::size_t completed = exp.count(TrialStatus::completed);
    const std::size_t started = exp.trials().size() - exp.count(TrialStatus::failed);
    if (started >= strategy.total_trials)
        throw UsageError("trial budget of " + std::to_string(strategy.total_trials) + " is exhausted");

    const std::size_t index = exp.trials().size();
    const SearchSpace& space = exp.space();
    const std::size_t d = space.dimension();
    if (completed < strategy.init_arms || completed == 0)
        return exp.add_trial(decode(exp.next_sobol(), space), GeneratorTag::sobol);

    const std::string tag = "trial_" + std::to_string(index);
    try {
        const ExperimentModel em = fit_experiment_model(exp, opt, (exp.seed() + index) % 65536);
        exp.standardizer_ = em.standardizer;
        exp.metadata_["last_theta"] = em.model.hyperparams().describe();
        AcquisitionSpec spec;
        spec.kind = AcquisitionKind::ei;
        spec.incumbent = incumbent_value(em.model);
        AcqOptConfig cfg = opt.acqopt;
        cfg.seed = (static_cast<std::uint64_t>(index) * cfg.candidate_count) % (1u << 24);
        cfg.threads = opt.threads;
        const AcqOptResult best = maximize_acquisition(em.model, spec, d, cfg);

        Arm arm = decode(best.point, space);
        const Eigen::VectorXd u = encode(arm, space);
        bool duplicate = false;
        for (const auto& t : exp.trials())
            if ((encode(t.arm, space) - u).lpNorm<Eigen::Infinity>() <= 1e-9) {
                duplicate = true;
                break;
            }
        if (!duplicate) return exp.add_trial(std::move(arm), GeneratorTag::gpei);
        exp.metadata_["warning." + tag] = "GPEI proposed an existing arm; fell back to Sobol";
    } catch (const std::exception& e) {
        exp.metadata_["warning." + tag] = std::string("GP step failed (") + e.what() + "); fell back to Sobol";
    }
    return exp.add_trial(decode(exp.next_sobol(), space), GeneratorTag::sobol);
}

inline void start_trial(Experiment& exp, std::size_t index) {
    Trial& t = exp.mutable_trial(index);
    if (t.status != TrialStatus::candidate)
        throw UsageError("trial " + std::to_string(index) + " cannot start from " + to_string(t.status));
    t.status = TrialStatus::running;
}

inline void fail_trial(Experiment& exp, std::size_t index, const std::string& kind, const std::string& reason) {
    Trial& t = exp.mutable_trial(index);
    if (is_terminal(t.status))
        throw UsageError("trial " + std::to_string(index) + " is already " + to_string(t.status));
    t.status = TrialStatus::failed;
    t.observation.reset();
    t.metadata["fault_kind"] = kind;
    t.metadata["fault"] = reason;
}

inline void complete_trial(Experiment& exp, std::size_t index, const Observation& obs) {
    Trial& t = exp.mutable_trial(index);
    if (is_terminal(t.status))
        throw UsageError("trial " + std::to_string(index) + " is already " + to_string(t.status));
    const bool sem_ok = !obs.sem || (std::isfinite(*obs.sem) && *obs.sem >= 0);
    if (!std::isfinite(obs.objective) || !sem_ok) {
        const std::string reason = !std::isfinite(obs.objective) ? "non-finite objective" : "invalid sem";
        fail_trial(exp, index, "invalid_observation", reason);
        exp.metadata_["fault.trial_" + std::to_string(index)] = reason;
        return;
    }
    t.status = TrialStatus::completed;
    t.observation = obs;
}

struct BestResult {
    Arm arm;
    std::size_t trial_index = 0;
    double observed_objective = 0.0;
    double predicted_mean = 0.0;
    double predicted_sd = 0.0;
    std::optional<GpHyperparams> model_hyperparams;
};

/// Best completed arm. Noise-free histories pick the best observed value; with
/// any sem > 0 the arm with the best posterior mean under a final fit wins.
inline BestResult best_result(const Experiment& exp, const LoopOptions& opt = {}) {
    if (exp.count(TrialStatus::completed) == 0) throw UsageError("no completed trials");
    bool noisy = false;
    for (const auto& t : exp.trials())
        if (t.status == TrialStatus::completed && t.observation->sem && *t.observation->sem > 0) noisy = true;

    std::optional<ExperimentModel> em;
    try {
        em = fit_experiment_model(exp, opt, (exp.seed() + exp.trials().size()) % 65536);
    } catch (const NumericalError&) {
        if (noisy) throw;
    }

    std::size_t best_row = 0;
    std::optional<PosteriorSummary> post;
    if (em) post = posterior(em->model, em->model.inputs());

    std::vector<std::size_t> rows;
    for (const auto& t : exp.trials())
        if (t.status == TrialStatus::completed) rows.push_back(t.index);
    const double sign = exp.minimize() ? 1.0 : -1.0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const double cur = noisy ? post->means[static_cast<Eigen::Index>(r)]
                                 : sign * exp.trials()[rows[r]].observation->objective;
        const double inc = noisy ? post->means[static_cast<Eigen::Index>(best_row)]
                                 : sign * exp.trials()[rows[best_row]].observation->objective;
        if (cur < inc) best_row = r;
    }

    const Trial& t = exp.trials()[rows[best_row]];
    BestResult out;
    out.arm = t.arm;
    out.trial_index = t.index;
    out.observed_objective = t.observation->objective;
    if (em) {
        const auto i = static_cast<Eigen::Index>(best_row);
        out.predicted_mean = em->raw_mean(post->means[i]);
        out.predicted_sd = em->raw_sd(post->variances[i]);
        out.model_hyperparams = em->model.hyperparams();
    } else {
        out.predicted_mean = t.observation->objective;
        out.predicted_sd = 0.0;
    }
    return out;
}

using Evaluator = std::function<Observation(const Arm&)>;

/// Runs suggest / evaluate / complete until the trial budget is spent.
/// Evaluator exceptions become FAILED trials; FAILED trials consume budget.
inline void run_trials(Experiment& exp, const Evaluator& evaluate, const LoopOptions& opt) {
    while (exp.trials().size() < opt.strategy.total_trials) {
        const std::size_t index = suggest(exp, opt).index;
        start_trial(exp, index);
        const auto t0 = std::chrono::steady_clock::now();
        std::optional<Observation> obs;
        try {
            obs = evaluate(exp.trial(index).arm);
        } catch (const EvaluatorFault& e) {
            fail_trial(exp, index, e.kind(), e.what());
        } catch (const std::exception& e) {
            fail_trial(exp, index, "exception", e.what());
        }
        if (obs) complete_trial(exp, index, *obs);
        if (opt.record_timing) {
            const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
            exp.record_elapsed(index, ms.count());
        }
    }
}

struct OptimizeResult {
    BestResult best;
    Experiment experiment;
};

/// One-call driver: builds the experiment, runs every trial and returns the
/// best configuration together with the full history. The final model's
/// hyperparameters are stored under metadata "final_theta".
inline OptimizeResult optimize(const SearchSpace& space, const Evaluator& evaluate, bool minimize = true,
                               std::size_t total_trials = 20, std::uint64_t seed = 0, LoopOptions opt = {}) {
    opt.strategy.total_trials = total_trials;
    opt.strategy.init_arms = std::min(opt.strategy.init_arms, total_trials);
    Experiment exp = new_experiment(space, minimize, seed);
    run_trials(exp, evaluate, opt);
    BestResult best = best_result(exp, opt);
    if (best.model_hyperparams) exp.set_metadata("final_theta", best.model_hyperparams->describe());
    return {std::move(best), std::move(exp)};
}

}  // namespace hpbo
