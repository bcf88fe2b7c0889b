// hpbo: Bayesian hyperparameter optimization from the command line.
//
//   hpbo run <config> [--out-dir D] [--seed S] [--trials N] [--threads T]
//   hpbo validate <config>
//   hpbo bench <name> [--out-dir D] [--seed S] [--trials N] [--threads T]

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hpbo/cli/run.hpp"

namespace {

struct Overrides {
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::size_t> threads;

    void add_to(CLI::App* app) {
        app->add_option("--out-dir", out_dir, "Output directory (overrides config)");
        app->add_option("--seed", seed, "Random seed (overrides config)");
        app->add_option("--trials", trials, "Total trials (overrides config)")->check(CLI::PositiveNumber);
        app->add_option("--threads", threads, "Worker threads for model fitting")->check(CLI::PositiveNumber);
    }

    void apply(hpbo::cli::RunConfig& cfg) const {
        if (out_dir) cfg.out_dir = *out_dir;
        if (seed) cfg.seed = *seed;
        if (trials) cfg.total_trials = *trials;
        if (threads) cfg.threads = *threads;
    }
};

int execute(const hpbo::cli::RunConfig& cfg) {
    const auto outcome = hpbo::cli::run(cfg);
    (outcome.exit_code == 0 ? std::cout : std::cerr) << outcome.message << "\n";
    return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace hpbo::cli;
    CLI::App app{"Bayesian hyperparameter optimization (Gaussian process + expected improvement)"};
    app.require_subcommand(1);

    std::string run_path;
    Overrides run_over;
    auto* run_cmd = app.add_subcommand("run", "Run an optimization described by a JSON config");
    run_cmd->add_option("config", run_path, "Config file")->required();
    run_over.add_to(run_cmd);

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "Check a config file and its search space");
    validate_cmd->add_option("config", validate_path, "Config file")->required();

    std::string bench_name;
    Overrides bench_over;
    auto* bench_cmd = app.add_subcommand("bench", "Run a builtin objective with default settings");
    bench_cmd->add_option("name", bench_name, "quadratic1d | branin2d | groupweights3d")
        ->required()
        ->check(CLI::IsMember({"quadratic1d", "branin2d", "groupweights3d"}));
    bench_over.add_to(bench_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run_cmd) {
            RunConfig cfg = parse_config(run_path);
            run_over.apply(cfg);
            return execute(cfg);
        }
        if (*validate_cmd) {
            const RunConfig cfg = parse_config(validate_path);
            const auto report = hpbo::validate_space(cfg.space);
            for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
            if (!report.ok()) {
                std::cerr << report.describe();
                return kExitConfig;
            }
            std::cout << "ok: " << cfg.space.params().size() << " parameters, d = " << cfg.space.dimension() << "\n";
            return kExitOk;
        }
        RunConfig cfg = bench_config(bench_name);
        bench_over.apply(cfg);
        return execute(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return kExitConfig;
    }
}
