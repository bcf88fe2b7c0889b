#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "hpbo/cli/run.hpp"

using namespace hpbo;
using namespace hpbo::cli;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        path_ = fs::temp_directory_path() /
                (std::string("hpbo_") + info->test_suite_name() + "_" + info->name() + "_" + std::to_string(::getpid()));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kGroupSpace = R"([
  {"name": "w_fg", "type": "range", "bounds": [0, 1]},
  {"name": "w_rg", "type": "range", "bounds": [0, 1]},
  {"name": "w_ccg", "type": "range", "bounds": [0, 1]}])";

RunConfig quadratic_config(const fs::path& out, std::size_t trials = 8) {
    RunConfig cfg = bench_config("quadratic1d");
    cfg.out_dir = out.string();
    cfg.total_trials = trials;
    return cfg;
}

int run_cli(const std::string& args) {
    const int rc = std::system((std::string(HPBO_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(ParseConfig, MinimalConfigGetsDefaults) {
    auto cfg = parse_config_json(json::parse(std::string(R"({"space": )") + kGroupSpace +
                                             R"(, "objective": {"builtin": "groupweights3d"}})"));
    EXPECT_EQ(cfg.total_trials, 20u);
    EXPECT_TRUE(cfg.minimize);
    EXPECT_EQ(cfg.seed, 0u);
    EXPECT_EQ(cfg.init_arms, 5u);
    EXPECT_EQ(cfg.space.dimension(), 3u);
    EXPECT_EQ(std::get<BuiltinObjectiveSpec>(cfg.objective).name, "groupweights3d");
}

TEST(ParseConfig, FullParameterSchema) {
    auto cfg = parse_config_json(json::parse(R"({
      "space": [
        {"name": "lr", "type": "range", "bounds": [1e-4, 1e-1], "value_type": "float", "log_scale": true},
        {"name": "layers", "type": "range", "bounds": [1, 4], "value_type": "int"},
        {"name": "act", "type": "choice", "values": ["relu", "tanh"]},
        {"name": "epochs", "type": "fixed", "value": 10}],
      "objective": {"command": "python3 eval.py", "timeout_s": 30},
      "minimize": false, "total_trials": 7, "seed": 3, "out_dir": "somewhere"})"));
    const auto& ps = cfg.space.params();
    ASSERT_EQ(ps.size(), 4u);
    EXPECT_EQ(ps[0].kind, ParameterKind::range_float);
    EXPECT_TRUE(ps[0].log_scale);
    EXPECT_EQ(ps[1].kind, ParameterKind::range_int);
    EXPECT_EQ(ps[2].kind, ParameterKind::choice);
    EXPECT_EQ(ps[3].kind, ParameterKind::fixed);
    EXPECT_EQ(std::get<std::int64_t>(ps[3].value), 10);
    const auto& c = std::get<CommandObjectiveSpec>(cfg.objective);
    EXPECT_EQ(c.command, "python3 eval.py");
    EXPECT_EQ(c.timeout_s, 30.0);
    EXPECT_FALSE(cfg.minimize);
    EXPECT_EQ(cfg.total_trials, 7u);
    EXPECT_EQ(cfg.out_dir, "somewhere");
}

TEST(ParseConfig, DistinctErrorKinds) {
    TempDir dir;
    try {
        parse_config(dir.path() / "absent.json");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.kind(), ConfigError::Kind::missing_file);
    }
    try {
        parse_config(write_file(dir.path() / "bad.json", "{not json"));
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.kind(), ConfigError::Kind::malformed);
    }
    try {
        parse_config(write_file(dir.path() / "typo.json", std::string(R"({"space": )") + kGroupSpace +
                                                              R"(, "objective": {"builtin": "groupweights3d"}, "trails": 5})"));
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.kind(), ConfigError::Kind::schema);
        EXPECT_NE(std::string(e.what()).find("trails"), std::string::npos);
    }
}

TEST(ParseConfig, BothObjectiveKindsIsSchemaError) {
    auto doc = json::parse(std::string(R"({"space": )") + kGroupSpace +
                           R"(, "objective": {"builtin": "groupweights3d", "command": "true"}})");
    try {
        parse_config_json(doc);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.kind(), ConfigError::Kind::schema);
    }
    doc["objective"] = json::object();
    EXPECT_THROW(parse_config_json(doc), ConfigError);
    doc["objective"] = {{"builtin", "branin2d"}};
    EXPECT_THROW(parse_config_json(doc), ConfigError);  // space lacks x1, x2
    doc["objective"] = {{"builtin", "groupweights3d"}};
    doc["total_trials"] = 0;
    EXPECT_THROW(parse_config_json(doc), ConfigError);
}

TEST(Builtins, KnownValues) {
    EXPECT_EQ(builtin_objective("quadratic1d", json::object(), Arm{"", {{"x", 0.3}}}).objective, 0.0);
    const json noiseless = {{"noise_sd", 0.0}};
    auto o = builtin_objective("groupweights3d", noiseless, Arm{"", {{"w_fg", 0.86}, {"w_rg", 0.89}, {"w_ccg", 0.31}}});
    EXPECT_EQ(o.objective, 0.1 * 0.86 * 0.89);
    EXPECT_FALSE(o.sem);
    EXPECT_THROW(builtin_objective("nope", json::object(), Arm{}), UsageError);
    EXPECT_THROW(make_builtin("groupweights3d", {{"noise_sd", -1.0}}), ConfigError);
}

TEST(Builtins, BraninGridOracle) {
    // Known global minimisers of Branin, mapped into the unit square.
    const double pi = std::numbers::pi;
    for (auto [x1, x2] : {std::pair{-pi, 12.275}, std::pair{pi, 2.275}, std::pair{9.42478, 2.475}})
        EXPECT_NEAR(branin_unit((x1 + 5) / 15, x2 / 15), kBraninMinimum, 1e-5);
    double grid_min = std::numeric_limits<double>::infinity();
    const int n = 1000;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) grid_min = std::min(grid_min, branin_unit(i / (n - 1.0), j / (n - 1.0)));
    EXPECT_NEAR(grid_min, 0.397887, 1e-3);
    EXPECT_GE(grid_min, kBraninMinimum);
}

TEST(Builtins, GroupWeightsNoiseIsSeededAndRepeatable) {
    auto f = make_builtin("groupweights3d", {{"noise_sd", 0.01}}, 4);
    Arm a{"", {{"w_fg", 0.2}, {"w_rg", 0.5}, {"w_ccg", 0.9}}};
    auto o1 = f(a), o2 = f(a);
    EXPECT_EQ(o1.objective, o2.objective);
    EXPECT_EQ(o1.sem, 0.01);
    EXPECT_NE(o1.objective, make_builtin("groupweights3d", {{"noise_sd", 0.01}}, 5)(a).objective);
    GroupWeightsBench b;
    EXPECT_NEAR(o1.objective, b.noise_free(0.2, 0.5, 0.9), 0.06);
}

TEST(Subprocess, EchoStyleChildren) {
    Arm a{"a", {{"x", 0.25}, {"name", std::string("relu")}}};
    auto o = subprocess_evaluate("cat >/dev/null; echo '{\"objective\": 1.0}'", 10, a);
    EXPECT_EQ(o.objective, 1.0);
    EXPECT_FALSE(o.sem);
    o = subprocess_evaluate("cat >/dev/null; echo '{\"objective\": 1.0, \"sem\": 0.1}'", 10, a);
    EXPECT_EQ(o.sem, 0.1);
    // The request document reaches the child intact.
    o = subprocess_evaluate(
        "python3 -c 'import json,sys; p=json.load(sys.stdin)[\"parameters\"]; "
        "print(json.dumps({\"objective\": p[\"x\"] * 4 + len(p[\"name\"])}))'",
        20, a);
    EXPECT_EQ(o.objective, 5.0);
}

TEST(Subprocess, FaultKinds) {
    Arm a{"a", {{"x", 0.5}}};
    auto kind_of = [&](const std::string& cmd, double timeout) {
        try {
            subprocess_evaluate(cmd, timeout, a);
        } catch (const EvaluatorFault& e) {
            return e.kind();
        }
        return std::string("none");
    };
    EXPECT_EQ(kind_of("echo oops", 10), "malformed_output");
    EXPECT_EQ(kind_of("true", 10), "malformed_output");
    EXPECT_EQ(kind_of("echo '{\"objective\": 1}'; exit 3", 10), "nonzero_exit");
    const auto t0 = std::chrono::steady_clock::now();
    EXPECT_EQ(kind_of("sleep 30", 0.3), "timeout");
    EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(5));
    EXPECT_EQ(kind_of("echo '{\"objective\": \"high\"}'", 10), "malformed_output");
}

TEST(TrialLog, EmptyExperimentIsHeaderOnly) {
    TempDir dir;
    SearchSpace s({ParameterSpec::range_float("x", 0, 1), ParameterSpec::range_int("n", 1, 5)});
    auto exp = new_experiment(s, true, 0);
    write_trial_log(exp, dir.path() / "trials.csv");
    EXPECT_EQ(slurp(dir.path() / "trials.csv"), "trial_index,generator,x,n,objective,sem,status,elapsed_ms\n");
    EXPECT_TRUE(read_trial_log(dir.path() / "trials.csv", s).empty());
}

TEST(TrialLog, RoundTripsRecords) {
    TempDir dir;
    SearchSpace s({ParameterSpec::range_float("x", 0, 1), ParameterSpec::range_int("n", 1, 5),
                   ParameterSpec::choice("act", {std::string("re,lu"), std::string("ta\"nh")}),
                   ParameterSpec::fixed("flag", true)});
    auto exp = new_experiment(s, true, 0);
    complete_trial(exp, attach_trial(exp, Arm{"", {{"x", 0.1 + 0.2}, {"n", std::int64_t{3}},
                                                   {"act", std::string("re,lu")}, {"flag", true}}})
                            .index,
                   {1.0 / 3.0, 0.125});
    fail_trial(exp, attach_trial(exp, Arm{"", {{"x", 1e-300}, {"n", std::int64_t{5}}, {"act", std::string("ta\"nh")},
                                               {"flag", true}}})
                        .index,
               "crash", "boom");
    complete_trial(exp, attach_trial(exp, Arm{"", {{"x", 0.7}, {"n", std::int64_t{1}}, {"act", std::string("re,lu")},
                                                   {"flag", true}}})
                            .index,
                   {-2.5e17, std::nullopt});
    const auto path = dir.path() / "trials.csv";
    write_trial_log(exp, path);
    const auto back = read_trial_log(path, s);
    EXPECT_EQ(back, trial_records(exp));
    EXPECT_EQ(std::get<double>(back[0].values[0]), 0.1 + 0.2);
    EXPECT_FALSE(back[1].objective);
    EXPECT_FALSE(back[1].sem);
    EXPECT_EQ(back[1].status, "FAILED");
    EXPECT_THROW(read_trial_log(dir.path() / "missing.csv", s), TrialLogError);
}

TEST(Run, TwentyTrialGroupWeights) {
    TempDir dir;
    RunConfig cfg = bench_config("groupweights3d");
    cfg.out_dir = (dir.path() / "out").string();
    const auto outcome = run(cfg);
    ASSERT_EQ(outcome.exit_code, kExitOk) << outcome.message;
    const auto csv = slurp(dir.path() / "out" / "trials.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 21);
    const json rep = json::parse(slurp(dir.path() / "out" / "report.json"));
    for (const char* k : {"w_fg", "w_rg", "w_ccg"}) {
        EXPECT_GE(rep["best_arm"][k].get<double>(), 0.0);
        EXPECT_LE(rep["best_arm"][k].get<double>(), 1.0);
    }
    for (const char* k : {"observed_objective", "predicted_mean", "predicted_sd", "n_trials", "n_failed", "seed",
                          "wall_ms", "best_trial_index"})
        EXPECT_TRUE(rep.contains(k)) << k;
    EXPECT_EQ(rep["n_trials"], 20);
    EXPECT_EQ(rep["n_failed"], 0);
    for (const auto& r : read_trial_log(dir.path() / "out" / "trials.csv", cfg.space)) {
        EXPECT_EQ(r.status, "COMPLETED");
        EXPECT_TRUE(r.objective && std::isfinite(*r.objective));
    }
}

TEST(Run, AlwaysFaultingCommandExitsOne) {
    TempDir dir;
    RunConfig cfg = quadratic_config(dir.path() / "out", 20);
    cfg.objective = CommandObjectiveSpec{"exit 1", 5};
    const auto outcome = run(cfg);
    EXPECT_EQ(outcome.exit_code, kExitNoCompleted);
    EXPECT_NE(outcome.message.find("no completed trials"), std::string::npos);
    const auto records = read_trial_log(dir.path() / "out" / "trials.csv", cfg.space);
    ASSERT_EQ(records.size(), 20u);
    for (const auto& r : records) {
        EXPECT_EQ(r.status, "FAILED");
        EXPECT_FALSE(r.objective);
        EXPECT_FALSE(r.sem);
    }
    EXPECT_FALSE(fs::exists(dir.path() / "out" / "report.json"));
}

TEST(Run, ConfigErrorsWriteNothing) {
    TempDir dir;
    RunConfig cfg = quadratic_config(dir.path() / "out");
    cfg.space = SearchSpace({ParameterSpec::range_float("x", 1, 0)});
    EXPECT_EQ(run(cfg).exit_code, kExitConfig);
    cfg = quadratic_config(dir.path() / "out");
    cfg.objective = BuiltinObjectiveSpec{"groupweights3d", {{"bogus", 1}}};
    EXPECT_EQ(run(cfg).exit_code, kExitConfig);
    EXPECT_FALSE(fs::exists(dir.path() / "out"));
}

TEST(Run, IdenticalConfigsGiveIdenticalLogs) {
    TempDir dir;
    RunConfig a = quadratic_config(dir.path() / "a", 10), b = quadratic_config(dir.path() / "b", 10);
    b.threads = 3;
    ASSERT_EQ(run(a).exit_code, 0);
    ASSERT_EQ(run(b).exit_code, 0);
    EXPECT_EQ(slurp(dir.path() / "a" / "trials.csv"), slurp(dir.path() / "b" / "trials.csv"));
    json ra = json::parse(slurp(dir.path() / "a" / "report.json"));
    json rb = json::parse(slurp(dir.path() / "b" / "report.json"));
    ra.erase("wall_ms");
    rb.erase("wall_ms");
    EXPECT_EQ(ra, rb);
}

TEST(ExperimentJson, EqualExperimentsSerializeIdentically) {
    auto e1 = optimize(builtin_space("quadratic1d"), make_builtin("quadratic1d", json::object()), true, 7, 2).experiment;
    auto e2 = optimize(builtin_space("quadratic1d"), make_builtin("quadratic1d", json::object()), true, 7, 2).experiment;
    EXPECT_EQ(experiment_to_json(e1).dump(), experiment_to_json(e2).dump());
    EXPECT_EQ(experiment_to_json(e1)["trials"].size(), 7u);
}

TEST(CliBinary, ExitCodes) {
    TempDir dir;
    const auto good = write_file(dir.path() / "good.json",
                                 R"({"space": [{"name": "x", "type": "range", "bounds": [0, 1]}],
                                     "objective": {"builtin": "quadratic1d"}, "total_trials": 6})");
    const auto typo = write_file(dir.path() / "typo.json",
                                 R"({"space": [{"name": "x", "type": "range", "bounds": [0, 1]}],
                                     "objective": {"builtin": "quadratic1d"}, "trails": 6})");
    const auto fails = write_file(dir.path() / "fails.json",
                                  R"({"space": [{"name": "x", "type": "range", "bounds": [0, 1]}],
                                      "objective": {"command": "exit 2"}, "total_trials": 3})");
    const std::string out = (dir.path() / "o").string();
    EXPECT_EQ(run_cli("validate " + good.string()), 0);
    EXPECT_EQ(run_cli("validate " + typo.string()), 2);
    EXPECT_EQ(run_cli("run " + typo.string() + " --out-dir " + out), 2);
    EXPECT_FALSE(fs::exists(out));
    EXPECT_EQ(run_cli("run " + good.string() + " --out-dir " + out + " --trials 4 --seed 9"), 0);
    EXPECT_EQ(read_trial_log(fs::path(out) / "trials.csv", builtin_space("quadratic1d")).size(), 4u);
    EXPECT_EQ(json::parse(slurp(fs::path(out) / "report.json"))["seed"], 9);
    EXPECT_EQ(run_cli("run " + fails.string() + " --out-dir " + out + "2"), 1);
    EXPECT_EQ(run_cli("bench nope"), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    EXPECT_EQ(run_cli("bench quadratic1d --trials 3 --out-dir " + (dir.path() / "b").string()), 0);
}
