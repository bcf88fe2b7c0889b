#pragma once

// External evaluator protocol. The command runs under /bin/sh -c; it receives
// one JSON document on stdin,
//     {"parameters": {"<name>": <value>, ...}}
// and must print one JSON document on stdout and exit 0:
//     {"objective": <number>, "sem": <number, optional>}
// Failures raise EvaluatorFault with kind spawn_failed, timeout, nonzero_exit
// or malformed_output.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <string>

#include "hpbo/cli/config.hpp"
#include "hpbo/loop.hpp"
#include "hpbo/space.hpp"

namespace hpbo::cli {

inline json value_to_json(const Value& v) {
    return std::visit([](const auto& x) { return json(x); }, v);
}

inline json arm_to_json(const Arm& arm) {
    json out = json::object();
    for (const auto& [name, v] : arm.values) out[name] = value_to_json(v);
    return out;
}

/// Parses the evaluator's response document.
inline Observation parse_evaluator_response(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw EvaluatorFault("malformed_output", std::string("evaluator output is not JSON: ") + e.what());
    }
    if (!doc.is_object()) throw EvaluatorFault("malformed_output", "evaluator output must be a JSON object");
    auto obj = doc.find("objective");
    if (obj == doc.end() || !obj->is_number())
        throw EvaluatorFault("malformed_output", "evaluator output lacks a numeric \"objective\"");
    Observation out{obj->get<double>(), std::nullopt};
    if (auto sem = doc.find("sem"); sem != doc.end() && !sem->is_null()) {
        if (!sem->is_number()) throw EvaluatorFault("malformed_output", "\"sem\" must be a number");
        out.sem = sem->get<double>();
    }
    return out;
}

namespace detail {

struct Fd {
    int fd = -1;
    Fd() = default;
    explicit Fd(int f) : fd(f) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    Fd(Fd&& o) noexcept : fd(o.fd) { o.fd = -1; }
    ~Fd() { reset(); }
    void reset() {
        if (fd >= 0) ::close(fd);
        fd = -1;
    }
};

/// SIGPIPE is ignored while the guard lives, so a child that never reads stdin
/// shows up as EPIPE instead of killing us.
struct IgnoreSigpipe {
    struct sigaction old {};
    IgnoreSigpipe() {
        struct sigaction sa {};
        sa.sa_handler = SIG_IGN;
        sigemptyset(&sa.sa_mask);
        ::sigaction(SIGPIPE, &sa, &old);
    }
    ~IgnoreSigpipe() { ::sigaction(SIGPIPE, &old, nullptr); }
};

}  // namespace detail

inline Observation subprocess_evaluate(const std::string& command, double timeout_s, const Arm& arm) {
    const std::string request = json{{"parameters", arm_to_json(arm)}}.dump() + "\n";

    int in_pipe[2], out_pipe[2];
    if (::pipe(in_pipe) != 0) throw EvaluatorFault("spawn_failed", "pipe() failed");
    detail::Fd in_r(in_pipe[0]), in_w(in_pipe[1]);
    if (::pipe(out_pipe) != 0) throw EvaluatorFault("spawn_failed", "pipe() failed");
    detail::Fd out_r(out_pipe[0]), out_w(out_pipe[1]);

    const pid_t pid = ::fork();
    if (pid < 0) throw EvaluatorFault("spawn_failed", "fork() failed");
    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(in_r.fd, STDIN_FILENO);
        ::dup2(out_w.fd, STDOUT_FILENO);
        ::close(in_r.fd);
        ::close(in_w.fd);
        ::close(out_r.fd);
        ::close(out_w.fd);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    in_r.reset();
    out_w.reset();

    {
        detail::IgnoreSigpipe guard;
        std::size_t off = 0;
        while (off < request.size()) {
            const ssize_t n = ::write(in_w.fd, request.data() + off, request.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                break;  // child closed stdin early; its output decides the outcome
            }
            off += static_cast<std::size_t>(n);
        }
        in_w.reset();
    }

    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
    std::string output;
    bool timed_out = false;
    char buf[4096];
    for (;;) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            timed_out = true;
            break;
        }
        pollfd pfd{out_r.fd, POLLIN, 0};
        const int rc = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
        if (rc < 0 && errno == EINTR) continue;
        if (rc <= 0) continue;
        const ssize_t n = ::read(out_r.fd, buf, sizeof buf);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        output.append(buf, static_cast<std::size_t>(n));
    }

    int status = 0;
    if (timed_out) {
        ::kill(-pid, SIGKILL);
        ::kill(pid, SIGKILL);
        ::waitpid(pid, &status, 0);
        throw EvaluatorFault("timeout", "evaluator exceeded " + std::to_string(timeout_s) + " s");
    }
    // stdout closed; give the child the remaining time to exit.
    for (;;) {
        const pid_t r = ::waitpid(pid, &status, WNOHANG);
        if (r == pid) break;
        if (r < 0 && errno != EINTR) throw EvaluatorFault("spawn_failed", "waitpid() failed");
        if (std::chrono::steady_clock::now() >= deadline) {
            ::kill(-pid, SIGKILL);
            ::kill(pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            throw EvaluatorFault("timeout", "evaluator exceeded " + std::to_string(timeout_s) + " s");
        }
        ::usleep(1000);
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        const std::string how = WIFEXITED(status) ? "exit code " + std::to_string(WEXITSTATUS(status))
                                                  : "signal " + std::to_string(WTERMSIG(status));
        throw EvaluatorFault("nonzero_exit", "evaluator terminated with " + how);
    }
    return parse_evaluator_response(output);
}

}  // namespace hpbo::cli
