#pragma once

// Projected quasi-Newton ascent on a box. Used for marginal-likelihood fitting.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Core>

#include "hpbo/errors.hpp"

namespace hpbo::detail {

struct BoxBfgsOptions {
    int max_iters = 200;
    double grad_tol = 1e-6;
    double max_step = 2.0;  // inf-norm cap on a single step
};

struct BoxBfgsResult {
    Eigen::VectorXd x;
    double value = -std::numeric_limits<double>::infinity();
    int iterations = 0;
};

/// `fg(x, grad)` returns f(x) and fills grad. It may throw NumericalError, which
/// is treated as f = -inf at that point. The returned value is never below f(x0).
inline BoxBfgsResult maximize_box(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& fg,
    Eigen::VectorXd x0, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
    const BoxBfgsOptions& opt = {}) {
    const Eigen::Index n = x0.size();
    auto project = [&](Eigen::VectorXd v) { return v.cwiseMax(lo).cwiseMin(hi).eval(); };
    auto safe_eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        try {
            double f = fg(x, g);
            return std::isfinite(f) && g.allFinite() ? f : -std::numeric_limits<double>::infinity();
        } catch (const NumericalError&) {
            return -std::numeric_limits<double>::infinity();
        }
    };

    BoxBfgsResult res;
    res.x = project(std::move(x0));
    Eigen::VectorXd g(n);
    res.value = safe_eval(res.x, g);
    if (!std::isfinite(res.value)) throw NumericalError("objective is not finite at the start point");

    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
    bool fresh = true;
    Eigen::VectorXd gn(n);

    for (; res.iterations < opt.max_iters; ++res.iterations) {
        // Projected gradient: drop components pushing against an active bound.
        Eigen::VectorXd pg = g;
        for (Eigen::Index j = 0; j < n; ++j) {
            if ((res.x[j] <= lo[j] && g[j] < 0) || (res.x[j] >= hi[j] && g[j] > 0)) pg[j] = 0;
        }
        if (pg.lpNorm<Eigen::Infinity>() < opt.grad_tol) break;

        Eigen::VectorXd dir = H * pg;
        for (Eigen::Index j = 0; j < n; ++j)
            if (pg[j] == 0) dir[j] = 0;
        if (dir.dot(pg) <= 0) {
            H.setIdentity();
            fresh = true;
            dir = pg;
        }
        const double dn = dir.lpNorm<Eigen::Infinity>();
        if (dn > opt.max_step) dir *= opt.max_step / dn;

        double t = 1.0;
        bool accepted = false;
        Eigen::VectorXd xn;
        double fn = 0;
        for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
            xn = project(res.x + t * dir);
            fn = safe_eval(xn, gn);
            if (std::isfinite(fn) && fn >= res.value + 1e-4 * g.dot(xn - res.x) && fn >= res.value) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (fresh) break;
            H.setIdentity();
            fresh = true;
            continue;
        }

        const Eigen::VectorXd s = xn - res.x;
        // Curvature pair for minimizing -f.
        const Eigen::VectorXd yv = g - gn;
        const double sy = s.dot(yv);
        const double improvement = fn - res.value;
        res.x = xn;
        res.value = fn;
        g = gn;
        if (sy > 1e-12) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
            H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) +
                rho * s * s.transpose();
            fresh = false;
        }
        if (s.lpNorm<Eigen::Infinity>() < 1e-12 && improvement <= 0) break;
    }
    return res;
}

}  // namespace hpbo::detail
