#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "hpbo/acq.hpp"
#include "hpbo/detail/parallel.hpp"
#include "hpbo/errors.hpp"
#include "hpbo/gp.hpp"
#include "hpbo/qmc.hpp"

namespace hpbo {

struct AcqOptConfig {
    std::size_t candidate_count = 256;
    std::size_t refine_count = 8;
    std::size_t max_local_iters = 100;
    double tol = 1e-9;
    std::uint64_t seed = 0;  // fast-forwards the candidate Sobol stream
    std::size_t threads = 1;
};

struct AcqOptResult {
    Eigen::VectorXd point;
    double value = -std::numeric_limits<double>::infinity();
    std::size_t candidate_index = 0;  // which candidate the winning refinement started from
};

namespace detail {

/// Coordinate-wise ascent: per coordinate, fit a parabola through three probes
/// and take its vertex when concave, otherwise step uphill by the current
/// radius. Radii grow on success and halve on failure; every iterate stays in
/// the unit cube. Only strict improvements are accepted.
template <typename F>
double refine_coordinatewise(F&& f, Eigen::VectorXd& x, double fx, std::size_t max_sweeps, double tol) {
    const Eigen::Index d = x.size();
    Eigen::VectorXd radius = Eigen::VectorXd::Constant(d, 0.05);
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        if (radius.maxCoeff() < tol) break;
        for (Eigen::Index j = 0; j < d; ++j) {
            if (radius[j] < tol) continue;
            const double xj = x[j];
            const double h = std::min(1e-4, 0.5 * radius[j]);
            const double lo = std::max(0.0, xj - h), hi = std::min(1.0, xj + h);
            Eigen::VectorXd probe = x;
            probe[j] = lo;
            const double flo = lo < xj ? f(probe) : fx;
            probe[j] = hi;
            const double fhi = hi > xj ? f(probe) : fx;

            double step;
            const double span = hi - lo;
            const double grad = span > 0 ? (fhi - flo) / span : 0.0;
            double curv = 0.0;
            if (lo < xj && hi > xj) curv = (fhi - 2.0 * fx + flo) / (h * h);
            if (curv < 0.0) step = -grad / curv;
            else if (grad != 0.0) step = std::copysign(radius[j], grad);
            else step = 0.0;
            step = std::clamp(step, -radius[j], radius[j]);

            // The probes themselves are candidates too.
            double best_val = fx;
            double best_xj = xj;
            if (flo > best_val) { best_val = flo; best_xj = lo; }
            if (fhi > best_val) { best_val = fhi; best_xj = hi; }
            const double target = std::clamp(xj + step, 0.0, 1.0);
            if (target != xj && target != lo && target != hi) {
                probe[j] = target;
                const double ft = f(probe);
                if (ft > best_val) { best_val = ft; best_xj = target; }
            }
            if (best_val > fx) {
                x[j] = best_xj;
                fx = best_val;
                radius[j] = std::min(0.5, 2.0 * radius[j]);
            } else {
                radius[j] *= 0.5;
            }
        }
    }
    return fx;
}

}  // namespace detail

/// argmax of the acquisition over [0,1]^d from Sobol candidates plus local refinement.
inline AcqOptResult maximize_acquisition(const GpModel& model, const AcquisitionSpec& spec, std::size_t d,
                                         const AcqOptConfig& cfg = {}) {
    if (d < 1) throw UsageError("maximize_acquisition: d must be >= 1");
    if (static_cast<Eigen::Index>(d) != model.dimension())
        throw StructuralError("maximize_acquisition: d does not match the model dimension");
    if (cfg.candidate_count < 1 || cfg.refine_count < 1 || cfg.max_local_iters < 1 ||
        cfg.refine_count > cfg.candidate_count || !(cfg.tol > 0))
        throw UsageError("maximize_acquisition: invalid configuration");

    SobolEngine engine(d);
    if (cfg.seed) engine.skip(cfg.seed);
    const Eigen::MatrixXd cand = engine.next(cfg.candidate_count);

    // Points are scored one at a time so the result cannot depend on batching.
    auto f = [&](const Eigen::VectorXd& x) {
        const double v = score(model, spec, x.transpose())[0];
        return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    };

    std::vector<double> scores(cfg.candidate_count);
    detail::parallel_for(cfg.candidate_count, cfg.threads,
                         [&](std::size_t i) { scores[i] = f(cand.row(static_cast<Eigen::Index>(i)).transpose()); });
    if (std::none_of(scores.begin(), scores.end(), [](double v) { return std::isfinite(v); }))
        throw NumericalError("acquisition is non-finite at every candidate");

    std::vector<std::size_t> order(cfg.candidate_count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    order.resize(cfg.refine_count);
    std::sort(order.begin(), order.end());

    std::vector<Eigen::VectorXd> refined(order.size());
    std::vector<double> values(order.size());
    detail::parallel_for(order.size(), cfg.threads, [&](std::size_t k) {
        Eigen::VectorXd x = cand.row(static_cast<Eigen::Index>(order[k])).transpose();
        values[k] = detail::refine_coordinatewise(f, x, scores[order[k]], cfg.max_local_iters, cfg.tol);
        refined[k] = std::move(x);
    });

    std::size_t best = 0;
    for (std::size_t k = 1; k < order.size(); ++k)
        if (values[k] > values[best]) best = k;
    return {std::move(refined[best]), values[best], order[best]};
}

}  // namespace hpbo
