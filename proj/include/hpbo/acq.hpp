#pragma once

// Acquisition functions. Everything here assumes the objective is minimized;
// returned scores are "larger is better".

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Core>

#include "hpbo/errors.hpp"
#include "hpbo/gp.hpp"

namespace hpbo {

enum class AcquisitionKind { ei, mc_ei, pi, ucb };

struct AcquisitionSpec {
    AcquisitionKind kind = AcquisitionKind::ei;
    double incumbent = 0.0;
    double beta = 2.0;
    std::size_t mc_samples = 512;
    std::uint64_t seed = 0;
};

/// Below this posterior sd the closed forms switch to their sigma -> 0 limits.
inline constexpr double kSigmaFloor = 1e-12;

inline double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2); }

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double ei_value(double mean, double sd, double incumbent) {
    if (sd < kSigmaFloor) return std::max(incumbent - mean, 0.0);
    const double g = (incumbent - mean) / sd;
    return std::max(sd * (g * std_normal_cdf(g) + std_normal_pdf(g)), 0.0);
}

inline double pi_value(double mean, double sd, double incumbent) {
    if (sd < kSigmaFloor) return mean < incumbent ? 1.0 : 0.0;
    return std_normal_cdf((incumbent - mean) / sd);
}

inline double ucb_value(double mean, double sd, double beta) { return -(mean - beta * sd); }

inline Eigen::VectorXd ei(const PosteriorSummary& s, double incumbent) {
    Eigen::VectorXd out(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) out[i] = ei_value(s.means[i], std::sqrt(s.variances[i]), incumbent);
    return out;
}

inline Eigen::VectorXd pi(const PosteriorSummary& s, double incumbent) {
    Eigen::VectorXd out(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) out[i] = pi_value(s.means[i], std::sqrt(s.variances[i]), incumbent);
    return out;
}

inline Eigen::VectorXd ucb(const PosteriorSummary& s, double beta) {
    if (!(beta > 0)) throw UsageError("ucb: beta must be positive");
    Eigen::VectorXd out(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) out[i] = ucb_value(s.means[i], std::sqrt(s.variances[i]), beta);
    return out;
}

/// Sample-average EI with its Monte-Carlo standard error per point.
struct McEstimate {
    Eigen::VectorXd values;
    Eigen::VectorXd standard_errors;
};

/// Streams the same draws rsample(summary, n, seed) would produce, without storing them.
inline McEstimate mc_ei(const PosteriorSummary& s, double incumbent, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw UsageError("mc_ei: n must be >= 1");
    const Eigen::Index q = s.size();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const Eigen::VectorXd sd = s.variances.cwiseSqrt();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(q), sum2 = Eigen::VectorXd::Zero(q);
    for (std::size_t k = 0; k < n; ++k)
        for (Eigen::Index i = 0; i < q; ++i) {
            const double imp = std::max(incumbent - (s.means[i] + sd[i] * normal(rng)), 0.0);
            sum[i] += imp;
            sum2[i] += imp * imp;
        }
    const double dn = static_cast<double>(n);
    McEstimate out{sum / dn, Eigen::VectorXd(q)};
    for (Eigen::Index i = 0; i < q; ++i) {
        const double var = n > 1 ? std::max(sum2[i] - dn * out.values[i] * out.values[i], 0.0) / (dn - 1) : 0.0;
        out.standard_errors[i] = std::sqrt(var / dn);
    }
    return out;
}

inline McEstimate mc_ei(const GpModel& model, const Eigen::MatrixXd& points, double incumbent, std::size_t n,
                        std::uint64_t seed) {
    return mc_ei(posterior(model, points), incumbent, n, seed);
}

/// Plug-in incumbent: the smallest posterior mean over the training inputs.
inline double incumbent_value(const GpModel& model) {
    if (model.size() == 0) throw UsageError("incumbent_value: model has no observations");
    return posterior(model, model.inputs()).means.minCoeff();
}

inline double scalarize(const Eigen::VectorXd& weights, const Eigen::VectorXd& outputs) {
    if (weights.size() != outputs.size() || weights.size() < 1)
        throw StructuralError("scalarize: weights and outputs must have equal nonzero length");
    return weights.dot(outputs);
}

/// Scores the rows of Xq under `spec`.
inline Eigen::VectorXd score(const GpModel& model, const AcquisitionSpec& spec, const Eigen::MatrixXd& Xq) {
    const PosteriorSummary s = posterior(model, Xq);
    switch (spec.kind) {
    case AcquisitionKind::ei:
        return ei(s, spec.incumbent);
    case AcquisitionKind::mc_ei:
        if (spec.mc_samples < 1) throw UsageError("mc_ei: mc_samples must be >= 1");
        return mc_ei(s, spec.incumbent, spec.mc_samples, spec.seed).values;
    case AcquisitionKind::pi:
        return pi(s, spec.incumbent);
    case AcquisitionKind::ucb:
        return ucb(s, spec.beta);
    }
    throw UsageError("unknown acquisition kind");
}

}  // namespace hpbo
