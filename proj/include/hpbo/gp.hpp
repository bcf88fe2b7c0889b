#pragma once

// Exact Gaussian-process regression on the unit cube.
//
// Hyperparameters are optimized in log space. The flat parameter vector used by
// mll_grad() and the fitter is laid out as
//
//   [ log l_1 .. log l_d | log s^2 | log sigma^2 | c ]
//
// with l_j the ARD lengthscales, s^2 the signal variance, sigma^2 the
// homoscedastic noise variance and c the constant mean.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "hpbo/detail/box_bfgs.hpp"
#include "hpbo/detail/parallel.hpp"
#include "hpbo/errors.hpp"
#include "hpbo/qmc.hpp"

namespace hpbo {

enum class KernelFamily { matern52, rbf };

inline const char* to_string(KernelFamily f) { return f == KernelFamily::matern52 ? "matern52" : "rbf"; }

struct KernelSpec {
    KernelFamily family = KernelFamily::matern52;
    Eigen::VectorXd lengthscales;
    double signal_variance = 1.0;

    Eigen::Index dimension() const { return lengthscales.size(); }
};

struct MeanSpec {
    double constant = 0.0;
};

struct GpHyperparams {
    KernelSpec kernel;
    MeanSpec mean;
    double noise_variance = 1e-4;

    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        os << "{\"kernel\":\"" << to_string(kernel.family) << "\",\"lengthscales\":[";
        for (Eigen::Index j = 0; j < kernel.lengthscales.size(); ++j)
            os << (j ? "," : "") << kernel.lengthscales[j];
        os << "],\"signal_variance\":" << kernel.signal_variance << ",\"noise_variance\":" << noise_variance
           << ",\"mean\":" << mean.constant << "}";
        return os.str();
    }
};

/// Per-observation noise: an entry overrides the fitted homoscedastic noise at that point.
/// Empty means every point uses the fitted noise.
using FixedNoise = std::vector<std::optional<double>>;

namespace detail {

inline constexpr double kSqrt5 = 2.23606797749978969640917366873;

inline void check_kernel(const KernelSpec& spec) {
    if (!(spec.signal_variance > 0) || !std::isfinite(spec.signal_variance))
        throw DomainError("kernel signal variance must be positive and finite");
    for (Eigen::Index j = 0; j < spec.lengthscales.size(); ++j)
        if (!(spec.lengthscales[j] > 0) || !std::isfinite(spec.lengthscales[j]))
            throw DomainError("kernel lengthscales must be positive and finite");
}

/// Kernel value as a function of the scaled squared distance r^2.
inline double kernel_from_r2(KernelFamily family, double s2, double r2) {
    if (family == KernelFamily::rbf) return s2 * std::exp(-0.5 * r2);
    const double r = std::sqrt(r2);
    return s2 * (1.0 + kSqrt5 * r + 5.0 * r2 / 3.0) * std::exp(-kSqrt5 * r);
}

/// dk/d(log l_j) = shape(r) * ((u_j - v_j) / l_j)^2 for both families.
inline double lengthscale_shape(KernelFamily family, double s2, double r2) {
    if (family == KernelFamily::rbf) return s2 * std::exp(-0.5 * r2);
    const double r = std::sqrt(r2);
    return s2 * (5.0 / 3.0) * (1.0 + kSqrt5 * r) * std::exp(-kSqrt5 * r);
}

inline Eigen::VectorXd noise_diagonal(double noise_variance, const FixedNoise& fixed, Eigen::Index n) {
    if (!fixed.empty() && static_cast<Eigen::Index>(fixed.size()) != n)
        throw StructuralError("fixed noise has " + std::to_string(fixed.size()) + " entries for " +
                              std::to_string(n) + " observations");
    Eigen::VectorXd diag = Eigen::VectorXd::Constant(n, noise_variance);
    for (std::size_t i = 0; i < fixed.size(); ++i)
        if (fixed[i]) diag[static_cast<Eigen::Index>(i)] = *fixed[i];
    return diag;
}

}  // namespace detail

template <typename U, typename V>
double kernel_eval(const KernelSpec& spec, const Eigen::MatrixBase<U>& u, const Eigen::MatrixBase<V>& v) {
    if (u.size() != spec.dimension() || v.size() != spec.dimension())
        throw StructuralError("kernel_eval: input dimension does not match the lengthscales");
    double r2 = 0.0;
    for (Eigen::Index j = 0; j < u.size(); ++j) {
        const double z = (u(j) - v(j)) / spec.lengthscales[j];
        r2 += z * z;
    }
    return detail::kernel_from_r2(spec.family, spec.signal_variance, r2);
}

/// Cross-covariance between the rows of A and the rows of B.
inline Eigen::MatrixXd kernel_cross(const KernelSpec& spec, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    if (A.cols() != spec.dimension() || B.cols() != spec.dimension())
        throw StructuralError("kernel_cross: input dimension does not match the lengthscales");
    Eigen::MatrixXd K(A.rows(), B.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index k = 0; k < B.rows(); ++k) K(i, k) = kernel_eval(spec, A.row(i), B.row(k));
    return K;
}

inline Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X) {
    if (X.cols() != spec.dimension())
        throw StructuralError("kernel_matrix: input dimension does not match the lengthscales");
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = spec.signal_variance;
        for (Eigen::Index k = 0; k < i; ++k) K(i, k) = K(k, i) = kernel_eval(spec, X.row(i), X.row(k));
    }
    return K;
}

struct Factorization {
    Eigen::MatrixXd L;  // lower triangular
    double jitter_used = 0.0;
};

/// Jitter ladder, as multiples of the signal variance.
inline constexpr std::array<double, 8> kJitterLadder = {0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2};

/// Cholesky of K + diag(noise) + jitter*I, escalating jitter on failure.
/// `signal_variance` scales the ladder; when <= 0 the largest diagonal entry of K is used.
inline Factorization factorize(const Eigen::MatrixXd& K, const Eigen::VectorXd& noise,
                               double signal_variance = 0.0) {
    const Eigen::Index n = K.rows();
    if (K.cols() != n || noise.size() != n) throw StructuralError("factorize: shape mismatch");
    if (signal_variance <= 0.0) signal_variance = n ? K.diagonal().maxCoeff() : 1.0;
    Eigen::MatrixXd A = K;
    A.diagonal() += noise;
    for (double level : kJitterLadder) {
        const double jitter = level * signal_variance;
        Eigen::MatrixXd B = A;
        B.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(B);
        if (llt.info() != Eigen::Success) continue;
        Eigen::MatrixXd L = llt.matrixL();
        // Pivots at rounding level mean the matrix is numerically singular.
        const double min_pivot = std::sqrt(1e-15 * signal_variance);
        if ((L.diagonal().array() > min_pivot).all() && L.allFinite()) return {std::move(L), jitter};
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    std::ostringstream os;
    os << "covariance not positive definite at maximum jitter (n = " << n;
    if (es.info() == Eigen::Success && n > 0) {
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        os << ", min eigenvalue = " << lo << ", max eigenvalue = " << hi
           << ", condition = " << (lo > 0 ? hi / lo : std::numeric_limits<double>::infinity());
    }
    os << ")";
    throw NumericalError(os.str());
}

inline Factorization factorize(const Eigen::MatrixXd& K, double noise_variance, double signal_variance = 0.0) {
    return factorize(K, Eigen::VectorXd::Constant(K.rows(), noise_variance), signal_variance);
}

/// Number of entries in the flat log-parameter vector for a d-dimensional input.
inline Eigen::Index parameter_count(Eigen::Index d) { return d + 3; }

inline Eigen::VectorXd to_log_parameters(const GpHyperparams& theta) {
    const Eigen::Index d = theta.kernel.dimension();
    Eigen::VectorXd p(parameter_count(d));
    p.head(d) = theta.kernel.lengthscales.array().log();
    p[d] = std::log(theta.kernel.signal_variance);
    p[d + 1] = std::log(theta.noise_variance);
    p[d + 2] = theta.mean.constant;
    return p;
}

inline GpHyperparams from_log_parameters(const Eigen::VectorXd& p, KernelFamily family) {
    const Eigen::Index d = p.size() - 3;
    GpHyperparams theta;
    theta.kernel.family = family;
    theta.kernel.lengthscales = p.head(d).array().exp();
    theta.kernel.signal_variance = std::exp(p[d]);
    theta.noise_variance = std::exp(p[d + 1]);
    theta.mean.constant = p[d + 2];
    return theta;
}

namespace detail {

inline void check_data(const GpHyperparams& theta, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) throw StructuralError("inputs and targets have different lengths");
    if (X.cols() != theta.kernel.dimension())
        throw StructuralError("input dimension does not match the lengthscales");
    check_kernel(theta.kernel);
    if (!(theta.noise_variance >= 0) || !std::isfinite(theta.noise_variance))
        throw DomainError("noise variance must be nonnegative and finite");
}

/// Log marginal likelihood and (optionally) its gradient over the flat log-parameters.
inline double mll_impl(const GpHyperparams& theta, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const FixedNoise& fixed, Eigen::VectorXd* grad) {
    check_data(theta, X, y);
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    if (n < 1) throw UsageError("mll: at least one observation is required");

    const auto& ks = theta.kernel;
    const double s2 = ks.signal_variance;
    Eigen::MatrixXd K(n, n);
    Eigen::MatrixXd R2(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = s2;
        R2(i, i) = 0.0;
        for (Eigen::Index k = 0; k < i; ++k) {
            double r2 = 0.0;
            for (Eigen::Index j = 0; j < d; ++j) {
                const double z = (X(i, j) - X(k, j)) / ks.lengthscales[j];
                r2 += z * z;
            }
            R2(i, k) = R2(k, i) = r2;
            K(i, k) = K(k, i) = kernel_from_r2(ks.family, s2, r2);
        }
    }
    const Eigen::VectorXd noise = noise_diagonal(theta.noise_variance, fixed, n);
    const Factorization f = factorize(K, noise, s2);
    const Eigen::VectorXd resid = y.array() - theta.mean.constant;
    const auto Lview = f.L.triangularView<Eigen::Lower>();
    const Eigen::VectorXd a = Lview.solve(resid);
    const Eigen::VectorXd alpha = Lview.transpose().solve(a);

    const double value = -0.5 * a.squaredNorm() - f.L.diagonal().array().log().sum() -
                         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

    if (grad) {
        Eigen::MatrixXd Kinv = Lview.solve(Eigen::MatrixXd::Identity(n, n));
        Kinv = Lview.transpose().solve(Kinv).eval();
        const Eigen::MatrixXd W = alpha * alpha.transpose() - Kinv;

        grad->resize(parameter_count(d));
        for (Eigen::Index j = 0; j < d; ++j) {
            double acc = 0.0;
            const double lj = ks.lengthscales[j];
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index k = 0; k < i; ++k) {
                    const double z = (X(i, j) - X(k, j)) / lj;
                    acc += W(i, k) * lengthscale_shape(ks.family, s2, R2(i, k)) * z * z;
                }
            (*grad)[j] = acc;  // symmetric pairs: 2 * (1/2) * sum over i>k
        }
        // The jitter rung scales with s^2, so it moves with the signal variance too.
        (*grad)[d] = 0.5 * (W.cwiseProduct(K).sum() + f.jitter_used * W.trace());
        double gn = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (fixed.empty() || !fixed[static_cast<std::size_t>(i)]) gn += W(i, i);
        (*grad)[d + 1] = 0.5 * theta.noise_variance * gn;
        (*grad)[d + 2] = alpha.sum();
    }
    return value;
}

}  // namespace detail

/// log p(y | X, theta) under the Gaussian likelihood.
inline double mll(const GpHyperparams& theta, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const FixedNoise& fixed = {}) {
    return detail::mll_impl(theta, X, y, fixed, nullptr);
}

/// Analytic gradient of mll() over the flat log-parameter layout.
/// The noise coordinate only collects points without a fixed noise entry.
inline Eigen::VectorXd mll_grad(const GpHyperparams& theta, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const FixedNoise& fixed = {}) {
    Eigen::VectorXd g;
    detail::mll_impl(theta, X, y, fixed, &g);
    return g;
}

/// A GP conditioned on data. Immutable once built.
class GpModel {
public:
    static GpModel condition(GpHyperparams theta, Eigen::MatrixXd X, Eigen::VectorXd y, FixedNoise fixed = {}) {
        detail::check_data(theta, X, y);
        GpModel m;
        m.noise_ = detail::noise_diagonal(theta.noise_variance, fixed, X.rows());
        if (X.rows() > 0) {
            Eigen::MatrixXd A = kernel_matrix(theta.kernel, X);
            Factorization f = factorize(A, m.noise_, theta.kernel.signal_variance);
            m.chol_ = std::move(f.L);
            m.jitter_used_ = f.jitter_used;
            A.diagonal() += m.noise_ + Eigen::VectorXd::Constant(X.rows(), f.jitter_used);
            const Eigen::VectorXd resid = y.array() - theta.mean.constant;
            const Eigen::MatrixXd& Lm = m.chol_;
            const auto L = Lm.triangularView<Eigen::Lower>();
            // Mixed-precision iterative refinement. On ill-conditioned A the mean at a
            // training input is a sum of terms of size |alpha|, far above the target,
            // so alpha and the residual are carried in extended precision.
            using LVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
            const Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> Ae = A.cast<long double>();
            const LVec re = resid.cast<long double>();
            LVec ae = L.transpose().solve(L.solve(resid)).cast<long double>();
            for (int step = 0; step < 3; ++step) {
                const Eigen::VectorXd r = (re - Ae * ae).cast<double>();
                ae += L.transpose().solve(L.solve(r)).cast<long double>();
            }
            m.alpha_ext_ = ae;
            m.alpha_ = ae.cast<double>();
        }
        m.theta_ = std::move(theta);
        m.X_ = std::move(X);
        m.y_ = std::move(y);
        m.fixed_ = std::move(fixed);
        return m;
    }

    const Eigen::MatrixXd& inputs() const { return X_; }
    const Eigen::VectorXd& targets() const { return y_; }
    const GpHyperparams& hyperparams() const { return theta_; }
    const Eigen::MatrixXd& cholesky() const { return chol_; }
    const Eigen::VectorXd& alpha() const { return alpha_; }
    /// alpha before rounding to double; used for the posterior mean.
    const Eigen::Matrix<long double, Eigen::Dynamic, 1>& alpha_extended() const { return alpha_ext_; }
    const Eigen::VectorXd& noise() const { return noise_; }
    const FixedNoise& fixed_noise() const { return fixed_; }
    double jitter_used() const { return jitter_used_; }
    Eigen::Index size() const { return X_.rows(); }
    Eigen::Index dimension() const { return theta_.kernel.dimension(); }

    double log_marginal_likelihood() const {
        if (size() == 0) return 0.0;
        const Eigen::VectorXd resid = y_.array() - theta_.mean.constant;
        return -0.5 * resid.dot(alpha_) - chol_.diagonal().array().log().sum() -
               0.5 * static_cast<double>(size()) * std::log(2.0 * std::numbers::pi);
    }

private:
    GpModel() = default;

    Eigen::MatrixXd X_;
    Eigen::VectorXd y_;
    GpHyperparams theta_;
    FixedNoise fixed_;
    Eigen::VectorXd noise_;
    Eigen::MatrixXd chol_;
    Eigen::VectorXd alpha_;
    Eigen::Matrix<long double, Eigen::Dynamic, 1> alpha_ext_;
    double jitter_used_ = 0.0;
};

struct PosteriorSummary {
    Eigen::VectorXd means;
    Eigen::VectorXd variances;
    /// Query rows whose computed variance was below -1e-8 before clamping.
    std::vector<Eigen::Index> negative_variance_points;

    Eigen::Index size() const { return means.size(); }
};

/// Latent posterior mean and variance at the rows of Xq.
inline PosteriorSummary posterior(const GpModel& model, const Eigen::MatrixXd& Xq) {
    const auto& theta = model.hyperparams();
    if (Xq.cols() != model.dimension())
        throw StructuralError("posterior: query dimension " + std::to_string(Xq.cols()) +
                              " does not match model dimension " + std::to_string(model.dimension()));
    const Eigen::Index q = Xq.rows();
    PosteriorSummary out;
    out.means = Eigen::VectorXd::Constant(q, theta.mean.constant);
    out.variances = Eigen::VectorXd::Constant(q, theta.kernel.signal_variance);
    if (model.size() == 0) return out;

    const Eigen::MatrixXd Ks = kernel_cross(theta.kernel, model.inputs(), Xq);  // N x Q
    out.means = ((Ks.transpose().cast<long double>() * model.alpha_extended()).array() +
                 static_cast<long double>(theta.mean.constant))
                    .cast<double>();
    const Eigen::MatrixXd V = model.cholesky().triangularView<Eigen::Lower>().solve(Ks);
    for (Eigen::Index i = 0; i < q; ++i) {
        const double var = theta.kernel.signal_variance - V.col(i).squaredNorm();
        if (var < -1e-8) out.negative_variance_points.push_back(i);
        out.variances[i] = std::max(var, 0.0);
    }
    return out;
}

/// Posterior draws: samples(s, q) = mean_q + sd_q * z, z drawn in (s, q) row-major order.
struct MCSampleBatch {
    Eigen::MatrixXd samples;  // n x Q
};

inline MCSampleBatch rsample(const PosteriorSummary& summary, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw UsageError("rsample: n must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const Eigen::Index q = summary.size();
    const Eigen::VectorXd sd = summary.variances.cwiseSqrt();
    MCSampleBatch batch{Eigen::MatrixXd(static_cast<Eigen::Index>(n), q)};
    for (Eigen::Index s = 0; s < static_cast<Eigen::Index>(n); ++s)
        for (Eigen::Index i = 0; i < q; ++i) batch.samples(s, i) = summary.means[i] + sd[i] * normal(rng);
    return batch;
}

/// Box for hyperparameter fitting, in natural units.
struct FitBounds {
    double lengthscale_lo = 1e-3, lengthscale_hi = 1e3;
    double signal_lo = 1e-4, signal_hi = 1e4;
    double noise_lo = 1e-8, noise_hi = 1.0;
    double mean_lo = -10.0, mean_hi = 10.0;
};

struct FitOptions {
    std::size_t restarts = 10;
    std::uint64_t seed = 0;
    KernelFamily family = KernelFamily::matern52;
    FixedNoise fixed_noise;
    FitBounds bounds;
    int max_iters = 200;
    double grad_tol = 1e-6;
    std::size_t threads = 1;
};

struct FitResult {
    GpModel model;
    double mll = -std::numeric_limits<double>::infinity();
    std::size_t best_restart = 0;
    std::vector<double> start_mll;  // NaN where the start point itself failed
    std::vector<double> final_mll;  // NaN where the restart failed
};

/// Center of the log-bound box with zero mean: the first start of every fit.
inline GpHyperparams default_hyperparams(Eigen::Index d, KernelFamily family = KernelFamily::matern52,
                                         const FitBounds& b = {}) {
    GpHyperparams theta;
    theta.kernel.family = family;
    theta.kernel.lengthscales = Eigen::VectorXd::Constant(d, std::sqrt(b.lengthscale_lo * b.lengthscale_hi));
    theta.kernel.signal_variance = std::sqrt(b.signal_lo * b.signal_hi);
    theta.noise_variance = std::sqrt(b.noise_lo * b.noise_hi);
    theta.mean.constant = 0.5 * (b.mean_lo + b.mean_hi);
    return theta;
}

/// Multi-start marginal-likelihood maximization.
///
/// Start 0 is the center of the log-bound box. The remaining starts come from a
/// Sobol sequence over the box (fast-forwarded by `seed`); when d + 2 exceeds the
/// Sobol dimension limit all lengthscales share one start coordinate. The best
/// final mll wins, ties going to the lowest restart index.
inline FitResult fit_detailed(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const FitOptions& opt = {}) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    if (n < 1) throw UsageError("fit: at least one observation is required");
    if (y.size() != n) throw StructuralError("fit: inputs and targets have different lengths");
    if (d < 1) throw StructuralError("fit: inputs need at least one column");
    const auto& b = opt.bounds;
    const std::size_t restarts = std::max<std::size_t>(1, opt.restarts);

    const Eigen::Index np = parameter_count(d);
    Eigen::VectorXd lo(np), hi(np);
    lo.head(d).setConstant(std::log(b.lengthscale_lo));
    hi.head(d).setConstant(std::log(b.lengthscale_hi));
    lo[d] = std::log(b.signal_lo);
    hi[d] = std::log(b.signal_hi);
    lo[d + 1] = std::log(b.noise_lo);
    hi[d + 1] = std::log(b.noise_hi);
    lo[d + 2] = b.mean_lo;
    hi[d + 2] = b.mean_hi;

    // With every noise entry fixed the noise coordinate is inert; pin it.
    const bool all_fixed = !opt.fixed_noise.empty() &&
                           std::all_of(opt.fixed_noise.begin(), opt.fixed_noise.end(),
                                       [](const auto& v) { return v.has_value(); });

    std::vector<Eigen::VectorXd> starts;
    starts.push_back(to_log_parameters(default_hyperparams(d, opt.family, b)));
    if (restarts > 1) {
        const bool shared = static_cast<std::size_t>(d + 2) > kSobolMaxDimension;
        const std::size_t sd = shared ? 3 : static_cast<std::size_t>(d + 2);
        SobolEngine engine(sd);
        engine.skip(1 + opt.seed * (restarts - 1));
        const Eigen::MatrixXd pts = engine.next(restarts - 1);
        for (Eigen::Index r = 0; r < pts.rows(); ++r) {
            Eigen::VectorXd p = starts.front();
            for (Eigen::Index j = 0; j < d; ++j) {
                const double u = pts(r, shared ? 0 : j);
                p[j] = lo[j] + u * (hi[j] - lo[j]);
            }
            const Eigen::Index o = shared ? 1 : d;
            p[d] = lo[d] + pts(r, o) * (hi[d] - lo[d]);
            p[d + 1] = lo[d + 1] + pts(r, o + 1) * (hi[d + 1] - lo[d + 1]);
            starts.push_back(std::move(p));
        }
    }
    if (all_fixed)
        for (auto& p : starts) p[d + 1] = lo[d + 1];

    Eigen::VectorXd flo = lo, fhi = hi;
    if (all_fixed) fhi[d + 1] = flo[d + 1];

    auto objective = [&](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
        const double v = detail::mll_impl(from_log_parameters(p, opt.family), X, y, opt.fixed_noise, &g);
        if (all_fixed) g[d + 1] = 0.0;
        return v;
    };

    const std::size_t count = starts.size();
    std::vector<double> start_val(count, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> final_val(count, std::numeric_limits<double>::quiet_NaN());
    std::vector<Eigen::VectorXd> final_x(count);
    detail::BoxBfgsOptions bo;
    bo.max_iters = opt.max_iters;
    bo.grad_tol = opt.grad_tol;
    detail::parallel_for(count, opt.threads, [&](std::size_t r) {
        try {
            Eigen::VectorXd g;
            start_val[r] = objective(starts[r], g);
        } catch (const NumericalError&) {
            return;
        }
        try {
            auto res = detail::maximize_box(objective, starts[r], flo, fhi, bo);
            final_val[r] = res.value;
            final_x[r] = std::move(res.x);
        } catch (const NumericalError&) {
        }
    });

    std::optional<std::size_t> best;
    for (std::size_t r = 0; r < count; ++r)
        if (std::isfinite(final_val[r]) && (!best || final_val[r] > final_val[*best])) best = r;
    if (!best) throw NumericalError("fit: every restart failed numerically");

    FitResult out{GpModel::condition(from_log_parameters(final_x[*best], opt.family), X, y, opt.fixed_noise),
                  final_val[*best], *best, std::move(start_val), std::move(final_val)};
    return out;
}

inline GpModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const FitOptions& opt = {}) {
    return fit_detailed(X, y, opt).model;
}

}  // namespace hpbo
