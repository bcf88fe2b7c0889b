#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "hpbo/acq.hpp"

using namespace hpbo;

namespace {

// Phi(1) by 50-digit quadrature (mpmath), frozen.
constexpr double kPhi1 = 0.841344746068542948585;
constexpr double kPhi1PlusPdf1 = 1.08331547058768629838;

PosteriorSummary summary(std::vector<double> mu, std::vector<double> var) {
    return {Eigen::Map<Eigen::VectorXd>(mu.data(), mu.size()), Eigen::Map<Eigen::VectorXd>(var.data(), var.size()), {}};
}

GpModel noisy_model(std::mt19937_64& rng, Eigen::Index n, double noise) {
    std::uniform_real_distribution<double> U(0, 1);
    std::normal_distribution<double> N(0, 1);
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        X(i, 0) = U(rng);
        X(i, 1) = U(rng);
        y[i] = N(rng);
    }
    GpHyperparams t;
    t.kernel = {KernelFamily::matern52, Eigen::Vector2d(0.3, 0.5), 1.0};
    t.noise_variance = noise;
    return GpModel::condition(t, X, y);
}

}  // namespace

TEST(Normal, PdfCdfValues) {
    EXPECT_EQ(std_normal_cdf(0.0), 0.5);
    EXPECT_NEAR(std_normal_pdf(0.0), 1.0 / std::sqrt(2 * std::numbers::pi), 1e-16);
    EXPECT_NEAR(std_normal_cdf(1.0), kPhi1, 1e-15);
    EXPECT_NEAR(std_normal_cdf(1.0), 0.841345, 1e-6);
}

TEST(Normal, CdfSymmetricAndMonotone) {
    double prev = 0.0;
    for (double z = -8; z <= 8; z += 0.01) {
        EXPECT_NEAR(std_normal_cdf(-z), 1 - std_normal_cdf(z), 1e-12);
        EXPECT_GE(std_normal_cdf(z), prev);
        prev = std_normal_cdf(z);
    }
}

TEST(Ei, Examples) {
    EXPECT_NEAR(ei_value(0.3, 1.0, 0.3), std_normal_pdf(0.0), 1e-16);
    EXPECT_EQ(ei_value(0.3, 0.0, 0.3), 0.0);
    EXPECT_EQ(ei_value(0.1, 0.0, 0.3), 0.3 - 0.1);
    EXPECT_NEAR(ei_value(-1.0, 1.0, 0.0), kPhi1PlusPdf1, 1e-15);
    auto v = ei(summary({0.3, -1.0}, {1.0, 1.0}), 0.0);
    EXPECT_NEAR(v[1], kPhi1PlusPdf1, 1e-15);
}

TEST(Ei, MonteCarloOracleAtGammaOne) {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> N(0, 1);
    double sum = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) sum += std::max(0.0 - (-1.0 + N(rng)), 0.0);
    EXPECT_NEAR(sum / n, ei_value(-1.0, 1.0, 0.0), 3e-3);
}

TEST(Ei, NonnegativeAndIncreasingInSigma) {
    for (double g = -3; g <= 3; g += 0.05) {
        for (double sd : {0.1, 0.5, 1.0, 3.0}) {
            const double mu = -g * sd;  // incumbent 0
            const double h = 1e-6 * sd;
            EXPECT_GE(ei_value(mu, sd, 0.0), 0.0);
            EXPECT_GT(ei_value(mu, sd + h, 0.0) - ei_value(mu, sd - h, 0.0), 0.0) << g << " " << sd;
        }
    }
}

TEST(Ei, TranslationInvariance) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-2, 2);
    for (int i = 0; i < 500; ++i) {
        const double mu = U(rng), sd = std::abs(U(rng)), inc = U(rng), c = 10 * U(rng);
        EXPECT_NEAR(ei_value(mu, sd, inc), ei_value(mu + c, sd, inc + c), 1e-12);
        EXPECT_NEAR(pi_value(mu, sd, inc), pi_value(mu + c, sd, inc + c), 1e-12);
    }
    auto s = summary({0.2, -0.4, 1.3}, {0.5, 1.2, 0.01});
    auto t = summary({5.2, 4.6, 6.3}, {0.5, 1.2, 0.01});
    auto a = mc_ei(s, 0.1, 2000, 4), b = mc_ei(t, 5.1, 2000, 4);
    EXPECT_TRUE(a.values.isApprox(b.values, 1e-10));
}

TEST(Pi, ExamplesAndRange) {
    EXPECT_EQ(pi_value(0.3, 1.0, 0.3), 0.5);
    EXPECT_EQ(pi_value(0.5, 0.0, 0.3), 0.0);
    EXPECT_EQ(pi_value(0.1, 0.0, 0.3), 1.0);
    EXPECT_NEAR(pi_value(-1.0, 1.0, 0.0), kPhi1, 1e-15);
    double prev = 0;
    for (double g = -10; g <= 10; g += 0.1) {
        const double v = pi_value(-g, 1.0, 0.0);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        EXPECT_GE(v, prev);
        prev = v;
    }
}

TEST(Ucb, ExamplesAndGridArgmax) {
    EXPECT_EQ(ucb_value(0.7, 0.0, 2.0), -0.7);
    EXPECT_NEAR(ucb_value(0.7, 1.0, 4.0) - ucb_value(0.7, 1.0, 2.0), 2.0, 1e-15);
    EXPECT_THROW(ucb(summary({0.0}, {1.0}), 0.0), UsageError);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0, 1);
    std::vector<double> mu(200), var(200);
    for (int i = 0; i < 200; ++i) mu[i] = U(rng), var[i] = U(rng);
    auto s = summary(mu, var);
    Eigen::Index best;
    ucb(s, 2.0).maxCoeff(&best);
    Eigen::Index oracle = 0;
    for (Eigen::Index i = 1; i < 200; ++i)
        if (mu[i] - 2 * std::sqrt(var[i]) < mu[oracle] - 2 * std::sqrt(var[oracle])) oracle = i;
    EXPECT_EQ(best, oracle);

    // Jointly scaling (mu, sigma) by c > 0 leaves the argmax unchanged.
    for (double c : {0.01, 3.0, 250.0}) {
        std::vector<double> mu2(200), var2(200);
        for (int i = 0; i < 200; ++i) mu2[i] = c * mu[i], var2[i] = c * c * var[i];
        Eigen::Index b2;
        ucb(summary(mu2, var2), 2.0).maxCoeff(&b2);
        EXPECT_EQ(b2, best);
    }
}

TEST(McEi, DegenerateDeterministicAndRsampleOrder) {
    auto s = summary({0.2, -0.5, 0.1}, {0.0, 0.0, 0.3});
    auto a = mc_ei(s, 0.0, 64, 9);
    EXPECT_EQ(a.values[0], 0.0);
    EXPECT_EQ(a.values[1], 0.5);
    EXPECT_EQ(a.standard_errors[1], 0.0);
    auto b = mc_ei(s, 0.0, 64, 9);
    EXPECT_EQ(a.values, b.values);

    auto draws = rsample(s, 64, 9).samples;
    double sum = 0;
    for (Eigen::Index k = 0; k < 64; ++k) sum += std::max(0.0 - draws(k, 2), 0.0);
    EXPECT_NEAR(a.values[2], sum / 64, 1e-14);
    EXPECT_THROW(mc_ei(s, 0.0, 0, 1), UsageError);
}

TEST(McEi, ConvergesToClosedForm) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> U(-1.5, 1.5);
    std::vector<double> mu(100), var(100);
    for (int i = 0; i < 100; ++i) mu[i] = U(rng), var[i] = 0.05 + std::abs(U(rng));
    auto s = summary(mu, var);
    auto mc = mc_ei(s, 0.0, 1000000, 77);
    auto exact = ei(s, 0.0);
    int inside = 0;
    for (int i = 0; i < 100; ++i) inside += std::abs(mc.values[i] - exact[i]) <= 3 * mc.standard_errors[i];
    EXPECT_GE(inside, 99);
}

TEST(McEi, ModelOverloadMatchesSummary) {
    std::mt19937_64 rng(13);
    auto m = noisy_model(rng, 6, 0.05);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Constant(4, 2, 0.5);
    Q.row(1) << 0.1, 0.9;
    auto a = mc_ei(m, Q, 0.0, 5000, 2);
    auto b = mc_ei(posterior(m, Q), 0.0, 5000, 2);
    EXPECT_EQ(a.values, b.values);
    int ok = 0;
    auto exact = ei(posterior(m, Q), 0.0);
    for (int i = 0; i < 4; ++i) ok += std::abs(a.values[i] - exact[i]) <= 4 * a.standard_errors[i] + 1e-12;
    EXPECT_EQ(ok, 4);
}

TEST(Incumbent, NoiseFreeSingleAndBruteForce) {
    std::mt19937_64 rng(14);
    GpHyperparams t;
    t.kernel = {KernelFamily::matern52, Eigen::Vector2d(0.3, 0.5), 1.0};
    t.noise_variance = 0.0;
    Eigen::MatrixXd X(3, 2);
    X << 0.1, 0.2, 0.5, 0.5, 0.9, 0.1;
    Eigen::Vector3d y(0.4, -1.3, 0.2);
    EXPECT_NEAR(incumbent_value(GpModel::condition(t, X, y)), -1.3, 1e-9);

    t.noise_variance = 0.3;
    auto one = GpModel::condition(t, X.topRows(1), y.head(1));
    EXPECT_EQ(incumbent_value(one), posterior(one, X.topRows(1)).means[0]);

    for (int it = 0; it < 20; ++it) {
        auto m = noisy_model(rng, 8, 0.1);
        double oracle = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < 8; ++i) oracle = std::min(oracle, posterior(m, m.inputs().row(i)).means[0]);
        EXPECT_NEAR(incumbent_value(m), oracle, 1e-12);
    }
    auto empty = GpModel::condition(t, Eigen::MatrixXd(0, 2), Eigen::VectorXd(0));
    EXPECT_THROW(incumbent_value(empty), UsageError);
}

TEST(Scalarize, Examples) {
    EXPECT_EQ(scalarize(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Constant(1, 3.5)), 3.5);
    EXPECT_EQ(scalarize(Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(2, 4)), 3.0);
    EXPECT_EQ(scalarize(Eigen::Vector3d(0.25, 2, -1), Eigen::Vector3d(8, 1, 3)),
              scalarize(Eigen::Vector3d(-1, 0.25, 2), Eigen::Vector3d(3, 8, 1)));
    EXPECT_THROW(scalarize(Eigen::Vector2d(1, 1), Eigen::Vector3d(1, 1, 1)), StructuralError);
}

TEST(Score, DispatchesOnKind) {
    std::mt19937_64 rng(15);
    auto m = noisy_model(rng, 5, 0.01);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Constant(2, 2, 0.3);
    auto s = posterior(m, Q);
    AcquisitionSpec spec;
    spec.incumbent = -0.2;
    EXPECT_EQ(score(m, spec, Q), ei(s, -0.2));
    spec.kind = AcquisitionKind::pi;
    EXPECT_EQ(score(m, spec, Q), pi(s, -0.2));
    spec.kind = AcquisitionKind::ucb;
    EXPECT_EQ(score(m, spec, Q), ucb(s, 2.0));
    spec.kind = AcquisitionKind::mc_ei;
    spec.mc_samples = 100;
    EXPECT_EQ(score(m, spec, Q), mc_ei(s, -0.2, 100, 0).values);
}
