#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include "anfekf/errors.hpp"
#include "anfekf/metrics.hpp"

using namespace anfekf;

namespace {

RunLog log_from(const std::vector<Pose>& truth, const std::vector<GaussianState>& est) {
    RunLog log;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        StepRecord r;
        r.step = static_cast<long>(k) + 1;
        r.t = 0.025 * r.step;
        r.truth = truth[k];
        r.estimate = est[k];
        log.steps.push_back(r);
    }
    return log;
}

// A consistent linear-Gaussian filter: random-walk state observed directly.
RunLog linear_gaussian_run(std::uint64_t seed, int steps) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0, 1);
    const Vec3 q(0.01, 0.02, 0.001), r(0.1, 0.05, 0.002);
    Vec3 x = Vec3::Zero();
    GaussianState est;
    est.P = Eigen::Vector3d(0.1, 0.1, 0.01).asDiagonal();
    for (int i = 0; i < 3; ++i) x(i) = std::sqrt(est.P(i, i)) * n(rng);
    std::vector<Pose> truth;
    std::vector<GaussianState> out;
    for (int k = 0; k < steps; ++k) {
        for (int i = 0; i < 3; ++i) x(i) += std::sqrt(q(i)) * n(rng);
        est.P += Mat3(q.asDiagonal());
        Vec3 z;
        for (int i = 0; i < 3; ++i) z(i) = x(i) + std::sqrt(r(i)) * n(rng);
        const Mat3 K = est.P * (est.P + Mat3(r.asDiagonal())).inverse();
        est.mean += K * (z - est.mean);
        est.P = (Mat3::Identity() - K) * est.P;
        truth.emplace_back(x(0), x(1), x(2));
        out.push_back(est);
    }
    return log_from(truth, out);
}

}  // namespace

TEST(Chi2, IncompleteGammaMatchesBoost) {
    for (double a : {0.5, 1.0, 1.5, 3.0, 10.0, 30.0, 150.0})
        for (double x : {1e-4, 0.1, 0.5, 1.0, 2.5, 7.0, 20.0, 60.0, 200.0})
            EXPECT_NEAR(regularized_gamma_p(a, x), boost::math::gamma_p(a, x), 1e-12) << a << " " << x;
}

TEST(Chi2, QuantileMatchesBoost) {
    for (double dof : {1.0, 2.0, 3.0, 5.0, 20.0, 60.0, 150.0}) {
        const boost::math::chi_squared_distribution<double> dist(dof);
        for (double p : {1e-4, 0.001, 0.025, 0.1, 0.5, 0.9, 0.975, 0.999}) {
            const double expect = boost::math::quantile(dist, p);
            EXPECT_NEAR(chi2_quantile(p, dof), expect, 1e-9 * std::max(1.0, expect)) << dof << " " << p;
        }
    }
}

TEST(Chi2, BandAnchors) {
    const Chi2Band b = chi2_band(20, 3, 0.95);
    EXPECT_NEAR(b.lower, 2.02, 0.01);
    EXPECT_NEAR(b.upper, 4.17, 0.01);
    const Chi2Band one = chi2_band(1, 1, 0.95);
    EXPECT_NEAR(one.lower, 0.000982, 1e-3);
    EXPECT_NEAR(one.upper, 5.024, 1e-3);
}

TEST(Chi2, BandMonotoneAndCollapses) {
    double lo = 1e9, hi = -1e9;
    for (double c : {0.999, 0.99, 0.95, 0.9, 0.5, 0.1}) {
        const Chi2Band b = chi2_band(20, 3, c);
        if (c < 0.999) {
            EXPECT_GT(b.lower, lo);
            EXPECT_LT(b.upper, hi);
        }
        lo = b.lower;
        hi = b.upper;
    }
    const Chi2Band tiny = chi2_band(20, 3, 1e-6);
    const double median = boost::math::median(boost::math::chi_squared_distribution<double>(60)) / 20;
    EXPECT_NEAR(tiny.lower, median, 1e-5);
    EXPECT_NEAR(tiny.upper, median, 1e-5);
    EXPECT_THROW(chi2_band(20, 3, 1.0), ConfigError);
    EXPECT_THROW(chi2_band(20, 3, 0.0), ConfigError);
}

TEST(Nees, Examples) {
    GaussianState est;
    est.mean = Vec3(1, 2, 0.5);
    est.P = Mat3::Identity();
    EXPECT_EQ(nees(Pose(1, 2, 0.5), est), 0.0);
    EXPECT_NEAR(nees(Pose(2, 4, 0.5), est), 5.0, 1e-12);
    est.mean(2) = kPi - 0.05;
    EXPECT_NEAR(nees(Pose(1, 2, -kPi + 0.05), est), 0.01, 1e-12);
    est.P = Mat3::Zero();
    EXPECT_THROW(nees(Pose(1, 2, 0), est), SingularMatrixError);
}

TEST(Nees, ConsistentDrawsAverageToStateDimension) {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> n(0, 1);
    Mat3 A;
    A << 0.3, 0, 0, 0.1, 0.2, 0, 0.01, -0.02, 0.05;
    GaussianState est;
    est.P = A * A.transpose();
    est.mean = Vec3(5, 5, 0.2);
    double sum = 0.0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        const Vec3 e = A * Vec3(n(rng), n(rng), n(rng));
        sum += nees(Pose(est.mean + e), est);
    }
    EXPECT_NEAR(sum / draws, 3.0, 0.05);
}

TEST(Ensemble, AverageNeesOracles) {
    std::vector<RunLog> logs;
    for (std::uint64_t s = 0; s < 7; ++s) logs.push_back(linear_gaussian_run(s, 50));
    const std::vector<double> single = average_nees({logs[0]});
    EXPECT_EQ(single, nees_series(logs[0]));
    const std::vector<double> same = average_nees({logs[1], logs[1], logs[1]});
    const std::vector<double> one = nees_series(logs[1]);
    for (std::size_t k = 0; k < one.size(); ++k) EXPECT_NEAR(same[k], one[k], 1e-12);

    // Two-pass reference: collect per-run series first, then average.
    std::vector<std::vector<double>> series;
    for (const RunLog& l : logs) series.push_back(nees_series(l));
    const std::vector<double> avg = average_nees(logs);
    for (std::size_t k = 0; k < avg.size(); ++k) {
        double s = 0.0;
        for (const auto& run : series) s += run[k];
        EXPECT_NEAR(avg[k], s / series.size(), 1e-12);
    }
}

TEST(Ensemble, RmseCases) {
    std::vector<Pose> truth(10, Pose(1, 1, 0));
    std::vector<GaussianState> est(10);
    for (auto& e : est) {
        e.mean = Vec3(1, 1, 0);
        e.P = Mat3::Identity();
    }
    const RunLog perfect = log_from(truth, est);
    for (double v : rmse({perfect})) EXPECT_EQ(v, 0.0);
    for (auto& e : est) e.mean = Vec3(4, 5, 0);
    const RunLog off = log_from(truth, est);
    for (double v : rmse({off})) EXPECT_DOUBLE_EQ(v, 5.0);
    EXPECT_DOUBLE_EQ(run_position_rmse(off), 5.0);

    const RunLog a = linear_gaussian_run(1, 30), b = linear_gaussian_run(2, 30), c = linear_gaussian_run(3, 30);
    const auto r1 = rmse({a, b, c});
    const auto r2 = rmse({c, a, b});
    for (std::size_t k = 0; k < r1.size(); ++k) EXPECT_NEAR(r1[k], r2[k], 1e-15);
    EXPECT_THROW(rmse({}), ConfigError);
}

TEST(Ensemble, LinearGaussianFilterStaysInBand) {
    std::vector<RunLog> logs;
    for (std::uint64_t s = 0; s < 20; ++s) logs.push_back(linear_gaussian_run(1000 + s, 1000));
    const EnsembleReport rep = make_report(logs, 0.95);
    EXPECT_GE(rep.in_band_fraction, 0.90);
    EXPECT_LE(rep.in_band_fraction, 1.0);
    EXPECT_EQ(rep.runs.size(), 20u);
    EXPECT_NEAR(rep.band.lower, 2.02, 0.01);
    EXPECT_EQ(rep.rmse_pos.size(), 1000u);
    EXPECT_NEAR(rep.mean_rmse_pos, time_average(rep.rmse_pos), 1e-15);
}

TEST(Ensemble, InBandFraction) {
    const Chi2Band b{1.0, 2.0};
    EXPECT_DOUBLE_EQ(in_band_fraction({0.5, 1.0, 1.5, 2.0, 2.5}, b), 0.6);
}
