#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "anfekf/adaptation.hpp"
#include "surrogate.hpp"

using namespace anfekf;

namespace {

Mat2 brute_cov(const std::vector<Vec2>& log, std::size_t end, std::size_t n) {
    Mat2 C = Mat2::Zero();
    for (std::size_t i = end - n; i < end; ++i)
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) C(r, c) += log[i](r) * log[i](c);
    return C / static_cast<double>(n);
}

DomState dom_of(const Vec2& d, const Vec2& dd = Vec2::Zero()) {
    DomState s;
    s.dom = d.asDiagonal();
    s.delta_dom = dd.asDiagonal();
    s.dom_prev = s.dom - s.delta_dom;
    s.valid = true;
    return s;
}

}  // namespace

TEST(RingWindowTest, KeepsMostRecentInOrder) {
    EXPECT_THROW(RingWindow<int>(1), ConfigError);
    RingWindow<int> w(3);
    w.push(1);
    w.push(2);
    EXPECT_FALSE(w.full());
    EXPECT_EQ(w[0], 1);
    w.push(3);
    w.push(4);
    EXPECT_TRUE(w.full());
    EXPECT_EQ(w.size(), 3u);
    EXPECT_EQ(w[0], 2);
    EXPECT_EQ(w[2], 4);
    w.clear();
    EXPECT_EQ(w.size(), 0u);
}

TEST(ActualCov, WarmupThrows) {
    ResidualWindow w(4);
    w.push(Vec2(1, 1));
    EXPECT_THROW(estimate_actual_cov(w), WarmupError);
}

TEST(ActualCov, ConstantAndAlternatingSequences) {
    ResidualWindow w(6);
    for (int i = 0; i < 6; ++i) w.push(Vec2(2, -3));
    Mat2 expect;
    expect << 4, -6, -6, 9;
    EXPECT_LE((estimate_actual_cov(w) - expect).cwiseAbs().maxCoeff(), 1e-15);

    for (int i = 0; i < 6; ++i) w.push(Vec2(i % 2 ? -1.0 : 1.0, 0.0));
    expect << 1, 0, 0, 0;
    EXPECT_LE((estimate_actual_cov(w) - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ActualCov, MatchesBruteForceAtEveryStep) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n(0, 1);
    const std::size_t N = 15;
    ResidualWindow w(N);
    std::vector<Vec2> log;
    for (int k = 0; k < 2000; ++k) {
        log.emplace_back(0.1 * n(rng), 0.02 * n(rng));
        w.push(log.back());
        if (log.size() < N) continue;
        const Mat2 C = estimate_actual_cov(w);
        ASSERT_LE((C - brute_cov(log, log.size(), N)).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_EQ(C(0, 1), C(1, 0));
        EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat2>(C).eigenvalues().minCoeff(), -1e-15);
    }
}

TEST(Dom, Definition) {
    Mat2 S, C;
    S << 2, 0.1, 0.1, 1;
    C << 1, 0.0, 0.0, 3;
    DomState first = compute_dom(S, S, {});
    EXPECT_EQ(first.dom, Mat2::Zero());
    first = compute_dom(S, C, {});
    EXPECT_EQ(first.dom, S - C);
    EXPECT_EQ(first.delta_dom, Mat2::Zero());
    const DomState second = compute_dom(2 * S, C, first);
    EXPECT_EQ(second.delta_dom, (2 * S - C) - (S - C));
    EXPECT_EQ(second.dom_prev, first.dom);
}

TEST(AdaptR, ZeroMismatchLeavesR) {
    const Mat2 R = Eigen::Vector2d(0.01, 3e-4).asDiagonal();
    const RAdapter a = make_r_adapter(R, {});
    const RAdaptResult res = adapt_r(a, dom_of(Vec2::Zero()), R, Vec2(0.006, 2e-4));
    EXPECT_LE((res.R - R).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_EQ(res.R(0, 1), 0.0);
    EXPECT_EQ(res.R(1, 0), 0.0);
}

TEST(AdaptR, DirectionFollowsMismatch) {
    const Mat2 R = Eigen::Vector2d(0.01, 3e-4).asDiagonal();
    const RAdapter a = make_r_adapter(R, {});
    const Vec2 scale(0.006, 2e-4);
    const RAdaptResult down = adapt_r(a, dom_of(2.0 * scale), R, scale);
    EXPECT_LT(down.delta(0), 0.0);
    EXPECT_LT(down.delta(1), 0.0);
    const RAdaptResult up = adapt_r(a, dom_of(-2.0 * scale), R, scale);
    EXPECT_GT(up.delta(0), 0.0);
    EXPECT_GT(up.delta(1), 0.0);
}

TEST(AdaptR, FloorIsExact) {
    const Mat2 R0 = Eigen::Vector2d(0.01, 3e-4).asDiagonal();
    const RAdapter a = make_r_adapter(R0, {});
    const Mat2 at_floor = a.r_floor.asDiagonal();
    const Vec2 scale(0.006, 2e-4);
    const RAdaptResult res = adapt_r(a, dom_of(2.0 * scale), at_floor, scale);
    EXPECT_EQ(res.R(0, 0), a.r_floor(0));
    EXPECT_EQ(res.R(1, 1), a.r_floor(1));
}

TEST(AdaptQ, IdentityAndRuleAnchors) {
    const Mat2 Q0 = Eigen::Vector2d(0.09, 0.0027).asDiagonal();
    QAdapter a = make_q_adapter(Q0, {});
    const Vec2 scale(1.0, 1.0);

    const QAdaptResult centre = adapt_q(a, dom_of(Vec2::Zero()), Q0, scale);
    EXPECT_NEAR(centre.factor, 1.0, 1e-3);

    const QAdaptResult low = adapt_q(a, dom_of(Vec2(-2, -2)), Q0, scale);
    EXPECT_GT(low.factor, 1.0);
    const QAdaptResult high = adapt_q(a, dom_of(Vec2(2, 2)), Q0, scale);
    EXPECT_LT(high.factor, 1.0);

    a.gain = 0.0;
    const QAdaptResult frozen = adapt_q(a, dom_of(Vec2(-2, -2)), Q0, scale);
    EXPECT_EQ(frozen.factor, 1.0);
    EXPECT_EQ(frozen.Q, Q0);
}

TEST(AdaptQ, ClampedToFloorAndCeiling) {
    const Mat2 Q0 = Eigen::Vector2d(0.09, 0.0027).asDiagonal();
    const QAdapter a = make_q_adapter(Q0, {});
    Mat2 Q = Q0;
    for (int k = 0; k < 100; ++k) {
        Q = adapt_q(a, dom_of(Vec2(-2, -2)), Q, Vec2::Ones()).Q;
        EXPECT_LE(Q(0, 0), a.q_ceiling(0));
        EXPECT_LE(Q(1, 1), a.q_ceiling(1));
    }
    EXPECT_EQ(Q(0, 0), a.q_ceiling(0));
    for (int k = 0; k < 200; ++k) {
        Q = adapt_q(a, dom_of(Vec2(2, 2)), Q, Vec2::Ones()).Q;
        EXPECT_GE(Q(0, 0), a.q_floor(0));
        EXPECT_GE(Q(1, 1), a.q_floor(1));
    }
    EXPECT_EQ(Q(1, 1), a.q_floor(1));
}

TEST(TrainAdapter, ZeroErrorLeavesNetworks) {
    const Mat2 R = Eigen::Vector2d(0.01, 3e-4).asDiagonal();
    RAdapter a = make_r_adapter(R, {});
    const RAdapter before = a;
    const DomState d = dom_of(Vec2(0.004, -1e-4), Vec2(0.001, 0.0));
    RAdaptResult res = adapt_r(a, d, R, Vec2(0.006, 2e-4));
    res.delta = -d.dom.diagonal();
    train_adapter(a, d, res);
    EXPECT_EQ(a.nets[0], before.nets[0]);
    EXPECT_EQ(a.nets[1], before.nets[1]);

    const Mat2 Q0 = Eigen::Vector2d(0.09, 0.0027).asDiagonal();
    QAdapter q = make_q_adapter(Q0, {});
    const QAdapter qbefore = q;
    const Vec2 sens(0.002, 4e-5);
    const DomState qd = dom_of(-0.5 * sens);
    QAdaptResult qres = adapt_q(q, qd, Q0, Vec2(0.01, 2e-4));
    qres.factor = 1.5;
    train_adapter(q, qd, qres, sens);
    EXPECT_EQ(q.net, qbefore.net);
}

TEST(TrainAdapter, QNetSingletonGradientMatchesFiniteDifferences) {
    AnfisNet net = default_q_net({});
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int k = 0; k < 200; ++k) {
        const double a = u(rng), b = u(rng);
        const AnfisGradient g = net.gradient(net.forward(a, b));
        const auto p0 = net.parameters();
        for (int l = 0; l < kNumSingletons; ++l) {
            auto pp = p0, pm = p0;
            const double h = 1e-6;
            pp[20 + l] += h;
            pm[20 + l] -= h;
            net.set_parameters(pp);
            const double fp = net.evaluate(a, b);
            net.set_parameters(pm);
            const double fm = net.evaluate(a, b);
            const double numeric = (fp - fm) / (2 * h);
            EXPECT_LE(std::abs(g.d_w[l] - numeric), 1e-5 * std::max(1.0, std::abs(numeric)));
        }
        net.set_parameters(p0);
    }
}

TEST(TrainAdapter, FrozenSurrogateConvergesFromInflatedS) {
    const Vec2 c(0.012, 3.6e-4);
    const surrogate::Trace t = surrogate::frozen_stream(c, 0.2 * c, 4.0, 200);
    EXPECT_LE(surrogate::mean_abs_dom(t, 190, 200), 0.5);
    const surrogate::Trace under = surrogate::frozen_stream(c, 0.2 * c, 0.25, 200);
    EXPECT_LE(surrogate::mean_abs_dom(under, 190, 200), 0.5);
}

TEST(TrainAdapter, AppliedCorrectionOpposesMismatch) {
    for (double start : {10.0, 0.1}) {
        const surrogate::Trace t = surrogate::noisy_stream(Vec2(0.01, 3e-4), Vec2(0.002, 6e-5), start, 500, 3, 2);
        ASSERT_GT(t.counted, 0);
        EXPECT_GE(double(t.agree) / t.counted, 0.8) << "start factor " << start;
    }
}

TEST(TrainAdapter, FloorsHoldUnderSustainedPressure) {
    AdaptationConfig cfg;
    cfg.r_floor = 0.5;
    // S always far above C: R is pushed down against its floor.
    const surrogate::Trace t = surrogate::frozen_stream(Vec2(1e-6, 1e-8), Vec2(0.0, 0.0), 1e4, 300, cfg);
    const Vec2 floor = 0.5 * (1e4 * Vec2(1e-6, 1e-8));
    for (const Vec2& r : t.R) {
        EXPECT_GE(r(0), floor(0));
        EXPECT_GE(r(1), floor(1));
        EXPECT_TRUE(std::isfinite(r(0)) && std::isfinite(r(1)));
    }
}

TEST(Tuner, WarmupAndAcceptedGuard) {
    const CovPair cov0{Eigen::Vector2d(0.09, 0.0027).asDiagonal(), Eigen::Vector2d(0.01, 3e-4).asDiagonal()};
    AdaptationConfig cfg;
    cfg.window = 4;
    CovarianceTuner tuner(Variant::AnfekfR, cov0, cfg);
    CovPair cov = cov0;

    StepResult scan;
    InnovationRecord rec;
    rec.residual = Vec2(0.5, 0.05);
    rec.HPHt = 1e-4 * Mat2::Identity();
    rec.H = Mat23::Zero();
    scan.records = {rec, rec, rec};
    scan.n_accepted = 3;
    EXPECT_FALSE(tuner.on_scan(scan, cov).evaluated);
    EXPECT_EQ(cov.R, cov0.R);

    StepResult gated = scan;
    gated.n_accepted = 0;
    EXPECT_FALSE(tuner.on_scan(gated, cov).evaluated);
    EXPECT_EQ(cov.R, cov0.R);

    const AdaptationTrace tr = tuner.on_scan(scan, cov);
    EXPECT_TRUE(tr.evaluated);
    EXPECT_GT(cov.R(0, 0), cov0.R(0, 0));  // residuals far larger than S
    EXPECT_EQ(cov.Q, cov0.Q);
}

TEST(Tuner, ZeroGainIsIdentity) {
    const CovPair cov0{Eigen::Vector2d(0.09, 0.0027).asDiagonal(), Eigen::Vector2d(0.01, 3e-4).asDiagonal()};
    AdaptationConfig cfg;
    cfg.window = 2;
    cfg.output_gain = 0.0;
    CovarianceTuner tuner(Variant::AnfekfRQ, cov0, cfg);
    CovPair cov = cov0;
    StepResult scan;
    InnovationRecord rec;
    rec.residual = Vec2(0.5, 0.05);
    rec.HPHt = 1e-4 * Mat2::Identity();
    rec.H = Mat23::Identity();
    scan.records = {rec, rec};
    scan.n_accepted = 2;
    scan.G_u = Mat32::Ones();
    for (int k = 0; k < 10; ++k) tuner.on_scan(scan, cov);
    EXPECT_EQ(cov.R, cov0.R);
    EXPECT_EQ(cov.Q, cov0.Q);
}

TEST(VariantNames, RoundTrip) {
    for (Variant v : {Variant::Ekf, Variant::AnfekfR, Variant::AnfekfQ, Variant::AnfekfRQ})
        EXPECT_EQ(parse_variant(to_string(v)), v);
    EXPECT_THROW(parse_variant("kalman"), ConfigError);
    EXPECT_TRUE(adapts_r(Variant::AnfekfRQ));
    EXPECT_FALSE(adapts_q(Variant::AnfekfR));
}

TEST(AdaptationConfigTest, Validation) {
    AdaptationConfig c;
    EXPECT_NO_THROW(c.validate());
    c.window = 1;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.r_floor = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.q_ceiling = 0.001;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.output_gain = -1;
    EXPECT_THROW(c.validate(), ConfigError);
}
