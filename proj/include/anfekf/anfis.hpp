#pragma once

// Two-input, one-output, five-layer adaptive neuro-fuzzy network.
//
//   layer 1  pass-through of (in1, in2)
//   layer 2  five Gaussian memberships per input, mu = exp(-(u - m)^2 / delta^2)
//   layer 3  25 product rules, f_ij = mu1_i * mu2_j
//   layer 4  normalization, fbar_ij = f_ij / sum(f)
//   layer 5  singleton defuzzifier, out = sum(fbar_ij * w[consequent(i, j)])
//
// Every center, width and singleton is trained by steepest descent.

#include <array>
#include <span>
#include <vector>

namespace anfekf {

inline constexpr int kNumTerms = 5;
inline constexpr int kNumRules = kNumTerms * kNumTerms;
inline constexpr int kNumSingletons = 7;
/// 10 centers, 10 widths, 7 singletons.
inline constexpr int kNumAnfisParams = 2 * kNumTerms * 2 + kNumSingletons;

inline constexpr double kDefaultDeltaFloor = 1e-4;
inline constexpr double kDefaultLearningRate = 0.01;

struct MembershipFn {
    double m = 0.0;      // center
    double delta = 1.0;  // width
    friend bool operator==(const MembershipFn&, const MembershipFn&) = default;
};

double mf_eval(double u, const MembershipFn& mf);

/// 5x5 grid of 0-based singleton indices; row = term of input 1, column =
/// term of input 2, term 0 = L ... term 4 = H.
struct RuleBase {
    std::array<std::array<int, kNumTerms>, kNumTerms> consequent{};
    friend bool operator==(const RuleBase&, const RuleBase&) = default;
};

/// consequent(i, j) = clamp(10 - (i + j), 1, 7) with 1-based i, j and
/// 1-based singleton labels S1..S7. Stored 0-based.
RuleBase build_rule_base();

struct ForwardTrace {
    double in1 = 0.0;
    double in2 = 0.0;
    std::array<double, kNumTerms> mu1{};
    std::array<double, kNumTerms> mu2{};
    std::array<double, kNumRules> firing{};      // row-major (i, j)
    std::array<double, kNumRules> normalized{};  // sums to 1
    double firing_sum = 0.0;
    double out = 0.0;
};

/// Partial derivatives of the network output w.r.t. every parameter.
struct AnfisGradient {
    std::array<double, kNumTerms> d_m1{};
    std::array<double, kNumTerms> d_m2{};
    std::array<double, kNumTerms> d_delta1{};
    std::array<double, kNumTerms> d_delta2{};
    std::array<double, kNumSingletons> d_w{};

    std::array<double, kNumAnfisParams> flat() const;
};

class AnfisNet {
public:
    AnfisNet();
    AnfisNet(std::array<MembershipFn, kNumTerms> mfs1, std::array<MembershipFn, kNumTerms> mfs2,
             std::array<double, kNumSingletons> singletons, double learning_rate = kDefaultLearningRate,
             RuleBase rules = build_rule_base(), double delta_floor = kDefaultDeltaFloor);

    /// Centers at {-2s, -s, 0, s, 2s} with width s for each input.
    static AnfisNet uniform(double scale1, double scale2, std::array<double, kNumSingletons> singletons,
                            double learning_rate = kDefaultLearningRate);

    double evaluate(double in1, double in2) const { return forward(in1, in2).out; }
    ForwardTrace forward(double in1, double in2) const;
    AnfisGradient gradient(const ForwardTrace& trace) const;

    /// One steepest-descent step on E = e^2 / 2 where the penalized quantity
    /// moves by dS_dOut per unit of network output:
    ///   p <- p - eta * e * dS_dOut * d(out)/dp
    /// Widths are clamped to the floor afterwards.
    void train_step(const ForwardTrace& trace, double e, double dS_dOut);

    /// 10 centers (input 1 then input 2), 10 widths, 7 singletons.
    std::array<double, kNumAnfisParams> parameters() const;
    void set_parameters(std::span<const double> params);

    const std::array<MembershipFn, kNumTerms>& mfs1() const { return mfs1_; }
    const std::array<MembershipFn, kNumTerms>& mfs2() const { return mfs2_; }
    const std::array<double, kNumSingletons>& singletons() const { return w_; }
    const RuleBase& rules() const { return rules_; }
    double learning_rate() const { return eta_; }
    void set_learning_rate(double eta) { eta_ = eta; }
    double delta_floor() const { return delta_floor_; }

    friend bool operator==(const AnfisNet&, const AnfisNet&) = default;

private:
    void clamp_widths();

    std::array<MembershipFn, kNumTerms> mfs1_{};
    std::array<MembershipFn, kNumTerms> mfs2_{};
    std::array<double, kNumSingletons> w_{};
    RuleBase rules_;
    double eta_ = kDefaultLearningRate;
    double delta_floor_ = kDefaultDeltaFloor;
};

}  // namespace anfekf
