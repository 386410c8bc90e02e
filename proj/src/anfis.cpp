#include "anfekf/anfis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "anfekf/errors.hpp"

namespace anfekf {

double mf_eval(double u, const MembershipFn& mf) {
    const double d = (u - mf.m) / mf.delta;
    return std::exp(-d * d);
}

RuleBase build_rule_base() {
    RuleBase rb;
    for (int i = 0; i < kNumTerms; ++i)
        for (int j = 0; j < kNumTerms; ++j)
            rb.consequent[i][j] = std::clamp(10 - ((i + 1) + (j + 1)), 1, kNumSingletons) - 1;
    return rb;
}

std::array<double, kNumAnfisParams> AnfisGradient::flat() const {
    std::array<double, kNumAnfisParams> p{};
    for (int k = 0; k < kNumTerms; ++k) {
        p[k] = d_m1[k];
        p[kNumTerms + k] = d_m2[k];
        p[2 * kNumTerms + k] = d_delta1[k];
        p[3 * kNumTerms + k] = d_delta2[k];
    }
    for (int k = 0; k < kNumSingletons; ++k) p[4 * kNumTerms + k] = d_w[k];
    return p;
}

AnfisNet::AnfisNet() : AnfisNet(uniform(1.0, 1.0, {})) {}

AnfisNet::AnfisNet(std::array<MembershipFn, kNumTerms> mfs1, std::array<MembershipFn, kNumTerms> mfs2,
                   std::array<double, kNumSingletons> singletons, double learning_rate, RuleBase rules,
                   double delta_floor)
    : mfs1_(mfs1),
      mfs2_(mfs2),
      w_(singletons),
      rules_(rules),
      eta_(learning_rate),
      delta_floor_(delta_floor) {
    if (!(delta_floor_ > 0.0)) throw ConfigError("membership width floor must be positive");
    if (!(eta_ >= 0.0) || !std::isfinite(eta_)) throw ConfigError("learning rate must be finite and >= 0");
    for (const auto& row : rules_.consequent)
        for (int c : row)
            if (c < 0 || c >= kNumSingletons) throw ConfigError("rule consequent out of range");
    clamp_widths();
}

AnfisNet AnfisNet::uniform(double scale1, double scale2, std::array<double, kNumSingletons> singletons,
                           double learning_rate) {
    std::array<MembershipFn, kNumTerms> a{}, b{};
    for (int k = 0; k < kNumTerms; ++k) {
        a[k] = {(k - 2) * scale1, scale1};
        b[k] = {(k - 2) * scale2, scale2};
    }
    return AnfisNet(a, b, singletons, learning_rate);
}

ForwardTrace AnfisNet::forward(double in1, double in2) const {
    ForwardTrace t;
    t.in1 = in1;
    t.in2 = in2;
    for (int k = 0; k < kNumTerms; ++k) {
        t.mu1[k] = mf_eval(in1, mfs1_[k]);
        t.mu2[k] = mf_eval(in2, mfs2_[k]);
    }
    double sum = 0.0;
    for (int i = 0; i < kNumTerms; ++i)
        for (int j = 0; j < kNumTerms; ++j) {
            const double f = t.mu1[i] * t.mu2[j];
            t.firing[i * kNumTerms + j] = f;
            sum += f;
        }
    if (!(sum >= 1e-300))
        throw Error("ANFIS firing strengths vanish for inputs (" + std::to_string(in1) + ", " +
                    std::to_string(in2) + ")");
    t.firing_sum = sum;
    double out = 0.0;
    for (int i = 0; i < kNumTerms; ++i)
        for (int j = 0; j < kNumTerms; ++j) {
            const int l = i * kNumTerms + j;
            t.normalized[l] = t.firing[l] / sum;
            out += t.normalized[l] * w_[rules_.consequent[i][j]];
        }
    t.out = out;
    return t;
}

AnfisGradient AnfisNet::gradient(const ForwardTrace& t) const {
    AnfisGradient g;
    // d(out)/d(f_l) = (w_c(l) - out) / sum(f)
    std::array<double, kNumRules> d_f{};
    for (int i = 0; i < kNumTerms; ++i)
        for (int j = 0; j < kNumTerms; ++j) {
            const int l = i * kNumTerms + j;
            const int c = rules_.consequent[i][j];
            g.d_w[c] += t.normalized[l];
            d_f[l] = (w_[c] - t.out) / t.firing_sum;
        }

    for (int i = 0; i < kNumTerms; ++i) {
        double d_mu1 = 0.0;
        double d_mu2 = 0.0;
        for (int k = 0; k < kNumTerms; ++k) {
            d_mu1 += d_f[i * kNumTerms + k] * t.mu2[k];
            d_mu2 += d_f[k * kNumTerms + i] * t.mu1[k];
        }
        const double u1 = t.in1 - mfs1_[i].m;
        const double s1 = mfs1_[i].delta;
        const double u2 = t.in2 - mfs2_[i].m;
        const double s2 = mfs2_[i].delta;
        g.d_m1[i] = d_mu1 * t.mu1[i] * 2.0 * u1 / (s1 * s1);
        g.d_delta1[i] = d_mu1 * t.mu1[i] * 2.0 * u1 * u1 / (s1 * s1 * s1);
        g.d_m2[i] = d_mu2 * t.mu2[i] * 2.0 * u2 / (s2 * s2);
        g.d_delta2[i] = d_mu2 * t.mu2[i] * 2.0 * u2 * u2 / (s2 * s2 * s2);
    }
    return g;
}

void AnfisNet::train_step(const ForwardTrace& trace, double e, double dS_dOut) {
    const double scale = eta_ * e * dS_dOut;
    if (scale == 0.0) return;
    const AnfisGradient g = gradient(trace);
    for (int k = 0; k < kNumTerms; ++k) {
        mfs1_[k].m -= scale * g.d_m1[k];
        mfs2_[k].m -= scale * g.d_m2[k];
        mfs1_[k].delta -= scale * g.d_delta1[k];
        mfs2_[k].delta -= scale * g.d_delta2[k];
    }
    for (int k = 0; k < kNumSingletons; ++k) w_[k] -= scale * g.d_w[k];
    clamp_widths();
}

std::array<double, kNumAnfisParams> AnfisNet::parameters() const {
    std::array<double, kNumAnfisParams> p{};
    for (int k = 0; k < kNumTerms; ++k) {
        p[k] = mfs1_[k].m;
        p[kNumTerms + k] = mfs2_[k].m;
        p[2 * kNumTerms + k] = mfs1_[k].delta;
        p[3 * kNumTerms + k] = mfs2_[k].delta;
    }
    for (int k = 0; k < kNumSingletons; ++k) p[4 * kNumTerms + k] = w_[k];
    return p;
}

void AnfisNet::set_parameters(std::span<const double> p) {
    if (p.size() != static_cast<std::size_t>(kNumAnfisParams))
        throw ConfigError("ANFIS parameter list must hold " + std::to_string(kNumAnfisParams) +
                          " values, got " + std::to_string(p.size()));
    for (double v : p)
        if (!std::isfinite(v)) throw ConfigError("ANFIS parameters must be finite");
    for (int k = 0; k < kNumTerms; ++k) {
        mfs1_[k].m = p[k];
        mfs2_[k].m = p[kNumTerms + k];
        mfs1_[k].delta = p[2 * kNumTerms + k];
        mfs2_[k].delta = p[3 * kNumTerms + k];
    }
    for (int k = 0; k < kNumSingletons; ++k) w_[k] = p[4 * kNumTerms + k];
    clamp_widths();
}

void AnfisNet::clamp_widths() {
    for (auto* mfs : {&mfs1_, &mfs2_})
        for (auto& mf : *mfs) mf.delta = std::max(mf.delta, delta_floor_);
}

}  // namespace anfekf
