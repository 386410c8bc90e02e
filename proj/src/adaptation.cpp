#include "anfekf/adaptation.hpp"

#include <algorithm>
#include <cmath>

namespace anfekf {

Mat2 estimate_actual_cov(const ResidualWindow& window) {
    if (!window.full())
        throw WarmupError("residual window holds " + std::to_string(window.size()) + " of " +
                          std::to_string(window.capacity()) + " entries");
    Mat2 C = Mat2::Zero();
    for (std::size_t i = 0; i < window.size(); ++i) C += window[i] * window[i].transpose();
    return C / static_cast<double>(window.size());
}

DomState compute_dom(const Mat2& S, const Mat2& C_hat, const DomState& prev) {
    DomState next;
    next.dom = S - C_hat;
    next.dom_prev = prev.valid ? prev.dom : next.dom;
    next.delta_dom = next.dom - next.dom_prev;
    next.valid = true;
    return next;
}

Vec2 mismatch_scale(const Mat2& S) {
    return {0.5 * S(0, 0), 0.5 * S(1, 1)};
}

void AdaptationConfig::validate() const {
    if (window < 2) throw ConfigError("adaptation window must be >= 2");
    if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("learning rate must lie in [0, 1]");
    if (!(r_floor > 0.0)) throw ConfigError("r floor must be positive");
    if (!(q_floor > 0.0)) throw ConfigError("q floor must be positive");
    if (!(q_ceiling >= q_floor)) throw ConfigError("q ceiling must be >= q floor");
    if (!(r_step >= 0.0) || !std::isfinite(r_step)) throw ConfigError("r step must be finite and >= 0");
    if (!(q_ratio >= 1.0) || !std::isfinite(q_ratio)) throw ConfigError("q ratio must be finite and >= 1");
    if (!(q_width > 0.0) || !std::isfinite(q_width)) throw ConfigError("q width must be finite and > 0");
    if (!(output_gain >= 0.0) || !std::isfinite(output_gain))
        throw ConfigError("output gain must be finite and >= 0");
}

AnfisNet default_r_net(const AdaptationConfig& config) {
    std::array<double, kNumSingletons> w{};
    for (int k = 0; k < kNumSingletons; ++k) w[k] = (k - 3) * config.r_step;
    return AnfisNet::uniform(1.0, 1.0, w, config.eta);
}

AnfisNet default_q_net(const AdaptationConfig& config) {
    std::array<double, kNumSingletons> w{};
    for (int k = 0; k < kNumSingletons; ++k) w[k] = std::pow(config.q_ratio, k - 3);
    // Geometric singletons are not symmetric about 1, so wide memberships
    // would bias the factor upward at zero mismatch (about 1.085 at width 1).
    // Narrow memberships keep the center rule dominant.
    std::array<MembershipFn, kNumTerms> mfs{};
    for (int k = 0; k < kNumTerms; ++k) mfs[k] = {double(k - 2), config.q_width};
    return AnfisNet(mfs, mfs, w, config.eta);
}

RAdapter make_r_adapter(const Mat2& R0, const AdaptationConfig& config) {
    config.validate();
    RAdapter a{{default_r_net(config), default_r_net(config)}};
    a.r_floor = config.r_floor * R0.diagonal();
    a.gain = config.output_gain;
    return a;
}

QAdapter make_q_adapter(const Mat2& Q0, const AdaptationConfig& config) {
    config.validate();
    QAdapter a{default_q_net(config)};
    a.q_floor = config.q_floor * Q0.diagonal();
    a.q_ceiling = config.q_ceiling * Q0.diagonal();
    a.gain = config.output_gain;
    return a;
}

namespace {

// Inputs are held inside the span of the membership centers so the firing
// strengths can never vanish.
double clamp_to_terms(double u, const std::array<MembershipFn, kNumTerms>& mfs) {
    double lo = mfs[0].m;
    double hi = mfs[0].m;
    for (const auto& mf : mfs) {
        lo = std::min(lo, mf.m);
        hi = std::max(hi, mf.m);
    }
    return std::clamp(u, lo, hi);
}

ForwardTrace forward_clamped(const AnfisNet& net, double in1, double in2) {
    return net.forward(clamp_to_terms(in1, net.mfs1()), clamp_to_terms(in2, net.mfs2()));
}

}  // namespace

RAdaptResult adapt_r(const RAdapter& adapter, const DomState& dom, const Mat2& R, const Vec2& scale) {
    RAdaptResult res;
    res.R = Mat2::Zero();
    res.scale = scale;
    for (int i = 0; i < 2; ++i) {
        const double a = scale(i);
        res.traces[i] = forward_clamped(adapter.nets[i], dom.dom(i, i) / a, dom.delta_dom(i, i) / a);
        const double proposed = R(i, i) + adapter.gain * a * res.traces[i].out;
        res.R(i, i) = std::max(proposed, adapter.r_floor(i));
        res.delta(i) = res.R(i, i) - R(i, i);
    }
    return res;
}

QAdaptResult adapt_q(const QAdapter& adapter, const DomState& dom, const Mat2& Q, const Vec2& scale) {
    QAdaptResult res;
    res.scale = scale;
    res.trace = forward_clamped(adapter.net, dom.dom(0, 0) / scale(0), dom.dom(1, 1) / scale(1));
    res.factor = std::pow(res.trace.out, adapter.gain);
    res.Q = Mat2::Zero();
    for (int i = 0; i < 2; ++i)
        res.Q(i, i) = std::clamp(Q(i, i) * res.factor, adapter.q_floor(i), adapter.q_ceiling(i));
    return res;
}

void train_adapter(RAdapter& adapter, const DomState& dom, const RAdaptResult& applied) {
    for (int i = 0; i < 2; ++i) {
        const double e = (dom.dom(i, i) + applied.delta(i)) / applied.scale(i);
        adapter.nets[i].train_step(applied.traces[i], e, adapter.gain);
    }
}

void train_adapter(QAdapter& adapter, const DomState& dom, const QAdaptResult& applied,
                   const Vec2& sensitivity) {
    // Normalized per-channel errors and sensitivities; the network sees the
    // sensitivity-weighted mean error and the mean sensitivity, whose product
    // is the gradient of (e_1^2 + e_2^2) / 4.
    double weighted = 0.0;
    double sens_sum = 0.0;
    for (int i = 0; i < 2; ++i) {
        const double a = applied.scale(i);
        const double s = sensitivity(i) / a;
        const double e = (dom.dom(i, i) + (applied.factor - 1.0) * sensitivity(i)) / a;
        weighted += e * s;
        sens_sum += s;
    }
    if (!(sens_sum > 0.0)) return;
    adapter.net.train_step(applied.trace, weighted / sens_sum, adapter.gain * 0.5 * sens_sum);
}

const char* to_string(Variant v) {
    switch (v) {
        case Variant::Ekf: return "ekf";
        case Variant::AnfekfR: return "anfekf-r";
        case Variant::AnfekfQ: return "anfekf-q";
        case Variant::AnfekfRQ: return "anfekf-rq";
    }
    return "?";
}

Variant parse_variant(const std::string& s) {
    for (Variant v : {Variant::Ekf, Variant::AnfekfR, Variant::AnfekfQ, Variant::AnfekfRQ})
        if (s == to_string(v)) return v;
    throw ConfigError("unknown variant '" + s + "' (expected ekf, anfekf-r, anfekf-q or anfekf-rq)");
}

CovarianceTuner::CovarianceTuner(Variant variant, const CovPair& initial, const AdaptationConfig& config)
    : variant_(variant), config_(config), residuals_(config.window), hpht_(config.window) {
    config_.validate();
    if (adapts_r(variant_)) r_adapter_ = make_r_adapter(initial.R, config_);
    if (adapts_q(variant_)) q_adapter_ = make_q_adapter(initial.Q, config_);
}

void CovarianceTuner::set_r_nets(const std::array<AnfisNet, 2>& nets) {
    if (r_adapter_) r_adapter_->nets = nets;
}

void CovarianceTuner::set_q_net(const AnfisNet& net) {
    if (q_adapter_) q_adapter_->net = net;
}

AdaptationTrace CovarianceTuner::on_scan(const StepResult& step, CovPair& cov) {
    AdaptationTrace trace;
    for (const InnovationRecord& rec : step.records) {
        residuals_.push(rec.residual);
        hpht_.push(rec.HPHt);
    }
    if (!residuals_.full() || step.n_accepted == 0) return trace;

    const Mat2 C = estimate_actual_cov(residuals_);
    Mat2 hph = Mat2::Zero();
    for (std::size_t i = 0; i < hpht_.size(); ++i) hph += hpht_[i];
    const Mat2 S = hph / static_cast<double>(hpht_.size()) + cov.R;

    dom_ = compute_dom(S, C, dom_);
    const Vec2 scale = mismatch_scale(S);
    trace.evaluated = true;
    trace.dom_diag = dom_.dom.diagonal();
    trace.delta_dom_diag = dom_.delta_dom.diagonal();
    if (!(scale.minCoeff() > 0.0)) return trace;

    if (r_adapter_) {
        const RAdaptResult res = adapt_r(*r_adapter_, dom_, cov.R, scale);
        cov.R = res.R;
        trace.delta_r = res.delta;
        train_adapter(*r_adapter_, dom_, res);
    }
    if (q_adapter_) {
        Vec2 sens = Vec2::Zero();
        const Mat3 GQGt = step.G_u * cov.Q * step.G_u.transpose();
        for (const InnovationRecord& rec : step.records)
            sens += (rec.H * GQGt * rec.H.transpose()).diagonal();
        sens /= static_cast<double>(step.records.size());
        const QAdaptResult res = adapt_q(*q_adapter_, dom_, cov.Q, scale);
        cov.Q = res.Q;
        trace.q_factor = res.factor;
        train_adapter(*q_adapter_, dom_, res, sens);
    }
    return trace;
}

}  // namespace anfekf
