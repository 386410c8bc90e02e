#pragma once

// Innovation-based covariance matching.
//
// The sample innovation covariance C = mean(r r^T) over a moving window is
// compared to the theoretical one; their difference DOM = S - C drives one
// ANFIS per R channel (additive correction) and one ANFIS for Q
// (multiplicative correction shared by both Q channels).
//
// The networks run in normalized units. For channel i the scale is
//   a_i = S_ii / 2
// so DOM_ii / a_i = 2 (1 - C_ii / S_ii), which has zero mean when the filter
// is matched. Inputs are clamped to [-2, 2], the span of the membership
// centers. R corrections are produced in the same units: dR_i = a_i * out_i.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "anfekf/anfis.hpp"
#include "anfekf/ekf.hpp"
#include "anfekf/errors.hpp"

namespace anfekf {

/// Fixed-capacity ring buffer holding the most recent entries.
template <class T>
class RingWindow {
public:
    explicit RingWindow(std::size_t capacity) : buf_(capacity) {
        if (capacity < 2) throw ConfigError("window capacity must be >= 2");
    }

    void push(const T& v) {
        buf_[head_] = v;
        head_ = (head_ + 1) % buf_.size();
        if (count_ < buf_.size()) ++count_;
    }

    std::size_t capacity() const { return buf_.size(); }
    std::size_t size() const { return count_; }
    bool full() const { return count_ == buf_.size(); }
    void clear() { head_ = count_ = 0; }

    /// 0 = oldest held entry.
    const T& operator[](std::size_t i) const {
        const std::size_t start = (head_ + buf_.size() - count_) % buf_.size();
        return buf_[(start + i) % buf_.size()];
    }

private:
    std::vector<T> buf_;
    std::size_t head_ = 0;
    std::size_t count_ = 0;
};

using ResidualWindow = RingWindow<Vec2>;

/// (1/N) sum r r^T over the window. Throws WarmupError until the window is full.
Mat2 estimate_actual_cov(const ResidualWindow& window);

struct DomState {
    Mat2 dom = Mat2::Zero();
    Mat2 dom_prev = Mat2::Zero();
    Mat2 delta_dom = Mat2::Zero();
    bool valid = false;  // dom has been evaluated at least once
};

/// dom = S - C_hat; delta_dom = dom - prev.dom, zero on the first evaluation.
DomState compute_dom(const Mat2& S, const Mat2& C_hat, const DomState& prev);

/// Per-channel normalization a_i = S_ii / 2.
Vec2 mismatch_scale(const Mat2& S);

struct AdaptationConfig {
    std::size_t window = 15;
    double eta = kDefaultLearningRate;
    double r_floor = 1e-4;       // fraction of the initial R diagonal
    double q_floor = 0.01;       // fraction of the initial Q diagonal
    double q_ceiling = 100.0;    // multiple of the initial Q diagonal
    double r_step = 0.1;         // R singletons are {-3, ..., 3} * r_step (units of a)
    double q_ratio = 1.5;        // Q singletons are q_ratio^{-3 .. 3}
    double q_width = 0.4;        // Q membership width (centers one unit apart)
    double output_gain = 1.0;    // 0 turns both adapters into identities

    void validate() const;
};

/// Default R network: DOM memberships at {-2, -1, 0, 1, 2}, width 1;
/// delta-DOM memberships on the same grid; singletons {-3 .. 3} * r_step.
AnfisNet default_r_net(const AdaptationConfig& config);

/// Default Q network: both DOM inputs at {-2, -1, 0, 1, 2}, width q_width;
/// geometric singletons with 1 at the center rule.
AnfisNet default_q_net(const AdaptationConfig& config);

struct RAdapter {
    std::array<AnfisNet, 2> nets;
    Vec2 r_floor = Vec2::Constant(1e-12);
    double gain = 1.0;
};

struct QAdapter {
    AnfisNet net;
    Vec2 q_floor = Vec2::Constant(1e-12);
    Vec2 q_ceiling = Vec2::Constant(1e12);
    double gain = 1.0;
};

RAdapter make_r_adapter(const Mat2& R0, const AdaptationConfig& config);
QAdapter make_q_adapter(const Mat2& Q0, const AdaptationConfig& config);

struct RAdaptResult {
    Mat2 R = Mat2::Zero();
    Vec2 delta = Vec2::Zero();  // applied change R' - R per channel
    Vec2 scale = Vec2::Ones();
    std::array<ForwardTrace, 2> traces{};
};

/// R'(i,i) = max(R(i,i) + a_i * gain * net_i(dom_ii / a_i, ddom_ii / a_i), floor_i).
RAdaptResult adapt_r(const RAdapter& adapter, const DomState& dom, const Mat2& R, const Vec2& scale);

struct QAdaptResult {
    Mat2 Q = Mat2::Zero();
    double factor = 1.0;  // multiplicative factor before clamping
    Vec2 scale = Vec2::Ones();
    ForwardTrace trace{};
};

/// Q'(i,i) = clamp(Q(i,i) * net(dom_11 / a_1, dom_22 / a_2)^gain, floor_i, ceiling_i).
QAdaptResult adapt_q(const QAdapter& adapter, const DomState& dom, const Mat2& Q, const Vec2& scale);

/// One training step per R channel with the post-update error
/// e_i = (dom_ii + applied dR_i) / a_i and dS/d(out) = +gain.
void train_adapter(RAdapter& adapter, const DomState& dom, const RAdaptResult& applied);

/// One training step of the Q network. sensitivity_i = [H G Q G^T H^T]_ii is
/// how much S_ii moves per unit change of the multiplicative factor.
void train_adapter(QAdapter& adapter, const DomState& dom, const QAdaptResult& applied,
                   const Vec2& sensitivity);

enum class Variant { Ekf, AnfekfR, AnfekfQ, AnfekfRQ };

const char* to_string(Variant v);
Variant parse_variant(const std::string& s);
inline bool adapts_r(Variant v) { return v == Variant::AnfekfR || v == Variant::AnfekfRQ; }
inline bool adapts_q(Variant v) { return v == Variant::AnfekfQ || v == Variant::AnfekfRQ; }

/// Per-scan adaptation record for the run log.
struct AdaptationTrace {
    bool evaluated = false;  // window full and at least one accepted measurement
    Vec2 dom_diag = Vec2::Zero();
    Vec2 delta_dom_diag = Vec2::Zero();
    Vec2 delta_r = Vec2::Zero();
    double q_factor = 1.0;
};

/// Adaptation context owned by one filter instance. Feeds every innovation
/// of a scan into the windows, then (once warm) rewrites R and/or Q.
class CovarianceTuner {
public:
    CovarianceTuner(Variant variant, const CovPair& initial, const AdaptationConfig& config);

    AdaptationTrace on_scan(const StepResult& step, CovPair& cov);

    const std::optional<RAdapter>& r_adapter() const { return r_adapter_; }
    const std::optional<QAdapter>& q_adapter() const { return q_adapter_; }
    void set_r_nets(const std::array<AnfisNet, 2>& nets);
    void set_q_net(const AnfisNet& net);

private:
    Variant variant_;
    AdaptationConfig config_;
    ResidualWindow residuals_;
    RingWindow<Mat2> hpht_;
    DomState dom_;
    std::optional<RAdapter> r_adapter_;
    std::optional<QAdapter> q_adapter_;
};

}  // namespace anfekf
