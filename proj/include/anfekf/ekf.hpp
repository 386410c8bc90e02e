#pragma once

// Landmark-based localization EKF: predict, measurement prediction,
// Mahalanobis gating and sequential update. Q and R are supplied on every
// call so an adaptation layer can rewrite them between steps.

#include <span>
#include <unordered_map>
#include <vector>

#include "anfekf/models.hpp"

namespace anfekf {

/// Chi-square 95% quantile for 2 degrees of freedom.
inline constexpr double kDefaultGate = 5.991;
inline constexpr double kMaxConditionNumber = 1e12;

struct GaussianState {
    Vec3 mean = Vec3::Zero();  // (x, y, phi), phi wrapped
    Mat3 P = Mat3::Zero();

    Pose pose() const { return Pose(mean); }
};

/// Diagonal process (v, gamma) and measurement (r, theta) covariances.
struct CovPair {
    Mat2 Q = Mat2::Zero();
    Mat2 R = Mat2::Zero();
};

struct InnovationRecord {
    Vec2 residual = Vec2::Zero();  // z - zhat, bearing wrapped
    Mat2 S = Mat2::Zero();         // H P H^T + R
    Mat2 HPHt = Mat2::Zero();      // state-uncertainty part of S
    Mat23 H = Mat23::Zero();
    int landmark_id = 0;
    long timestep = 0;
    double mahalanobis = 0.0;
    bool accepted = false;
};

struct PredictedMeasurement {
    Vec2 zhat;
    Mat2 S;
    Mat23 H;
    Mat2 HPHt;
};

/// Read-only landmark lookup by id.
class LandmarkMap {
public:
    LandmarkMap() = default;
    explicit LandmarkMap(std::vector<Landmark> landmarks);

    const Landmark& at(int id) const;
    bool contains(int id) const { return index_.contains(id); }
    const std::vector<Landmark>& landmarks() const { return landmarks_; }
    std::size_t size() const { return landmarks_.size(); }
    bool empty() const { return landmarks_.empty(); }

private:
    std::vector<Landmark> landmarks_;
    std::unordered_map<int, std::size_t> index_;
};

struct EkfConfig {
    VehicleParams vehicle;
    double gate = kDefaultGate;
    double epsilon_range = kDefaultEpsilonRange;
};

/// Overwrites P with (P + P^T) / 2.
void symmetrize(Mat3& P);

GaussianState predict(const GaussianState& state, const ControlInput& u, const Mat2& Q, double T,
                      const VehicleParams& vehicle);

PredictedMeasurement predict_measurement(const GaussianState& state, const Landmark& lm,
                                         const Mat2& R,
                                         double epsilon_range = kDefaultEpsilonRange);

Vec2 innovation(const Measurement& z, const Vec2& zhat);

/// Squared Mahalanobis distance residual^T S^-1 residual. Throws
/// SingularMatrixError when S is singular or its condition number exceeds
/// kMaxConditionNumber.
double mahalanobis_sq(const Vec2& residual, const Mat2& S);

bool gate(const Vec2& residual, const Mat2& S, double G);

GaussianState update(const GaussianState& state, const InnovationRecord& rec, const Mat23& H);

struct StepResult {
    GaussianState state;
    std::vector<InnovationRecord> records;
    Mat32 G_u = Mat32::Zero();  // control Jacobian used by the prediction
    int n_accepted = 0;
    int n_gated = 0;
};

/// One predict followed by a sequential gated update for each measurement in
/// arrival order. Gated-out measurements are returned with accepted = false.
StepResult step(const GaussianState& state, const ControlInput& u,
                std::span<const Measurement> measurements, const CovPair& cov,
                const LandmarkMap& map, double T, const EkfConfig& config, long timestep = 0);

}  // namespace anfekf
