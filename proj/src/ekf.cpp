#include "anfekf/ekf.hpp"

#include <cmath>
#include <limits>

#include "anfekf/errors.hpp"

namespace anfekf {

LandmarkMap::LandmarkMap(std::vector<Landmark> landmarks) : landmarks_(std::move(landmarks)) {
    for (std::size_t i = 0; i < landmarks_.size(); ++i) {
        if (!index_.emplace(landmarks_[i].id, i).second)
            throw ConfigError("duplicate landmark id " + std::to_string(landmarks_[i].id));
    }
}

const Landmark& LandmarkMap::at(int id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw UnknownLandmarkError(id);
    return landmarks_[it->second];
}

void symmetrize(Mat3& P) { P = 0.5 * (P + P.transpose()).eval(); }

namespace {

void symmetrize2(Mat2& S) { S = 0.5 * (S + S.transpose()).eval(); }

// S is 2x2 symmetric; closed form eigenvalues give the condition number.
Mat2 checked_inverse(const Mat2& S) {
    const double tr = S.trace();
    const double det = S.determinant();
    const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    const double lmax = std::abs(0.5 * tr) + disc;
    const double lmin = std::abs(std::abs(0.5 * tr) - disc);
    if (!(det != 0.0) || !std::isfinite(det) || lmin <= 0.0 || lmax / lmin > kMaxConditionNumber)
        throw SingularMatrixError("innovation covariance is singular or ill-conditioned");
    return S.inverse();
}

}  // namespace

GaussianState predict(const GaussianState& state, const ControlInput& u, const Mat2& Q, double T,
                      const VehicleParams& vehicle) {
    const Pose pose = state.pose();
    const Mat3 F = motion_jacobian_state(pose, u, T);
    const Mat32 G = motion_jacobian_control(pose, u, T, vehicle);
    GaussianState out;
    out.mean = motion_step(pose, u, T, vehicle).vector();
    out.P = F * state.P * F.transpose() + G * Q * G.transpose();
    symmetrize(out.P);
    return out;
}

PredictedMeasurement predict_measurement(const GaussianState& state, const Landmark& lm,
                                         const Mat2& R, double epsilon_range) {
    const Pose pose = state.pose();
    PredictedMeasurement pm;
    pm.zhat = observe(pose, lm, {}, epsilon_range).vector();
    pm.H = observation_jacobian(pose, lm, epsilon_range);
    pm.HPHt = pm.H * state.P * pm.H.transpose();
    symmetrize2(pm.HPHt);
    pm.S = pm.HPHt + R;
    symmetrize2(pm.S);
    return pm;
}

Vec2 innovation(const Measurement& z, const Vec2& zhat) {
    return {z.r - zhat(0), wrap_angle(z.theta - zhat(1))};
}

double mahalanobis_sq(const Vec2& residual, const Mat2& S) {
    return residual.dot(checked_inverse(S) * residual);
}

bool gate(const Vec2& residual, const Mat2& S, double G) {
    return mahalanobis_sq(residual, S) <= G;
}

GaussianState update(const GaussianState& state, const InnovationRecord& rec, const Mat23& H) {
    const Mat2 S_inv = checked_inverse(rec.S);
    const Eigen::Matrix<double, 3, 2> K = state.P * H.transpose() * S_inv;
    GaussianState out;
    out.mean = state.mean + K * rec.residual;
    out.mean(2) = wrap_angle(out.mean(2));
    out.P = (Mat3::Identity() - K * H) * state.P;
    symmetrize(out.P);
    return out;
}

StepResult step(const GaussianState& state, const ControlInput& u,
                std::span<const Measurement> measurements, const CovPair& cov,
                const LandmarkMap& map, double T, const EkfConfig& config, long timestep) {
    StepResult result;
    result.G_u = motion_jacobian_control(state.pose(), u, T, config.vehicle);
    result.state = predict(state, u, cov.Q, T, config.vehicle);
    result.records.reserve(measurements.size());

    for (const Measurement& z : measurements) {
        const Landmark& lm = map.at(z.landmark_id);
        const PredictedMeasurement pm =
            predict_measurement(result.state, lm, cov.R, config.epsilon_range);

        InnovationRecord rec;
        rec.residual = innovation(z, pm.zhat);
        rec.S = pm.S;
        rec.HPHt = pm.HPHt;
        rec.H = pm.H;
        rec.landmark_id = z.landmark_id;
        rec.timestep = timestep;
        rec.mahalanobis = mahalanobis_sq(rec.residual, rec.S);
        rec.accepted = rec.mahalanobis <= config.gate;

        if (rec.accepted) {
            result.state = update(result.state, rec, pm.H);
            ++result.n_accepted;
        } else {
            ++result.n_gated;
        }
        result.records.push_back(rec);
    }
    return result;
}

}  // namespace anfekf
