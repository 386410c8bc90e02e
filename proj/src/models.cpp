#include "anfekf/models.hpp"

#include <cmath>
#include <string>

#include "anfekf/errors.hpp"

namespace anfekf {

double wrap_angle(double a) {
    double r = std::fmod(a + kPi, kTwoPi);
    if (r <= 0.0) r += kTwoPi;
    return r - kPi;
}

void NoiseSpec::validate() const {
    auto check = [](double s, const char* name) {
        if (!(s > 0.0) || !std::isfinite(s))
            throw ConfigError(std::string("noise standard deviation ") + name +
                              " must be finite and strictly positive");
    };
    check(sigma_v, "sigma_v");
    check(sigma_gamma, "sigma_gamma");
    check(sigma_r, "sigma_r");
    check(sigma_theta, "sigma_theta");
}

Mat2 NoiseSpec::process_cov() const {
    return Vec2(sigma_v * sigma_v, sigma_gamma * sigma_gamma).asDiagonal();
}

Mat2 NoiseSpec::measurement_cov() const {
    return Vec2(sigma_r * sigma_r, sigma_theta * sigma_theta).asDiagonal();
}

Pose motion_step(const Pose& pose, const ControlInput& u, double T, const VehicleParams& vehicle,
                 ControlNoise noise) {
    const double v = u.v + noise.dv;
    const double g = u.gamma + noise.dgamma;
    const double heading = pose.phi + g;
    return Pose(pose.x + T * v * std::cos(heading), pose.y + T * v * std::sin(heading),
                pose.phi + T * v / vehicle.wheelbase * std::sin(g));
}

Mat3 motion_jacobian_state(const Pose& pose, const ControlInput& u, double T) {
    const double heading = pose.phi + u.gamma;
    Mat3 F = Mat3::Identity();
    F(0, 2) = -T * u.v * std::sin(heading);
    F(1, 2) = T * u.v * std::cos(heading);
    return F;
}

Mat32 motion_jacobian_control(const Pose& pose, const ControlInput& u, double T,
                              const VehicleParams& vehicle) {
    const double heading = pose.phi + u.gamma;
    const double c = std::cos(heading);
    const double s = std::sin(heading);
    const double B = vehicle.wheelbase;
    Mat32 G;
    G << T * c, -T * u.v * s,
         T * s, T * u.v * c,
         T * std::sin(u.gamma) / B, T * u.v * std::cos(u.gamma) / B;
    return G;
}

namespace {

double checked_range(const Pose& pose, const Landmark& lm, double epsilon_range) {
    const double r = std::hypot(lm.x - pose.x, lm.y - pose.y);
    if (r < epsilon_range)
        throw DegenerateGeometryError("robot within " + std::to_string(epsilon_range) +
                                      " m of landmark " + std::to_string(lm.id));
    return r;
}

}  // namespace

Measurement observe(const Pose& pose, const Landmark& lm, ObservationNoise noise,
                    double epsilon_range) {
    const double r = checked_range(pose, lm, epsilon_range);
    const double bearing = std::atan2(lm.y - pose.y, lm.x - pose.x) - pose.phi;
    return {lm.id, r + noise.dr, wrap_angle(bearing + noise.dtheta)};
}

Mat23 observation_jacobian(const Pose& pose, const Landmark& lm, double epsilon_range) {
    const double r = checked_range(pose, lm, epsilon_range);
    const double dx = lm.x - pose.x;
    const double dy = lm.y - pose.y;
    const double q = r * r;
    Mat23 H;
    H << -dx / r, -dy / r, 0.0,
         dy / q, -dx / q, -1.0;
    return H;
}

}  // namespace anfekf
