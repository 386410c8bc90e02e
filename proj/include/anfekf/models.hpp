#pragma once

// Discrete vehicle kinematics and range-bearing observation model.
//
// State is (x, y, phi). The control (v, gamma) is a velocity and a steer
// angle; process noise enters on the control channel before the trig:
//
//   x'   = x   + T (v + dv) cos(phi + gamma + dgamma)
//   y'   = y   + T (v + dv) sin(phi + gamma + dgamma)
//   phi' = phi + T (v + dv) / B * sin(gamma + dgamma)
//
// The bearing to a landmark is measured from the heading:
//   r     = |l - p|
//   theta = atan2(l_y - y, l_x - x) - phi

#include <Eigen/Dense>

#include "anfekf/angle.hpp"

namespace anfekf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat32 = Eigen::Matrix<double, 3, 2>;

inline constexpr double kDefaultEpsilonRange = 1e-9;

struct Pose {
    double x = 0.0;
    double y = 0.0;
    double phi = 0.0;

    Pose() = default;
    Pose(double x_, double y_, double phi_) : x(x_), y(y_), phi(wrap_angle(phi_)) {}
    explicit Pose(const Vec3& v) : Pose(v(0), v(1), v(2)) {}

    Vec3 vector() const { return {x, y, phi}; }
    friend bool operator==(const Pose&, const Pose&) = default;
};

struct ControlInput {
    double v = 0.0;      // m/s
    double gamma = 0.0;  // steer angle, rad
    friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

struct Landmark {
    int id = 0;
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Landmark&, const Landmark&) = default;
};

struct Measurement {
    int landmark_id = 0;
    double r = 0.0;      // m
    double theta = 0.0;  // rad, wrapped
    Vec2 vector() const { return {r, theta}; }
    friend bool operator==(const Measurement&, const Measurement&) = default;
};

/// Standard deviations of the four noise channels. All strictly positive.
struct NoiseSpec {
    double sigma_v = 0.0;
    double sigma_gamma = 0.0;
    double sigma_r = 0.0;
    double sigma_theta = 0.0;

    void validate() const;
    Mat2 process_cov() const;      // diag(sigma_v^2, sigma_gamma^2)
    Mat2 measurement_cov() const;  // diag(sigma_r^2, sigma_theta^2)
    friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

struct ControlNoise {
    double dv = 0.0;
    double dgamma = 0.0;
};

struct ObservationNoise {
    double dr = 0.0;
    double dtheta = 0.0;
};

/// Vehicle geometry shared by the kinematic functions.
struct VehicleParams {
    double wheelbase = 4.0;  // B, m
};

Pose motion_step(const Pose& pose, const ControlInput& u, double T, const VehicleParams& vehicle,
                 ControlNoise noise = {});

/// d(next pose) / d(pose) at zero noise.
Mat3 motion_jacobian_state(const Pose& pose, const ControlInput& u, double T);

/// d(next pose) / d(v, gamma) at zero noise.
Mat32 motion_jacobian_control(const Pose& pose, const ControlInput& u, double T,
                              const VehicleParams& vehicle);

Measurement observe(const Pose& pose, const Landmark& lm, ObservationNoise noise = {},
                    double epsilon_range = kDefaultEpsilonRange);

/// Rows (range, bearing), columns (x, y, phi).
Mat23 observation_jacobian(const Pose& pose, const Landmark& lm,
                           double epsilon_range = kDefaultEpsilonRange);

}  // namespace anfekf
