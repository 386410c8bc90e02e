#pragma once

// Seedable ground-truth world and Monte Carlo runner.
//
// Truth is propagated open-loop with noisy controls at the control rate; the
// filter receives the clean command, predicts every control tick and updates
// every (control_rate / observe_rate)-th tick.

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "anfekf/adaptation.hpp"
#include "anfekf/anfis.hpp"
#include "anfekf/ekf.hpp"
#include "anfekf/models.hpp"

namespace anfekf {

struct Waypoint {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

struct Scenario {
    std::vector<Landmark> landmarks;
    std::vector<Waypoint> waypoints;
    Pose initial_pose{};
    double wheelbase = 4.0;          // m
    double speed = 3.0;              // m/s
    double gamma_max = deg_to_rad(30.0);
    double sensor_range = 20.0;      // m
    double sensor_fov = deg_to_rad(180.0);
    double control_rate = 40.0;      // Hz
    double observe_rate = 5.0;       // Hz
    double waypoint_tolerance = 1.0; // m
    NoiseSpec true_noise;
    NoiseSpec assumed_noise;
    double duration = 120.0;         // s
    std::uint64_t seed = 1;

    /// Throws ConfigError on an inconsistent scenario.
    void validate() const;
    double dt() const { return 1.0 / control_rate; }
    long num_steps() const;
    /// Number of control ticks per observation scan.
    long observe_every() const;
    VehicleParams vehicle() const { return {wheelbase}; }

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Filter-side settings that are not part of the world.
struct FilterSettings {
    double gate = kDefaultGate;
    Vec3 p0_diag = Vec3::Constant(1e-6);
    AdaptationConfig adaptation;
    std::optional<std::array<AnfisNet, 2>> r_nets;  // replaces the default R networks
    std::optional<AnfisNet> q_net;                  // replaces the default Q network
};

using Rng = std::mt19937_64;

/// Independent generator per (run seed, channel).
Rng make_stream(std::uint64_t seed, std::uint64_t channel);

inline constexpr std::uint64_t kControlChannel = 1;
inline constexpr std::uint64_t kSensorChannel = 2;

/// Pure pursuit toward the active waypoint. Waypoints are visited in order
/// and the route repeats after the last one.
class WaypointFollower {
public:
    explicit WaypointFollower(const Scenario& scenario) : scenario_(&scenario) {}

    ControlInput command(const Pose& truth);
    std::size_t active() const { return active_; }
    long reached() const { return reached_; }
    bool route_completed() const { return reached_ >= static_cast<long>(scenario_->waypoints.size()); }

private:
    const Scenario* scenario_;
    std::size_t active_ = 0;
    long reached_ = 0;
};

struct DriveCommand {
    ControlInput clean;
    ControlInput noisy;
};

DriveCommand drive(const Pose& truth, const Scenario& scenario, WaypointFollower& follower, Rng& rng);

/// Visible landmarks (range <= sensor_range, |bearing| <= fov / 2) observed
/// with Gaussian range and bearing noise, in map order.
std::vector<Measurement> sense(const Pose& truth, const std::vector<Landmark>& landmarks,
                               const Scenario& scenario, Rng& rng);

struct StepRecord {
    long step = 0;
    double t = 0.0;
    Pose truth;
    GaussianState estimate;
    int n_meas = 0;
    int n_gated = 0;
    Vec2 R_diag = Vec2::Zero();
    Vec2 Q_diag = Vec2::Zero();
    AdaptationTrace adaptation;
};

struct RunSummary {
    long run = 0;
    std::uint64_t seed = 0;
    bool timeout = false;  // route not completed within the duration
    long waypoints_reached = 0;
    long total_meas = 0;
    long total_gated = 0;
};

struct RunLog {
    Variant variant = Variant::Ekf;
    std::vector<StepRecord> steps;
    RunSummary summary;
};

RunLog run_once(const Scenario& scenario, Variant variant, std::uint64_t seed,
                const FilterSettings& settings = {});

struct MonteCarloOptions {
    int threads = 0;  // 0 = OpenMP default
    FilterSettings filter;
};

/// Runs n_runs independent simulations with seeds base_seed + i, fanned out
/// over OpenMP threads. Output order is by run index.
std::vector<RunLog> run_monte_carlo(const Scenario& scenario, Variant variant, int n_runs,
                                    std::uint64_t base_seed, const MonteCarloOptions& options = {});

/// Single-threaded reference for run_monte_carlo.
std::vector<RunLog> run_monte_carlo_serial(const Scenario& scenario, Variant variant, int n_runs,
                                           std::uint64_t base_seed, const FilterSettings& settings = {});

}  // namespace anfekf
