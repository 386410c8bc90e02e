#include "anfekf/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "anfekf/errors.hpp"

namespace anfekf {

void Scenario::validate() const {
    if (landmarks.empty()) throw ConfigError("scenario map is empty");
    std::set<int> ids;
    for (const Landmark& lm : landmarks)
        if (!ids.insert(lm.id).second) throw ConfigError("duplicate landmark id " + std::to_string(lm.id));
    if (waypoints.empty()) throw ConfigError("scenario has no waypoints");
    if (!(wheelbase > 0.0)) throw ConfigError("wheelbase must be positive");
    if (!(speed >= 0.0) || !std::isfinite(speed)) throw ConfigError("speed must be finite and >= 0");
    if (!(gamma_max > 0.0 && gamma_max < 0.5 * kPi)) throw ConfigError("gamma_max must lie in (0, 90) deg");
    if (!(sensor_range > 0.0)) throw ConfigError("sensor range must be positive");
    if (!(sensor_fov > 0.0 && sensor_fov <= kTwoPi)) throw ConfigError("sensor fov must lie in (0, 360] deg");
    if (!(control_rate > 0.0) || !(observe_rate > 0.0)) throw ConfigError("rates must be positive");
    const double ratio = control_rate / observe_rate;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1.0)
        throw ConfigError("observe_rate must divide control_rate evenly");
    if (!(waypoint_tolerance > 0.0)) throw ConfigError("waypoint tolerance must be positive");
    if (!(duration > 0.0) || !std::isfinite(duration)) throw ConfigError("duration must be positive");
    true_noise.validate();
    assumed_noise.validate();
}

long Scenario::num_steps() const { return std::lround(std::floor(duration * control_rate + 1e-9)); }

long Scenario::observe_every() const { return std::lround(control_rate / observe_rate); }

Rng make_stream(std::uint64_t seed, std::uint64_t channel) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(channel), 0x9e3779b9u};
    return Rng(seq);
}

ControlInput WaypointFollower::command(const Pose& truth) {
    const auto& wps = scenario_->waypoints;
    if (std::hypot(wps[active_].x - truth.x, wps[active_].y - truth.y) < scenario_->waypoint_tolerance) {
        active_ = (active_ + 1) % wps.size();
        ++reached_;
    }
    const Waypoint& wp = wps[active_];
    const double steer = wrap_angle(std::atan2(wp.y - truth.y, wp.x - truth.x) - truth.phi);
    return {scenario_->speed, std::clamp(steer, -scenario_->gamma_max, scenario_->gamma_max)};
}

DriveCommand drive(const Pose& truth, const Scenario& scenario, WaypointFollower& follower, Rng& rng) {
    DriveCommand cmd;
    cmd.clean = follower.command(truth);
    std::normal_distribution<double> n01(0.0, 1.0);
    const double dv = scenario.true_noise.sigma_v * n01(rng);
    const double dg = scenario.true_noise.sigma_gamma * n01(rng);
    cmd.noisy = {cmd.clean.v + dv, cmd.clean.gamma + dg};
    return cmd;
}

std::vector<Measurement> sense(const Pose& truth, const std::vector<Landmark>& landmarks,
                               const Scenario& scenario, Rng& rng) {
    std::vector<Measurement> out;
    std::normal_distribution<double> n01(0.0, 1.0);
    const double half_fov = 0.5 * scenario.sensor_fov;
    for (const Landmark& lm : landmarks) {
        const double r = std::hypot(lm.x - truth.x, lm.y - truth.y);
        if (r > scenario.sensor_range || r < kDefaultEpsilonRange) continue;
        const double bearing = wrap_angle(std::atan2(lm.y - truth.y, lm.x - truth.x) - truth.phi);
        if (std::abs(bearing) > half_fov) continue;
        const double dr = scenario.true_noise.sigma_r * n01(rng);
        const double dtheta = scenario.true_noise.sigma_theta * n01(rng);
        out.push_back(observe(truth, lm, {dr, dtheta}));
    }
    return out;
}

RunLog run_once(const Scenario& scenario, Variant variant, std::uint64_t seed, const FilterSettings& settings) {
    scenario.validate();
    const LandmarkMap map(scenario.landmarks);
    const double T = scenario.dt();
    const long n_steps = scenario.num_steps();
    const long every = scenario.observe_every();
    const EkfConfig ekf_config{scenario.vehicle(), settings.gate, kDefaultEpsilonRange};

    Rng control_rng = make_stream(seed, kControlChannel);
    Rng sensor_rng = make_stream(seed, kSensorChannel);

    Pose truth = scenario.initial_pose;
    GaussianState est;
    est.mean = truth.vector();
    est.P = settings.p0_diag.asDiagonal();

    CovPair cov{scenario.assumed_noise.process_cov(), scenario.assumed_noise.measurement_cov()};
    CovarianceTuner tuner(variant, cov, settings.adaptation);
    if (settings.r_nets) tuner.set_r_nets(*settings.r_nets);
    if (settings.q_net) tuner.set_q_net(*settings.q_net);

    WaypointFollower follower(scenario);

    RunLog log;
    log.variant = variant;
    log.summary.seed = seed;
    log.steps.reserve(static_cast<std::size_t>(n_steps));

    for (long k = 1; k <= n_steps; ++k) {
        const DriveCommand cmd = drive(truth, scenario, follower, control_rng);
        truth = motion_step(truth, cmd.noisy, T, scenario.vehicle());

        std::vector<Measurement> meas;
        if (k % every == 0) meas = sense(truth, scenario.landmarks, scenario, sensor_rng);

        const StepResult res = step(est, cmd.clean, meas, cov, map, T, ekf_config, k);
        est = res.state;

        StepRecord rec;
        if (!meas.empty()) rec.adaptation = tuner.on_scan(res, cov);
        rec.step = k;
        rec.t = static_cast<double>(k) * T;
        rec.truth = truth;
        rec.estimate = est;
        rec.n_meas = static_cast<int>(meas.size());
        rec.n_gated = res.n_gated;
        rec.R_diag = cov.R.diagonal();
        rec.Q_diag = cov.Q.diagonal();
        log.summary.total_meas += rec.n_meas;
        log.summary.total_gated += rec.n_gated;
        log.steps.push_back(rec);
    }
    log.summary.waypoints_reached = follower.reached();
    log.summary.timeout = !follower.route_completed();
    return log;
}

}  // namespace anfekf
