#pragma once

// Scenario files are JSON documents:
//
// {
//   "schema": "anfekf-scenario/1",
//   "vehicle":  {"wheelbase": 4.0, "speed": 3.0, "gamma_max_deg": 30.0},
//   "sensor":   {"range": 20.0, "fov_deg": 180.0},
//   "rates":    {"control_hz": 40.0, "observe_hz": 5.0},
//   "duration": 150.0, "seed": 1, "waypoint_tolerance": 1.0,
//   "initial_pose": [x, y, phi_deg],
//   "noise": {
//     "true":    {"sigma_v": 0.3, "sigma_gamma_deg": 3.0, "sigma_r": 0.1, "sigma_theta_deg": 1.0},
//     "assumed": {...}
//   },
//   "landmarks": [[id, x, y], ...],
//   "waypoints": [[x, y], ...],
//   "filter": {                                   optional
//     "gate": 5.991, "p0": [1e-6, 1e-6, 1e-6],
//     "adaptation": {"window": 15, "eta": 0.01, "r_floor": 1e-4, "q_floor": 0.01,
//                    "q_ceiling": 100.0, "r_step": 0.1, "q_ratio": 1.5, "q_width": 0.4,
//                    "output_gain": 1.0,
//                    "r_nets": [[27 values], [27 values]], "q_net": [27 values]}
//   }
// }
//
// Angles are degrees in the file and radians in memory. ANFIS nets are the
// flat 27-value list: 10 centers, 10 widths, 7 singletons.

#include <filesystem>
#include <string>

#include "json.hpp"

#include "anfekf/simulator.hpp"

namespace anfekf {

inline constexpr const char* kScenarioSchema = "anfekf-scenario/1";

struct ScenarioFile {
    Scenario scenario;
    FilterSettings filter;
};

nlohmann::json to_json(const ScenarioFile& file);
ScenarioFile scenario_from_json(const nlohmann::json& j);

ScenarioFile load_scenario(const std::filesystem::path& path);
void save_scenario(const ScenarioFile& file, const std::filesystem::path& path);
std::string dump_scenario(const ScenarioFile& file);

/// The built-in map and route with true = assumed noise at the reference
/// values (0.3 m/s, 3 deg, 0.1 m, 1 deg).
Scenario default_scenario();

enum class Preset { Known, WrongR, WrongQ, Consistency };

Preset parse_preset(const std::string& name);
const char* to_string(Preset p);

/// default_scenario() with the assumed noise of one reference experiment.
Scenario preset_scenario(Preset p);

}  // namespace anfekf
